"""Limiting Klein-Gordon solvers and the vanishing-eps diagnostics.

The limit model drops the density coupling; optionally it keeps the
oscillatory layer as a potential. Its stencil mirrors the coupled scheme
with F frozen at zero, so differences between the two trajectories measure
the coupling effect rather than scheme differences.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .grid import grid_norms, inner_product, second_difference
from .solver import _field_accel, _solve_field


@dataclass(frozen=True)
class KgState:
    k: int
    t_k: float
    E_prev: np.ndarray
    E_curr: np.ndarray


@dataclass(frozen=True)
class KgTrajectory:
    eps: float
    times: np.ndarray
    E: np.ndarray


def first_state_kg(params, data, layer, use_potential=True):
    """Taylor start for the limit model; matches the coupled start exactly.

    With the potential on, the initial field acceleration is the same as in
    the coupled system; plain Klein-Gordon drops the incompatibility term.
    """
    E0, E1, w0, _ = data.sample(params.grid)
    tau = params.tau
    if use_potential:
        ddE = _field_accel(E0, w0, params)
    else:
        ddE = second_difference(E0, params.grid) - E0 + E0**3
    E1_level = E0 + tau * E1 + 0.5 * tau**2 * ddE
    E1_level[0] = 0.0
    E1_level[-1] = 0.0
    return KgState(k=1, t_k=tau, E_prev=E0, E_curr=E1_level)


def step_kg(state, params, layer, use_potential=True):
    """One forward step of the limit model."""
    Ek, Em = state.E_curr, state.E_prev
    c = 1.0 - Ek**2
    if use_potential:
        c = c + layer.averaged_wave(state.t_k, params.tau)
    E_next = _solve_field(Ek, Em, c, params)
    k = state.k + 1
    return KgState(k=k, t_k=k * params.tau, E_prev=Ek, E_curr=E_next)


def step_kg_back(state, params, layer, use_potential=True):
    """One backward step, centered at the prev level (see solver.step_back)."""
    Ek, Ep = state.E_prev, state.E_curr
    c = 1.0 - Ek**2
    if use_potential:
        c = c + layer.averaged_wave(state.t_k - params.tau, params.tau)
    E_before = _solve_field(Ek, Ep, c, params)
    k = state.k - 1
    return KgState(k=k, t_k=k * params.tau, E_prev=E_before, E_curr=Ek)


def trajectory_kg(params, data, layer, use_potential=True):
    K = params.n_steps()
    state = first_state_kg(params, data, layer, use_potential)
    E = np.empty((K + 1, params.grid.M + 1))
    E[0], E[1] = state.E_prev, state.E_curr
    for _ in range(K - 1):
        state = step_kg(state, params, layer, use_potential)
        E[state.k] = state.E_curr
    return KgTrajectory(eps=params.eps, times=np.arange(K + 1) * params.tau, E=E)


def _time_derivatives(F, tau):
    """Centered first and second time differences with one-sided ends."""
    K = F.shape[0] - 1
    if K < 3:
        raise ShapeError("need at least 4 time levels for the time derivatives")
    dF = np.empty_like(F)
    dF[1:-1] = (F[2:] - F[:-2]) / (2.0 * tau)
    dF[0] = (-3.0 * F[0] + 4.0 * F[1] - F[2]) / (2.0 * tau)
    dF[-1] = (3.0 * F[-1] - 4.0 * F[-2] + F[-3]) / (2.0 * tau)
    ddF = np.empty_like(F)
    ddF[1:-1] = (F[2:] - 2.0 * F[1:-1] + F[:-2]) / tau**2
    ddF[0] = (2.0 * F[0] - 5.0 * F[1] + 4.0 * F[2] - F[3]) / tau**2
    ddF[-1] = (2.0 * F[-1] - 5.0 * F[-2] + 4.0 * F[-3] - F[-4]) / tau**2
    return dF, ddF


@dataclass(frozen=True)
class LimitMetrics:
    times: np.ndarray
    eta_2: np.ndarray
    eta_inf: np.ndarray
    eta_e: np.ndarray


def limit_metrics(kgz_traj, kg_traj, grid, tau):
    """Convergence diagnostics between the coupled run and its limit model.

    eta_2 and eta_inf weigh the corrected density and its first two time
    derivatives (the density part scaled by 1/eps); eta_e is the discrete
    H1 distance between the two fields, taken as the L2 norm plus the
    seminorm to match the error metric used elsewhere.
    """
    if kgz_traj.E.shape != kg_traj.E.shape:
        raise ShapeError("trajectories have different shapes")
    if kgz_traj.E.shape[1] != grid.M + 1:
        raise ShapeError("trajectories do not live on the given grid")
    if not np.array_equal(kgz_traj.times, kg_traj.times):
        raise ShapeError("trajectories use different time levels")
    eps = kgz_traj.eps
    F = kgz_traj.F
    dF, ddF = _time_derivatives(F, tau)
    n_levels = F.shape[0]
    eta_2 = np.empty(n_levels)
    eta_inf = np.empty(n_levels)
    eta_e = np.empty(n_levels)
    for k in range(n_levels):
        nF = grid_norms(F[k], grid)
        ndF = grid_norms(dF[k], grid)
        nddF = grid_norms(ddF[k], grid)
        eta_2[k] = nF.l2 / eps + ndF.l2 + nddF.l2
        eta_inf[k] = nF.inf / eps + ndF.inf + nddF.inf
        diff = grid_norms(kgz_traj.E[k] - kg_traj.E[k], grid)
        eta_e[k] = diff.l2 + diff.h1_semi
    return LimitMetrics(times=kgz_traj.times.copy(), eta_2=eta_2, eta_inf=eta_inf, eta_e=eta_e)


def kg_energy(state, grid, tau):
    """Conserved-energy diagnostic of the plain Klein-Gordon model."""
    dtE = (state.E_curr - state.E_prev) / tau
    total = grid_norms(dtE, grid).l2 ** 2
    for E in (state.E_prev, state.E_curr):
        n = grid_norms(E, grid)
        quartic = inner_product(E**2, E**2, grid)
        total += 0.5 * (n.h1_semi**2 + n.l2**2 - 0.5 * quartic)
    return float(total)
