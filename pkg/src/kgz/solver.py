"""Two-step semi-implicit finite difference scheme for the KGZ system.

The density is evolved through the corrected unknown F = N + E^2 - G, where
G is the oscillatory initial layer handled exactly by :mod:`kgz.layer`. Each
step solves two strictly diagonally dominant tridiagonal systems: first the
field E (its system needs the averaged layer potential at the current time),
then F, whose source term consumes the freshly computed field level.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ParameterError, ShapeError, StabilityError
from .grid import (
    Grid1D,
    grid_norms,
    inner_product,
    second_difference,
    solve_poisson_dirichlet,
    solve_tridiagonal,
)
from .layer import InitialLayer, decay_order

# relative slack when testing whether a time is a whole number of steps;
# a strict half-ulp test rejects tau = T / K after the float round trip
ALIGN_RTOL = 1e-9


@dataclass(frozen=True)
class KgzParams:
    eps: float
    alpha: float
    beta: float
    grid: Grid1D
    tau: float
    T: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        decay_order(self.alpha, self.beta)
        if self.tau <= 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if self.T <= 0:
            raise ParameterError(f"T must be positive, got {self.T}")
        self.n_steps()  # reject a partial final step early

    def n_steps(self):
        q = self.T / self.tau
        k = round(q)
        if k < 1 or abs(q - k) > ALIGN_RTOL * max(1.0, q):
            raise ParameterError(
                f"T={self.T} is not a whole number of steps of tau={self.tau}; "
                f"nearest divisors give tau={self.T / max(k, 1)} or "
                f"tau={self.T / (int(q) + 1)}"
            )
        return int(k)


@dataclass(frozen=True)
class InitialData:
    """Samplers for the field data and the density incompatibility profiles."""

    E0: Callable
    E1: Callable
    omega0: Callable
    omega1: Callable

    def sample(self, grid):
        out = []
        for f in (self.E0, self.E1, self.omega0, self.omega1):
            v = np.asarray(f(grid.nodes), dtype=float).copy()
            if v.shape != grid.nodes.shape:
                raise ShapeError("initial data sampler returned a wrong shape")
            v[0] = 0.0
            v[-1] = 0.0
            out.append(v)
        return tuple(out)


@dataclass(frozen=True)
class KgzState:
    """Two consecutive time levels of (E, F); curr sits at t_k = k*tau."""

    k: int
    t_k: float
    E_prev: np.ndarray
    E_curr: np.ndarray
    F_prev: np.ndarray
    F_curr: np.ndarray


class Snapshot(NamedTuple):
    t: float
    E: np.ndarray
    F: np.ndarray
    N: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Every time level of a run; E and F have shape (n_steps + 1, M + 1)."""

    eps: float
    times: np.ndarray
    E: np.ndarray
    F: np.ndarray


def build_layer(params, data):
    """Initial layer for a run, seeded by the sampled incompatibility data."""
    _, _, w0, w1 = data.sample(params.grid)
    return InitialLayer.from_samples(
        params.grid, params.eps, params.alpha, params.beta, w0, w1
    )


def _field_accel(E0, w0, params):
    """Second time derivative of the field at t = 0.

    Uses the discrete Laplacian of the sampled data, keeping the initial
    data purely sample based at the cost of nothing beyond O(h^2).
    """
    grid = params.grid
    n0 = -(E0**2) + params.eps**params.alpha * w0
    return second_difference(E0, grid) - E0 - n0 * E0


def first_state(params, data, layer):
    """State at k = 1 from the Taylor start; level 0 carries the raw data."""
    if layer.grid != params.grid:
        raise ShapeError("layer and params use different grids")
    E0, E1, w0, _ = data.sample(params.grid)
    tau = params.tau
    ddE = _field_accel(E0, w0, params)
    ddF = 2.0 * E1**2 + 2.0 * E0 * ddE
    E1_level = E0 + tau * E1 + 0.5 * tau**2 * ddE
    F1_level = 0.5 * tau**2 * ddF
    for v in (E1_level, F1_level):
        v[0] = 0.0
        v[-1] = 0.0
    return KgzState(
        k=1,
        t_k=tau,
        E_prev=E0,
        E_curr=E1_level,
        F_prev=params.grid.zeros(),
        F_curr=F1_level,
    )


def _solve_field(E_curr, E_prev, c, params):
    """Advance the field through its implicit tridiagonal system."""
    grid, tau = params.grid, params.tau
    inv_t2 = 1.0 / tau**2
    inv_h2 = 1.0 / grid.h**2
    margin = inv_t2 + 0.5 * c[1:-1]
    j = int(np.argmin(margin))
    if margin[j] <= 0.0:
        raise StabilityError(
            f"field system lost diagonal dominance at node {j + 1}: "
            f"1/tau^2 + c/2 = {margin[j]:.3e} with c = {c[j + 1]:.3e}, tau = {tau}",
            j=j + 1,
            coefficient=float(c[j + 1]),
            tau=tau,
        )
    diag = margin + inv_h2
    off = np.full(grid.M - 2, -0.5 * inv_h2)
    rhs = (2.0 * E_curr - E_prev)[1:-1] * inv_t2 + 0.5 * (
        second_difference(E_prev, grid) - c * E_prev
    )[1:-1]
    E_next = grid.zeros()
    E_next[1:-1] = solve_tridiagonal(off, diag, off, rhs)
    return E_next


def _solve_density(F_curr, F_prev, dt2_E2, params):
    """Advance the corrected density through its implicit system."""
    grid, tau = params.grid, params.tau
    inv_t2 = 1.0 / tau**2
    s = 0.5 / params.eps**2
    s_h2 = s / grid.h**2
    diag = np.full(grid.M - 1, inv_t2 + 2.0 * s_h2)
    off = np.full(grid.M - 2, -s_h2)
    rhs = (
        (2.0 * F_curr - F_prev)[1:-1] * inv_t2
        + s * second_difference(F_prev, grid)[1:-1]
        + dt2_E2[1:-1]
    )
    F_next = grid.zeros()
    F_next[1:-1] = solve_tridiagonal(off, diag, off, rhs)
    return F_next


def step(state, params, layer):
    """One forward step; the equations are centered at the curr level."""
    tau = params.tau
    Ek, Em = state.E_curr, state.E_prev
    Fk, Fm = state.F_curr, state.F_prev
    H = layer.averaged_wave(state.t_k, tau)
    c = 1.0 - Ek**2 + Fk + H
    E_next = _solve_field(Ek, Em, c, params)
    dt2_E2 = (E_next**2 - 2.0 * Ek**2 + Em**2) / tau**2
    F_next = _solve_density(Fk, Fm, dt2_E2, params)
    k = state.k + 1
    return KgzState(k=k, t_k=k * tau, E_prev=Ek, E_curr=E_next, F_prev=Fk, F_curr=F_next)


def step_back(state, params, layer):
    """One backward step, centered at the prev level.

    The stencil is symmetric in the two outer levels, so solving for the
    earlier level reuses the forward system verbatim with the roles of the
    stored levels swapped; the averaged potential is evaluated at the time
    of the prev level, the same value the matching forward step used.
    """
    tau = params.tau
    t_mid = state.t_k - tau
    Ek, Ep = state.E_prev, state.E_curr  # middle level, later level
    Fk, Fp = state.F_prev, state.F_curr
    H = layer.averaged_wave(t_mid, tau)
    c = 1.0 - Ek**2 + Fk + H
    E_before = _solve_field(Ek, Ep, c, params)
    dt2_E2 = (Ep**2 - 2.0 * Ek**2 + E_before**2) / tau**2
    F_before = _solve_density(Fk, Fp, dt2_E2, params)
    k = state.k - 1
    return KgzState(
        k=k, t_k=k * tau, E_prev=E_before, E_curr=Ek, F_prev=F_before, F_curr=Fk
    )


def density_at(E, F, t, layer):
    """Physical density N = F - E^2 + G(t)."""
    return F - E**2 + layer.wave(t)


def recover_density(state, layer):
    """Density at the state's current level."""
    return density_at(state.E_curr, state.F_curr, state.t_k, layer)


def _snapshot_indices(params, snapshot_times):
    K = params.n_steps()
    idx = []
    for t in snapshot_times:
        q = t / params.tau
        k = round(q)
        if abs(q - k) > ALIGN_RTOL * max(1.0, abs(q)) or not 0 <= k <= K:
            near = sorted({max(0, min(K, int(q))), max(0, min(K, int(q) + 1))})
            aligned = ", ".join(f"{m * params.tau:g}" for m in near)
            raise ParameterError(
                f"snapshot time {t} is not a step multiple within [0, {params.T}]; "
                f"nearest aligned times: {aligned}"
            )
        idx.append(int(k))
    return K, idx


def run(params, data, snapshot_times=None):
    """Drive the scheme to T and return snapshots of (E, F, N).

    Snapshot times must be whole multiples of tau inside [0, T]; by default
    only the final time is recorded.
    """
    if snapshot_times is None:
        snapshot_times = [params.T]
    K, idx = _snapshot_indices(params, snapshot_times)
    layer = build_layer(params, data)
    state = first_state(params, data, layer)
    levels = {}
    if 0 in idx:
        levels[0] = (state.E_prev, state.F_prev)
    if 1 in idx:
        levels[1] = (state.E_curr, state.F_curr)
    for _ in range(K - 1):
        state = step(state, params, layer)
        if state.k in idx:
            levels[state.k] = (state.E_curr, state.F_curr)
    snaps = []
    for t, k in zip(snapshot_times, idx):
        E, F = levels[k]
        snaps.append(Snapshot(t=k * params.tau, E=E, F=F, N=density_at(E, F, k * params.tau, layer)))
    return snaps


def trajectory(params, data):
    """Run to T recording every time level (for limit diagnostics)."""
    K = params.n_steps()
    layer = build_layer(params, data)
    state = first_state(params, data, layer)
    E = np.empty((K + 1, params.grid.M + 1))
    F = np.empty_like(E)
    E[0], F[0] = state.E_prev, state.F_prev
    E[1], F[1] = state.E_curr, state.F_curr
    for _ in range(K - 1):
        state = step(state, params, layer)
        E[state.k], F[state.k] = state.E_curr, state.F_curr
    times = np.arange(K + 1) * params.tau
    return Trajectory(eps=params.eps, times=times, E=E, F=F)


def energy(state, layer, params):
    """Monitored total-energy diagnostic of the coupled system.

    Built from the forward time difference across the stored half step and
    level averages of the spatial terms; the potential term solves a
    discrete Poisson problem for the time derivative of the density. This
    quantity drifts at the discretization order, it is not conserved
    exactly by the scheme.
    """
    grid, tau, eps = params.grid, params.tau, params.eps
    dtE = (state.E_curr - state.E_prev) / tau
    t_prev = state.t_k - tau
    N_prev = density_at(state.E_prev, state.F_prev, t_prev, layer)
    N_curr = recover_density(state, layer)
    phi = solve_poisson_dirichlet(-(N_curr - N_prev) / tau, grid)

    def _avg(f):
        return 0.5 * (f(state.E_prev, N_prev) + f(state.E_curr, N_curr))

    n_dt = grid_norms(dtE, grid)
    n_phi = grid_norms(phi, grid)
    total = (
        n_dt.l2**2
        + _avg(lambda E, N: grid_norms(E, grid).h1_semi ** 2)
        + _avg(lambda E, N: grid_norms(E, grid).l2 ** 2)
        + 0.5 * eps**2 * n_phi.h1_semi**2
        + 0.5 * _avg(lambda E, N: grid_norms(N, grid).l2 ** 2)
        + _avg(lambda E, N: inner_product(N, E**2, grid))
    )
    return float(total)


class Scaling(NamedTuple):
    eps: float
    t_s: float
    x_s: float
    E_s: float
    N_s: float


def nondimensionalize(v0, omega_p, c_s, n0, eps0, m, N0):
    """Scaling constants mapping the physical system to dimensionless form."""
    for name, val in (
        ("v0", v0),
        ("omega_p", omega_p),
        ("c_s", c_s),
        ("n0", n0),
        ("eps0", eps0),
        ("m", m),
        ("N0", N0),
    ):
        if val <= 0:
            raise ParameterError(f"{name} must be positive, got {val}")
    eps = np.sqrt(3.0) * v0 / c_s
    if eps > 1:
        warnings.warn(
            f"derived eps={eps} exceeds the analysis range (0, 1]", stacklevel=2
        )
    return Scaling(
        eps=float(eps),
        t_s=1.0 / omega_p,
        x_s=float(np.sqrt(3.0) * v0 / omega_p),
        E_s=float(2.0 * c_s * np.sqrt(m * N0 / (n0 * eps0))),
        N_s=1.0,
    )
