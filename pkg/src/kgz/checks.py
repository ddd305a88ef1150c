"""Self-contained property suite behind the `kgz check` command.

Every check pits an implementation against an independent route: dense
linear algebra, brute-force summation, quadrature, or an exact algebraic
identity. All of them run on desk-scale grids in well under a minute.
"""

from typing import NamedTuple

import numpy as np

from .grid import (
    Grid1D,
    forward_difference,
    grid_norms,
    inner_product,
    second_difference,
    solve_poisson_dirichlet,
    solve_tridiagonal,
    staggered_inner_product,
)
from .layer import InitialLayer
from .limits import first_state_kg, step_kg, step_kg_back
from .presets import preset_initial_data
from .solver import InitialData, KgzParams, build_layer, first_state, step, step_back
from .transforms import dst_forward, dst_inverse


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _result(name, worst, tol):
    return CheckResult(name, bool(worst <= tol), f"worst {worst:.3e} vs tol {tol:.1e}")


def _random_grid_fn(rng, grid):
    u = rng.standard_normal(grid.M + 1)
    u[0] = u[-1] = 0.0
    return u


def check_summation_by_parts(seed=0):
    """(-d2 u, v) equals the staggered product of the forward differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for M in (2, 3, 5, 8, 16, 33, 64, 128):
        grid = Grid1D(-1.3, 2.1, M)
        for _ in range(5):
            u = _random_grid_fn(rng, grid)
            v = _random_grid_fn(rng, grid)
            lhs = inner_product(-second_difference(u, grid), v, grid)
            rhs = staggered_inner_product(
                forward_difference(u, grid), forward_difference(v, grid), grid
            )
            scale = max(
                grid_norms(u, grid).h1_semi * grid_norms(v, grid).h1_semi, 1e-30
            )
            worst = max(worst, abs(lhs - rhs) / scale)
    return _result("summation_by_parts", worst, 1e-13)


def check_dst_round_trip(seed=1):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for M in (2, 3, 4, 8, 16, 64, 128):
        grid = Grid1D(0.0, 1.0, M)
        u = _random_grid_fn(rng, grid)
        for method in ("naive", "fast"):
            back = dst_inverse(dst_forward(u, grid, method), grid, method)
            worst = max(worst, np.max(np.abs(back - u)) / max(np.max(np.abs(u)), 1e-30))
        gap = np.max(np.abs(dst_forward(u, grid, "fast") - dst_forward(u, grid, "naive")))
        worst = max(worst, gap / max(np.max(np.abs(u)), 1e-30))
    return _result("dst_round_trip", worst, 1e-12)


def check_dst_parseval(seed=2):
    """h sum u_j^2 must equal (b - a)/2 times the squared spectrum."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for M in (4, 16, 64):
        grid = Grid1D(-2.0, 3.0, M)
        u = _random_grid_fn(rng, grid)
        lhs = grid.h * np.sum(u**2)
        rhs = 0.5 * grid.length * np.sum(dst_forward(u, grid) ** 2)
        worst = max(worst, abs(lhs - rhs) / max(lhs, 1e-30))
    return _result("dst_parseval", worst, 1e-12)


def triangular_average_quadrature(layer, t, tau, panels_per_period=10):
    """Composite Gauss quadrature of the kernel average of the layer wave.

    Resolves the fastest mode with at least the requested panels per
    oscillation period; the kernel kink at s = 0 splits the interval.
    """
    theta_max = float(layer.theta[-1])
    periods = theta_max * tau / (2.0 * np.pi)
    n_panels = max(16, int(np.ceil(panels_per_period * periods)) + 4)
    xg, wg = np.polynomial.legendre.leggauss(8)
    total = np.zeros(layer.grid.M + 1)
    for a, b in ((-1.0, 0.0), (0.0, 1.0)):
        edges = np.linspace(a, b, n_panels + 1)
        for left, right in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (left + right)
            half = 0.5 * (right - left)
            for x, w in zip(xg, wg):
                s = mid + half * x
                total += w * half * (1.0 - abs(s)) * layer.wave(t + s * tau)
    return total


def check_averaged_wave(seed=3):
    rng = np.random.default_rng(seed)
    grid = Grid1D(0.0, 1.0, 16)
    worst = 0.0
    for eps in (1.0, 0.1, 0.01):
        w0 = _random_grid_fn(rng, grid)
        w1 = _random_grid_fn(rng, grid)
        layer = InitialLayer.from_samples(grid, eps, 0.5, 0.0, w0, w1)
        for tau in (0.1, 0.01):
            t = 3.0 * tau
            exact = layer.averaged_wave(t, tau)
            quad = triangular_average_quadrature(layer, t, tau)
            worst = max(worst, float(np.max(np.abs(exact - quad))))
    return _result("averaged_wave_quadrature", worst, 1e-9)


def _toy_setup(eps=0.5, M=48, tau=0.01):
    grid = Grid1D(-6.0, 6.0, M)
    data = preset_initial_data("gauss_sech")
    params = KgzParams(eps=eps, alpha=1.0, beta=0.0, grid=grid, tau=tau, T=1.0)
    return params, data


def check_reversibility_coupled(n_steps=100):
    """March forward, march back, land on the initial state."""
    params, data = _toy_setup()
    layer = build_layer(params, data)
    state0 = first_state(params, data, layer)
    state = state0
    for _ in range(n_steps):
        state = step(state, params, layer)
    for _ in range(n_steps):
        state = step_back(state, params, layer)
    scale = max(np.max(np.abs(state0.E_curr)), np.max(np.abs(state0.F_curr)), 1e-30)
    worst = max(
        np.max(np.abs(state.E_prev - state0.E_prev)),
        np.max(np.abs(state.E_curr - state0.E_curr)),
        np.max(np.abs(state.F_prev - state0.F_prev)),
        np.max(np.abs(state.F_curr - state0.F_curr)),
    ) / scale
    return _result("reversibility_coupled", worst, 1e-8)


def check_reversibility_limit(n_steps=100):
    params, data = _toy_setup()
    layer = build_layer(params, data)
    state0 = first_state_kg(params, data, layer, use_potential=True)
    state = state0
    for _ in range(n_steps):
        state = step_kg(state, params, layer, use_potential=True)
    for _ in range(n_steps):
        state = step_kg_back(state, params, layer, use_potential=True)
    scale = max(np.max(np.abs(state0.E_curr)), 1e-30)
    worst = max(
        np.max(np.abs(state.E_prev - state0.E_prev)),
        np.max(np.abs(state.E_curr - state0.E_curr)),
    ) / scale
    return _result("reversibility_limit", worst, 1e-8)


def check_zero_fixed_point():
    """All-zero data must produce the exact zero trajectory."""
    grid = Grid1D(-4.0, 4.0, 32)
    zero = lambda x: np.zeros_like(x)
    data = InitialData(E0=zero, E1=zero, omega0=zero, omega1=zero)
    params = KgzParams(eps=0.25, alpha=0.0, beta=-1.0, grid=grid, tau=0.05, T=1.0)
    layer = build_layer(params, data)
    state = first_state(params, data, layer)
    worst = 0.0
    for _ in range(10):
        state = step(state, params, layer)
        worst = max(worst, np.max(np.abs(state.E_curr)), np.max(np.abs(state.F_curr)))
    passed = worst == 0.0
    return CheckResult("zero_fixed_point", passed, f"max |state| = {worst:.3e}")


def check_dirichlet_boundary(n_steps=25):
    params, data = _toy_setup(eps=0.2, M=64, tau=0.02)
    layer = build_layer(params, data)
    state = first_state(params, data, layer)
    worst = 0.0
    for _ in range(n_steps):
        state = step(state, params, layer)
        for v in (state.E_curr, state.F_curr):
            worst = max(worst, abs(v[0]), abs(v[-1]))
    passed = worst == 0.0
    return CheckResult("dirichlet_boundary", passed, f"max boundary value = {worst:.3e}")


def check_tridiagonal_dense(seed=4):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2, 3, 10, 50):
        lower = rng.standard_normal(max(n - 1, 0))
        upper = rng.standard_normal(max(n - 1, 0))
        neighbor = np.zeros(n)
        if n > 1:
            neighbor[1:] += np.abs(lower)
            neighbor[:-1] += np.abs(upper)
        diag = neighbor + 1.0 + rng.random(n)
        rhs = rng.standard_normal(n)
        dense = np.diag(diag)
        if n > 1:
            dense += np.diag(lower, -1) + np.diag(upper, 1)
        expected = np.linalg.solve(dense, rhs)
        got = solve_tridiagonal(lower, diag, upper, rhs)
        worst = max(
            worst, np.max(np.abs(got - expected)) / max(np.max(np.abs(expected)), 1e-30)
        )
    return _result("tridiagonal_vs_dense", worst, 1e-12)


def check_poisson_dense(seed=5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for M in (4, 16, 64):
        grid = Grid1D(-1.0, 2.0, M)
        f = _random_grid_fn(rng, grid)
        n = M - 1
        dense = (
            np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)
        ) / grid.h**2
        expected = np.linalg.solve(dense, f[1:-1])
        got = solve_poisson_dirichlet(f, grid)
        worst = max(
            worst,
            np.max(np.abs(got[1:-1] - expected)) / max(np.max(np.abs(expected)), 1e-30),
        )
    return _result("poisson_vs_dense", worst, 1e-12)


ALL_CHECKS = (
    check_summation_by_parts,
    check_dst_round_trip,
    check_dst_parseval,
    check_averaged_wave,
    check_reversibility_coupled,
    check_reversibility_limit,
    check_zero_fixed_point,
    check_dirichlet_boundary,
    check_tridiagonal_dense,
    check_poisson_dense,
)


def run_all():
    return [chk() for chk in ALL_CHECKS]
