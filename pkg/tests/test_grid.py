import numpy as np
import pytest

from kgz import (
    Grid1D,
    IllConditionedError,
    ParameterError,
    ShapeError,
    SingularSystemError,
    forward_difference,
    grid_norms,
    inner_product,
    second_difference,
    solve_poisson_dirichlet,
    solve_tridiagonal,
    staggered_inner_product,
)
from conftest import random_grid_fn


def dense_second_difference(M, h):
    A = np.zeros((M + 1, M + 1))
    for j in range(1, M):
        A[j, j - 1] = 1.0 / h**2
        A[j, j] = -2.0 / h**2
        A[j, j + 1] = 1.0 / h**2
    return A


class TestGrid1D:
    def test_endpoints_exact(self):
        g = Grid1D(-31.0, 31.0, 310)
        assert g.nodes[0] == -31.0
        assert g.nodes[-1] == 31.0
        assert g.M == 310

    def test_uniform_spacing(self):
        g = Grid1D(-2.5, 7.5, 64)
        gaps = np.diff(g.nodes)
        assert np.all(gaps > 0)
        assert np.max(np.abs(gaps - g.h)) <= 2 * np.spacing(g.h)

    def test_rejects_bad_args(self):
        with pytest.raises(ParameterError):
            Grid1D(0.0, 1.0, 1)
        with pytest.raises(ParameterError):
            Grid1D(1.0, 1.0, 4)


class TestDifferences:
    def test_zero(self):
        g = Grid1D(0.0, 1.0, 8)
        assert np.all(second_difference(g.zeros(), g) == 0.0)
        assert np.all(forward_difference(g.zeros(), g) == 0.0)

    def test_single_point_stencil(self):
        g = Grid1D(0.0, 2.0, 2)  # h = 1
        v = second_difference(np.array([0.0, 1.0, 0.0]), g)
        assert v[1] == -2.0

    def test_forward_two_point(self):
        g = Grid1D(0.0, 1.0, 2)  # h = 0.5
        w = forward_difference(np.array([0.0, 1.0, 0.0]), g)
        assert np.allclose(w, [2.0, -2.0], rtol=0, atol=0)

    def test_second_difference_dense_oracle(self, rng):
        g = Grid1D(-1.0, 3.0, 16)
        u = random_grid_fn(rng, g)
        expected = dense_second_difference(g.M, g.h) @ u
        got = second_difference(u, g)
        assert np.max(np.abs(got - expected)) <= 1e-13 * np.max(np.abs(expected))

    def test_forward_difference_elementwise_oracle(self, rng):
        g = Grid1D(0.0, 2.0, 16)
        u = random_grid_fn(rng, g)
        expected = np.array([(u[j + 1] - u[j]) / g.h for j in range(g.M)])
        assert np.array_equal(forward_difference(u, g), expected)

    def test_quadratic_curvature_exact(self):
        g = Grid1D(-1.0, 2.0, 30)
        a, b, c = 0.7, -1.3, 2.4
        u = a + b * g.nodes + c * g.nodes**2
        v = second_difference(u, g)
        # rows next to the boundary see the nonzero boundary samples and are fine too
        assert np.max(np.abs(v[1:-1] - 2 * c)) <= 1e-10

    def test_length_mismatch(self):
        g = Grid1D(0.0, 1.0, 8)
        with pytest.raises(ShapeError):
            second_difference(np.zeros(7), g)
        with pytest.raises(ShapeError):
            forward_difference(np.zeros(10), g)


class TestNormsInner:
    def test_zero(self):
        g = Grid1D(0.0, 1.0, 8)
        n = grid_norms(g.zeros(), g)
        assert n == (0.0, 0.0, 0.0)

    def test_one_term_sum(self):
        g = Grid1D(0.0, 1.0, 2)  # h = 0.5
        n = grid_norms(np.array([0.0, 2.0, 0.0]), g)
        assert np.isclose(n.l2, np.sqrt(2.0), rtol=1e-15)
        assert n.inf == 2.0

    def test_brute_force_oracle(self, rng):
        g = Grid1D(-2.0, 1.0, 32)
        u = random_grid_fn(rng, g)
        l2 = np.sqrt(g.h * sum(u[j] ** 2 for j in range(1, g.M)))
        h1 = np.sqrt(g.h * sum(((u[j + 1] - u[j]) / g.h) ** 2 for j in range(g.M)))
        inf = max(abs(u[j]) for j in range(g.M + 1))
        n = grid_norms(u, g)
        assert abs(n.l2 - l2) <= 1e-14 * l2
        assert abs(n.h1_semi - h1) <= 1e-14 * h1
        assert n.inf == inf

    def test_homogeneous(self, rng):
        g = Grid1D(0.0, 1.0, 16)
        u = random_grid_fn(rng, g)
        n1 = grid_norms(u, g)
        n2 = grid_norms(-3.5 * u, g)
        for a, b in zip(n2, n1):
            assert abs(a - 3.5 * b) <= 1e-14 * abs(a)

    def test_inner_zero_and_consistency(self, rng):
        g = Grid1D(0.0, 4.0, 24)
        u = random_grid_fn(rng, g)
        assert inner_product(u, g.zeros(), g) == 0.0
        n = grid_norms(u, g)
        assert abs(inner_product(u, u, g) - n.l2**2) <= 1e-14 * n.l2**2

    @pytest.mark.parametrize("M", [2, 3, 4, 8, 16, 32, 64, 128])
    def test_summation_by_parts(self, rng, M):
        g = Grid1D(-1.0, 2.5, M)
        u = random_grid_fn(rng, g)
        v = random_grid_fn(rng, g)
        lhs = inner_product(-second_difference(u, g), v, g)
        rhs = staggered_inner_product(
            forward_difference(u, g), forward_difference(v, g), g
        )
        # both sides are bounded by the product of the seminorms, which is
        # the right scale when the inner products nearly cancel
        nu = grid_norms(u, g).h1_semi
        nv = grid_norms(v, g).h1_semi
        assert abs(lhs - rhs) <= 1e-13 * max(nu * nv, 1e-30)


class TestTridiagonal:
    def test_identity(self, rng):
        r = rng.standard_normal(6)
        x = solve_tridiagonal(np.zeros(5), np.ones(6), np.zeros(5), r)
        assert np.array_equal(x, r)

    def test_known_size3(self):
        # dense elimination of the same system gives (1, 1, 1)
        x = solve_tridiagonal(
            np.array([-1.0, -1.0]),
            np.array([2.0, 2.0, 2.0]),
            np.array([-1.0, -1.0]),
            np.array([1.0, 0.0, 1.0]),
        )
        assert np.allclose(x, 1.0, rtol=1e-13, atol=0)

    def test_random_dominant_dense_oracle(self, rng):
        n = 50
        lower = rng.standard_normal(n - 1)
        upper = rng.standard_normal(n - 1)
        diag = 3.0 + rng.random(n)
        diag[1:] += np.abs(lower)
        diag[:-1] += np.abs(upper)
        rhs = rng.standard_normal(n)
        A = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
        expected = np.linalg.solve(A, rhs)
        got = solve_tridiagonal(lower, diag, upper, rhs)
        assert np.max(np.abs(got - expected)) <= 1e-12 * np.max(np.abs(expected))

    def test_round_trip_residual(self, rng):
        n = 40
        lower = rng.standard_normal(n - 1)
        upper = rng.standard_normal(n - 1)
        diag = 2.0 + rng.random(n)
        diag[1:] += np.abs(lower)
        diag[:-1] += np.abs(upper)
        rhs = rng.standard_normal(n)
        x = solve_tridiagonal(lower, diag, upper, rhs)
        res = diag * x
        res[:-1] += upper * x[1:]
        res[1:] += lower * x[:-1]
        assert np.linalg.norm(res - rhs) <= 1e-12 * np.linalg.norm(rhs)

    def test_zero_pivot(self):
        with pytest.raises(SingularSystemError):
            solve_tridiagonal(
                np.zeros(1), np.zeros(2), np.zeros(1), np.ones(2), require_dominant=False
            )

    def test_dominance_guard(self):
        with pytest.raises(IllConditionedError):
            solve_tridiagonal(
                np.array([5.0]), np.array([1.0, 1.0]), np.array([5.0]), np.ones(2)
            )

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            solve_tridiagonal(np.zeros(3), np.ones(3), np.zeros(2), np.ones(3))


class TestPoisson:
    def test_zero(self):
        g = Grid1D(0.0, 1.0, 8)
        assert np.all(solve_poisson_dirichlet(g.zeros(), g) == 0.0)

    def test_sine_mode_eigenrelation(self):
        g = Grid1D(0.0, 1.0, 32)
        j = np.arange(g.M + 1)
        f = np.sin(np.pi * j / g.M)
        lam1 = 4.0 / g.h**2 * np.sin(np.pi / (2 * g.M)) ** 2
        phi = solve_poisson_dirichlet(f, g)
        assert np.max(np.abs(phi - f / lam1)) <= 1e-12 * np.max(np.abs(f / lam1))
        # applying the operator must return the data
        back = -second_difference(phi, g)
        assert np.max(np.abs(back[1:-1] - f[1:-1])) <= 1e-10 * np.max(np.abs(f))

    def test_random_dense_oracle(self, rng):
        g = Grid1D(-1.0, 1.0, 20)
        f = random_grid_fn(rng, g)
        n = g.M - 1
        A = (
            np.diag(np.full(n, 2.0))
            - np.diag(np.ones(n - 1), 1)
            - np.diag(np.ones(n - 1), -1)
        ) / g.h**2
        expected = np.linalg.solve(A, f[1:-1])
        phi = solve_poisson_dirichlet(f, g)
        assert np.max(np.abs(phi[1:-1] - expected)) <= 1e-12 * np.max(np.abs(expected))
        assert phi[0] == 0.0 and phi[-1] == 0.0
