"""Type-I discrete sine transform pair on the interior nodes.

Forward coefficients use the (2/M) factor and the inverse uses a unit
factor, so ``u_j = sum_l coeffs[l] sin(j l pi / M)``. The quadratic-cost
path below is the reference implementation; the scipy FFT path must agree
with it to 1e-12 and is the default because sweeps call these transforms
every time step.
"""

import numpy as np
from scipy.fft import dst as _scipy_dst

from .errors import ShapeError
from .grid import _require_grid_fn


def _sine_matrix(M):
    j = np.arange(1, M)
    return np.sin(np.outer(j, j) * (np.pi / M))


def _require_spectrum(coeffs, grid):
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (grid.M - 1,):
        raise ShapeError(
            f"spectrum has length {coeffs.shape}, grid wants {grid.M - 1}"
        )
    return coeffs


def dst_forward(u, grid, method="fast"):
    """Sine coefficients of a grid function, length M - 1."""
    u = _require_grid_fn(u, grid)
    if method == "naive":
        return (2.0 / grid.M) * (_sine_matrix(grid.M) @ u[1:-1])
    if method == "fast":
        return _scipy_dst(u[1:-1], type=1) / grid.M
    raise ValueError(f"unknown method {method!r}")


def dst_inverse(coeffs, grid, method="fast"):
    """Grid function synthesized from sine coefficients; boundary zeros."""
    coeffs = _require_spectrum(coeffs, grid)
    u = grid.zeros()
    if method == "naive":
        u[1:-1] = _sine_matrix(grid.M) @ coeffs
    elif method == "fast":
        u[1:-1] = _scipy_dst(coeffs, type=1) / 2.0
    else:
        raise ValueError(f"unknown method {method!r}")
    return u
