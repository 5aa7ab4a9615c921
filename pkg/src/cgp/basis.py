"""Uniform knot grids and piecewise-polynomial basis functions on [0, 1].

With ``t = (x - u_j) / delta`` the hat function is ``h(t) = max(0, 1 - |t|)``.
Its primitives in ``t`` are

    H(t) = 0,                 t <= -1
           (1 + t)^2 / 2,     -1 <= t <= 0
           1 - (1 - t)^2 / 2, 0 <= t <= 1
           1,                 t >= 1

    G(t) = 0,                 t <= -1
           (1 + t)^3 / 6,     -1 <= t <= 0
           t + (1 - t)^3 / 6, 0 <= t <= 1
           t,                 t >= 1

so the integrated bases starting at the origin are

    phi_j(x)  = delta * (H(t_x) - H(t_0))
    phi2_j(x) = delta^2 * (G(t_x) - G(t_0)) - delta * H(t_0) * x.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "KnotGrid",
    "BasisKind",
    "hat_eval",
    "int_hat_eval",
    "int2_hat_eval",
    "tensor_eval",
    "hat_matrix",
    "int_hat_matrix",
    "int2_hat_matrix",
    "tensor_matrix",
]

_DOMAIN_TOL = 1e-12


class BasisKind(str, enum.Enum):
    HAT = "hat"
    INT_HAT = "int_hat"
    INT2_HAT = "int2_hat"
    TENSOR = "tensor"


@dataclass(frozen=True)
class KnotGrid:
    """Uniform subdivision ``u_j = j / N`` of the unit interval."""

    subdivisions: int

    def __post_init__(self):
        n = self.subdivisions
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise ValueError(f"number of subdivisions must be an integer >= 1, got {n!r}")
        object.__setattr__(self, "subdivisions", int(n))

    @property
    def size(self) -> int:
        return self.subdivisions + 1

    @property
    def spacing(self) -> float:
        return 1.0 / self.subdivisions

    @cached_property
    def knots(self) -> np.ndarray:
        k = np.arange(self.size) / self.subdivisions
        k.setflags(write=False)
        return k


def _check_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < -_DOMAIN_TOL) or np.any(x > 1 + _DOMAIN_TOL):
        raise ValueError("basis functions are defined on [0, 1] only")
    return np.clip(x, 0.0, 1.0)


def _check_index(grid: KnotGrid, j) -> int:
    if int(j) != j or not 0 <= j <= grid.subdivisions:
        raise IndexError(f"basis index {j} out of range 0..{grid.subdivisions}")
    return int(j)


def _H(t):
    t = np.clip(t, -1.0, 1.0)
    return np.where(t <= 0, 0.5 * (1 + t) ** 2, 1 - 0.5 * (1 - t) ** 2)


def _G(t):
    tc = np.clip(t, -1.0, 1.0)
    inner = np.where(tc <= 0, (1 + tc) ** 3 / 6, tc + (1 - tc) ** 3 / 6)
    # linear continuation beyond the support: G(t) = t for t >= 1
    return inner + np.maximum(t - 1.0, 0.0)


def hat_matrix(grid: KnotGrid, x) -> np.ndarray:
    """Matrix ``B[i, j] = h_j(x_i)`` for a 1-D array of points."""
    x = _check_points(np.atleast_1d(x))
    N = grid.subdivisions
    # cell index and local coordinate keep at most two hats non-zero
    s = np.clip(x, 0.0, 1.0) * N
    cell = np.minimum(np.floor(s).astype(int), N - 1)
    t = s - cell
    rows = np.arange(x.size)
    B = np.zeros((x.size, N + 1))
    B[rows, cell] = 1.0 - t
    B[rows, cell + 1] += t
    return B


def int_hat_matrix(grid: KnotGrid, x) -> np.ndarray:
    """Matrix of once-integrated hats ``phi_j(x_i)``."""
    x = _check_points(np.atleast_1d(x))
    N = grid.subdivisions
    t = (x[:, None] - grid.knots[None, :]) * N
    t0 = -grid.knots * N
    return (_H(t) - _H(t0)[None, :]) / N


def int2_hat_matrix(grid: KnotGrid, x) -> np.ndarray:
    """Matrix of twice-integrated hats ``phi2_j(x_i)``."""
    x = _check_points(np.atleast_1d(x))
    N = grid.subdivisions
    delta = grid.spacing
    t = (x[:, None] - grid.knots[None, :]) * N
    t0 = -grid.knots * N
    return delta**2 * (_G(t) - _G(t0)[None, :]) - delta * _H(t0)[None, :] * x[:, None]


def hat_eval(grid: KnotGrid, j: int, x):
    j = _check_index(grid, j)
    out = hat_matrix(grid, x)[:, j]
    return float(out[0]) if np.ndim(x) == 0 else out


def int_hat_eval(grid: KnotGrid, j: int, x):
    j = _check_index(grid, j)
    out = int_hat_matrix(grid, x)[:, j]
    return float(out[0]) if np.ndim(x) == 0 else out


def int2_hat_eval(grid: KnotGrid, j: int, x):
    j = _check_index(grid, j)
    out = int2_hat_matrix(grid, x)[:, j]
    return float(out[0]) if np.ndim(x) == 0 else out


def tensor_matrix(grids, X) -> np.ndarray:
    """Tensor-product hat basis at the rows of ``X``.

    Columns follow C order over the multi-index ``(i_1, ..., i_d)``: the
    last coordinate varies fastest.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(grids):
        raise ValueError(f"points have dimension {X.shape[1]}, basis has {len(grids)} grids")
    out = np.ones((X.shape[0], 1))
    for k, grid in enumerate(grids):
        Bk = hat_matrix(grid, X[:, k])
        out = (out[:, :, None] * Bk[:, None, :]).reshape(X.shape[0], -1)
    return out


def tensor_eval(grids, multi_index, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (len(grids),) or len(multi_index) != len(grids):
        raise ValueError("point, multi-index and grids must share the same dimension")
    val = 1.0
    for grid, i, xk in zip(grids, multi_index, x):
        val *= hat_eval(grid, i, float(xk))
    return val
