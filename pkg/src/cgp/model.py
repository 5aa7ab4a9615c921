"""Finite-dimensional Gaussian models for each constraint kind.

A model bundles the coefficient covariance, the interpolation system
``A c = y`` and a linear description of the admissible coefficients in
the normal form ``L c >= l`` plus optional per-coefficient bounds
``lower <= c <= upper``.  Whatever the constraint kind, a coefficient
vector satisfies the inequality system exactly when the function it
represents satisfies the functional constraint on the whole domain.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import basis as _basis
from .basis import BasisKind, KnotGrid
from .exceptions import DataConflictError, ModelBuildError
from .kernels import KernelSpec, kernel_deriv, require_capability

__all__ = [
    "DEFAULT_JITTER",
    "DEFAULT_MAX_COEFFICIENTS",
    "DesignData",
    "Bounds",
    "MonotoneC0",
    "MonotoneC1",
    "Convex",
    "Isotonic",
    "FiniteDimModel",
    "build_bounded",
    "build_monotone_c0",
    "build_monotone_c1",
    "build_convex",
    "build_isotonic",
    "build_model",
    "add_jitter",
]

DEFAULT_JITTER = 1e-10
DEFAULT_MAX_COEFFICIENTS = 5000


def add_jitter(matrix: np.ndarray, eps: float = DEFAULT_JITTER) -> np.ndarray:
    """Return ``matrix + eps * mean(diag) * I`` (symmetrised)."""
    M = 0.5 * (matrix + matrix.T)
    scale = float(np.mean(np.diag(M))) if M.size else 0.0
    if scale <= 0:
        scale = 1.0
    return M + eps * scale * np.eye(M.shape[0])


# ----------------------------------------------------------------------------
# design data and constraint kinds
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignData:
    """Distinct design points in [0, 1]^d and the observed outputs."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __init__(self, inputs, outputs):
        X = np.asarray(inputs, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(outputs, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ModelBuildError(
                f"got {X.shape[0] if X.ndim == 2 else '?'} input rows for {y.size} outputs"
            )
        if y.size < 1:
            raise ModelBuildError("at least one design point is required")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ModelBuildError("design data must be finite")
        if np.any(X < -1e-12) or np.any(X > 1 + 1e-12):
            raise ModelBuildError("design inputs must lie in [0, 1]^d (rescale first)")
        if np.unique(X, axis=0).shape[0] != X.shape[0]:
            raise ModelBuildError("design points must be pairwise distinct")
        X = np.clip(X, 0.0, 1.0)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", y)

    @property
    def n(self) -> int:
        return self.outputs.size

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def _sign(direction) -> float:
    if direction in (1, 1.0, "increasing", "nondecreasing", "non-decreasing", "convex", "up"):
        return 1.0
    if direction in (-1, -1.0, "decreasing", "nonincreasing", "non-increasing", "concave", "down"):
        return -1.0
    raise ValueError(f"unknown direction {direction!r}")


@dataclass(frozen=True)
class Bounds:
    lower: float = -np.inf
    upper: float = np.inf
    kind = "bounds"

    def __post_init__(self):
        lo = -np.inf if self.lower is None else float(self.lower)
        hi = np.inf if self.upper is None else float(self.upper)
        if np.isnan(lo) or np.isnan(hi) or not lo < hi:
            raise ModelBuildError(f"bounds require lower < upper, got [{lo}, {hi}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)


@dataclass(frozen=True)
class MonotoneC0:
    direction: str = "increasing"
    kind = "monotone_c0"

    def __post_init__(self):
        _sign(self.direction)


@dataclass(frozen=True)
class MonotoneC1:
    direction: str = "increasing"
    kind = "monotone_c1"

    def __post_init__(self):
        _sign(self.direction)


@dataclass(frozen=True)
class Convex:
    direction: str = "convex"
    kind = "convex"

    def __post_init__(self):
        _sign(self.direction)


@dataclass(frozen=True)
class Isotonic:
    """Monotonicity along the 0-based input coordinates in ``subset``."""

    subset: tuple = (0, 1)
    directions: tuple = None
    kind = "isotonic"

    def __post_init__(self):
        subset = tuple(int(s) for s in self.subset)
        if len(set(subset)) != len(subset) or any(s < 0 for s in subset):
            raise ModelBuildError(f"invalid isotonic coordinate subset {self.subset!r}")
        dirs = self.directions
        if dirs is None:
            dirs = ("increasing",) * len(subset)
        elif isinstance(dirs, (str, int, float)):
            dirs = (dirs,) * len(subset)
        dirs = tuple(dirs)
        if len(dirs) != len(subset):
            raise ModelBuildError("one direction per monotone coordinate is required")
        for d in dirs:
            _sign(d)
        object.__setattr__(self, "subset", subset)
        object.__setattr__(self, "directions", dirs)


# ----------------------------------------------------------------------------
# the model
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteDimModel:
    """Gaussian coefficient model ``Y(x) = sum_j c_j psi_j(x)``.

    Attributes
    ----------
    constraint : constraint object (Bounds, MonotoneC0, ...)
    kernel : KernelSpec
    grids : tuple of KnotGrid, one per input dimension
    basis_kind : BasisKind of the knot-indexed columns
    gamma : (m, m) prior covariance of the coefficients
    design_matrix : (n, m) matrix ``A``
    equality_rhs : (n,) data ``y``
    ineq_matrix, ineq_rhs : rows ``L c >= l`` (possibly zero rows)
    lower, upper : per-coefficient bounds (infinite when absent)
    coeff_labels : one tag per coefficient (``intercept``, ``slope``, ``knot[3]``...)
    n_lead : number of leading intercept/slope columns (0, 1 or 2)
    """

    constraint: object
    kernel: KernelSpec
    data: DesignData
    grids: tuple
    basis_kind: BasisKind
    gamma: np.ndarray
    design_matrix: np.ndarray
    equality_rhs: np.ndarray
    ineq_matrix: np.ndarray
    ineq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    coeff_labels: tuple
    n_lead: int = 0
    jitter: float = DEFAULT_JITTER
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.gamma.shape[0]

    @property
    def n(self) -> int:
        return self.equality_rhs.size

    @property
    def dim(self) -> int:
        return len(self.grids)

    @property
    def gamma_jittered(self) -> np.ndarray:
        if "gamma_j" not in self._cache:
            self._cache["gamma_j"] = add_jitter(self.gamma, self.jitter)
        return self._cache["gamma_j"]

    def inequality_system(self):
        """All inequalities as ``G c >= g`` (finite box bounds become rows)."""
        if "ineq" not in self._cache:
            eye = np.eye(self.m)
            lo = np.isfinite(self.lower)
            hi = np.isfinite(self.upper)
            G = np.vstack([self.ineq_matrix, eye[lo], -eye[hi]])
            g = np.concatenate([self.ineq_rhs, self.lower[lo], -self.upper[hi]])
            self._cache["ineq"] = (G, g)
        return self._cache["ineq"]

    @property
    def n_inequalities(self) -> int:
        return self.inequality_system()[0].shape[0]

    def is_feasible(self, coeffs, tol: float = 0.0) -> bool:
        G, g = self.inequality_system()
        return bool(np.all(G @ np.asarray(coeffs, dtype=float) - g >= -tol))

    def _as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1, 1)
        elif x.ndim == 1:
            x = x[:, None] if self.dim == 1 else x[None, :]
        if x.shape[1] != self.dim:
            raise ValueError(f"points have dimension {x.shape[1]}, model has {self.dim}")
        return x

    def basis_matrix(self, x) -> np.ndarray:
        """Rows ``psi(x_i)`` including intercept/slope columns."""
        X = self._as_points(x)
        if self.basis_kind is BasisKind.TENSOR:
            return _basis.tensor_matrix(self.grids, X)
        grid = self.grids[0]
        t = X[:, 0]
        if self.basis_kind is BasisKind.HAT:
            return _basis.hat_matrix(grid, t)
        if self.basis_kind is BasisKind.INT_HAT:
            return np.column_stack([np.ones_like(t), _basis.int_hat_matrix(grid, t)])
        return np.column_stack([np.ones_like(t), t, _basis.int2_hat_matrix(grid, t)])

    def evaluate(self, coeffs, x) -> np.ndarray:
        """Function values at ``x`` for one coefficient vector or a stack of them.

        ``coeffs`` of shape ``(m,)`` gives ``(len(x),)``; shape ``(s, m)``
        gives ``(s, len(x))``.
        """
        c = np.asarray(coeffs, dtype=float)
        if c.shape[-1] != self.m:
            raise ValueError(f"expected {self.m} coefficients, got {c.shape[-1]}")
        Psi = self.basis_matrix(x)
        return c @ Psi.T

    def approx_cov(self, x, xp) -> np.ndarray:
        """Covariance ``psi(x)^T Gamma psi(x')`` of the finite-dimensional process."""
        P1 = self.basis_matrix(x)
        P2 = self.basis_matrix(xp)
        return P1 @ self.gamma @ P2.T


# ----------------------------------------------------------------------------
# builders
# ----------------------------------------------------------------------------


def _as_grid(grid) -> KnotGrid:
    return grid if isinstance(grid, KnotGrid) else KnotGrid(int(grid))


def _as_grids(grids, d: int) -> tuple:
    if isinstance(grids, (KnotGrid, int, np.integer)):
        grids = [grids] * d
    grids = tuple(_as_grid(g) for g in grids)
    if len(grids) != d:
        raise ModelBuildError(f"need one grid per input dimension ({d}), got {len(grids)}")
    return grids


def _check_sizes(kernel: KernelSpec, data: DesignData, m: int, dim: int):
    if data.dim != dim:
        raise ModelBuildError(f"design data has dimension {data.dim}, model expects {dim}")
    if kernel.dim != dim:
        raise ModelBuildError(f"kernel has dimension {kernel.dim}, model expects {dim}")
    if m <= data.n:
        raise ModelBuildError(
            f"{m} coefficients cannot interpolate {data.n} points with freedom left; "
            "increase the number of subdivisions"
        )


def _check_rank(A: np.ndarray):
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise ModelBuildError(
            "the interpolation system is rank deficient (several design points share "
            "the same basis support); increase the number of subdivisions"
        )


def _derivative_gamma(kernel: KernelSpec, points, orders) -> np.ndarray:
    """Covariance of (d^{o_a} Y)(p_a) for coefficient descriptors (p_a, o_a)."""
    points = np.asarray(points, dtype=float)
    orders = np.asarray(orders, dtype=int)
    m = points.size
    gamma = np.empty((m, m))
    for p in np.unique(orders):
        for q in np.unique(orders):
            rows = np.flatnonzero(orders == p)
            cols = np.flatnonzero(orders == q)
            block = kernel_deriv(kernel, points[rows][:, None], points[cols][None, :], int(p), int(q))
            gamma[np.ix_(rows, cols)] = block
    return 0.5 * (gamma + gamma.T)


def _empty_rows(m):
    return np.zeros((0, m)), np.zeros(0)


def build_bounded(kernel, grid, data: DesignData, a=-np.inf, b=np.inf, *, jitter=DEFAULT_JITTER,
                  max_coefficients=DEFAULT_MAX_COEFFICIENTS) -> FiniteDimModel:
    """Hat-basis model with ``a <= Y(x) <= b`` on the whole domain.

    The coefficients are the process values at the knots, so the box
    ``a <= c_j <= b`` is equivalent to the functional bound.
    """
    constraint = Bounds(a, b)
    require_capability(kernel, constraint)
    if np.any(data.outputs < constraint.lower) or np.any(data.outputs > constraint.upper):
        raise DataConflictError(
            f"observed outputs fall outside the bounds [{constraint.lower}, {constraint.upper}]"
        )
    grids = _as_grids(grid, data.dim)
    m = int(np.prod([g.size for g in grids]))
    _check_sizes(kernel, data, m, data.dim)
    if m > max_coefficients:
        raise ModelBuildError(f"{m} coefficients exceed the configured cap {max_coefficients}")
    if data.dim == 1:
        kind = BasisKind.HAT
        knots = grids[0].knots[:, None]
        A = _basis.hat_matrix(grids[0], data.inputs[:, 0])
        labels = tuple(f"knot[{j}]" for j in range(m))
    else:
        kind = BasisKind.TENSOR
        knots = _tensor_knots(grids)
        A = _basis.tensor_matrix(grids, data.inputs)
        labels = _tensor_labels(grids)
    _check_rank(A)
    gamma = kernel(knots, knots)
    L, l = _empty_rows(m)
    return FiniteDimModel(
        constraint=constraint, kernel=kernel, data=data, grids=grids, basis_kind=kind,
        gamma=gamma, design_matrix=A, equality_rhs=data.outputs.copy(),
        ineq_matrix=L, ineq_rhs=l,
        lower=np.full(m, constraint.lower), upper=np.full(m, constraint.upper),
        coeff_labels=labels, jitter=jitter,
    )


def build_monotone_c0(kernel, grid, data: DesignData, direction="increasing", *,
                      jitter=DEFAULT_JITTER) -> FiniteDimModel:
    """Hat-basis model whose knot values must form a monotone sequence."""
    constraint = MonotoneC0(direction)
    require_capability(kernel, constraint)
    grid = _as_grid(grid)
    m = grid.size
    _check_sizes(kernel, data, m, 1)
    x = data.inputs[:, 0]
    # data sitting on knots pin coefficients; those must already be ordered
    on_knot = np.abs(x * grid.subdivisions - np.round(x * grid.subdivisions)) < 1e-12
    if on_knot.sum() >= 2:
        order = np.argsort(x[on_knot])
        steps = np.diff(data.outputs[on_knot][order])
        if np.any(steps > 0) and np.any(steps < 0):
            raise DataConflictError("outputs at knot-aligned design points are not monotone")
    A = _basis.hat_matrix(grid, x)
    _check_rank(A)
    gamma = kernel(grid.knots[:, None], grid.knots[:, None])
    s = _sign(direction)
    L = np.zeros((m - 1, m))
    idx = np.arange(m - 1)
    L[idx, idx + 1] = s
    L[idx, idx] = -s
    return FiniteDimModel(
        constraint=constraint, kernel=kernel, data=data, grids=(grid,), basis_kind=BasisKind.HAT,
        gamma=gamma, design_matrix=A, equality_rhs=data.outputs.copy(),
        ineq_matrix=L, ineq_rhs=np.zeros(m - 1),
        lower=np.full(m, -np.inf), upper=np.full(m, np.inf),
        coeff_labels=tuple(f"knot[{j}]" for j in range(m)), jitter=jitter,
    )


def build_monotone_c1(kernel, grid, data: DesignData, direction="increasing", *,
                      jitter=DEFAULT_JITTER) -> FiniteDimModel:
    """Model ``a + sum_j c_j phi_j(x)``; ``c_j`` is the derivative at knot ``j``."""
    constraint = MonotoneC1(direction)
    require_capability(kernel, constraint)
    grid = _as_grid(grid)
    m = grid.size + 1
    _check_sizes(kernel, data, m, 1)
    x = data.inputs[:, 0]
    A = np.column_stack([np.ones(data.n), _basis.int_hat_matrix(grid, x)])
    _check_rank(A)
    points = np.concatenate([[0.0], grid.knots])
    orders = np.concatenate([[0], np.ones(grid.size, dtype=int)])
    gamma = _derivative_gamma(kernel, points, orders)
    lower, upper = _signed_box(m, 1, _sign(direction))
    L, l = _empty_rows(m)
    labels = ("intercept",) + tuple(f"knot[{j}]" for j in range(grid.size))
    return FiniteDimModel(
        constraint=constraint, kernel=kernel, data=data, grids=(grid,),
        basis_kind=BasisKind.INT_HAT, gamma=gamma, design_matrix=A,
        equality_rhs=data.outputs.copy(), ineq_matrix=L, ineq_rhs=l,
        lower=lower, upper=upper, coeff_labels=labels, n_lead=1, jitter=jitter,
    )


def build_convex(kernel, grid, data: DesignData, direction="convex", *,
                 jitter=DEFAULT_JITTER) -> FiniteDimModel:
    """Model ``a + b x + sum_j c_j phi2_j(x)``; ``c_j`` is the second derivative at knot ``j``."""
    constraint = Convex(direction)
    require_capability(kernel, constraint)
    grid = _as_grid(grid)
    m = grid.size + 2
    _check_sizes(kernel, data, m, 1)
    x = data.inputs[:, 0]
    A = np.column_stack([np.ones(data.n), x, _basis.int2_hat_matrix(grid, x)])
    _check_rank(A)
    points = np.concatenate([[0.0, 0.0], grid.knots])
    orders = np.concatenate([[0, 1], np.full(grid.size, 2)])
    gamma = _derivative_gamma(kernel, points, orders)
    lower, upper = _signed_box(m, 2, _sign(direction))
    L, l = _empty_rows(m)
    labels = ("intercept", "slope") + tuple(f"knot[{j}]" for j in range(grid.size))
    return FiniteDimModel(
        constraint=constraint, kernel=kernel, data=data, grids=(grid,),
        basis_kind=BasisKind.INT2_HAT, gamma=gamma, design_matrix=A,
        equality_rhs=data.outputs.copy(), ineq_matrix=L, ineq_rhs=l,
        lower=lower, upper=upper, coeff_labels=labels, n_lead=2, jitter=jitter,
    )


def build_isotonic(kernel, grids, data: DesignData, subset=None, directions=None, *,
                   jitter=DEFAULT_JITTER, max_coefficients=DEFAULT_MAX_COEFFICIENTS) -> FiniteDimModel:
    """Tensor hat model monotone along the coordinates in ``subset`` (0-based).

    Each monotone coordinate contributes the forward differences of the
    knot values along that axis, at every position of the other indices.
    """
    d = data.dim
    if d < 2:
        raise ModelBuildError("isotonic models need at least two input dimensions")
    if subset is None:
        subset = tuple(range(d))
    if len(subset) == 0:
        constraint = Isotonic((), ())
    else:
        constraint = Isotonic(tuple(subset), directions)
    if any(s >= d for s in constraint.subset):
        raise ModelBuildError(f"isotonic coordinates {constraint.subset} exceed dimension {d}")
    require_capability(kernel, constraint)
    grids = _as_grids(grids, d)
    shape = tuple(g.size for g in grids)
    m = int(np.prod(shape))
    if m > max_coefficients:
        raise ModelBuildError(
            f"{m} coefficients exceed the configured cap {max_coefficients}; "
            "the tensor basis grows exponentially with the dimension"
        )
    _check_sizes(kernel, data, m, d)
    A = _basis.tensor_matrix(grids, data.inputs)
    _check_rank(A)
    knots = _tensor_knots(grids)
    gamma = kernel(knots, knots)

    index = np.arange(m).reshape(shape)
    rows = []
    for axis, direction in zip(constraint.subset, constraint.directions):
        s = _sign(direction)
        hi = np.take(index, np.arange(1, shape[axis]), axis=axis).ravel()
        lo = np.take(index, np.arange(0, shape[axis] - 1), axis=axis).ravel()
        block = np.zeros((hi.size, m))
        block[np.arange(hi.size), hi] = s
        block[np.arange(hi.size), lo] = -s
        rows.append(block)
    L = np.vstack(rows) if rows else np.zeros((0, m))
    return FiniteDimModel(
        constraint=constraint, kernel=kernel, data=data, grids=grids, basis_kind=BasisKind.TENSOR,
        gamma=gamma, design_matrix=A, equality_rhs=data.outputs.copy(),
        ineq_matrix=L, ineq_rhs=np.zeros(L.shape[0]),
        lower=np.full(m, -np.inf), upper=np.full(m, np.inf),
        coeff_labels=_tensor_labels(grids), jitter=jitter,
    )


def build_model(kernel, grids, data: DesignData, constraint, **kwargs) -> FiniteDimModel:
    """Dispatch to the builder matching ``constraint``."""
    if isinstance(constraint, Bounds):
        return build_bounded(kernel, grids, data, constraint.lower, constraint.upper, **kwargs)
    if isinstance(constraint, Isotonic):
        return build_isotonic(kernel, grids, data, constraint.subset, constraint.directions, **kwargs)
    kwargs.pop("max_coefficients", None)
    if isinstance(constraint, MonotoneC0):
        return build_monotone_c0(kernel, _first(grids), data, constraint.direction, **kwargs)
    if isinstance(constraint, MonotoneC1):
        return build_monotone_c1(kernel, _first(grids), data, constraint.direction, **kwargs)
    if isinstance(constraint, Convex):
        return build_convex(kernel, _first(grids), data, constraint.direction, **kwargs)
    raise TypeError(f"unsupported constraint {constraint!r}")


def _first(grids):
    if isinstance(grids, (KnotGrid, int, np.integer)):
        return grids
    grids = list(grids)
    if len(grids) != 1:
        raise ModelBuildError("one-dimensional constraint given several grids")
    return grids[0]


def _signed_box(m: int, n_lead: int, sign: float):
    lower = np.full(m, -np.inf)
    upper = np.full(m, np.inf)
    if sign > 0:
        lower[n_lead:] = 0.0
    else:
        upper[n_lead:] = 0.0
    return lower, upper


def _tensor_knots(grids: Sequence[KnotGrid]) -> np.ndarray:
    mesh = np.meshgrid(*[g.knots for g in grids], indexing="ij")
    return np.column_stack([M.ravel() for M in mesh])


def _tensor_labels(grids: Sequence[KnotGrid]) -> tuple:
    return tuple(
        "knot[" + ",".join(map(str, idx)) + "]"
        for idx in itertools.product(*[range(g.size) for g in grids])
    )
