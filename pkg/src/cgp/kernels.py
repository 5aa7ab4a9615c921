"""Stationary covariance families and their closed-form derivatives.

All families are written in terms of the lag ``r = x - x'``.  For a
one-dimensional kernel ``k(r)`` the mixed partial derivative is

    d^{p+q} K / dx^p dx'^q (x, x') = (-1)^q k^{(p+q)}(x - x'),

so only the radial derivatives ``k^{(n)}`` for ``n <= 4`` are coded.
Multi-dimensional kernels are tensor products of the 1-D families.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e

from .exceptions import KernelTooRoughError

__all__ = [
    "Family",
    "KernelSpec",
    "SmoothnessClass",
    "smoothness",
    "kernel_eval",
    "kernel_deriv",
    "capability",
    "require_capability",
    "required_order",
]

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    MATERN52 = "matern52"
    MATERN32 = "matern32"
    EXPONENTIAL = "exponential"

    @classmethod
    def parse(cls, name: "str | Family") -> "Family":
        if isinstance(name, Family):
            return name
        key = str(name).strip().lower().replace("_", "").replace("-", "").replace(" ", "")
        aliases = {
            "gaussian": cls.GAUSSIAN,
            "gauss": cls.GAUSSIAN,
            "rbf": cls.GAUSSIAN,
            "squaredexponential": cls.GAUSSIAN,
            "matern52": cls.MATERN52,
            "matern5/2": cls.MATERN52,
            "matern32": cls.MATERN32,
            "matern3/2": cls.MATERN32,
            "exponential": cls.EXPONENTIAL,
            "exp": cls.EXPONENTIAL,
            "matern12": cls.EXPONENTIAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown kernel family {name!r}") from None


@dataclass(frozen=True)
class SmoothnessClass:
    """Largest ``p`` for which the mixed derivative of order ``(p, p)`` is continuous."""

    max_mixed_order: float

    @property
    def max_total_order(self) -> float:
        return 2 * self.max_mixed_order


_SMOOTHNESS = {
    Family.GAUSSIAN: SmoothnessClass(math.inf),
    Family.MATERN52: SmoothnessClass(2),
    Family.MATERN32: SmoothnessClass(1),
    Family.EXPONENTIAL: SmoothnessClass(0),
}


def smoothness(family: "Family | str | KernelSpec") -> SmoothnessClass:
    if isinstance(family, KernelSpec):
        family = family.family
    return _SMOOTHNESS[Family.parse(family)]


@dataclass(frozen=True)
class KernelSpec:
    """Covariance family with variance ``sigma^2`` and one length-scale per input.

    Parameters
    ----------
    family : Family or str
        One of ``gaussian``, ``matern52``, ``matern32``, ``exponential``.
    variance : float
        Process variance (output units squared).
    lengthscales : sequence of float
        One positive length-scale per input dimension.
    """

    family: Family
    variance: float
    lengthscales: tuple

    def __init__(self, family, variance, lengthscales):
        fam = Family.parse(family)
        ls = np.atleast_1d(np.asarray(lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size == 0:
            raise ValueError("lengthscales must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise ValueError(f"lengthscales must be finite and > 0, got {ls.tolist()}")
        variance = float(variance)
        if not math.isfinite(variance) or variance <= 0:
            raise ValueError(f"variance must be finite and > 0, got {variance}")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "variance", variance)
        object.__setattr__(self, "lengthscales", tuple(float(v) for v in ls))

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    def with_variance(self, variance: float) -> "KernelSpec":
        return KernelSpec(self.family, variance, self.lengthscales)

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "variance": self.variance,
            "lengthscales": list(self.lengthscales),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["family"], d["variance"], d["lengthscales"])

    def __call__(self, X1, X2=None) -> np.ndarray:
        """Covariance matrix between the rows of ``X1`` and ``X2``."""
        X1 = self._as_points(X1)
        X2 = X1 if X2 is None else self._as_points(X2)
        out = np.ones((X1.shape[0], X2.shape[0]))
        for k, theta in enumerate(self.lengthscales):
            r = X1[:, k][:, None] - X2[:, k][None, :]
            out *= _radial(self.family, r, theta, 0)
        return self.variance * out

    def _as_points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 0:
            X = X.reshape(1, 1)
        elif X.ndim == 1:
            X = X[:, None] if self.dim == 1 else X[None, :]
        if X.shape[1] != self.dim:
            raise ValueError(
                f"points have dimension {X.shape[1]}, kernel expects {self.dim}"
            )
        return X


def _radial(family: Family, r, theta: float, n: int):
    """n-th derivative of the unit-variance 1-D kernel as a function of the lag r."""
    r = np.asarray(r, dtype=float)
    if family is Family.GAUSSIAN:
        t = r / theta
        coef = np.zeros(n + 1)
        coef[n] = 1.0
        return (-1.0 / theta) ** n * hermite_e.hermeval(t, coef) * np.exp(-0.5 * t * t)

    s = np.abs(r)
    sign = np.sign(r) if n % 2 else 1.0
    if family is Family.MATERN52:
        a = _SQRT5 / theta
        e = np.exp(-a * s)
        u = a * s
        if n == 0:
            g = (u * u + 3 * u + 3) / 3
        elif n == 1:
            g = -a * u * (u + 1) / 3
        elif n == 2:
            g = a**2 * (u * u - u - 1) / 3
        elif n == 3:
            g = -(a**3) * u * (u - 3) / 3
        else:
            g = a**4 * (u * u - 5 * u + 3) / 3
    elif family is Family.MATERN32:
        a = _SQRT3 / theta
        e = np.exp(-a * s)
        u = a * s
        if n == 0:
            g = 1 + u
        elif n == 1:
            g = -a * u
        else:
            g = a**2 * (u - 1)
    else:
        a = 1.0 / theta
        e = np.exp(-a * s)
        g = 1.0
    return sign * g * e


def kernel_eval(spec: KernelSpec, x, xp) -> float:
    """K(x, x') for two single points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    if x.shape != (spec.dim,) or xp.shape != (spec.dim,):
        raise ValueError(
            f"points of shape {x.shape} and {xp.shape} do not match kernel dimension {spec.dim}"
        )
    return float(spec(x[None, :], xp[None, :])[0, 0])


def kernel_deriv(spec: KernelSpec, x, xp, p: int, q: int):
    """Mixed derivative d^{p+q}K / dx^p dx'^q of a 1-D kernel.

    ``x`` and ``xp`` broadcast against each other, so passing column and
    row vectors yields a matrix.  Values at zero lag are the analytic
    limits.

    Raises
    ------
    KernelTooRoughError
        If the family has no continuous derivative of that order.
    """
    if spec.dim != 1:
        raise ValueError("kernel_deriv is defined for one-dimensional kernels")
    if p < 0 or q < 0 or p > 2 or q > 2:
        raise ValueError(f"derivative orders must lie in 0..2, got ({p}, {q})")
    if p + q > smoothness(spec).max_total_order:
        raise KernelTooRoughError(
            f"{spec.family.value} kernel is too rough for a derivative of order ({p}, {q})"
        )
    r = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    val = spec.variance * (-1.0) ** q * _radial(spec.family, r, spec.lengthscales[0], p + q)
    return float(val) if np.ndim(val) == 0 else val


# derivative order (per argument) that each constraint's coefficient covariance needs
_REQUIRED = {
    "bounds": 0,
    "monotone_c0": 0,
    "isotonic": 0,
    "monotone_c1": 1,
    "convex": 2,
}


def required_order(constraint) -> int:
    kind = getattr(constraint, "kind", constraint)
    kind = str(kind).lower().replace("-", "_")
    if kind not in _REQUIRED:
        raise ValueError(f"unknown constraint kind {kind!r}")
    return _REQUIRED[kind]


def capability(spec: KernelSpec, constraint) -> bool:
    """Whether ``spec`` is smooth enough to build the model for ``constraint``."""
    return required_order(constraint) <= smoothness(spec).max_mixed_order


def require_capability(spec: KernelSpec, constraint) -> None:
    if not capability(spec, constraint):
        kind = getattr(constraint, "kind", constraint)
        raise KernelTooRoughError(
            f"{spec.family.value} kernel is too rough for a {kind} constraint "
            f"(needs mixed derivatives of order {required_order(constraint)})"
        )
