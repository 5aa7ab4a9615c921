"""Estimators and prediction intervals on an evaluation grid."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import LowAcceptanceError
from .model import FiniteDimModel, add_jitter
from .qp import QpSolution, QuadraticProgram, solve_mode
from .tmvn import (
    ConditionedGaussian,
    Method,
    SampleBatch,
    SamplerConfig,
    condition_on_equalities,
    make_rng,
    sample_gibbs,
    sample_rejection_from_mode,
)

__all__ = [
    "PredictionGrid",
    "merge_axis",
    "PosteriorSummary",
    "condition_model",
    "inequality_mode",
    "draw_samples",
    "kriging_mean",
    "kriging_mean_kernel_form",
    "inequality_mode_curve",
    "inequality_mean_curve",
    "prediction_intervals",
    "sample_paths",
    "summarize",
    "gp_predict",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PredictionGrid:
    """Evaluation points in [0, 1]^d.

    Tensor grids keep their per-axis coordinates in ``axes``; the points
    are listed in C order (last axis fastest).
    """

    points: np.ndarray
    axes: tuple = None

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        if P.shape[0] == 0:
            raise ValueError("prediction grid is empty")
        if np.any(P < -1e-12) or np.any(P > 1 + 1e-12):
            raise ValueError("prediction points must lie in [0, 1]^d")
        object.__setattr__(self, "points", np.clip(P, 0.0, 1.0))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes) if self.axes is not None else (len(self),)

    @classmethod
    def tensor(cls, axes) -> "PredictionGrid":
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(np.column_stack([M.ravel() for M in mesh]), axes)

    @classmethod
    def uniform(cls, dim: int, resolution: int | None = None, include=None) -> "PredictionGrid":
        """Uniform tensor grid, optionally merged with the coordinates of ``include``.

        Default resolution is 501 points in 1-D and 101 per axis otherwise.
        """
        if resolution is None:
            resolution = 501 if dim == 1 else 101
        axes = []
        for k in range(dim):
            ax = np.linspace(0.0, 1.0, int(resolution))
            if include is not None:
                extra = np.asarray(include, dtype=float).reshape(-1, dim)[:, k]
                ax = merge_axis(ax, np.clip(extra, 0.0, 1.0))
            axes.append(ax)
        return cls.tensor(axes)


def merge_axis(base, extra, tol: float = 1e-9) -> np.ndarray:
    """Sorted union of ``base`` and ``extra``; ``extra`` values replace base points closer than ``tol``."""
    base = np.asarray(base, dtype=float).ravel()
    extra = np.unique(np.asarray(extra, dtype=float).ravel())
    if extra.size == 0:
        return np.unique(base)
    span = max(float(np.ptp(np.concatenate([base, extra]))), 1.0)
    pos = np.clip(np.searchsorted(extra, base), 1, max(extra.size - 1, 1))
    near = np.minimum(np.abs(base - extra[pos - 1]), np.abs(base - extra[np.minimum(pos, extra.size - 1)]))
    return np.unique(np.concatenate([base[near > tol * span], extra]))


def condition_model(model: FiniteDimModel) -> ConditionedGaussian:
    """Coefficient law given the interpolation conditions only."""
    if "cond" not in model._cache:
        model._cache["cond"] = condition_on_equalities(
            model.gamma, model.design_matrix, model.equality_rhs, jitter=model.jitter
        )
    return model._cache["cond"]


def inequality_mode(model: FiniteDimModel) -> QpSolution:
    """Most probable coefficient vector under equalities and inequalities.

    When the unconstrained conditional mean already satisfies every
    inequality it is the mode and is returned as is.
    """
    cond = condition_model(model)
    G, g = model.inequality_system()
    slack = G @ cond.mean - g
    if np.all(slack >= -1e-12 * (1.0 + np.abs(g))):
        return QpSolution(cond.mean.copy(), (), np.nan, "optimal", 0,
                          extra={"unconstrained_feasible": True})
    sol = solve_mode(QuadraticProgram.from_model(model))
    sol.extra["unconstrained_feasible"] = False
    return sol


def draw_samples(model: FiniteDimModel, config: SamplerConfig, mode=None, *, auto: bool = False) -> SampleBatch:
    """Sample coefficient vectors of ``model`` under all its constraints.

    With ``auto=True`` rejection sampling is tried first and the Gibbs
    sampler takes over (on its own random stream) when fewer than a
    fraction ``1 / max_rejection_tries`` of the first proposals are accepted.
    """
    cond = condition_model(model)
    constraints = model.inequality_system()
    if mode is None:
        mode = inequality_mode(model).minimizer
    if config.method is Method.GIBBS and not auto:
        return sample_gibbs(cond, constraints, config, mode, rng=make_rng(config.seed, 1))
    try:
        return sample_rejection_from_mode(cond, mode, constraints, config, rng=make_rng(config.seed, 0))
    except LowAcceptanceError as exc:
        if not auto:
            raise
        log.info("%s; switching to Gibbs sampling", exc)
        return sample_gibbs(cond, constraints, config, mode, rng=make_rng(config.seed, 1))


def _grid_points(grid) -> np.ndarray:
    return grid.points if isinstance(grid, PredictionGrid) else np.asarray(grid, dtype=float)


def kriging_mean(model: FiniteDimModel, grid) -> np.ndarray:
    """Unconstrained conditional mean of the finite-dimensional process."""
    return model.evaluate(condition_model(model).mean, _grid_points(grid))


def kriging_mean_kernel_form(model: FiniteDimModel, grid) -> np.ndarray:
    """Same curve computed as ``k_N(x)^T K_N^{-1} y``."""
    Psi = model.basis_matrix(_grid_points(grid))
    gamma = add_jitter(model.gamma, model.jitter)
    AG = model.design_matrix @ gamma
    KN = AG @ model.design_matrix.T
    kN = Psi @ AG.T
    c = linalg.cho_factor(0.5 * (KN + KN.T), lower=True)
    return kN @ linalg.cho_solve(c, model.equality_rhs)


def inequality_mode_curve(model: FiniteDimModel, solution, grid) -> np.ndarray:
    mu = solution.minimizer if isinstance(solution, QpSolution) else np.asarray(solution)
    return model.evaluate(mu, _grid_points(grid))


def inequality_mean_curve(model: FiniteDimModel, batch, grid) -> np.ndarray:
    draws = _draws(batch)
    if draws.shape[0] == 0:
        return np.full(len(_grid_points(grid)), np.nan)
    return model.evaluate(draws.mean(axis=0), _grid_points(grid))


def sample_paths(model: FiniteDimModel, batch, grid) -> np.ndarray:
    """One row of function values per draw."""
    draws = _draws(batch)
    pts = _grid_points(grid)
    if draws.shape[0] == 0:
        return np.zeros((0, len(pts)))
    return model.evaluate(draws, pts)


def prediction_intervals(model: FiniteDimModel, batch, grid, alpha: float = 0.05):
    """Pointwise empirical ``alpha/2`` and ``1 - alpha/2`` quantiles of the paths."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    paths = sample_paths(model, batch, grid)
    if paths.shape[0] == 0:
        nan = np.full(paths.shape[1], np.nan)
        return nan, nan.copy()
    if paths.shape[0] < 1.0 / alpha:
        warnings.warn(
            f"{paths.shape[0]} draws are too few for stable {alpha} quantiles", RuntimeWarning, stacklevel=2
        )
    lower = np.quantile(paths, alpha / 2, axis=0)
    upper = np.quantile(paths, 1 - alpha / 2, axis=0)
    return lower, upper


def _draws(batch) -> np.ndarray:
    return batch.draws if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)


@dataclass
class PosteriorSummary:
    points: np.ndarray
    kriging_mean: np.ndarray
    inequality_mean: np.ndarray
    inequality_mode: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    n_samples: int


def summarize(model: FiniteDimModel, grid, solution, batch=None, alpha: float = 0.05) -> PosteriorSummary:
    pts = _grid_points(grid)
    draws = np.zeros((0, model.m)) if batch is None else _draws(batch)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lower, upper = prediction_intervals(model, draws, pts, alpha)
    return PosteriorSummary(
        points=pts,
        kriging_mean=kriging_mean(model, pts),
        inequality_mean=inequality_mean_curve(model, draws, pts),
        inequality_mode=inequality_mode_curve(model, solution, pts),
        lower=lower,
        upper=upper,
        alpha=alpha,
        n_samples=draws.shape[0],
    )


def gp_predict(kernel, X, y, x, jitter: float = 1e-10):
    """Mean and variance of the exact (unapproximated) conditional GP."""
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    x = np.asarray(x, dtype=float).reshape(-1, X.shape[1])
    K = add_jitter(kernel(X, X), jitter)
    k = kernel(x, X)
    c = linalg.cho_factor(K, lower=True)
    mean = k @ linalg.cho_solve(c, np.asarray(y, dtype=float))
    var = kernel.variance - np.einsum("ij,ji->i", k, linalg.cho_solve(c, k.T))
    return mean, np.maximum(var, 0.0)
