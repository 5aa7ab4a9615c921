"""Shared fixtures: the bundled example configurations and small oracles."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from cgp.cli import _design, load_config, read_data
from cgp.model import build_model

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

ONE_D = [
    "log_monotone_c1",
    "monotone_c1_inside",
    "monotone_c1_outside",
    "monotone_c0",
    "positive",
    "bounded",
    "convex",
]
TWO_D = ["isotonic_2d", "isotonic_x1_2d"]
ALL_CASES = ONE_D + TWO_D


def case_paths(name):
    return CONFIG_DIR / f"{name}.json", CONFIG_DIR / f"{name}.csv"


def load_case(name, **overrides):
    """Config, raw design data and the unit-cube model of a bundled example."""
    cfg_path, data_path = case_paths(name)
    cfg = load_config(cfg_path)
    X, y = read_data(data_path, cfg.dim)
    N = overrides.get("N", cfg.subdivisions)
    if np.ndim(N) == 0:
        N = (int(N),) * cfg.dim
    model = build_model(cfg.unit_kernel, tuple(N), _design(cfg, X, y), cfg.constraint, jitter=cfg.jitter)
    return cfg, X, y, model


def functional_violation(kind, values, x=None, *, direction=1.0, lower=-np.inf, upper=np.inf):
    """Largest violation of a 1-D functional constraint by values on a sorted grid."""
    v = np.asarray(values, dtype=float)
    if kind == "bounds":
        return float(max(np.max(lower - v), np.max(v - upper), 0.0))
    if kind in ("monotone_c0", "monotone_c1"):
        return float(max(np.max(-direction * np.diff(v)), 0.0))
    if kind == "convex":
        x = np.asarray(x, dtype=float)
        w = (x[2:] - x[1:-1]) / (x[2:] - x[:-2])
        chord = w * v[:-2] + (1 - w) * v[2:]
        return float(max(np.max(direction * (v[1:-1] - chord)), 0.0))
    raise ValueError(kind)


def isotonic_violation(V, axes=(0, 1), directions=(1.0, 1.0)):
    worst = 0.0
    for axis, s in zip(axes, directions):
        worst = max(worst, float(np.max(-s * np.diff(V, axis=axis))))
    return worst


# ----------------------------------------------------------------------------
# random coefficient vectors on either side of the constraint
# ----------------------------------------------------------------------------


def random_coefficients(model, rng, feasible: bool):
    """A coefficient vector that satisfies (or clearly violates) the model's inequalities.

    Violations are large compared with the spread of the vector so that
    they show up on a moderately fine evaluation grid.
    """
    kind = model.constraint.kind
    m = model.m
    if kind == "bounds":
        lo, hi = model.constraint.lower, model.constraint.upper
        c = lo + (hi - lo) * rng.random(m)
        if not feasible:
            j = rng.integers(m)
            margin = (0.5 + 0.5 * rng.random()) * (hi - lo)
            c[j] = hi + margin if rng.random() < 0.5 else lo - margin
        return c
    if kind == "monotone_c0":
        s = 1.0 if model.ineq_matrix[0, 1] > 0 else -1.0
        c = s * np.cumsum(rng.exponential(1.0, m)) + rng.normal()
        if not feasible:
            j = rng.integers(1, m)
            c[j] = c[j - 1] - s * (1.0 + np.ptp(c)) * (1 + rng.random())
        return c
    if kind in ("monotone_c1", "convex"):
        lead = model.n_lead
        s = 1.0 if np.isfinite(model.lower[lead]) else -1.0
        knot_vals = s * rng.exponential(1.0, m - lead)
        if not feasible:
            j = rng.integers(m - lead)
            knot_vals[j] = -s * (1.0 + np.max(np.abs(knot_vals))) * (2 + rng.random())
            # keep the neighbours small so the sign change dominates locally
            for k in (j - 1, j + 1):
                if 0 <= k < knot_vals.size:
                    knot_vals[k] = s * 0.1 * rng.random()
        return np.concatenate([rng.normal(size=lead) * 3, knot_vals])
    if kind == "isotonic":
        shape = tuple(g.size for g in model.grids)
        signs = np.ones(len(shape))
        for axis, direction in zip(model.constraint.subset, model.constraint.directions):
            signs[axis] = 1.0 if direction in ("increasing", 1, "up") else -1.0
        W = rng.exponential(1.0, shape)
        C = W
        for axis in range(len(shape)):
            if axis in model.constraint.subset:
                C = np.cumsum(C, axis=axis) if signs[axis] > 0 else np.flip(np.cumsum(np.flip(C, axis), axis), axis)
        if not feasible:
            axis = model.constraint.subset[rng.integers(len(model.constraint.subset))]
            idx = [rng.integers(n) for n in shape]
            idx[axis] = rng.integers(1, shape[axis])
            prev = list(idx)
            prev[axis] -= 1
            C[tuple(idx)] = C[tuple(prev)] - signs[axis] * (1.0 + np.ptp(C)) * (1 + rng.random())
        return C.ravel()
    raise ValueError(kind)
