"""Command-line front end: ``cgp mode|sample|verify``.

Each command reads a JSON run configuration and a headered CSV of design
data (input columns first, output last), works on the unit cube
internally and writes plot-ready CSV tables in the original units.

Exit codes: 0 success, 1 verification failed, 2 configuration or data
error, 3 infeasible constraints, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .exceptions import (
    CGPError,
    DataConflictError,
    InfeasibleError,
    IterationLimitError,
    KernelTooRoughError,
    LowAcceptanceError,
    ModelBuildError,
    RankDeficientError,
)
from .kernels import KernelSpec, require_capability
from .model import (
    DEFAULT_JITTER,
    DEFAULT_MAX_COEFFICIENTS,
    Bounds,
    Convex,
    DesignData,
    Isotonic,
    MonotoneC0,
    MonotoneC1,
    _sign,
    build_model,
)
from .posterior import (
    PredictionGrid,
    draw_samples,
    inequality_mode,
    kriging_mean,
    merge_axis,
    summarize,
    sample_paths,
)
from .tmvn import Method, SamplerConfig

__all__ = ["RunConfig", "ConfigError", "load_config", "read_data", "main", "cmd_mode", "cmd_sample", "cmd_verify"]

log = logging.getLogger("cgp")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

VERIFY_TOL = 1e-8


class ConfigError(CGPError, ValueError):
    """The run configuration or the data file is malformed or inconsistent."""


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------

_CONSTRAINT_KINDS = {
    "bounds": Bounds,
    "monotone_c0": MonotoneC0,
    "monotone_c1": MonotoneC1,
    "convex": Convex,
    "isotonic": Isotonic,
}
_SAMPLER_METHODS = ("auto", "rejection", "gibbs")


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    Lengthscales and domain are in the user's units; ``unit_kernel``
    holds the kernel rescaled to the unit cube.
    """

    kernel: KernelSpec
    constraint: object
    subdivisions: tuple
    domain: tuple
    method: str = "auto"
    seed: int = 0
    n_samples: int = 100
    burn_in: int = 1000
    thinning: int = 10
    max_rejection_tries: int = 1000
    resolution: int | None = None
    alpha: float = 0.05
    jitter: float = DEFAULT_JITTER
    max_coefficients: int = DEFAULT_MAX_COEFFICIENTS
    unit_kernel: KernelSpec = field(init=False, repr=False)

    def __post_init__(self):
        widths = [hi - lo for lo, hi in self.domain]
        scaled = [ls / w for ls, w in zip(self.kernel.lengthscales, widths)]
        object.__setattr__(self, "unit_kernel", KernelSpec(self.kernel.family, self.kernel.variance, scaled))

    @property
    def dim(self) -> int:
        return len(self.domain)

    def with_seed(self, seed: int) -> "RunConfig":
        d = self.to_dict()
        d["sampler"]["seed"] = int(seed)
        return RunConfig.from_dict(d)

    def sampler_config(self) -> SamplerConfig:
        method = Method.GIBBS if self.method == "gibbs" else Method.REJECTION
        return SamplerConfig(method=method, seed=self.seed, n_samples=self.n_samples, burn_in=self.burn_in,
                             thinning=self.thinning, max_rejection_tries=self.max_rejection_tries)

    def grids(self) -> tuple:
        return tuple(self.subdivisions)

    def to_dict(self) -> dict:
        c = self.constraint
        if isinstance(c, Bounds):
            cons = {"kind": c.kind, "lower": _finite_or_none(c.lower), "upper": _finite_or_none(c.upper)}
        elif isinstance(c, Isotonic):
            cons = {"kind": c.kind, "subset": list(c.subset), "directions": list(c.directions)}
        else:
            cons = {"kind": c.kind, "direction": c.direction}
        return {
            "kernel": self.kernel.to_dict(),
            "constraint": cons,
            "N": list(self.subdivisions),
            "domain": [[lo, hi] for lo, hi in self.domain],
            "sampler": {
                "method": self.method,
                "seed": self.seed,
                "n_samples": self.n_samples,
                "burn_in": self.burn_in,
                "thinning": self.thinning,
                "max_rejection_tries": self.max_rejection_tries,
            },
            "grid": {"resolution": self.resolution},
            "alpha": self.alpha,
            "jitter": self.jitter,
            "max_coefficients": self.max_coefficients,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            return _parse_config(raw)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc


def _finite_or_none(v):
    return float(v) if math.isfinite(v) else None


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _int(v, name, lo=None):
    _require(isinstance(v, (int, np.integer)) and not isinstance(v, bool), f"{name} must be an integer")
    if lo is not None:
        _require(v >= lo, f"{name} must be >= {lo}")
    return int(v)


def _parse_config(raw: dict) -> RunConfig:
    _require(isinstance(raw, dict), "configuration must be a JSON object")
    unknown = set(raw) - {"kernel", "constraint", "N", "domain", "sampler", "grid", "alpha", "jitter",
                          "max_coefficients"}
    _require(not unknown, f"unknown configuration keys: {sorted(unknown)}")
    _require("kernel" in raw and "constraint" in raw and "N" in raw, "kernel, constraint and N are required")

    k = raw["kernel"]
    _require(isinstance(k, dict), "kernel must be an object")
    ls = k.get("lengthscales")
    if isinstance(ls, (int, float)):
        ls = [ls]
    kernel = KernelSpec(k.get("family"), k.get("variance"), ls)
    d = kernel.dim

    domain = raw.get("domain", [[0.0, 1.0]] * d)
    _require(isinstance(domain, list) and len(domain) == d,
             f"domain needs one [min, max] pair per input dimension ({d})")
    dom = []
    for pair in domain:
        _require(isinstance(pair, list) and len(pair) == 2, "each domain entry must be [min, max]")
        lo, hi = float(pair[0]), float(pair[1])
        _require(math.isfinite(lo) and math.isfinite(hi) and lo < hi, f"invalid domain interval {pair}")
        dom.append((lo, hi))

    N = raw["N"]
    N = [N] * d if not isinstance(N, list) else N
    _require(len(N) == d, f"N needs one entry per input dimension ({d})")
    N = tuple(_int(v, "N", 1) for v in N)

    c = dict(raw["constraint"])
    kind = str(c.pop("kind", "")).lower().replace("-", "_")
    _require(kind in _CONSTRAINT_KINDS, f"constraint kind must be one of {sorted(_CONSTRAINT_KINDS)}")
    if kind == "bounds":
        _require(set(c) <= {"lower", "upper"}, f"unexpected bounds fields {sorted(c)}")
        constraint = Bounds(c.get("lower"), c.get("upper"))
    elif kind == "isotonic":
        _require(set(c) <= {"subset", "directions"}, f"unexpected isotonic fields {sorted(c)}")
        _require(d >= 2, "isotonic constraints need at least two input dimensions")
        subset = c.get("subset", list(range(d)))
        constraint = Isotonic(tuple(subset), c.get("directions"))
        _require(all(s < d for s in constraint.subset), f"isotonic subset {subset} exceeds dimension {d}")
    else:
        _require(set(c) <= {"direction"}, f"unexpected {kind} fields {sorted(c)}")
        _require(d == 1, f"{kind} constraints are one-dimensional")
        cls = _CONSTRAINT_KINDS[kind]
        constraint = cls(c["direction"]) if "direction" in c else cls()
    require_capability(kernel, constraint)

    s = dict(raw.get("sampler", {}))
    unknown = set(s) - {"method", "seed", "n_samples", "burn_in", "thinning", "max_rejection_tries"}
    _require(not unknown, f"unknown sampler keys: {sorted(unknown)}")
    method = str(s.get("method", "auto")).lower()
    _require(method in _SAMPLER_METHODS, f"sampler method must be one of {_SAMPLER_METHODS}")
    seed = _int(s.get("seed", 0), "seed", 0)
    _require(seed < 2**64, "seed must fit in 64 bits")

    grid = raw.get("grid", {})
    _require(isinstance(grid, dict), "grid must be an object")
    res = grid.get("resolution")
    res = None if res is None else _int(res, "grid resolution", 2)

    alpha = float(raw.get("alpha", 0.05))
    _require(0 < alpha < 1, "alpha must lie in (0, 1)")
    jitter = float(raw.get("jitter", DEFAULT_JITTER))
    _require(math.isfinite(jitter) and jitter >= 0, "jitter must be non-negative")
    max_coef = _int(raw.get("max_coefficients", DEFAULT_MAX_COEFFICIENTS), "max_coefficients", 1)

    m = int(np.prod([n + 1 for n in N]))
    _require(m <= max_coef, f"{m} coefficients exceed max_coefficients={max_coef}")

    return RunConfig(
        kernel=kernel, constraint=constraint, subdivisions=N, domain=tuple(dom), method=method, seed=seed,
        n_samples=_int(s.get("n_samples", 100), "n_samples", 0),
        burn_in=_int(s.get("burn_in", 1000), "burn_in", 0),
        thinning=_int(s.get("thinning", 10), "thinning", 1),
        max_rejection_tries=_int(s.get("max_rejection_tries", 1000), "max_rejection_tries", 1),
        resolution=res, alpha=alpha, jitter=jitter, max_coefficients=max_coef,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(raw)


# ----------------------------------------------------------------------------
# data and tables
# ----------------------------------------------------------------------------


def read_data(path, dim: int):
    """Design inputs (n, dim) and outputs (n,) from a headered CSV file."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(x.strip() for x in r)]
    except OSError as exc:
        raise ConfigError(f"cannot read data {path}: {exc}") from exc
    _require(len(rows) >= 2, f"data file {path} needs a header and at least one row")
    header, body = rows[0], rows[1:]
    _require(len(header) == dim + 1, f"data file has {len(header)} columns, expected {dim} inputs + 1 output")
    try:
        table = np.array([[float(x) for x in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"non-numeric entry in {path}: {exc}") from exc
    _require(table.shape[1] == dim + 1, f"ragged rows in {path}")
    _require(np.all(np.isfinite(table)), f"non-finite entries in {path}")
    return table[:, :dim], table[:, dim]


def _to_unit(config: RunConfig, X) -> np.ndarray:
    lo = np.array([a for a, _ in config.domain])
    hi = np.array([b for _, b in config.domain])
    return (np.asarray(X, dtype=float) - lo) / (hi - lo)


def _design(config: RunConfig, X, y) -> DesignData:
    T = _to_unit(config, X)
    if np.any(T < -1e-12) or np.any(T > 1 + 1e-12):
        raise ConfigError("design inputs fall outside the configured domain")
    return DesignData(np.clip(T, 0.0, 1.0), y)


def _grid(config: RunConfig, X):
    """Output axes in user units (design coordinates included) and the unit grid."""
    res = config.resolution or (501 if config.dim == 1 else 101)
    axes = []
    for k, (lo, hi) in enumerate(config.domain):
        axes.append(merge_axis(np.linspace(lo, hi, res), X[:, k]))
    unit_axes = [np.clip((ax - lo) / (hi - lo), 0.0, 1.0) for ax, (lo, hi) in zip(axes, config.domain)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([M.ravel() for M in mesh]), PredictionGrid.tensor(unit_axes)


def _fmt(v) -> str:
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _write_csv(path: Path, header, columns):
    n = len(columns[0]) if columns else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(n):
            w.writerow([_fmt(col[i]) for col in columns])


def _x_header(dim):
    return [f"x{k + 1}" for k in range(dim)]


def _versions() -> dict:
    return {"cgp": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _meta(command, config: RunConfig, model, solution, extra=None) -> dict:
    meta = {
        "command": command,
        "config": config.to_dict(),
        "seed": config.seed,
        "transform": {
            "domain": [[lo, hi] for lo, hi in config.domain],
            "to_unit": "t = (x - min) / (max - min)",
            "unit_lengthscales": list(config.unit_kernel.lengthscales),
        },
        "model": {
            "n_coefficients": model.m,
            "n_observations": model.n,
            "n_inequalities": model.n_inequalities,
        },
        "mode": {
            "unconstrained_feasible": bool(solution.extra.get("unconstrained_feasible", False)),
            "n_active": len(solution.active_set),
            "iterations": solution.iterations,
        },
        "versions": _versions(),
    }
    if extra:
        meta.update(extra)
    return _jsonable(meta)


def _write_json(path: Path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def _build(config: RunConfig, data_path):
    X, y = read_data(data_path, config.dim)
    data = _design(config, X, y)
    model = build_model(config.unit_kernel, config.grids(), data, config.constraint,
                        jitter=config.jitter, max_coefficients=config.max_coefficients)
    return X, model


def cmd_mode(config: RunConfig, data_path, out_dir) -> dict:
    """Write ``mode.csv``, ``kriging_mean.csv`` and ``mode_meta.json``."""
    X, model = _build(config, data_path)
    solution = inequality_mode(model)
    pts, grid = _grid(config, X)
    mode = model.evaluate(solution.minimizer, grid.points)
    km = kriging_mean(model, grid)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    xs = [pts[:, k] for k in range(config.dim)]
    _write_csv(out / "mode.csv", _x_header(config.dim) + ["mode"], xs + [mode])
    _write_csv(out / "kriging_mean.csv", _x_header(config.dim) + ["kriging_mean"], xs + [km])
    meta = _meta("mode", config, model, solution)
    _write_json(out / "mode_meta.json", meta)
    return meta


def cmd_sample(config: RunConfig, data_path, out_dir) -> dict:
    """Write ``paths.csv``, ``summary.csv`` and ``meta.json``."""
    X, model = _build(config, data_path)
    solution = inequality_mode(model)
    batch = draw_samples(model, config.sampler_config(), solution.minimizer, auto=config.method == "auto")
    pts, grid = _grid(config, X)
    summary = summarize(model, grid, solution, batch, config.alpha)
    paths = sample_paths(model, batch, grid)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    xs = [pts[:, k] for k in range(config.dim)]
    xh = _x_header(config.dim)
    if config.dim == 1:
        _write_csv(out / "paths.csv", xh + [f"draw_{i}" for i in range(paths.shape[0])], xs + list(paths))
    else:
        n_pts = pts.shape[0]
        long_x = [np.tile(x, paths.shape[0]) for x in xs]
        ids = np.repeat(np.arange(paths.shape[0]), n_pts)
        with open(out / "paths.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(xh + ["value", "draw_id"])
            flat = paths.ravel()
            for i in range(flat.size):
                w.writerow([_fmt(x[i]) for x in long_x] + [_fmt(flat[i]), str(ids[i])])
    _write_csv(out / "summary.csv", xh + ["kriging_mean", "inequality_mean", "mode", "lower", "upper"],
               xs + [summary.kriging_mean, summary.inequality_mean, summary.inequality_mode,
                     summary.lower, summary.upper])
    ess = batch.ess
    meta = _meta("sample", config, model, solution, {
        "sampler": {
            "method": batch.method,
            "acceptance_rate": batch.acceptance_rate,
            "n_proposals": batch.n_proposals,
            "n_draws": len(batch),
            "min_ess": None if ess is None or len(ess) == 0 else float(np.min(ess)),
        },
        "alpha": config.alpha,
    })
    _write_json(out / "meta.json", meta)
    return meta


# ----------------------------------------------------------------------------
# verification
# ----------------------------------------------------------------------------


@dataclass
class Check:
    source: str
    what: str
    max_violation: float
    ok: bool = True
    index: int | None = None
    location: tuple | None = None

    def line(self) -> str:
        status = "ok" if self.ok else "FAIL"
        s = f"{self.source}: {self.what} max violation {self.max_violation:.3e} [{status}]"
        if not self.ok and self.index is not None:
            loc = ", ".join(repr(float(v)) for v in self.location)
            s += f" at data row {self.index} (x = {loc})"
        return s


def _read_table(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        cols[name] = np.array([float(r[j]) if r[j] != "" else np.nan for r in body])
    return header, cols


def _worst(source, what, violation, scale, rows, pts) -> Check:
    """Summarise pointwise violations against the tolerance ``1e-8 * max(1, |scale|)``."""
    violation = np.asarray(violation, dtype=float).ravel()
    if violation.size == 0:
        return Check(source, what, 0.0)
    rows = np.asarray(rows).ravel()
    excess = violation - VERIFY_TOL * np.maximum(1.0, np.abs(np.asarray(scale, dtype=float).ravel()))
    excess = np.where(np.isnan(excess), np.inf, excess)
    ok = bool(np.all(excess <= 0))
    i = int(np.argmax(violation)) if ok else int(np.argmax(excess))
    r = int(rows[i])
    return Check(source, what, max(float(np.nanmax(violation)), 0.0) if ok else float(violation[i]),
                 ok, r, tuple(pts[r]))


def _interp_check(source, pts, values, X, y) -> Check:
    rows = []
    for xd in X:
        hit = np.flatnonzero(np.all(np.abs(pts - xd) <= 1e-12 * np.maximum(1.0, np.abs(xd)), axis=1))
        if hit.size == 0:
            return Check(source, "interpolation (design point missing from grid)", np.inf, False)
        rows.append(int(hit[0]))
    rows = np.array(rows)
    return _worst(source, "interpolation", np.abs(values[rows] - y), y, rows, pts)


def _tensor(pts, values):
    axes = [np.unique(pts[:, k]) for k in range(pts.shape[1])]
    idx = tuple(np.searchsorted(ax, pts[:, k]) for k, ax in enumerate(axes))
    shape = tuple(len(a) for a in axes)
    _require(int(np.prod(shape)) == len(values), "output points do not form a tensor grid")
    V = np.full(shape, np.nan)
    R = np.full(shape, -1)
    V[idx] = values
    R[idx] = np.arange(len(values))
    return axes, V, R


def _constraint_checks(source, constraint, pts, values) -> list:
    kind = constraint.kind
    if kind == "bounds":
        lo, hi = constraint.lower, constraint.upper
        viol = np.zeros_like(values)
        scale = np.ones_like(values)
        if math.isfinite(lo):
            viol = np.maximum(viol, lo - values)
            scale = np.where(values < lo, lo, scale)
        if math.isfinite(hi):
            viol = np.maximum(viol, values - hi)
            scale = np.where(values > hi, hi, scale)
        return [_worst(source, f"bounds [{lo}, {hi}]", viol, scale, np.arange(len(values)), pts)]
    axes, V, R = _tensor(pts, values)
    if kind in ("monotone_c0", "monotone_c1"):
        s = _sign(constraint.direction)
        return [_worst(source, f"{kind} ({constraint.direction})", -s * np.diff(V), V[1:], R[1:], pts)]
    if kind == "convex":
        s = _sign(constraint.direction)
        x = axes[0]
        w = (x[2:] - x[1:-1]) / (x[2:] - x[:-2])
        chord = w * V[:-2] + (1 - w) * V[2:]
        return [_worst(source, f"convexity ({constraint.direction})", s * (V[1:-1] - chord), V[1:-1], R[1:-1], pts)]
    if kind == "isotonic":
        out = []
        for axis, direction in zip(constraint.subset, constraint.directions):
            s = _sign(direction)
            later = np.arange(1, V.shape[axis])
            out.append(_worst(source, f"isotonic along x{axis + 1} ({direction})", -s * np.diff(V, axis=axis),
                              np.take(V, later, axis=axis), np.take(R, later, axis=axis), pts))
        return out
    raise ConfigError(f"cannot verify constraint kind {kind!r}")


def cmd_verify(config: RunConfig, data_path, out_dir, stream=None) -> list:
    """Re-check interpolation and constraints of every curve found in ``out_dir``."""
    stream = sys.stdout if stream is None else stream
    X, y = read_data(data_path, config.dim)
    out = Path(out_dir)
    d = config.dim
    xh = _x_header(d)
    checks = []
    found = False

    # (file, columns checked for interpolation, columns checked for the constraint)
    for name, interp_cols, cons_cols in (
        ("mode.csv", ["mode"], ["mode"]),
        ("kriging_mean.csv", ["kriging_mean"], []),
        ("summary.csv", ["kriging_mean", "inequality_mean", "mode", "lower", "upper"], ["inequality_mean", "mode"]),
    ):
        path = out / name
        if not path.exists():
            continue
        found = True
        header, cols = _read_table(path)
        _require(all(h in cols for h in xh), f"{name} lacks input columns {xh}")
        pts = np.column_stack([cols[h] for h in xh])
        for col in interp_cols:
            if col not in cols or np.all(np.isnan(cols[col])):
                continue
            checks.append(_interp_check(f"{name}:{col}", pts, cols[col], X, y))
            if col in cons_cols:
                checks.extend(_constraint_checks(f"{name}:{col}", config.constraint, pts, cols[col]))

    path = out / "paths.csv"
    if path.exists():
        found = True
        header, cols = _read_table(path)
        if d == 1:
            pts = cols["x1"][:, None]
            draws = [(h, cols[h]) for h in header if h.startswith("draw_")]
        else:
            ids = cols["draw_id"]
            allpts = np.column_stack([cols[h] for h in xh])
            draws = []
            pts = None
            for k in np.unique(ids):
                sel = ids == k
                pts = allpts[sel]
                draws.append((f"draw_{int(k)}", cols["value"][sel]))
        for label, values in draws:
            checks.append(_interp_check(f"paths.csv:{label}", pts, values, X, y))
            checks.extend(_constraint_checks(f"paths.csv:{label}", config.constraint, pts, values))

    if not found:
        raise ConfigError(f"no output files to verify in {out}")
    _report(checks, stream)
    return checks


def _report(checks, stream):
    """One line per (source, check), collapsing sample paths to their worst case."""
    groups = {}
    for c in checks:
        src = "paths.csv:all draws" if c.source.startswith("paths.csv") else c.source
        key = (src, c.what)
        best = groups.get(key)
        if best is None or (best.ok and not c.ok) or (best.ok == c.ok and c.max_violation > best.max_violation):
            groups[key] = c
    for (src, _), c in groups.items():
        line = c.line()
        if src != c.source:
            line = f"{src} (worst {c.source.split(':', 1)[1]}){line[len(c.source):]}"
        print(line, file=stream)
    bad = sum(not c.ok for c in checks)
    print(f"verify: {len(checks) - bad}/{len(checks)} checks passed", file=stream)


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cgp", description="Constrained Gaussian-process interpolation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("mode", "write the inequality mode and the kriging mean"),
                        ("sample", "draw constrained sample paths and summaries"),
                        ("verify", "re-check written outputs against data and constraint")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--data", required=True, help="CSV with input columns then the output column")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--seed", type=int, default=None, help="override the sampler seed (unsigned 64-bit)")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def _thread_limit():
    raw = os.environ.get("CGP_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CGP_THREADS must be a positive integer, got {raw!r}") from None
    _require(n >= 1, "CGP_THREADS must be a positive integer")
    return n


def _run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        _require(0 <= args.seed < 2**64, "seed must be an unsigned 64-bit integer")
        config = config.with_seed(args.seed)
    if args.command == "mode":
        cmd_mode(config, args.data, args.out)
    elif args.command == "sample":
        cmd_sample(config, args.data, args.out)
    else:
        checks = cmd_verify(config, args.data, args.out)
        if any(not c.ok for c in checks):
            return EXIT_VERIFY
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        limit = _thread_limit()
        if limit is None:
            return _run(args)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=limit):
            return _run(args)
    except (DataConflictError, InfeasibleError) as exc:
        print(f"cgp: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, KernelTooRoughError, ModelBuildError) as exc:
        print(f"cgp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RankDeficientError, IterationLimitError, LowAcceptanceError, np.linalg.LinAlgError) as exc:
        print(f"cgp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
