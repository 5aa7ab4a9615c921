"""Acceptance criteria, one test per criterion.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; the
terminal summary prints one PASS/FAIL line per criterion.
"""

import io
import sys
import warnings

import numpy as np
import pytest
from scipy import integrate

from cgp.basis import KnotGrid, hat_eval, hat_matrix, int2_hat_eval, int2_hat_matrix, int_hat_eval, int_hat_matrix
from cgp.cli import cmd_mode, cmd_sample, cmd_verify, load_config
from cgp.kernels import KernelSpec, kernel_deriv, kernel_eval
from cgp.model import build_model
from cgp.posterior import (
    draw_samples,
    gp_predict,
    inequality_mean_curve,
    inequality_mode,
    inequality_mode_curve,
    kriging_mean,
    prediction_intervals,
    sample_paths,
)
from cgp.qp import QuadraticProgram, solve_mode
from cgp.tmvn import SamplerConfig, condition_on_equalities, sample_gibbs, sample_rejection_from_mode, truncnorm_1d

from helpers import (
    ALL_CASES,
    CONFIG_DIR,
    functional_violation,
    isotonic_violation,
    load_case,
    random_coefficients,
)
from test_basis import one_sided_derivative
from test_kernels import allowed_orders
from test_qp import dual_projected_gradient, random_instance
from test_tmvn import random_truncated_model, truncated_moments


# ----------------------------------------------------------------------------
# 1. basis exactness
# ----------------------------------------------------------------------------


def test_criterion_1_basis_exactness():
    x = np.linspace(0, 1, 1000)
    for N in (4, 50):
        g = KnotGrid(N)
        assert np.max(np.abs(hat_matrix(g, x).sum(axis=1) - 1.0)) <= 1e-12
        assert np.max(np.abs(hat_matrix(g, g.knots) - np.eye(N + 1))) <= 1e-12
        h = g.spacing / 16
        D1 = np.empty((N + 1, N + 1))
        D2 = np.empty((N + 1, N + 1))
        for i, u in enumerate(g.knots):
            side = 1 if i < N else -1
            for j in range(N + 1):
                D1[i, j] = one_sided_derivative(lambda t: int_hat_eval(g, j, t), u, side, 1, h)
                D2[i, j] = one_sided_derivative(lambda t: int2_hat_eval(g, j, t), u, side, 2, h)
        assert np.max(np.abs(D1 - np.eye(N + 1))) <= 1e-9
        assert np.max(np.abs(D2 - np.eye(N + 1))) <= 1e-7
        xs = np.linspace(0, 1, 13)
        P1, P2 = int_hat_matrix(g, xs), int2_hat_matrix(g, xs)
        for j in range(0, N + 1, max(1, N // 5)):
            for i, t in enumerate(xs[1:], start=1):
                pts = [k for k in g.knots if 0 < k < t] or None
                r1 = integrate.quad(lambda s: hat_eval(g, j, s), 0, t, points=pts, epsabs=1e-14, epsrel=1e-13,
                                    limit=200)[0]
                r2 = integrate.quad(lambda s: (t - s) * hat_eval(g, j, s), 0, t, points=pts, epsabs=1e-14,
                                    epsrel=1e-13, limit=200)[0]
                assert abs(P1[i, j] - r1) <= 1e-10 and abs(P2[i, j] - r2) <= 1e-10


# ----------------------------------------------------------------------------
# 2. kernel derivatives
# ----------------------------------------------------------------------------


def richardson_central(f, x, h):
    def D(s):
        return (f(x + s) - f(x - s)) / (2 * s)
    return (4 * D(h) - D(2 * h)) / 3


def test_criterion_2_kernel_derivatives():
    rng = np.random.default_rng(2)
    for family in ("gaussian", "matern52"):
        theta = 0.3
        k = KernelSpec(family, 1.7, [theta])
        pairs = []
        while len(pairs) < 100:
            x, xp = rng.random(2)
            if abs(x - xp) > 0.05:
                pairs.append((x, xp))
        h = 1e-3 * theta
        for p, q in allowed_orders(family):
            if p == q == 0:
                continue
            for x, xp in pairs:
                # differentiate the next-lower order in one argument
                if p > 0:
                    ref = richardson_central(lambda t: kernel_deriv(k, t, xp, p - 1, q), x, h)
                else:
                    ref = richardson_central(lambda t: kernel_deriv(k, x, t, p, q - 1), xp, h)
                got = kernel_deriv(k, x, xp, p, q)
                assert abs(got - ref) <= 1e-5 * abs(ref), (family, p, q, x, xp, got, ref)
            if p == 0 and q == 1:
                for x, xp in pairs[:10]:
                    ref = richardson_central(lambda t: kernel_eval(k, [x], [t]), xp, h)
                    assert abs(kernel_deriv(k, x, xp, 0, 1) - ref) <= 1e-5 * abs(ref)


# ----------------------------------------------------------------------------
# 3. constraint equivalence
# ----------------------------------------------------------------------------

EQUIVALENCE = {
    "bounds": ("bounded", dict(lower=-20.0, upper=20.0)),
    "monotone_c0": ("monotone_c0", dict(direction=1.0)),
    "monotone_c1": ("monotone_c1_outside", dict(direction=1.0)),
    "convex": ("convex", dict(direction=1.0)),
}


def test_criterion_3_constraint_equivalence():
    rng = np.random.default_rng(3)
    grid = np.linspace(0, 1, 1000)
    for kind, (case, kw) in EQUIVALENCE.items():
        _, _, _, model = load_case(case)
        for feasible in (True, False):
            for _ in range(100):
                c = random_coefficients(model, rng, feasible)
                assert model.is_feasible(c) is feasible
                v = functional_violation(kind, model.evaluate(c, grid), grid, **kw)
                assert (v <= 1e-10) if feasible else (v > 1e-10), (kind, feasible, v)

    _, _, _, model = load_case("isotonic_2d")
    assert model.m == 64
    a1, a2 = np.linspace(0, 1, 40), np.linspace(0, 1, 25)
    P = np.column_stack([g.ravel() for g in np.meshgrid(a1, a2, indexing="ij")])
    for feasible in (True, False):
        for _ in range(100):
            c = random_coefficients(model, rng, feasible)
            V = model.evaluate(c, P).reshape(40, 25)
            v = isotonic_violation(V)
            assert (v <= 1e-10) if feasible else (v > 1e-10)


# ----------------------------------------------------------------------------
# 4. interpolation
# ----------------------------------------------------------------------------


def test_criterion_4_interpolation():
    for name in ALL_CASES:
        cfg, X, y, model = load_case(name)
        T = model.data.inputs
        sol = inequality_mode(model)
        scfg = cfg.sampler_config()
        if scfg.n_samples == 0:
            scfg = SamplerConfig(seed=scfg.seed, n_samples=20)
        batch = draw_samples(model, scfg, sol.minimizer, auto=True)
        with warnings.catch_warnings():
            # short runs trigger the few-draws warning; the interval still interpolates
            warnings.simplefilter("ignore", RuntimeWarning)
            lo, hi = prediction_intervals(model, batch, T)
        tol = 1e-8 * max(1.0, np.max(np.abs(y)))
        for label, curve in (("kriging mean", kriging_mean(model, T)),
                             ("mode", inequality_mode_curve(model, sol, T)),
                             ("inequality mean", inequality_mean_curve(model, batch, T)),
                             ("lower", lo), ("upper", hi)):
            assert np.max(np.abs(curve - y)) <= tol, (name, label)
        assert np.max(np.abs(sample_paths(model, batch, T) - y)) <= tol, name


# ----------------------------------------------------------------------------
# 5. mode correctness
# ----------------------------------------------------------------------------


def test_criterion_5_mode_correctness():
    for seed in range(20):
        gamma, A, y, G, g = random_instance(np.random.default_rng(1000 + seed))
        sol = solve_mode(QuadraticProgram(gamma, A, y, G, g, jitter=0.0))
        assert np.max(np.abs(sol.minimizer - dual_projected_gradient(gamma, A, y, G, g))) <= 1e-8

    for name in ("bounded", "monotone_c1_outside", "convex", "isotonic_2d"):
        _, _, _, model = load_case(name)
        base = inequality_mode(model).minimizer
        for s in (1e-4, 1.0, 1e4):
            other = build_model(model.kernel.with_variance(model.kernel.variance * s), tuple(gr.subdivisions for gr in model.grids),
                                model.data, model.constraint)
            assert np.max(np.abs(inequality_mode(other).minimizer - base)) <= 1e-8 * max(1.0, np.max(np.abs(base)))

    x = np.linspace(0, 1, 1001)
    _, _, _, inside = load_case("monotone_c1_inside")
    sol = inequality_mode(inside)
    km, mode = kriging_mean(inside, x), inequality_mode_curve(inside, sol, x)
    assert np.max(np.abs(km - mode)) <= 1e-8 * np.max(np.abs(km))
    assert functional_violation("monotone_c1", mode, x) <= 1e-10

    _, _, _, outside = load_case("monotone_c1_outside")
    sol = inequality_mode(outside)
    km, mode = kriging_mean(outside, x), inequality_mode_curve(outside, sol, x)
    assert np.max(np.abs(km - mode)) > 1e-3
    assert functional_violation("monotone_c1", mode, x) <= 1e-10
    assert functional_violation("monotone_c1", km, x) > 1e-3


# ----------------------------------------------------------------------------
# 6. sampler correctness
# ----------------------------------------------------------------------------

TRUNCATED_CASES = [(0.0, 1.0, 0.0, np.inf), (1.0, 2.0, -1.0, 0.5), (0.0, 1.0, 2.5, np.inf), (0.0, 0.3, -np.inf, -0.4)]


def test_criterion_6_sampler_correctness():
    n = 100_000
    for i, (mean, sd, lo, hi) in enumerate(TRUNCATED_CASES):
        mu, var, m4 = truncated_moments(mean, sd, lo, hi)
        # scalar sampler
        rng = np.random.default_rng(i)
        s = np.array([truncnorm_1d(mean, sd, lo, hi, rng) for _ in range(n)])
        assert abs(s.mean() - mu) <= 3 * np.sqrt(var / n)
        assert abs(s.var() - var) <= 3 * np.sqrt((m4 - var**2) / n)
        # the same law through the rejection-from-mode sampler in one dimension
        rows, rhs = [], []
        if np.isfinite(lo):
            rows.append([1.0]), rhs.append(lo - mean)
        if np.isfinite(hi):
            rows.append([-1.0]), rhs.append(mean - hi)
        G, g = np.array(rows), np.array(rhs)
        cond = condition_on_equalities(np.array([[sd**2]]), jitter=0.0)
        mode = solve_mode(QuadraticProgram(np.array([[sd**2]]), ineq_matrix=G, ineq_rhs=g, jitter=0.0)).minimizer
        batch = sample_rejection_from_mode(cond, mode, (G, g), SamplerConfig(seed=i, n_samples=n))
        d = batch.draws[:, 0] + mean
        assert abs(d.mean() - mu) <= 3 * np.sqrt(var / n)
        assert abs(d.var() - var) <= 3 * np.sqrt((m4 - var**2) / n)

    for seed in range(5):
        gamma, A, y, G, g, cond = random_truncated_model(np.random.default_rng(500 + seed))
        mode = solve_mode(QuadraticProgram(gamma, A, y, G, g, jitter=0.0)).minimizer
        rej = sample_rejection_from_mode(cond, mode, (G, g), SamplerConfig(seed=seed, n_samples=4000))
        gib = sample_gibbs(cond, (G, g), SamplerConfig(method="gibbs", seed=seed, n_samples=4000, burn_in=500,
                                                        thinning=5), mode)
        se = np.sqrt(rej.draws.var(axis=0) / len(rej) + gib.draws.var(axis=0) / gib.ess)
        assert np.all(np.abs(rej.draws.mean(axis=0) - gib.draws.mean(axis=0)) <= 4 * se)

    for name in ALL_CASES:
        cfg, _, _, model = load_case(name)
        batch = draw_samples(model, SamplerConfig(seed=6, n_samples=50), auto=True)
        assert np.max(np.abs(batch.draws @ model.design_matrix.T - model.equality_rhs)) <= 1e-8, name
        G, g = model.inequality_system()
        assert np.min(batch.draws @ G.T - g) >= -1e-10, name


# ----------------------------------------------------------------------------
# 7. reproduction of the log-function example
# ----------------------------------------------------------------------------


def test_criterion_7_log_function_reproduction():
    cfg, X, y, model = load_case("log_monotone_c1")
    assert cfg.sampler_config().seed == 0 and cfg.n_samples == 1000
    x = np.linspace(0, 1, 501)
    batch = draw_samples(model, cfg.sampler_config(), inequality_mode(model).minimizer, auto=True)
    assert len(batch) == 1000
    paths = sample_paths(model, batch, x)
    assert np.all(np.diff(paths, axis=1) >= -1e-10)

    lo, hi = prediction_intervals(model, batch, x, 0.05)
    truth = np.log(20 * x + 1)
    coverage = np.mean((truth >= lo - 1e-10) & (truth <= hi + 1e-10))
    assert coverage >= 0.90, coverage

    sub = (x > 0.4) & (x < 0.9)
    _, var = gp_predict(cfg.unit_kernel, X, y, x[sub])
    gp_width = 2 * 1.959963984540054 * np.sqrt(np.maximum(var, 0.0))
    assert np.mean(hi[sub] - lo[sub]) < np.mean(gp_width)


# ----------------------------------------------------------------------------
# 8. convergence in the number of knots
# ----------------------------------------------------------------------------


def test_criterion_8_convergence():
    x = np.linspace(0, 1, 1001)
    for name in ("bounded_matern32_convergence", "monotone_gaussian_convergence"):
        curves = {}
        for N in (5, 20, 500):
            _, _, _, model = load_case(name, N=N)
            curves[N] = inequality_mode_curve(model, inequality_mode(model), x)
        d5 = np.max(np.abs(curves[5] - curves[500]))
        d20 = np.max(np.abs(curves[20] - curves[500]))
        assert d20 < d5, (name, d5, d20)


# ----------------------------------------------------------------------------
# 9. reproducibility
# ----------------------------------------------------------------------------


def test_criterion_9_reproducibility(tmp_path):
    for name in ALL_CASES:
        config = load_config(CONFIG_DIR / f"{name}.json")
        data = CONFIG_DIR / f"{name}.csv"
        a, b = tmp_path / name / "a", tmp_path / name / "b"
        for out in (a, b):
            cmd_sample(config, data, out)
            cmd_mode(config, data, out)
        for f in ("paths.csv", "summary.csv", "meta.json", "mode.csv", "kriging_mean.csv", "mode_meta.json"):
            assert (a / f).read_bytes() == (b / f).read_bytes(), (name, f)
        checks = cmd_verify(config, data, a, stream=io.StringIO())
        assert checks and all(c.ok for c in checks), (name, [c.line() for c in checks if not c.ok])


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
