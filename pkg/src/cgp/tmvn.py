"""Sampling a Gaussian vector on ``{A c = y} ∩ {G c >= g}``.

Everything happens in null-space coordinates ``c = mean + B z`` where
the columns of ``B`` span ``ker(A)``; the equalities therefore hold by
construction.  Two samplers are provided:

* rejection from the mode: proposals ``N(z_mode, S)`` restricted to the
  polyhedron and accepted with probability
  ``exp(-(S^{-1} z_mode)^T (z - z_mode))``.  The optimality conditions
  of the mode make this ratio at most one on the polyhedron, so accepted
  draws are exact.
* Gibbs sampling on whitened coordinates ``z = chol(S) w``; each update
  is a 1-D truncated standard normal on the interval cut out by the
  polyhedron.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from .exceptions import InfeasibleError, LowAcceptanceError, RankDeficientError
from .model import DEFAULT_JITTER, add_jitter

__all__ = [
    "ConditionedGaussian",
    "SamplerConfig",
    "SampleBatch",
    "Method",
    "make_rng",
    "spawn_rngs",
    "condition_on_equalities",
    "sample_rejection_from_mode",
    "sample_gibbs",
    "truncnorm_1d",
    "effective_sample_size",
]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator for chain ``stream`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(ss.spawn(stream + 1)[stream]))


def spawn_rngs(seed: int, n: int) -> list:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return [np.random.Generator(np.random.Philox(s)) for s in ss.spawn(n)]


class Method(str, enum.Enum):
    REJECTION = "rejection"
    GIBBS = "gibbs"


@dataclass(frozen=True)
class SamplerConfig:
    method: Method = Method.REJECTION
    seed: int = 0
    n_samples: int = 100
    burn_in: int = 1000
    thinning: int = 10
    max_rejection_tries: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.n_samples < 0 or self.burn_in < 0 or self.thinning < 0:
            raise ValueError("n_samples, burn_in and thinning must be non-negative")
        if self.max_rejection_tries < 1:
            raise ValueError("max_rejection_tries must be >= 1")


@dataclass
class SampleBatch:
    draws: np.ndarray
    method: str
    acceptance_rate: float | None = None
    n_proposals: int | None = None
    ess: np.ndarray | None = None

    def __len__(self):
        return self.draws.shape[0]


@dataclass(frozen=True, eq=False)
class ConditionedGaussian:
    """Law of ``c ~ N(0, Gamma)`` given ``A c = y``, as ``mean + B z`` with ``z ~ N(0, S)``."""

    mean: np.ndarray
    null_basis: np.ndarray
    reduced_cov: np.ndarray
    reduced_chol: np.ndarray

    @property
    def dim(self) -> int:
        return self.null_basis.shape[0]

    @property
    def rank(self) -> int:
        return self.null_basis.shape[1]

    @property
    def covariance(self) -> np.ndarray:
        B = self.null_basis
        return B @ self.reduced_cov @ B.T

    def point(self, z) -> np.ndarray:
        return self.mean + np.asarray(z) @ self.null_basis.T

    def coords(self, c) -> np.ndarray:
        return (np.asarray(c) - self.mean) @ self.null_basis


def condition_on_equalities(gamma, A=None, y=None, *, jitter: float = DEFAULT_JITTER) -> ConditionedGaussian:
    """Condition ``N(0, gamma)`` on ``A c = y``.

    The mean is ``Gamma A^T (A Gamma A^T)^{-1} y``; the covariance is
    returned in the coordinates of an orthonormal basis of ``ker(A)``.

    Raises
    ------
    RankDeficientError
        If ``A`` does not have full row rank.
    """
    gamma = add_jitter(np.atleast_2d(np.asarray(gamma, dtype=float)), jitter)
    m = gamma.shape[0]
    if A is None or np.size(A) == 0:
        S = gamma
        return ConditionedGaussian(np.zeros(m), np.eye(m), S, _chol(S, jitter))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = A.shape[0]
    if A.shape[1] != m or y.size != n:
        raise ValueError("equality system does not match the covariance size")
    U, sv, Vt = linalg.svd(A, full_matrices=True)
    if n > m or sv[-1] <= max(A.shape) * np.finfo(float).eps * sv[0]:
        raise RankDeficientError("the interpolation matrix does not have full row rank")
    B = Vt[n:].T

    W = A @ gamma
    M = W @ A.T
    M = 0.5 * (M + M.T)
    cM = _chol(M, jitter)
    mean = W.T @ linalg.cho_solve((cM, True), y)
    # remove rounding left by an ill-conditioned A Gamma A^T
    resid = y - A @ mean
    mean = mean + Vt[:n].T @ ((U.T @ resid) / sv)

    WB = W @ B
    S = B.T @ gamma @ B - WB.T @ linalg.cho_solve((cM, True), WB)
    S = 0.5 * (S + S.T)
    if S.size:
        S = add_jitter(S, jitter)
    return ConditionedGaussian(mean, B, S, _chol(S, jitter))


def _chol(M, jitter):
    if M.size == 0:
        return np.zeros_like(M)
    for k in range(8):
        try:
            Mk = M if k == 0 else add_jitter(M, jitter * 10.0**k)
            return linalg.cholesky(Mk, lower=True)
        except linalg.LinAlgError:
            continue
    raise RankDeficientError("covariance is singular beyond jitter repair")


# ----------------------------------------------------------------------------
# 1-D truncated normal
# ----------------------------------------------------------------------------


def _std_truncnorm(a: float, b: float, rng: np.random.Generator) -> float:
    """Exact draw from N(0, 1) restricted to [a, b], a < b."""
    if b <= 0.0:
        return -_std_truncnorm(-b, -a, rng)
    if a <= 0.0:
        if b - a <= 1.0:
            # uniform proposal; acceptance >= exp(-1/2)
            while True:
                z = a + (b - a) * rng.random()
                if rng.random() <= math.exp(-0.5 * z * z):
                    return z
        pa, pb = special.ndtr(a), special.ndtr(b)
        return float(special.ndtri(pa + (pb - pa) * rng.random()))
    # 0 < a < b: right tail
    if (b - a) * (a + b) <= 2.0:
        while True:
            z = a + (b - a) * rng.random()
            if rng.random() <= math.exp(0.5 * (a * a - z * z)):
                return z
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a + rng.exponential(1.0 / lam)
        if z <= b and rng.random() <= math.exp(-0.5 * (z - lam) ** 2):
            return z


def truncnorm_1d(mean: float, sd: float, lo: float, hi: float, rng: np.random.Generator) -> float:
    """One draw from ``N(mean, sd^2)`` truncated to ``[lo, hi]``.

    Mixes inverse-CDF, uniform rejection and Robert's exponential
    rejection so the draw stays exact far in the tails.
    """
    if not sd > 0:
        raise ValueError("sd must be positive")
    if not lo < hi:
        raise ValueError(f"empty truncation interval [{lo}, {hi}]")
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    return mean + sd * _std_truncnorm(a, b, rng)


# ----------------------------------------------------------------------------
# samplers
# ----------------------------------------------------------------------------


def _as_constraints(constraints, m):
    if constraints is None:
        return np.zeros((0, m)), np.zeros(0)
    G, g = constraints
    G = np.asarray(G, dtype=float).reshape(-1, m)
    return G, np.asarray(g, dtype=float).ravel()


def sample_rejection_from_mode(cond: ConditionedGaussian, mode, constraints, config: SamplerConfig,
                               rng: np.random.Generator | None = None,
                               min_pilot: int = 1000) -> SampleBatch:
    """Exact truncated samples by rejection from proposals centred at the mode.

    Raises
    ------
    LowAcceptanceError
        Once at least ``min_pilot`` proposals were made and fewer than a
        fraction ``1 / max_rejection_tries`` of them were accepted.
    """
    rng = make_rng(config.seed) if rng is None else rng
    G, g = _as_constraints(constraints, cond.dim)
    n_target = config.n_samples
    m = cond.dim
    if n_target == 0:
        return SampleBatch(np.zeros((0, m)), Method.REJECTION.value, None, 0)
    if cond.rank == 0:
        if G.shape[0] and np.any(G @ cond.mean - g < 0):
            raise InfeasibleError("the only point satisfying the equalities violates the inequalities")
        return SampleBatch(np.tile(cond.mean, (n_target, 1)), Method.REJECTION.value, 1.0, n_target)

    L = cond.reduced_chol
    B = cond.null_basis
    z_mode = cond.coords(mode)
    v = linalg.solve_triangular(L, z_mode, lower=True)
    GB = G @ B
    base = G @ cond.mean - g
    min_rate = 1.0 / config.max_rejection_tries

    out = []
    accepted = 0
    proposals = 0
    rate_guess = 1.0
    while accepted < n_target:
        need = n_target - accepted
        size = int(min(max(256, 2 * need / max(rate_guess, 1e-3)), 200_000))
        w = rng.standard_normal((size, cond.rank))
        logu = np.log(rng.random(size))
        z = z_mode + w @ L.T
        ok = np.all(z @ GB.T + base >= 0.0, axis=1) if G.shape[0] else np.ones(size, bool)
        ok &= logu <= -(w @ v)
        idx = np.flatnonzero(ok)
        if idx.size > need:
            # stop at the proposal that completed the batch
            proposals += int(idx[need - 1]) + 1
            idx = idx[:need]
        else:
            proposals += size
        out.append(z[idx])
        accepted += idx.size
        rate_guess = max(accepted, 1) / proposals
        if proposals >= min_pilot and accepted / proposals < min_rate:
            raise LowAcceptanceError(
                f"rejection sampler accepted {accepted} of {proposals} proposals; use the Gibbs sampler",
                accepted / proposals,
            )
    draws = cond.point(np.vstack(out))
    return SampleBatch(draws, Method.REJECTION.value, accepted / proposals, proposals)


def sample_gibbs(cond: ConditionedGaussian, constraints, config: SamplerConfig, start,
                 rng: np.random.Generator | None = None) -> SampleBatch:
    """Gibbs sampler on whitened null-space coordinates.

    ``start`` must be a feasible coefficient vector (typically the mode).
    """
    rng = make_rng(config.seed) if rng is None else rng
    G, g = _as_constraints(constraints, cond.dim)
    m = cond.dim
    start = np.asarray(start, dtype=float)
    if G.shape[0] and np.any(G @ start - g < -1e-8 * (1 + np.abs(g))):
        raise InfeasibleError("Gibbs sampler needs a feasible starting point")
    n_target = config.n_samples
    if n_target == 0:
        return SampleBatch(np.zeros((0, m)), Method.GIBBS.value)
    r = cond.rank
    if r == 0:
        return SampleBatch(np.tile(cond.mean, (n_target, 1)), Method.GIBBS.value,
                           ess=np.full(m, float(n_target)))

    L = cond.reduced_chol
    BL = cond.null_basis @ L
    D = G @ BL
    base = G @ cond.mean - g
    w = linalg.solve_triangular(L, cond.coords(start), lower=True)
    colmax = np.abs(D).max(axis=0) if D.size else np.zeros(r)
    cols = []
    for k in range(r):
        dk = D[:, k]
        keep = np.abs(dk) > 1e-13 * colmax[k]
        pos = keep & (dk > 0)
        neg = keep & (dk < 0)
        cols.append((np.flatnonzero(pos), dk[pos], np.flatnonzero(neg), dk[neg], dk))

    stride = max(1, config.thinning)
    n_sweeps = config.burn_in + stride * n_target
    out = np.empty((n_target, r))
    kept = 0
    for sweep in range(n_sweeps):
        s = base + D @ w
        np.maximum(s, 0.0, out=s)
        for k in range(r):
            ip, dp, ineg, dn, dk = cols[k]
            wk = w[k]
            lo = wk + np.max(-s[ip] / dp) if ip.size else -np.inf
            hi = wk + np.min(-s[ineg] / dn) if ineg.size else np.inf
            if lo > wk:
                lo = wk
            if hi < wk:
                hi = wk
            if hi - lo <= 1e-14 * (1.0 + abs(wk)):
                continue  # pinned coordinate
            new = _std_truncnorm(lo, hi, rng)
            if G.shape[0]:
                s += dk * (new - wk)
                np.maximum(s, 0.0, out=s)
            w[k] = new
        if sweep >= config.burn_in and (sweep - config.burn_in) % stride == stride - 1:
            out[kept] = w
            kept += 1
    draws = cond.point(out @ L.T)
    return SampleBatch(draws, Method.GIBBS.value, ess=effective_sample_size(draws))


def effective_sample_size(draws) -> np.ndarray:
    """Per-coordinate ESS from the initial positive autocorrelation sequence."""
    x = np.asarray(draws, dtype=float)
    n = x.shape[0]
    if n < 4:
        return np.full(x.shape[1], float(n))
    xc = x - x.mean(axis=0)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, n=nfft, axis=0)
    acov = np.fft.irfft(f * np.conj(f), n=nfft, axis=0)[:n] / n
    ess = np.empty(x.shape[1])
    for j in range(x.shape[1]):
        if acov[0, j] <= 0:
            ess[j] = n
            continue
        rho = acov[:, j] / acov[0, j]
        tau = 1.0
        for k in range(1, n - 1, 2):
            pair = rho[k] + rho[k + 1]
            if pair < 0:
                break
            tau += 2 * pair
        ess[j] = n / tau
    return ess
