"""Dual active-set (Goldfarb-Idnani) solver for the constrained mode.

The mode of a Gaussian vector ``c ~ N(0, Gamma)`` restricted to
``{A c = y, G c >= g}`` minimises ``1/2 c^T Gamma^{-1} c`` over that set.
The Goldfarb-Idnani method only ever needs a matrix ``J`` with
``J J^T = H^{-1}``.  For ``H = Gamma^{-1}`` the Cholesky factor of
``Gamma`` is such a matrix, so the solver never forms an inverse.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import InfeasibleError, IterationLimitError, RankDeficientError
from .model import DEFAULT_JITTER, add_jitter

__all__ = [
    "QuadraticProgram",
    "QpSolution",
    "solve_mode",
    "reformulate",
    "solve_substituted",
    "dual_active_set",
    "cholesky_jittered",
]

_ANTICYCLE_TOL = 1e-12


@dataclass
class QuadraticProgram:
    """``min 1/2 x^T H x`` subject to ``eq_matrix x = eq_rhs`` and ``ineq_matrix x >= ineq_rhs``.

    With ``inverse_hessian=True`` (the default) ``H = gamma^{-1}``;
    otherwise ``H = gamma``.  Optional ``lower``/``upper`` are per-variable
    bounds appended after the general inequality rows.
    """

    gamma: np.ndarray
    eq_matrix: np.ndarray = None
    eq_rhs: np.ndarray = None
    ineq_matrix: np.ndarray = None
    ineq_rhs: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    inverse_hessian: bool = True
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        self.gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        m = self.gamma.shape[0]
        if self.gamma.shape != (m, m):
            raise ValueError("gamma must be square")
        self.eq_matrix, self.eq_rhs = _rows(self.eq_matrix, self.eq_rhs, m, "equality")
        self.ineq_matrix, self.ineq_rhs = _rows(self.ineq_matrix, self.ineq_rhs, m, "inequality")
        self.lower = _box(self.lower, m, -np.inf)
        self.upper = _box(self.upper, m, np.inf)
        if np.any(self.lower > self.upper):
            raise ValueError("lower bounds exceed upper bounds")

    @property
    def m(self) -> int:
        return self.gamma.shape[0]

    def inequality_rows(self):
        """General rows followed by finite lower and upper bounds, as ``G x >= g``."""
        eye = np.eye(self.m)
        lo = np.isfinite(self.lower)
        hi = np.isfinite(self.upper)
        G = np.vstack([self.ineq_matrix, eye[lo], -eye[hi]])
        g = np.concatenate([self.ineq_rhs, self.lower[lo], -self.upper[hi]])
        return G, g

    @classmethod
    def from_model(cls, model) -> "QuadraticProgram":
        return cls(
            gamma=model.gamma,
            eq_matrix=model.design_matrix,
            eq_rhs=model.equality_rhs,
            ineq_matrix=model.ineq_matrix,
            ineq_rhs=model.ineq_rhs,
            lower=model.lower,
            upper=model.upper,
            jitter=model.jitter,
        )


def _rows(M, v, m, what):
    if M is None:
        return np.zeros((0, m)), np.zeros(0)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        M = M.reshape(0, m)
    v = np.asarray(v, dtype=float).ravel()
    if M.shape[1] != m or M.shape[0] != v.size:
        raise ValueError(f"{what} system has shape {M.shape} with {v.size} right-hand sides for {m} variables")
    return M, v


def _box(b, m, default):
    if b is None:
        return np.full(m, default)
    b = np.asarray(b, dtype=float)
    return np.full(m, float(b)) if b.ndim == 0 else b.copy()


@dataclass
class QpSolution:
    minimizer: np.ndarray
    active_set: tuple
    objective: float
    status: str
    iterations: int = 0
    eq_multipliers: np.ndarray = None
    ineq_multipliers: np.ndarray = None
    extra: dict = field(default_factory=dict)


def cholesky_jittered(gamma: np.ndarray, eps: float = DEFAULT_JITTER, max_tries: int = 8) -> np.ndarray:
    """Lower Cholesky factor of ``gamma + eps * mean(diag) * I``.

    The jitter grows tenfold on failure, up to ``max_tries`` times.
    """
    for k in range(max_tries):
        try:
            return linalg.cholesky(add_jitter(gamma, eps * 10.0**k), lower=True)
        except linalg.LinAlgError:
            continue
    raise RankDeficientError("covariance matrix is not positive definite even after jitter")


def dual_active_set(J0, C, b, meq=0, a=None, max_iter=None, feas_tol=1e-11):
    """Goldfarb-Idnani dual method.

    Minimises ``1/2 x^T H x + a^T x`` subject to ``C[:meq] x = b[:meq]`` and
    ``C[meq:] x >= b[meq:]``, where ``J0 J0^T = H^{-1}``.

    Returns
    -------
    x, active, multipliers, iterations
        ``active`` lists the constraint indices in the final active set
        (equalities first) and ``multipliers`` holds one value per row of
        ``C``, zero for inactive rows.
    """
    J = np.array(J0, dtype=float, copy=True)
    m = J.shape[0]
    C = np.asarray(C, dtype=float).reshape(-1, m)
    b = np.asarray(b, dtype=float).ravel()
    ncon = C.shape[0]
    if max_iter is None:
        max_iter = 50 * (m + ncon)
    x = np.zeros(m) if a is None else -J @ (J.T @ a)
    R = np.zeros((m, m))
    active: list[int] = []
    u = np.zeros(0)
    q = 0
    it = 0
    row_norm = np.linalg.norm(C, axis=1)
    row_norm[row_norm == 0] = 1.0

    def add(d):
        nonlocal J, R, q
        d2 = d[q:]
        alpha = -np.copysign(np.linalg.norm(d2), d2[0])
        v = d2.copy()
        v[0] -= alpha
        vv = v @ v
        if vv > 0:
            J[:, q:] -= np.outer(J[:, q:] @ v, (2.0 / vv) * v)
        R[:q, q] = d[:q]
        R[q, q] = alpha
        q += 1

    def drop(k):
        nonlocal J, R, q, u
        active.pop(k)
        u = np.delete(u, k)
        R[:, k:q - 1] = R[:, k + 1:q]
        R[:, q - 1] = 0.0
        for i in range(k, q - 1):
            a_, b_ = R[i, i], R[i + 1, i]
            h = np.hypot(a_, b_)
            if h == 0:
                continue
            c, s = a_ / h, b_ / h
            Ri, Ri1 = R[i, i:q - 1].copy(), R[i + 1, i:q - 1].copy()
            R[i, i:q - 1] = c * Ri + s * Ri1
            R[i + 1, i:q - 1] = -s * Ri + c * Ri1
            Ji, Ji1 = J[:, i].copy(), J[:, i + 1].copy()
            J[:, i] = c * Ji + s * Ji1
            J[:, i + 1] = -s * Ji + c * Ji1
        q -= 1

    def step_dirs(n):
        d = J.T @ n
        z = J[:, q:] @ d[q:]
        r = linalg.solve_triangular(R[:q, :q], d[:q]) if q else np.zeros(0)
        return d, z, r

    f = 0.0 if a is None else 0.5 * float(a @ x)

    # equality constraints first; they are never dropped
    for i in range(meq):
        n = C[i]
        s = n @ x - b[i]
        d, z, r = step_dirs(n)
        zn = z @ n
        if zn <= 1e-13 * row_norm[i] ** 2 * max(1.0, np.abs(J).max() ** 2):
            if abs(s) <= 1e-9 * (1 + abs(b[i])):
                continue  # redundant equality
            raise RankDeficientError(f"equality constraint {i} is linearly dependent on earlier ones")
        t = -s / zn
        x = x + t * z
        f += t * zn * (0.5 * t)
        u = np.concatenate([u - t * r, [t]])
        active.append(i)
        add(d)
        it += 1

    history: dict = {}
    while True:
        if ncon == meq:
            break
        s_all = C[meq:] @ x - b[meq:]
        scale = feas_tol * (1.0 + np.abs(b[meq:]) + row_norm[meq:] * np.abs(x).max())
        viol = s_all / row_norm[meq:]
        mask = s_all < -scale
        if active:
            mask[[i - meq for i in active if i >= meq]] = False
        if not mask.any():
            break
        cand = np.flatnonzero(mask)
        p = meq + int(cand[np.argmin(viol[cand])])

        # the dual objective increases strictly along the iterations; a repeated
        # active set without increase means cycling
        key = tuple(sorted(active))
        if key in history and f <= history[key] + _ANTICYCLE_TOL * (1 + abs(f)):
            raise IterationLimitError("dual active-set iterations are cycling", _partial(x, active, u, it))
        history[key] = f

        n = C[p]
        u_new = 0.0
        while True:
            it += 1
            if it > max_iter:
                raise IterationLimitError(
                    f"iteration cap {max_iter} exceeded", _partial(x, active, u, it)
                )
            d, z, r = step_dirs(n)
            # partial step length: first active inequality whose multiplier hits zero
            t1, k = np.inf, -1
            for pos, idx in enumerate(active):
                if idx >= meq and r[pos] > 0:
                    ratio = u[pos] / r[pos]
                    if ratio < t1:
                        t1, k = ratio, pos
            zn = z @ n
            sp = n @ x - b[p]
            if zn > 1e-14 * row_norm[p] ** 2 * max(1.0, np.abs(J).max() ** 2):
                t2 = max(-sp / zn, 0.0)
            else:
                t2 = np.inf
            if not np.isfinite(t1) and not np.isfinite(t2):
                raise InfeasibleError(
                    "the equality and inequality constraints have no common point",
                    _partial(x, active, u, it),
                )
            if not np.isfinite(t2):
                u = u - t1 * r
                u_new += t1
                drop(k)
                continue
            t = min(t1, t2)
            x = x + t * z
            f += t * zn * (0.5 * t + u_new)
            u = u - t * r
            u_new += t
            if t2 <= t1:
                u = np.concatenate([u, [u_new]])
                active.append(p)
                add(d)
                break
            drop(k)

    mult = np.zeros(ncon)
    if active:
        mult[np.asarray(active)] = u
    return x, list(active), mult, it


def _partial(x, active, u, it):
    return QpSolution(minimizer=x.copy(), active_set=tuple(active), objective=np.nan,
                      status="failed", iterations=it)


def _status_solution(program, x, active, mult, it, J0):
    n = program.eq_matrix.shape[0]
    act = tuple(sorted(i - n for i in active if i >= n))
    if program.inverse_hessian:
        obj = 0.5 * float(np.sum(linalg.solve_triangular(J0, x, lower=True) ** 2))
    else:
        obj = 0.5 * float(x @ program.gamma @ x)
    return QpSolution(
        minimizer=x, active_set=act, objective=obj, status="optimal", iterations=it,
        eq_multipliers=mult[:n], ineq_multipliers=mult[n:],
    )


def solve_mode(program: QuadraticProgram, max_iter: int | None = None) -> QpSolution:
    """Solve ``program`` exactly with the dual active-set method.

    Raises
    ------
    InfeasibleError
        When no point satisfies the equalities and inequalities.
    IterationLimitError
        When more than ``50 * (m + k)`` active-set changes are needed.
    """
    L = cholesky_jittered(program.gamma, program.jitter)
    if program.inverse_hessian:
        J0 = L
    else:
        J0 = linalg.solve_triangular(L, np.eye(program.m), lower=True).T
    G, g = program.inequality_rows()
    C = np.vstack([program.eq_matrix, G])
    b = np.concatenate([program.eq_rhs, g])
    if max_iter is None:
        max_iter = 50 * (program.m + G.shape[0])
    x, active, mult, it = dual_active_set(
        J0, C, b, meq=program.eq_matrix.shape[0], max_iter=max_iter,
    )
    sol = _status_solution(program, x, active, mult, it, L)
    sol.extra["cholesky"] = L
    return sol


def reformulate(gamma, A=None, y=None, L=None, l=None, *, jitter=DEFAULT_JITTER) -> QuadraticProgram:
    """Change of variable ``c = Gamma w``.

    The objective ``1/2 c^T Gamma^{-1} c`` becomes ``1/2 w^T Gamma w``
    and the constraints become ``A Gamma w = y``, ``L Gamma w >= l``.
    Recover the original minimiser with ``gamma @ w``.
    """
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    base = QuadraticProgram(gamma, A, y, L, l, jitter=jitter)
    return QuadraticProgram(
        gamma=gamma,
        eq_matrix=base.eq_matrix @ gamma,
        eq_rhs=base.eq_rhs,
        ineq_matrix=base.ineq_matrix @ gamma,
        ineq_rhs=base.ineq_rhs,
        inverse_hessian=False,
        jitter=jitter,
    )


def solve_substituted(gamma, A=None, y=None, L=None, l=None, *, jitter=DEFAULT_JITTER) -> QpSolution:
    """Solve the mode problem through :func:`reformulate` and map back to ``c``."""
    sol = solve_mode(reformulate(gamma, A, y, L, l, jitter=jitter))
    w = sol.minimizer
    sol.extra["w"] = w
    sol.minimizer = np.asarray(gamma, dtype=float) @ w
    return sol
