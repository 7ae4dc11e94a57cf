"""Weighted basis pursuit denoise.

Solves::

    minimize  sum_i w_i |z_i|   subject to  ||A z - y||_2 <= epsilon

by root-finding on the Pareto curve ``phi(tau) = min ||A z - y||_2`` over
the weighted l1 ball of radius ``tau`` (the approach of SPGL1, extended to
weights that may be zero). Each ``phi(tau)`` evaluation is a spectral
projected gradient solve; ``tau`` is updated with Newton steps using
``phi'(tau) = -||A^T r||_* / ||r||``.

Coordinates with zero weight are never constrained by the ball, so the
projection leaves them alone and no special elimination is needed.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, DomainError, InfeasibleError
from .model import weighted_l1_norm
from .operators import as_operator

logger = logging.getLogger(__name__)

__all__ = [
    "SolveOptions",
    "SolveReport",
    "ParetoState",
    "solve_weighted_bpdn",
    "project_weighted_l1_ball",
    "pareto_root_iteration",
    "oracle_solve_small",
    "dual_norm",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolveOptions:
    feasibility_tol: float = 1e-6
    optimality_tol: float = 1e-6
    max_outer_iterations: int = 100
    max_inner_iterations: int = 10000
    algorithm: str = "pareto_root"

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.optimality_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.algorithm not in ("pareto_root", "penalized_fallback"):
            raise DomainError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class SolveReport:
    solution: np.ndarray
    residual_norm: float
    weighted_objective: float
    outer_iterations: int
    inner_iterations: int
    converged: bool
    cone_check: bool
    dual_bound: float = -np.inf
    status: str = ""
    phi_history: list = field(default_factory=list)

    @property
    def certified_gap(self) -> float:
        """Objective minus the best dual lower bound found."""
        return self.weighted_objective - self.dual_bound


# ---------------------------------------------------------------------------
# weighted l1 ball


def project_weighted_l1_ball(v, w, tau):
    """Euclidean projection of ``v`` onto ``{z : sum w_i |z_i| <= tau}``.

    The result is ``sign(v) * max(|v| - theta*w, 0)`` for the unique
    ``theta >= 0`` making the constraint tight (or ``theta = 0`` when ``v``
    is already inside). Zero-weight coordinates come back unchanged.
    """
    z, _ = _project(np.asarray(v, dtype=float), np.asarray(w, dtype=float), tau)
    return z


def _project(v, w, tau):
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    if v.shape != w.shape:
        raise DimensionError("v and w must have the same shape")
    av = np.abs(v)
    pos = w > 0
    if np.sum(w[pos] * av[pos]) <= tau:
        return v.copy(), 0.0
    wp = w[pos]
    ap = av[pos]
    # breakpoints theta_i = |v_i| / w_i, visited in decreasing order
    bp = ap / wp
    order = np.argsort(-bp, kind="stable")
    bp_s = bp[order]
    s1 = np.cumsum(wp[order] * ap[order])
    s2 = np.cumsum(wp[order] ** 2)
    # with the first j breakpoints active, theta_j = (s1_j - tau) / s2_j
    theta_all = (s1 - tau) / s2
    nxt = np.append(bp_s[1:], 0.0)
    j = int(np.argmax(theta_all >= nxt))
    theta = max(theta_all[j], 0.0)
    z = v.copy()
    shrunk = np.maximum(ap - theta * wp, 0.0)
    z[pos] = np.sign(v[pos]) * shrunk
    return z, theta


def dual_norm(g, w):
    """Dual of the weighted l1 norm over positive-weight coordinates."""
    pos = w > 0
    if not np.any(pos):
        return 0.0
    return float(np.max(np.abs(g[pos]) / w[pos]))


# ---------------------------------------------------------------------------
# Pareto root finding


@dataclass
class ParetoState:
    """Mutable state carried between outer iterations of one solve."""

    tau: float
    z: np.ndarray
    r: np.ndarray = None
    g: np.ndarray = None
    rnorm: float = np.inf
    gdual: float = 0.0
    inner_iterations: int = 0
    outer_iterations: int = 0
    stalled: bool = False
    phi_history: list = field(default_factory=list)


def _lstsq(M, b):
    return scipy.linalg.lstsq(M, b, lapack_driver="gelsy", check_finite=False)[0]


def _face_step(A, y, w, tau, z, on_boundary):
    """Minimize the residual over the current face of the weighted ball.

    The face is fixed by the support and signs of ``z``; when ``z`` lies on
    the ball boundary the linear constraint ``sum w_i s_i z_i = tau`` is
    kept. Returns the exact face minimizer, or ``None`` when it cannot be
    formed (empty support or rank trouble).
    """
    S = np.flatnonzero(z)
    if S.size == 0 or S.size > 4 * A.shape[0]:
        return None
    cols = A.columns(S)
    c = w[S] * np.sign(z[S])
    resid = y - cols @ z[S]
    if on_boundary and np.any(c):
        # corrections d with c.d = 0 keep the boundary constraint tight;
        # parametrize them through a Householder basis of c's complement
        v = c / np.linalg.norm(c)
        e = np.zeros_like(v)
        e[0] = 1.0
        u = v - e if v[0] <= 0 else v + e
        H = np.eye(v.size) - 2.0 * np.outer(u, u) / float(u @ u)
        basis = H[:, 1:]
        if basis.shape[1] == 0:
            return None
        coef = _lstsq(cols @ basis, resid)
        zS = z[S] + basis @ coef
    else:
        zS = z[S] + _lstsq(cols, resid)
    if not np.all(np.isfinite(zS)):
        return None
    return S, zS


def _spg(A, y, w, tau, z0, max_iter, gap_tol, rnorm_stop, epsilon=None):
    """Spectral projected gradient on ``min 0.5||Az-y||^2, ||z||_{1,w} <= tau``.

    Every few iterations with an unchanged support and sign pattern, an
    exact minimization over the current face is attempted; this removes the
    slow tail projected gradient has on degenerate faces.
    Returns ``(z, r, g, iterations, stalled)`` with ``r = y - Az`` and
    ``g = A^T r``.
    """
    free = w == 0
    z, _ = _project(z0, w, tau)
    Az = A.matvec(z)
    r = y - Az
    g = A.rmatvec(r)
    f = 0.5 * float(r @ r)
    history = [f]
    step = 1.0 / max(np.linalg.norm(g, np.inf), 1e-300) if np.any(g) else 1.0
    stalled = False
    pattern = None
    stable = 0
    it = 0
    for it in range(1, max_iter + 1):
        gd = dual_norm(g, w)
        gap = tau * gd - float(z @ g)
        gfree = float(np.max(np.abs(g[free]))) if np.any(free) else 0.0
        scale = max(gd, np.linalg.norm(g, np.inf), 1e-300)
        rel = gap_tol
        if epsilon is not None:
            # no point solving phi(tau) more accurately than the root error
            rn = np.sqrt(2 * f)
            rel = max(rel, 0.1 * abs(rn - epsilon) / max(rn, _EPS))
        if gap <= rel * max(f, _EPS) and gfree <= 1e-9 * scale + 1e-14:
            it -= 1
            break
        if np.sqrt(2 * f) <= rnorm_stop:
            it -= 1
            break

        new_pattern = np.sign(z).tobytes()
        stable = stable + 1 if new_pattern == pattern else 0
        pattern = new_pattern
        if stable >= 5 or it % 10 == 0:
            stable = 0
            on_boundary = np.sum(w * np.abs(z)) >= tau * (1 - 1e-12) and tau > 0
            face = _face_step(A, y, w, tau, z, on_boundary)
            if face is not None:
                S, zS = face
                d = np.zeros_like(z)
                d[S] = zS - z[S]
                # ratio test: stay inside the sign pattern of the face
                wt = w[S] > 0
                shrink = wt & (np.sign(zS) != np.sign(z[S]))
                t = 1.0
                if np.any(shrink):
                    t = float(np.min(z[S][shrink] / (z[S][shrink] - zS[shrink])))
                z_try = z + t * d
                z_try, _ = _project(z_try, w, tau)
                r_try = y - A.matvec(z_try)
                f_try = 0.5 * float(r_try @ r_try)
                if f_try < f:
                    s_vec = z_try - z
                    z, r, f = z_try, r_try, f_try
                    g = A.rmatvec(r)
                    history.append(f)
                    As = A.matvec(s_vec)
                    sAAs = float(As @ As)
                    if sAAs > 0:
                        step = min(max(float(s_vec @ s_vec) / sAAs, 1e-10), 1e10)
                    continue

        d, _ = _project(z + step * g, w, tau)
        d -= z
        gtd = float(g @ d)
        if gtd <= 0.0:
            # projected step makes no progress: already stationary
            it -= 1
            break
        Ad = A.matvec(d)
        fmax = max(history[-10:])
        lam = 1.0
        accepted = False
        for _ in range(40):
            r_new = r - lam * Ad
            f_new = 0.5 * float(r_new @ r_new)
            if f_new <= fmax - 1e-4 * lam * gtd:
                accepted = True
                break
            # safeguarded quadratic interpolation
            denom = 2.0 * (f_new - f + lam * gtd)
            lam_q = lam * lam * gtd / denom if denom > 0 else 0.5 * lam
            lam = min(max(lam_q, 0.1 * lam), 0.5 * lam)
        if not accepted:
            stalled = True
            break
        s = lam * d
        z = z + s
        r = r_new
        As = lam * Ad
        sts = float(s @ s)
        sAAs = float(As @ As)
        step = sts / sAAs if sAAs > 0 else 1e10
        step = min(max(step, 1e-10), 1e10)
        g = A.rmatvec(r)
        f = f_new
        history.append(f)
    return z, r, g, it, stalled


def pareto_root_iteration(A, y, w, epsilon, state: ParetoState, opts: SolveOptions,
                          feas: float) -> ParetoState:
    """One outer step: evaluate ``phi(tau)`` then take a Newton step in ``tau``."""
    A = as_operator(A)
    inner_budget = max(opts.max_inner_iterations - state.inner_iterations, 1)
    z, r, g, its, stalled = _spg(
        A, y, w, state.tau, state.z, inner_budget,
        gap_tol=min(opts.optimality_tol, 1e-3) * 1e-2,
        rnorm_stop=max(epsilon - feas, 0.0) if epsilon > 0 else 0.0,
        epsilon=epsilon,
    )
    state.z, state.r, state.g = z, r, g
    state.rnorm = float(np.linalg.norm(r))
    state.gdual = dual_norm(g, w)
    state.inner_iterations += its
    state.outer_iterations += 1
    state.stalled = stalled
    state.phi_history.append((state.tau, state.rnorm))
    if state.gdual > 0:
        step = (state.rnorm - epsilon) * state.rnorm / state.gdual
        state.tau = max(state.tau + step, 0.0)
    return state


def _dual_bound_from_residual(y, r, g, w, epsilon):
    """Lower bound on the optimum from the dual point ``r / ||A^T r||_*``."""
    gd = dual_norm(g, w)
    if gd <= 0:
        return -np.inf
    free = w == 0
    if np.any(free) and np.max(np.abs(g[free])) > 1e-9 * gd + 1e-14:
        return -np.inf
    return (float(y @ r) - epsilon * float(np.linalg.norm(r))) / gd


def _polish_equality(A, y, w, z, tol):
    """Exactify a near-optimal ``z`` for ``A z = y`` on a thresholded support.

    Returns a list of candidate ``(z_polished, support)`` pairs, sparsest
    first, each satisfying the equality constraint to within ``tol``.
    """
    n = A.shape[0]
    mag = np.abs(z)
    top = mag.max() if mag.size else 0.0
    if top == 0:
        return []
    out = []
    seen = set()
    for t in (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10):
        S = np.flatnonzero(mag > t * top)
        key = tuple(S)
        if key in seen or S.size == 0:
            continue
        seen.add(key)
        if S.size > 2 * n:
            continue
        cols = A.columns(S)
        delta, *_ = np.linalg.lstsq(cols, y - cols @ z[S], rcond=None)
        zp = np.zeros_like(z)
        zp[S] = z[S] + delta
        res = np.linalg.norm(cols @ zp[S] - y)
        if res <= tol:
            out.append((zp, S))
    return out


def _lp_certificate(A, y, w, z, S):
    """Dual bound from ``A_S^T lam = w_S * sign(z_S)`` (equality case)."""
    free = np.flatnonzero(w == 0)
    S_all = np.union1d(S, free)
    c = np.where(w[S_all] > 0, w[S_all] * np.sign(z[S_all]), 0.0)
    cols = A.columns(S_all)
    lam, *_ = np.linalg.lstsq(cols.T, c, rcond=None)
    if np.linalg.norm(cols.T @ lam - c, np.inf) > 1e-9 * max(1.0, np.abs(c).max(initial=0)):
        return -np.inf
    g = A.rmatvec(lam)
    pos = w > 0
    excess = np.abs(g[pos]) - w[pos]
    fr = np.abs(g[~pos])
    if excess.size and excess.max() > 1e-10:
        return -np.inf
    if fr.size and fr.max() > 1e-9:
        return -np.inf
    return float(y @ lam)


def _validate(A, y, w, epsilon):
    A = as_operator(A)
    y = np.asarray(y, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    n, N = A.shape
    if y.size != n:
        raise DimensionError(f"y has length {y.size}, operator expects {n}")
    if w.size != N:
        raise DimensionError(f"w has length {w.size}, operator expects {N}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite and nonnegative")
    if not epsilon >= 0:
        raise DomainError(f"epsilon must be nonnegative, got {epsilon}")
    return A, y, w


def _report(A, y, w, z, state, converged, dual_bound, opts, status, epsilon):
    residual = float(np.linalg.norm(A.matvec(z) - y))
    obj = weighted_l1_norm(z, w)
    gap = obj - dual_bound
    cone = bool(gap <= opts.optimality_tol * max(1.0, obj))
    return SolveReport(
        solution=z,
        residual_norm=residual,
        weighted_objective=obj,
        outer_iterations=state.outer_iterations,
        inner_iterations=state.inner_iterations,
        converged=bool(converged),
        cone_check=cone,
        dual_bound=float(dual_bound),
        status=status,
        phi_history=list(state.phi_history),
    )


def solve_weighted_bpdn(A, y, w, epsilon=0.0, opts: SolveOptions | None = None) -> SolveReport:
    """Minimize ``||z||_{1,w}`` subject to ``||A z - y||_2 <= epsilon``.

    Returns a :class:`SolveReport`; ``converged`` is False when the
    iteration budget runs out. Raises :class:`InfeasibleError` when the
    least-squares residual already exceeds ``epsilon``.
    """
    opts = opts or SolveOptions()
    A, y, w = _validate(A, y, w, epsilon)
    if opts.algorithm == "penalized_fallback":
        return _solve_penalized(A, y, w, epsilon, opts)

    N = A.shape[1]
    ynorm = float(np.linalg.norm(y))
    feas = opts.feasibility_tol * max(1.0, ynorm)
    state = ParetoState(tau=0.0, z=np.zeros(N))
    if ynorm <= epsilon:
        state.phi_history.append((0.0, ynorm))
        return _report(A, y, w, state.z, state, True, 0.0, opts, "zero is feasible", epsilon)

    # nonnegative weights make zero a valid lower bound
    best_bound = 0.0
    best_z = None
    status = "iteration budget exhausted"
    converged = False
    for _ in range(opts.max_outer_iterations):
        tau_before = state.tau
        state = pareto_root_iteration(A, y, w, epsilon, state, opts, feas)
        z = state.z
        obj = weighted_l1_norm(z, w)
        best_bound = max(best_bound, _dual_bound_from_residual(y, state.r, state.g, w, epsilon))

        if state.gdual <= 1e-12 * max(1.0, ynorm) and state.rnorm > epsilon + feas:
            # phi has flattened out above epsilon: least-squares floor reached
            if _ls_floor_reached(A, y, w, state):
                raise InfeasibleError(
                    f"least-squares residual {state.rnorm:.3e} exceeds epsilon {epsilon:.3e}")

        if epsilon == 0 and state.rnorm <= 1e-2 * ynorm:
            for zp, S in _polish_equality(A, y, w, z, feas):
                objp = weighted_l1_norm(zp, w)
                bound = max(best_bound, _lp_certificate(A, y, w, zp, S))
                if objp - bound <= opts.optimality_tol * max(1.0, objp):
                    best_bound = bound
                    best_z = zp
                    break
            if best_z is not None:
                converged = True
                status = "equality solution certified"
                break

        # a feasible point within tolerance of a valid lower bound is optimal,
        # even when tau = 0 sits left of the root (free columns already fit y)
        feasible = state.rnorm <= epsilon + feas
        if feasible and obj - best_bound <= opts.optimality_tol * max(1.0, obj):
            converged = True
            best_z = z
            status = "root found"
            break
        if feasible and state.tau > best_bound and state.tau - tau_before <= feas:
            # overshot: phi vanishes right of the root, so Newton cannot come
            # back; restart from the lower bound, which lies left of the root
            state.tau = best_bound
        if state.inner_iterations >= opts.max_inner_iterations:
            status = "inner iteration budget exhausted"
            break
        if state.tau == tau_before and state.stalled:
            status = "subproblem stalled"
            break

    if best_z is None:
        best_z = state.z
        if epsilon == 0:
            cands = _polish_equality(A, y, w, best_z, feas)
            if cands:
                best_z = min(cands, key=lambda c: weighted_l1_norm(c[0], w))[0]
    report = _report(A, y, w, best_z, state, converged, best_bound, opts, status, epsilon)
    if report.residual_norm > epsilon + feas:
        report.converged = False
    if not report.converged:
        logger.warning("weighted BPDN did not converge: %s", status)
    return report


def _ls_floor_reached(A, y, w, state):
    # g == 0 on every coordinate means z minimizes the unconstrained residual
    return np.linalg.norm(state.g, np.inf) <= 1e-10 * max(1.0, np.linalg.norm(y))


# ---------------------------------------------------------------------------
# penalized fallback


def _fista(A, y, w, lam, z0, L, max_iter, tol):
    z = z0.copy()
    v = z.copy()
    t = 1.0
    its = 0
    for its in range(1, max_iter + 1):
        g = A.rmatvec(y - A.matvec(v))
        u = v + g / L
        z_new = np.sign(u) * np.maximum(np.abs(u) - lam * w / L, 0.0)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        v = z_new + ((t - 1) / t_new) * (z_new - z)
        change = np.linalg.norm(z_new - z)
        z, t = z_new, t_new
        if change <= tol * max(1.0, np.linalg.norm(z)):
            break
    return z, its


def _solve_penalized(A, y, w, epsilon, opts):
    """Bisection on lambda for ``min 0.5||Az-y||^2 + lam*||z||_{1,w}``.

    Slower and less accurate than the Pareto route; kept as an independent
    cross-check.
    """
    N = A.shape[1]
    ynorm = float(np.linalg.norm(y))
    feas = opts.feasibility_tol * max(1.0, ynorm)
    state = ParetoState(tau=0.0, z=np.zeros(N))
    if ynorm <= epsilon:
        return _report(A, y, w, state.z, state, True, 0.0, opts, "zero is feasible", epsilon)
    # power iteration for ||A||^2
    rng = np.random.default_rng(0)
    v = rng.standard_normal(N)
    for _ in range(50):
        v = A.rmatvec(A.matvec(v))
        v /= np.linalg.norm(v)
    L = 1.01 * float(np.linalg.norm(A.matvec(v)) ** 2)
    lam_hi = dual_norm(A.rmatvec(y), w)
    lam_lo = lam_hi * 1e-8
    z = np.zeros(N)
    inner_budget = max(opts.max_inner_iterations // max(opts.max_outer_iterations, 1), 200)
    target = epsilon if epsilon > 0 else feas
    best = None
    for outer in range(opts.max_outer_iterations):
        lam = np.sqrt(lam_lo * lam_hi)
        z, its = _fista(A, y, w, lam, z, L, inner_budget, 1e-10)
        state.inner_iterations += its
        state.outer_iterations += 1
        rn = float(np.linalg.norm(A.matvec(z) - y))
        state.phi_history.append((lam, rn))
        if rn <= target + feas:
            best = z.copy()
            lam_lo = lam
        else:
            lam_hi = lam
        if lam_hi / lam_lo < 1 + 1e-6:
            break
    if best is None:
        best = z
    converged = float(np.linalg.norm(A.matvec(best) - y)) <= epsilon + feas
    return _report(A, y, w, best, state, converged, -np.inf, opts,
                   "penalized bisection", epsilon)


# ---------------------------------------------------------------------------
# brute-force oracle


def oracle_solve_small(A_dense, y, w, epsilon=0.0):
    """Exact weighted basis pursuit by enumerating basic solutions.

    Only for tiny problems (``N <= 12``, ``n <= 8``) with ``epsilon = 0``.
    Returns ``(objective, solution)``.
    """
    A_dense = np.asarray(A_dense, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    n, N = A_dense.shape
    if epsilon != 0:
        raise DomainError("the enumeration oracle handles epsilon = 0 only")
    if N > 12 or n > 8:
        raise DomainError(f"oracle limited to N <= 12, n <= 8 (got n={n}, N={N})")
    if y.size != n or w.size != N:
        raise DimensionError("shapes of A, y, w disagree")
    scale = max(1.0, np.linalg.norm(y))
    if np.linalg.norm(y) == 0:
        return 0.0, np.zeros(N)
    best_obj, best_z = np.inf, None
    rank = np.linalg.matrix_rank(A_dense)
    sizes = [rank]
    for size in sizes:
        singular = False
        for S in itertools.combinations(range(N), size):
            S = list(S)
            As = A_dense[:, S]
            zs, _, r, _ = np.linalg.lstsq(As, y, rcond=None)
            if r < size:
                singular = True
                continue
            if np.linalg.norm(As @ zs - y) > 1e-9 * scale:
                continue
            obj = float(np.sum(w[S] * np.abs(zs)))
            if obj < best_obj - 1e-14:
                best_obj = obj
                best_z = np.zeros(N)
                best_z[S] = zs
        # a singular block can hide sparser basic solutions; widen the search
        if singular and size == rank:
            sizes.extend(range(1, rank))
    if best_z is None:
        raise InfeasibleError("no basic solution reproduces y")
    return best_obj, best_z
