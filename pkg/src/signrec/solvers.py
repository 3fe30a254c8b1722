"""LASSO, adaptive LASSO, basis pursuit and BPDN, with a KKT oracle.

LASSO is solved by cyclic coordinate descent (full sweeps alternating with
sweeps over the current active set). Short bursts of sweeps alternate with an
active-set Newton step: solve ``X_A'X_A b_A = X_A'Y - pen_A * s_A`` for the
current signs and move toward it up to the first sign change. The step is a
descent step, and once the signs are right it lands on the exact minimizer,
so KKT gaps end at round-off level. Every returned solution carries its gap.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .core_model import DesignMatrix, as_matrix, sign
from .errors import ConvergenceError, NumericalError, ParameterError, PreconditionError
from .simplex import solve_standard

ADAPTIVE_EPS = 1e-7
# coordinate sweeps between active-set Newton steps
_BURST = 10
# path points per decade of penalty when no warm start is given
_PATH_DENSITY = 4


@dataclass
class LassoConfig:
    max_iters: int = 1_000_000
    tol: float = 1e-9
    warm_start: np.ndarray | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be positive")


@dataclass
class SolverSolution:
    estimate: np.ndarray
    objective: float
    residual_norm2_sq: float
    iterations: int
    kkt_gap: float
    lambda_or_R: float
    info: dict = field(default_factory=dict)


def soft_threshold(x, t):
    """``sign(x) * max(|x| - t, 0)``; works on scalars and arrays."""
    if np.any(np.asarray(t) < 0):
        raise ParameterError("threshold must be non-negative")
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


@njit(cache=True, nogil=True)
def _update(X, j, pen_j, b, r, col_sq_j):
    n = X.shape[0]
    old = b[j]
    if col_sq_j == 0.0:
        b[j] = 0.0
        return 0.0, old != 0.0
    g = 0.0
    for i in range(n):
        g += X[i, j] * r[i]
    z = g + col_sq_j * old
    if z > pen_j:
        new = (z - pen_j) / col_sq_j
    elif z < -pen_j:
        new = (z + pen_j) / col_sq_j
    else:
        new = 0.0
    d = new - old
    if d != 0.0:
        for i in range(n):
            r[i] -= d * X[i, j]
        b[j] = new
    return abs(d) * np.sqrt(col_sq_j), (old == 0.0) != (new == 0.0)


@njit(cache=True, nogil=True)
def _cd(X, pen, b, r, col_sq, max_sweeps, tol):
    p = X.shape[1]
    sweeps = 0
    while sweeps < max_sweeps:
        worst = 0.0
        changed = False
        for j in range(p):
            d, flip = _update(X, j, pen[j], b, r, col_sq[j])
            worst = max(worst, d)
            changed = changed or flip
        sweeps += 1
        if worst < tol and not changed:
            return sweeps, True
        active = np.flatnonzero(b)
        while sweeps < max_sweeps:
            worst = 0.0
            for j in active:
                d, _ = _update(X, j, pen[j], b, r, col_sq[j])
                worst = max(worst, d)
            sweeps += 1
            if worst < tol:
                break
    return sweeps, False


def kkt_gap(b, Y, X, pen) -> float:
    """Violation of the LASSO optimality system at ``b``.

    ``max(|X_A'(Y-Xb) - pen_A S(b_A)|_inf, max(0, |X_A^c'(Y-Xb)|_inf - pen))``,
    with ``pen`` a scalar or a per-coordinate penalty.
    """
    Xe = as_matrix(X)
    b = np.asarray(b, dtype=np.float64)
    pen = np.broadcast_to(np.asarray(pen, dtype=np.float64), b.shape)
    g = Xe.T @ (np.asarray(Y, dtype=np.float64) - Xe @ b)
    act = b != 0
    on = np.abs(g[act] - pen[act] * np.sign(b[act])).max(initial=0.0)
    off = max(0.0, (np.abs(g[~act]) - pen[~act]).max(initial=0.0))
    return float(max(on, off))


def kkt_check(solution, Y, X, lam) -> float:
    b = solution.estimate if isinstance(solution, SolverSolution) else solution
    return kkt_gap(b, Y, X, lam)


def _newton_step(Xe, Y, pen, b):
    """Move toward the minimizer of the objective restricted to the current signs.

    Stops at the first coordinate whose sign would flip and zeroes it, so the
    objective decreases monotonically. Returns None when the active Gram
    matrix is singular.
    """
    act = np.flatnonzero(b)
    if act.size == 0:
        return None
    if act.size > Xe.shape[0]:
        return _reduce_support(Xe, pen, b, act)
    s = np.sign(b[act])
    XA = Xe[:, act]
    try:
        cf = cho_factor(XA.T @ XA)
    except LinAlgError:
        return _reduce_support(Xe, pen, b, act)
    target = cho_solve(cf, XA.T @ Y - pen[act] * s)
    if not np.all(np.isfinite(target)):
        return _reduce_support(Xe, pen, b, act)
    out = b.copy()
    flips = np.flatnonzero(np.sign(target) != s)
    if flips.size == 0:
        out[act] = target
        return out
    cur = b[act]
    theta = cur[flips] / (cur[flips] - target[flips])
    i = int(np.argmin(theta))
    out[act] = cur + theta[i] * (target - cur)
    out[act[flips[i]]] = 0.0
    return out


def _reduce_support(Xe, pen, b, act):
    """Drop one active coordinate along a kernel direction of ``X_A``.

    Moving along ``h`` with ``X_A h = 0`` leaves the fit unchanged and the
    penalty linear, so the non-increasing direction is followed until the
    first coordinate reaches zero. Returns None if ``X_A`` has full column rank.
    """
    XA = Xe[:, act]
    _, sv, Vt = np.linalg.svd(XA, full_matrices=True)
    if act.size <= XA.shape[0] and sv[-1] > 1e-10 * sv[0]:
        return None
    h = Vt[-1]
    s = np.sign(b[act])
    if float(pen[act] * s @ h) > 0:
        h = -h
    cur = b[act]
    hit = np.flatnonzero(cur * h < 0)
    if hit.size == 0:
        h = -h
        hit = np.flatnonzero(cur * h < 0)
    theta = -cur[hit] / h[hit]
    i = int(np.argmin(theta))
    out = b.copy()
    out[act] = cur + theta[i] * h
    out[act[hit[i]]] = 0.0
    return out


def _settle_signs(Xe, Y, pen, b):
    # repeated Newton steps; each partial step removes one coordinate, so at most |A| rounds
    cur = b
    for _ in range(np.count_nonzero(b) + 1):
        nxt = _newton_step(Xe, Y, pen, cur)
        if nxt is None:
            return None if cur is b else cur
        full = np.count_nonzero(nxt) == np.count_nonzero(cur)
        cur = nxt
        if full:
            break
    return cur


def _descend(Xf, Y, pen, b, col_sq, tol, max_sweeps):
    """CD bursts alternating with sign settling until ``kkt_gap <= tol``; updates ``b``."""
    r = Y - Xf @ b
    cd_tol = 1e-6 * max(1.0, float(np.linalg.norm(Y)))
    sweeps = 0
    gap = np.inf
    while sweeps < max_sweeps:
        done, converged = _cd(Xf, pen, b, r, col_sq, min(_BURST, max_sweeps - sweeps), cd_tol)
        sweeps += done
        gap = kkt_gap(b, Y, Xf, pen)
        if gap <= tol:
            break
        stepped = _settle_signs(Xf, Y, pen, b)
        if stepped is not None:
            b[:] = stepped
            r = Y - Xf @ b
            gap = kkt_gap(b, Y, Xf, pen)
            if gap <= tol:
                break
        if converged:
            if cd_tol < 1e-15:
                break
            cd_tol *= 1e-2
    return gap, sweeps


def _weighted_lasso(Y, X, pen, cfg: LassoConfig, lam_report: float) -> SolverSolution:
    Xe = as_matrix(X)
    Y = np.asarray(Y, dtype=np.float64)
    n, p = Xe.shape
    if Y.shape != (n,):
        raise ParameterError(f"response has shape {Y.shape}, expected ({n},)")
    if not np.all(np.isfinite(pen)):
        raise ParameterError("penalty must be finite")
    Xf = np.asfortranarray(Xe)
    XtY = Xf.T @ Y
    if np.all(np.abs(XtY) <= pen):
        b = np.zeros(p)
        return SolverSolution(b, 0.5 * float(Y @ Y), float(Y @ Y), 0, kkt_gap(b, Y, Xf, pen), lam_report)

    col_sq = np.einsum("ij,ij->j", Xf, Xf)
    sweeps = 0
    if cfg.warm_start is not None:
        b = np.array(cfg.warm_start, dtype=np.float64)
        if b.shape != (p,):
            raise ParameterError("warm_start has the wrong length")
    else:
        # warm-started path from the smallest scale at which b = 0 is optimal
        b = np.zeros(p)
        with np.errstate(divide="ignore"):
            top = float(np.max(np.abs(XtY) / pen))
        steps = int(np.ceil(_PATH_DENSITY * np.log10(top)))
        for scale in np.geomspace(top, 1.0, steps + 1)[1:-1]:
            _, used = _descend(Xf, Y, pen * scale, b, col_sq, 1e-6 * scale * pen.min(), cfg.max_iters)
            sweeps += used
    gap, used = _descend(Xf, Y, pen, b, col_sq, cfg.tol, max(1, cfg.max_iters - sweeps))
    sweeps += used
    if gap > cfg.tol:
        raise ConvergenceError(f"LASSO did not reach kkt_gap <= {cfg.tol:g} (last gap {gap:.3e})", kkt_gap=gap)
    res = Y - Xf @ b
    rss = float(res @ res)
    return SolverSolution(b, 0.5 * rss + float(pen @ np.abs(b)), rss, sweeps, gap, lam_report)


def lasso(Y, X, lam: float, cfg: LassoConfig | None = None) -> SolverSolution:
    """``argmin_b 0.5*||Y - Xb||^2 + lam*||b||_1``."""
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    cfg = cfg or LassoConfig()
    p = as_matrix(X).shape[1]
    return _weighted_lasso(Y, X, np.full(p, float(lam)), cfg, float(lam))


def adaptive_weights(pilot) -> np.ndarray:
    pilot = np.asarray(pilot, dtype=np.float64)
    if not np.all(np.isfinite(pilot)):
        raise ParameterError("pilot estimate must be finite")
    return 1.0 / (np.abs(pilot) + ADAPTIVE_EPS)


def adaptive_lasso(Y, X, lam: float, pilot, cfg: LassoConfig | None = None) -> SolverSolution:
    """LASSO with per-coordinate penalty ``lam / (|pilot_i| + 1e-7)``."""
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    w = adaptive_weights(pilot)
    if w.shape != (as_matrix(X).shape[1],):
        raise ParameterError("pilot has the wrong length")
    sol = _weighted_lasso(Y, X, lam * w, cfg or LassoConfig(), float(lam))
    sol.info["weights"] = w
    return sol


def basis_pursuit(target, X) -> SolverSolution:
    """``argmin ||b||_1`` subject to ``X b = target``, via the LP split ``b = u - v``.

    ``kkt_gap`` reports the larger of the equality residual and the dual
    infeasibility ``max(0, ||X' pi||_inf - 1)`` of the final basis.
    """
    Xe = as_matrix(X)
    y = np.asarray(target, dtype=np.float64)
    n, p = Xe.shape
    if y.shape != (n,):
        raise ParameterError(f"target has shape {y.shape}, expected ({n},)")
    if not np.any(y):
        return SolverSolution(np.zeros(p), 0.0, 0.0, 0, 0.0, 0.0)
    A = np.hstack([Xe, -Xe])
    lp = solve_standard(np.ones(2 * p), A, y)
    b = lp.x[:p] - lp.x[p:]
    resid = y - Xe @ b
    feas = float(np.abs(resid).max())
    if feas > 1e-8 * float(np.abs(y).max()):
        raise NumericalError(f"basis pursuit solution violates Xb = y by {feas:.3e}")
    gap = feas
    B = A[:, lp.basis] if lp.basis.size == n else None
    if B is not None:
        try:
            pi = np.linalg.solve(B.T, np.ones(n))
            gap = max(gap, float(np.abs(Xe.T @ pi).max()) - 1.0)
        except np.linalg.LinAlgError:
            pass
    return SolverSolution(b, float(np.abs(b).sum()), float(resid @ resid), lp.iterations, max(gap, 0.0), 0.0)


def bpdn(Y, X, R: float, cfg: LassoConfig | None = None) -> SolverSolution:
    """``argmin ||b||_1`` subject to ``||Y - Xb||^2 <= R``.

    Found as the LASSO solution whose residual equals ``R``: bisection on
    lambda, accelerated by the exact solution of ``||r(lam)||^2 = R`` on the
    current linear piece of the LASSO path.
    """
    cfg = cfg or LassoConfig()
    Xe = as_matrix(X)
    Y = np.asarray(Y, dtype=np.float64)
    n, p = Xe.shape
    if R < 0:
        raise ParameterError("R must be non-negative")
    if np.linalg.matrix_rank(Xe) < n:
        raise PreconditionError("BPDN needs rank(X) = n")
    yy = float(Y @ Y)
    if R >= yy:
        return SolverSolution(np.zeros(p), 0.0, yy, 0, 0.0, float(R), {"lambda": float(np.abs(Xe.T @ Y).max())})
    if R == 0:
        sol = basis_pursuit(Y, Xe)
        sol.lambda_or_R = 0.0
        return sol

    lo, hi = 0.0, float(np.abs(Xe.T @ Y).max())
    res_lo, res_hi = 0.0, yy
    lam = 0.5 * hi
    warm = None
    total = 0
    for _ in range(200):
        sol = lasso(Y, Xe, lam, LassoConfig(cfg.max_iters, cfg.tol, warm))
        total += sol.iterations
        rss = sol.residual_norm2_sq
        if abs(rss - R) <= cfg.tol * R:
            sol.lambda_or_R = float(R)
            sol.iterations = total
            sol.info["lambda"] = lam
            return sol
        if not (res_lo - cfg.tol * R <= rss <= res_hi + cfg.tol * R):
            raise NumericalError(f"residual is not monotone in lambda near {lam:.6g}")
        if rss < R:
            lo, res_lo = lam, rss
        else:
            hi, res_hi = lam, rss
        warm = sol.estimate
        lam = _piece_lambda(Y, Xe, sol.estimate, R)
        if lam is None or not lo < lam < hi:
            lam = 0.5 * (lo + hi)
    raise NumericalError("BPDN bisection did not converge in 200 steps")


def _piece_lambda(Y, Xe, b, R):
    # on a fixed active set: r(lam) = r0 + lam*v with r0 orthogonal to v
    act = np.flatnonzero(b)
    if act.size == 0 or act.size > Xe.shape[0]:
        return None
    XA = Xe[:, act]
    try:
        cf = cho_factor(XA.T @ XA)
    except LinAlgError:
        return None
    b0 = cho_solve(cf, XA.T @ Y)
    r0 = Y - XA @ b0
    v = XA @ cho_solve(cf, sign(b[act]).astype(np.float64))
    vv = float(v @ v)
    need = R - float(r0 @ r0)
    if vv <= 0 or need <= 0:
        return None
    return float(np.sqrt(need / vv))
