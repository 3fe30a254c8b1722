"""Dense two-phase tableau simplex for small linear programs.

Entering variable: most negative reduced cost (Dantzig), switching for good
to Bland's smallest-index rule after a run of degenerate pivots so the method
cannot cycle. Leaving variable: minimum ratio, ties broken by smallest basic
index (Bland).

Basis pursuit targets ``X s`` are highly degenerate (most basic variables sit
at zero), and Dantzig pivots can stall there for thousands of steps. The
right-hand side is therefore perturbed by a small fixed positive vector
before pivoting. At the end the true right-hand side is restored through the
identity-block columns of the tableau, which hold the accumulated row
operations. The basis is still dual feasible, so a few dual simplex pivots
remove any infeasibility left by the perturbation. Finally the basic solution
is recomputed by a direct solve with the basis columns, so returned vertices
are exact to working precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InfeasibleError, NumericalError, ParameterError, UnboundedError

OPTIMAL, UNBOUNDED, ITERATION_LIMIT, INFEASIBLE = 0, 1, 2, 3
# relative size of the right-hand side perturbation
PERTURBATION = 1e-7


@njit(cache=True, nogil=True)
def _pivot(T, basis, r, j):
    m1, w = T.shape
    piv = T[r, j]
    for c in range(w):
        T[r, c] /= piv
    for i in range(m1):
        if i == r:
            continue
        f = T[i, j]
        if f != 0.0:
            for c in range(w):
                T[i, c] -= f * T[r, c]
            T[i, j] = 0.0
    T[r, j] = 1.0
    basis[r] = j


@njit(cache=True, nogil=True)
def _iterate(T, basis, n_enter, tol, piv_tol, max_iter, bland_after):
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    use_bland = bland_after <= 0
    degenerate_run = 0
    it = 0
    while it < max_iter:
        j = -1
        if use_bland:
            for jj in range(n_enter):
                if T[m, jj] < -tol:
                    j = jj
                    break
        else:
            best = -tol
            for jj in range(n_enter):
                if T[m, jj] < best:
                    best = T[m, jj]
                    j = jj
        if j < 0:
            return OPTIMAL, it
        r = -1
        best_ratio = np.inf
        for i in range(m):
            a = T[i, j]
            if a > piv_tol:
                ratio = T[i, rhs] / a
                if r < 0 or ratio < best_ratio - 1e-12 * (1.0 + abs(best_ratio)):
                    r = i
                    best_ratio = ratio
                elif abs(ratio - best_ratio) <= 1e-12 * (1.0 + abs(best_ratio)) and basis[i] < basis[r]:
                    r = i
                    best_ratio = ratio
        if r < 0:
            return UNBOUNDED, it
        if best_ratio <= tol:
            degenerate_run += 1
            if degenerate_run > bland_after:
                use_bland = True
        else:
            degenerate_run = 0
        _pivot(T, basis, r, j)
        for i in range(m):
            if T[i, rhs] < 0.0 and T[i, rhs] > -tol:
                T[i, rhs] = 0.0
        it += 1
    return ITERATION_LIMIT, it


@njit(cache=True, nogil=True)
def _dual_iterate(T, basis, n_enter, tol, piv_tol, max_iter):
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    it = 0
    while it < max_iter:
        r = -1
        worst = -tol
        for i in range(m):
            if T[i, rhs] < worst:
                worst = T[i, rhs]
                r = i
        if r < 0:
            return OPTIMAL, it
        j = -1
        best = np.inf
        for jj in range(n_enter):
            a = T[r, jj]
            if a < -piv_tol:
                ratio = max(T[m, jj], 0.0) / -a
                if ratio < best:
                    best = ratio
                    j = jj
        if j < 0:
            return INFEASIBLE, it
        _pivot(T, basis, r, j)
        it += 1
    return ITERATION_LIMIT, it


def _perturbation(m: int, scale: float) -> np.ndarray:
    # fixed, generic and positive; no caller-visible randomness
    u = np.random.Generator(np.random.Philox(12345)).random(m)
    return PERTURBATION * scale * (1.0 + u)


def _restore(T, basis, b, n_enter, ident, tol, piv_tol, max_iter, scale):
    """Swap the perturbed right-hand side for ``b`` and repair with dual simplex."""
    mk = basis.size
    T[:mk, -1] = T[:mk, ident:ident + b.size] @ b
    status, it = _dual_iterate(T, basis, n_enter, tol * scale, piv_tol, max_iter)
    if status == INFEASIBLE:
        raise InfeasibleError("no feasible point after restoring the right-hand side")
    if status == ITERATION_LIMIT:
        raise NumericalError("dual simplex clean-up hit the iteration limit")
    return it


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    basis: np.ndarray
    iterations: int


def _refine(A, b, basis, x_tableau, tol):
    B = A[:, basis]
    try:
        xb = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        return x_tableau
    if np.any(xb < -1e3 * tol * (1.0 + np.abs(xb).max())):
        return x_tableau
    x = np.zeros(A.shape[1])
    x[basis] = np.maximum(xb, 0.0)
    return x


def solve_standard(c, A, b, *, tol=1e-9, piv_tol=1e-10, max_iter=None, bland_after=50, perturb=True) -> LPResult:
    """Minimize ``c'x`` subject to ``A x = b``, ``x >= 0``.

    Raises InfeasibleError, UnboundedError, or NumericalError on an
    iteration limit.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.array(A, dtype=np.float64, ndmin=2)
    b = np.array(b, dtype=np.float64, ndmin=1)
    m, N = A.shape
    if c.shape != (N,) or b.shape != (m,):
        raise ParameterError("dimension mismatch between c, A and b")
    if max_iter is None:
        max_iter = 50 * (m + N)
    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.where(flip, -b, b)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if perturb:
        try:
            return _standard(c, A, b, b + _perturbation(m, scale), tol, piv_tol, max_iter, bland_after, scale)
        except InfeasibleError:
            # dependent rows are consistent for b but not for the perturbed b
            pass
    return _standard(c, A, b, None, tol, piv_tol, max_iter, bland_after, scale)


def _standard(c, A, b, b_work, tol, piv_tol, max_iter, bland_after, scale) -> LPResult:
    m, N = A.shape
    bw = b if b_work is None else b_work
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = A
    T[:m, N:N + m] = np.eye(m)
    T[:m, -1] = bw
    T[m, :N] = -A.sum(axis=0)
    T[m, -1] = -bw.sum()
    basis = np.arange(N, N + m, dtype=np.int64)

    status, it1 = _iterate(T, basis, N, tol, piv_tol, max_iter, bland_after)
    if status == ITERATION_LIMIT:
        raise NumericalError(f"phase 1 hit the iteration limit ({max_iter})")
    if -T[m, -1] > 1e-8 * scale * m:
        raise InfeasibleError(f"no feasible point: phase-1 residual {-T[m, -1]:.3e}")

    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= N:
            row = np.abs(T[i, :N])
            j = int(np.argmax(row))
            if row[j] > piv_tol:
                _pivot(T, basis, i, j)
            else:
                keep[i] = False  # redundant equality
    if not keep.all():
        T = np.ascontiguousarray(T[np.append(keep, True)])
        basis = basis[keep]
    mk = basis.size

    T[mk, :] = 0.0
    T[mk, :N] = c
    for i in range(mk):
        cb = c[basis[i]]
        if cb != 0.0:
            T[mk, :] -= cb * T[i, :]
    status, it2 = _iterate(T, basis, N, tol, piv_tol, max_iter, bland_after)
    if status == UNBOUNDED:
        raise UnboundedError("objective is unbounded below")
    if status == ITERATION_LIMIT:
        raise NumericalError(f"phase 2 hit the iteration limit ({max_iter})")
    it3 = 0
    if b_work is not None:
        it3 = _restore(T, basis, b, N, N, tol, piv_tol, max_iter, scale)

    x = np.zeros(N)
    x[basis] = np.maximum(T[:mk, -1], 0.0)
    x = _refine(A[keep], b[keep], basis, x, tol)
    return LPResult(x=x, objective=float(c @ x), basis=basis.copy(), iterations=it1 + it2 + it3)


def solve_inequality(
    c, A_ub, b_ub, *, tol=1e-9, piv_tol=1e-10, max_iter=None, bland_after=50, perturb=True
) -> LPResult:
    """Minimize ``c'x`` subject to ``A_ub x <= b_ub``, ``x >= 0`` with ``b_ub >= 0``.

    The slack basis is feasible, so phase 1 is skipped. ``x`` excludes slacks.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.array(A_ub, dtype=np.float64, ndmin=2)
    b = np.array(b_ub, dtype=np.float64, ndmin=1)
    m, N = A.shape
    if c.shape != (N,) or b.shape != (m,):
        raise ParameterError("dimension mismatch between c, A_ub and b_ub")
    if np.any(b < 0):
        raise ParameterError("solve_inequality needs b_ub >= 0; use solve_standard otherwise")
    if max_iter is None:
        max_iter = 50 * (m + N)
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = A
    T[:m, N:N + m] = np.eye(m)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    T[:m, -1] = b + _perturbation(m, scale) if perturb else b
    T[m, :N] = c
    basis = np.arange(N, N + m, dtype=np.int64)
    status, it = _iterate(T, basis, N + m, tol, piv_tol, max_iter, bland_after)
    if status == UNBOUNDED:
        raise UnboundedError("objective is unbounded below")
    if status == ITERATION_LIMIT:
        raise NumericalError(f"simplex hit the iteration limit ({max_iter})")
    if perturb:
        it += _restore(T, basis, b, N + m, N, tol, piv_tol, max_iter, scale)
    full = np.zeros(N + m)
    full[basis] = np.maximum(T[:m, -1], 0.0)
    full = _refine(np.hstack([A, np.eye(m)]), b, basis, full, tol)
    x = full[:N]
    return LPResult(x=x, objective=float(c @ x), basis=basis.copy(), iterations=it)
