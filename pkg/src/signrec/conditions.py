"""Irrepresentability and identifiability certificates for a sign vector.

Three routes are provided:

* ``irrepresentability_indicator``: linear algebra on ``X_I``.
* ``identifiability_indicator``: solve basis pursuit on ``X s`` and test
  whether ``s`` comes back.
* ``kernel_certificate``: an LP over a basis of ``ker(X)`` checking
  ``|<s_I, h_I>| < sum_{i not in I} |h_i|`` for every nonzero kernel vector.

The last two decide the same property by unrelated computations and are
meant to be cross-checked against each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .core_model import SignVector, as_matrix
from .errors import ParameterError, UnboundedError
from .simplex import solve_inequality
from .solvers import basis_pursuit

RANK_RTOL = 1e-10
EQUALITY_TOL = 1e-7
KERNEL_TOL = 1e-7


@dataclass
class CertificateReport:
    indicator: int
    margin: float
    detail: Any = None
    boundary: bool = False

    def to_dict(self) -> dict:
        return {"indicator": self.indicator, "margin": self.margin, "boundary": self.boundary}


def _signs(s) -> SignVector:
    return s if isinstance(s, SignVector) else SignVector(np.asarray(s))


def numerical_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if A.size == 0:
        return 0
    sv = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(sv > rtol * sv[0])) if sv[0] > 0 else 0


def irrepresentability_vector(X, s) -> np.ndarray:
    """``X_Ibar' X_I (X_I'X_I)^{-1} s_I``, one entry per column outside the support.

    Raises LinAlgError when ``X_I'X_I`` is singular.
    """
    Xe = as_matrix(X)
    s = _signs(s)
    I = s.support
    Ibar = s.nulls
    XI = Xe[:, I]
    cf = cho_factor(XI.T @ XI)
    return Xe[:, Ibar].T @ (XI @ cho_solve(cf, s.values[I].astype(np.float64)))


def irrepresentability_indicator(X, s) -> CertificateReport:
    Xe = as_matrix(X)
    s = _signs(s)
    if s.p != Xe.shape[1]:
        raise ParameterError("sign vector length does not match the number of columns")
    if s.k == 0:
        return CertificateReport(1, 1.0, np.zeros(s.p))
    if s.k > Xe.shape[0] or numerical_rank(Xe[:, s.support]) < s.k:
        return CertificateReport(0, -np.inf)
    try:
        w = irrepresentability_vector(Xe, s)
    except LinAlgError:
        return CertificateReport(0, -np.inf)
    sup = float(np.abs(w).max(initial=0.0))
    return CertificateReport(int(sup <= 1.0), 1.0 - sup, w)


def identifiability_indicator(X, s, tol: float = EQUALITY_TOL) -> CertificateReport:
    """1 iff ``s`` is the basis pursuit solution for the target ``X s``.

    ``margin = tol - ||bp - s||_inf``. A report is flagged ``boundary`` when
    the minimizer differs from ``s`` while ``s`` attains the same l1 norm,
    i.e. the l1 minimizer is not unique.
    """
    Xe = as_matrix(X)
    s = _signs(s)
    if s.p != Xe.shape[1]:
        raise ParameterError("sign vector length does not match the number of columns")
    if s.k == 0:
        return CertificateReport(1, tol, np.zeros(s.p))
    if s.k > Xe.shape[0] or numerical_rank(Xe[:, s.support]) < s.k:
        # dependent active columns rule out identifiability
        return CertificateReport(0, -np.inf)
    sv = s.values.astype(np.float64)
    sol = basis_pursuit(Xe @ sv, Xe)
    dist = float(np.abs(sol.estimate - sv).max())
    ok = dist <= tol
    tied = not ok and abs(sol.objective - s.k) <= 1e-9 * s.k
    return CertificateReport(int(ok), tol - dist, sol.estimate, boundary=tied)


def kernel_certificate(X, s, tol: float = KERNEL_TOL) -> CertificateReport:
    """Null-space test of identifiability.

    Computes ``v* = max <s_I, h_I>`` over ``h in ker(X)`` with
    ``sum_{i not in I} |h_i| <= 1`` (an LP in the coordinates of a kernel
    basis) and returns 1 iff ``v* < 1 - tol``; ``margin = 1 - v*``. Values
    within ``tol`` of 1 are flagged ``boundary``.
    """
    Xe = as_matrix(X)
    s = _signs(s)
    n, p = Xe.shape
    if s.p != p:
        raise ParameterError("sign vector length does not match the number of columns")
    _, sv, Vt = np.linalg.svd(Xe, full_matrices=True)
    r = int(np.sum(sv > RANK_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
    N = Vt[r:].T
    d = N.shape[1]
    if d == 0:
        return CertificateReport(1, np.inf)
    I, Ibar = s.support, s.nulls
    if s.k and numerical_rank(Xe[:, I]) < s.k:
        # a kernel vector supported on I makes the strict inequality fail
        return CertificateReport(0, -np.inf)
    if s.k == 0:
        return CertificateReport(1, 1.0, np.zeros(p))
    g = N[I].T @ s.values[I].astype(np.float64)
    NB = N[Ibar]
    m = Ibar.size
    # variables: c+ (d), c- (d), t (m); maximize g'(c+ - c-)
    A = np.zeros((2 * m + 1, 2 * d + m))
    A[:m, :d] = NB
    A[:m, d:2 * d] = -NB
    A[:m, 2 * d:] = -np.eye(m)
    A[m:2 * m, :d] = -NB
    A[m:2 * m, d:2 * d] = NB
    A[m:2 * m, 2 * d:] = -np.eye(m)
    A[2 * m, 2 * d:] = 1.0
    b = np.zeros(2 * m + 1)
    b[-1] = 1.0
    c = np.concatenate([-g, g, np.zeros(m)])
    try:
        lp = solve_inequality(c, A, b)
    except UnboundedError:
        return CertificateReport(0, -np.inf)
    v = -lp.objective
    h = N @ (lp.x[:d] - lp.x[d:2 * d])
    return CertificateReport(int(v < 1.0 - tol), 1.0 - v, h, boundary=abs(v - 1.0) <= tol)


def mutual_coherence(X) -> float:
    Xe = as_matrix(X)
    norms = np.linalg.norm(Xe, axis=0)
    if np.any(norms == 0):
        raise ParameterError("mutual coherence is undefined for a zero column")
    U = Xe / norms
    G = np.abs(U.T @ U)
    np.fill_diagonal(G, 0.0)
    return float(G.max(initial=0.0))


def mutual_coherence_bound(X) -> float:
    """Sparsity bound ``(1 + 1/M) / 2`` below which every sign vector is identifiable."""
    M = mutual_coherence(X)
    if M <= 1e-15:
        return np.inf
    return 0.5 * (1.0 + 1.0 / M)
