"""Monte Carlo evaluation of the LASSO sign-recovery upper bound.

For a support ``I`` with ``ker(X_I) = 0`` the bound is ``P(||zeta||_inf <= 1)``
with

    zeta = w + (1/lam) * P eps,
    w = X_Ibar' X_I (X_I'X_I)^{-1} s_I,
    P = X_Ibar' (Id - X_I (X_I'X_I)^{-1} X_I').

For fixed ``w`` and ``z = P eps`` the event ``||w + z/lam||_inf <= 1`` holds
on an interval of ``mu = 1/lam``, so a set of draws can be summarised by
per-draw intervals and re-evaluated at any lambda without new matrix
products. Calibration uses that.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .core_model import RngStream, SignVector, _as_stream, as_matrix, sample_sign_vector
from .errors import CalibrationError, NumericalError, ParameterError, PreconditionError

_CHUNK = 1000


@dataclass
class ZetaContext:
    w: np.ndarray
    P: np.ndarray
    sigma: float
    lam: float
    support: np.ndarray
    nulls: np.ndarray


@dataclass
class BoundEstimate:
    p_hat: float
    std_err: float
    n_draws: int
    lam: float

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "p_hat": self.p_hat, "std_err": self.std_err, "n_draws": self.n_draws}


def _estimate(hits: int, n: int, lam: float) -> BoundEstimate:
    ph = hits / n
    return BoundEstimate(ph, float(np.sqrt(ph * (1.0 - ph) / n)), n, float(lam))


def build_zeta_context(X, s, sigma: float, lam: float) -> ZetaContext:
    Xe = as_matrix(X)
    s = s if isinstance(s, SignVector) else SignVector(np.asarray(s))
    n, p = Xe.shape
    if s.p != p:
        raise ParameterError("sign vector length does not match the number of columns")
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    if sigma < 0:
        raise ParameterError("sigma must be non-negative")
    I, Ibar = s.support, s.nulls
    if s.k == 0:
        return ZetaContext(np.zeros(p), Xe.T.copy(), float(sigma), float(lam), I, Ibar)
    XI = Xe[:, I]
    if s.k > n:
        raise PreconditionError(f"ker(X_I) is nontrivial: |I| = {s.k} exceeds n = {n}")
    rank = np.linalg.matrix_rank(XI)
    if rank < s.k:
        # an exactly singular Gram matrix can slip through the Cholesky factorisation
        raise PreconditionError(f"X_I'X_I is singular (rank {rank} < {s.k})")
    try:
        cf = cho_factor(XI.T @ XI)
    except LinAlgError:
        raise PreconditionError(f"X_I'X_I is numerically singular (k = {s.k})") from None
    G_inv_XIt = cho_solve(cf, XI.T)
    H = XI @ G_inv_XIt
    M = np.eye(n) - H
    if np.abs(M @ M - M).max() > 1e-8:
        raise NumericalError("Id - H is not a projector; X_I is too ill-conditioned")
    XB = Xe[:, Ibar]
    w = XB.T @ (XI @ cho_solve(cf, s.values[I].astype(np.float64)))
    return ZetaContext(w, XB.T @ M, float(sigma), float(lam), I, Ibar)


def noise_images(ctx: ZetaContext, n_draws: int, rng) -> np.ndarray:
    """``P eps`` for ``n_draws`` noise vectors; shape ``(p - k, n_draws)``."""
    gen = _as_stream(rng).generator()
    n = ctx.P.shape[1]
    out = np.empty((ctx.P.shape[0], n_draws))
    for a in range(0, n_draws, _CHUNK):
        b = min(n_draws, a + _CHUNK)
        out[:, a:b] = ctx.P @ (ctx.sigma * gen.standard_normal((n, b - a)))
    return out


def mc_bound(ctx: ZetaContext, n_draws: int, rng) -> BoundEstimate:
    if n_draws < 1:
        raise ParameterError("n_draws must be positive")
    Z = noise_images(ctx, n_draws, rng)
    zeta = ctx.w[:, None] + Z / ctx.lam
    hits = int(np.count_nonzero(np.all(np.abs(zeta) <= 1.0, axis=0)))
    return _estimate(hits, n_draws, ctx.lam)


def pass_intervals(w: np.ndarray, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per draw, the closed interval ``[lo, hi]`` of ``mu = 1/lam > 0`` with ``||w + mu z||_inf <= 1``.

    Empty intervals come back with ``lo > hi``.
    """
    w = w[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (-1.0 - w) / Z
        c = (1.0 - w) / Z
    pos, neg = Z > 0, Z < 0
    lower = np.where(pos, a, np.where(neg, c, -np.inf))
    upper = np.where(pos, c, np.where(neg, a, np.inf))
    # z_j = 0 leaves |w_j| <= 1 as a lambda-free condition
    dead = (Z == 0) & (np.abs(w) > 1.0)
    upper = np.where(dead, -np.inf, upper)
    lo = np.maximum(lower.max(axis=0, initial=-np.inf), 0.0)
    hi = upper.min(axis=0, initial=np.inf)
    return lo, hi


def bound_from_intervals(lo: np.ndarray, hi: np.ndarray, lam: float) -> float:
    mu = 1.0 / lam
    return float(np.mean((lo <= mu) & (mu <= hi)))


@dataclass
class CalibrationResult:
    lam: float
    p_hat: float
    std_err: float
    n_signs: int
    n_draws: int
    mean_margin: float
    probes: list
    monotone: bool = True

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "p_hat": self.p_hat,
            "std_err": self.std_err,
            "n_signs": self.n_signs,
            "n_draws": self.n_draws,
            "monotone": self.monotone,
        }


def calibration_draws(X, k: int, sigma: float, n_signs: int, n_draws: int, sign_mode, rng):
    """Sampled sign vectors and their pass intervals, the common random numbers of calibration."""
    Xe = as_matrix(X)
    stream = _as_stream(rng)
    los, his, margins = [], [], []
    for i in range(n_signs):
        s = sample_sign_vector(Xe.shape[1], k, sign_mode, stream.child("sign", i))
        try:
            ctx = build_zeta_context(Xe, s, sigma, 1.0)
        except PreconditionError:
            # ker(X_I) nontrivial: the bound does not apply; counted as never recovered
            los.append(np.full(n_draws, np.inf))
            his.append(np.full(n_draws, -np.inf))
            margins.append(-np.inf)
            continue
        Z = noise_images(ctx, n_draws, stream.child("noise", i))
        lo, hi = pass_intervals(ctx.w, Z)
        los.append(lo)
        his.append(hi)
        margins.append(1.0 - float(np.abs(ctx.w).max(initial=0.0)))
    return np.concatenate(los), np.concatenate(his), np.array(margins)


def calibrate_lambda(
    X,
    k: int,
    sigma: float = 1.0,
    target: float = 0.95,
    n_signs: int = 1000,
    n_draws: int = 1000,
    sign_mode="symmetric",
    rng=0,
    max_bisections: int = 200,
) -> CalibrationResult:
    """Lambda at which the bound averaged over random ``k``-sparse signs equals ``target``.

    The sign vectors and noise draws are fixed across lambda probes, so the
    averaged bound is a step function of lambda; bisection stops at the first
    probe within two pooled standard errors of ``target``.
    """
    if not 0 < target < 1:
        raise ParameterError("target must lie in (0, 1)")
    if n_signs < 1 or n_draws < 1:
        raise ParameterError("n_signs and n_draws must be positive")
    Xe = as_matrix(X)
    n, p = Xe.shape
    lo_mu, hi_mu, margins = calibration_draws(Xe, k, sigma, n_signs, n_draws, sign_mode, rng)
    finite = margins[np.isfinite(margins)]
    mean_margin = float(finite.mean()) if finite.size == len(margins) else -np.inf
    if not mean_margin > 0:
        raise CalibrationError(
            f"mean irrepresentability margin {mean_margin:.4g} is not positive",
            max_achievable=float(np.mean(hi_mu >= lo_mu)),
        )
    total = lo_mu.size
    pooled_se = np.sqrt(target * (1.0 - target) / total)

    def bound(lam):
        return bound_from_intervals(lo_mu, hi_mu, lam)

    # the supremum over lambda is approached as lambda grows; measure it on the draws
    achievable = float(np.mean((lo_mu <= 0.0) & (hi_mu > 0.0)))
    if achievable < target - 2 * pooled_se:
        raise CalibrationError(
            f"target {target} exceeds the achievable bound {achievable:.4f}", max_achievable=achievable
        )

    a = max(sigma, 1e-12)
    b = max(sigma, 1e-12) * (p - k) * float(np.linalg.norm(Xe, axis=0).max())
    probes = []
    fa, fb = bound(a), bound(b)
    probes += [(a, fa), (b, fb)]
    for _ in range(200):
        if fa <= target:
            break
        a *= 0.5
        fa = bound(a)
        probes.append((a, fa))
    for _ in range(200):
        if fb >= target - 2 * pooled_se:
            break
        b *= 2.0
        fb = bound(b)
        probes.append((b, fb))
    if fb < target - 2 * pooled_se:
        raise CalibrationError("could not bracket the target bound", max_achievable=achievable)

    lam, val = (b, fb)
    for _ in range(max_bisections):
        if abs(val - target) <= 2 * pooled_se:
            break
        lam = 0.5 * (a + b)
        val = bound(lam)
        probes.append((lam, val))
        if val < target:
            a = lam
        else:
            b = lam
    else:
        raise CalibrationError("bisection did not reach the target tolerance", max_achievable=achievable)
    values = [v for _, v in sorted(probes)]
    # monotonicity in lambda is assumed, not proven; report what the probes saw
    monotone = all(v2 >= v1 for v1, v2 in zip(values, values[1:]))
    se = float(np.sqrt(val * (1.0 - val) / total))
    return CalibrationResult(float(lam), val, se, n_signs, n_draws, mean_margin, probes, monotone)


def analytic_orthonormal_bound(lam: float, p: int, k: int, sigma: float = 1.0) -> float:
    """``(2 Phi(lam/sigma) - 1)^(p-k)``: the bound when ``X'X = Id``."""
    from scipy.stats import norm

    return float((2.0 * norm.cdf(lam / sigma) - 1.0) ** (p - k))
