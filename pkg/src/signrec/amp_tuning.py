"""LASSO tuning from AMP state evolution for i.i.d. Gaussian designs.

Normalisation follows the AMP literature: ``y = A x + w`` with ``A_ij ~
N(0, 1/n)``, ``w ~ N(0, sigma^2 Id)`` and the LASSO written as
``0.5*||y - Ax||^2 + lam*||x||_1``. The prior of ``x`` is the three-point
mixture ``(1-gamma) delta_0 + gamma (delta_t + delta_{-t}) / 2``. State
evolution with soft-threshold level ``alpha*tau``:

    tau^2 = sigma^2 + (1/delta) E[(eta(B + tau Z; alpha tau) - B)^2]
    lam   = alpha tau (1 - (1/delta) P(|B + tau Z| > alpha tau))

For a point mass ``B = u tau`` the expectation is closed form in Phi and phi,
so no quadrature is needed. ``lambda_for_design`` converts to the unnormalised
``N(0, 1)`` designs used elsewhere in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import ndtr
from scipy.stats import norm

from .errors import ParameterError

ALPHA_MAX = 10.0
_GRID = 400


class InadmissibleAlphaError(ParameterError):
    """The state-evolution fixed point does not exist for this threshold."""


@dataclass(frozen=True)
class AmpProblem:
    delta: float
    gamma: float
    t: float
    sigma: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ParameterError("delta must lie in (0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ParameterError("gamma must lie in [0, 1]")
        if not self.t > 0:
            raise ParameterError("t must be positive")
        if not self.sigma > 0:
            raise ParameterError("sigma must be positive")


@dataclass
class AmpCalibration:
    alpha_star: float
    tau_star: float
    lambda_amp: float
    mse_star: float
    alpha_capped: bool = False
    alpha_floor: float = float("nan")

    @property
    def lambda_s(self) -> float:
        return 0.5 * self.lambda_amp

    def to_dict(self) -> dict:
        return {
            "alpha_star": self.alpha_star,
            "tau_star": self.tau_star,
            "lambda_amp": self.lambda_amp,
            "lambda_s": self.lambda_s,
            "mse_star": self.mse_star,
            "alpha_capped": self.alpha_capped,
        }


def _Q(x):
    return ndtr(-x)


def point_mse(u, alpha):
    """``E[(eta(u + Z; alpha) - u)^2]`` for ``Z ~ N(0,1)`` (unit noise scale)."""
    u = np.asarray(u, dtype=np.float64)
    a1, a2 = alpha - u, alpha + u
    upper = (1 + alpha**2) * _Q(a1) - (alpha + u) * norm.pdf(a1)
    lower = (1 + alpha**2) * _Q(a2) - (alpha - u) * norm.pdf(a2)
    middle = u**2 * (ndtr(a1) - ndtr(-a2))
    return upper + lower + middle


def point_exceed(u, alpha):
    """``P(|u + Z| > alpha)``."""
    u = np.asarray(u, dtype=np.float64)
    return _Q(alpha - u) + _Q(alpha + u)


_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _q(x: float) -> float:
    return 0.5 * math.erfc(x / _SQRT2)


def _phi(x: float) -> float:
    return _INV_SQRT2PI * math.exp(-0.5 * x * x)


def _point_mse_scalar(u: float, alpha: float) -> float:
    a1, a2 = alpha - u, alpha + u
    return (
        (1 + alpha * alpha) * (_q(a1) + _q(a2))
        - (alpha + u) * _phi(a1)
        - (alpha - u) * _phi(a2)
        + u * u * (_q(-a1) - _q(a2))
    )


def prior_mse(prob: AmpProblem, tau: float, alpha: float) -> float:
    """``E[(eta(B + tau Z; alpha tau) - B)^2]`` under the three-point prior."""
    g = prob.gamma
    return tau * tau * ((1 - g) * _point_mse_scalar(0.0, alpha) + g * _point_mse_scalar(prob.t / tau, alpha))


def prior_exceed(prob: AmpProblem, tau: float, alpha: float) -> float:
    u = prob.t / tau
    return (1 - prob.gamma) * 2.0 * _q(alpha) + prob.gamma * (_q(alpha - u) + _q(alpha + u))


def alpha_min(delta: float) -> float:
    """Root of ``2[(1+a^2) Phi(-a) - a phi(a)] = delta``: below it the pure-noise recursion diverges."""
    return brentq(lambda a: _point_mse_scalar(0.0, a) - delta, 0.0, 20.0, xtol=1e-14)


def fixed_point_residual(prob: AmpProblem, alpha: float, tau: float) -> float:
    return abs(tau**2 - prob.sigma**2 - prior_mse(prob, tau, alpha) / prob.delta)


def state_evolution_fixed_point(prob: AmpProblem, alpha: float) -> float:
    """Effective noise level ``tau`` at the state-evolution fixed point.

    The right-hand side is concave in ``tau^2`` with slope below one at
    infinity for admissible ``alpha``, so the fixed point is unique and is
    found by a bracketed root solve rather than by iterating the map.
    """
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    a_min = alpha_min(prob.delta)
    if alpha <= a_min:
        raise InadmissibleAlphaError(f"alpha={alpha:.6g} is not above alpha_min={a_min:.6g}")
    s2 = prob.sigma**2

    def g(t2):
        return t2 - s2 - prior_mse(prob, math.sqrt(t2), alpha) / prob.delta

    lo = s2
    hi = 2.0 * (s2 + prob.gamma * prob.t**2 / prob.delta)
    while g(hi) <= 0:
        hi *= 2.0
        if hi > 1e24 * s2:
            raise InadmissibleAlphaError(f"state evolution diverges at alpha={alpha:.6g}")
    if g(lo) >= 0:
        return float(prob.sigma)
    tau2 = brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.sqrt(tau2)


def lambda_of_alpha(prob: AmpProblem, alpha: float, tau: float | None = None) -> float:
    if tau is None:
        tau = state_evolution_fixed_point(prob, alpha)
    return alpha * tau * (1.0 - prior_exceed(prob, tau, alpha) / prob.delta)


def mse_of_alpha(prob: AmpProblem, alpha: float) -> float:
    tau = state_evolution_fixed_point(prob, alpha)
    return prior_mse(prob, tau, alpha)


def alpha_floor(prob: AmpProblem) -> float:
    """Smallest alpha whose calibrated lambda is positive.

    Just above ``alpha_min`` the calibration factor is negative, so those
    thresholds correspond to no LASSO problem; the search starts here.
    """
    a0 = alpha_min(prob.delta) + 1e-3
    grid = np.linspace(a0, ALPHA_MAX, _GRID)
    lam = np.array([lambda_of_alpha(prob, a) for a in grid])
    pos = np.flatnonzero(lam > 0)
    if pos.size == 0:
        raise InadmissibleAlphaError("no alpha in the search range gives a positive lambda")
    i = pos[0]
    if i == 0:
        return float(a0)
    return float(brentq(lambda a: lambda_of_alpha(prob, a), grid[i - 1], grid[i], xtol=1e-12))


def optimal_lambda_amp(prob: AmpProblem) -> AmpCalibration:
    """Threshold parameter minimising the asymptotic MSE, mapped to lambda.

    Coarse grid over ``[alpha_floor, 10]`` followed by golden-section search
    around the best grid point.
    """
    lo = alpha_floor(prob)
    lo_eff = lo + 1e-9
    grid = np.linspace(lo_eff, ALPHA_MAX, _GRID)
    mse = np.array([mse_of_alpha(prob, a) for a in grid])
    i = int(np.argmin(mse))
    if i == len(grid) - 1:
        a = ALPHA_MAX
        capped = True
    else:
        left = grid[max(i - 1, 0)]
        right = grid[i + 1]
        res = minimize_scalar(
            lambda a: mse_of_alpha(prob, a), bracket=(left, grid[i], right), method="golden", tol=1e-10
        ) if i > 0 else minimize_scalar(
            lambda a: mse_of_alpha(prob, a), bounds=(left, right), method="bounded", options={"xatol": 1e-10}
        )
        a = float(res.x)
        if not left <= a <= right or mse_of_alpha(prob, a) > mse[i]:
            a = float(grid[i])
        capped = False
    tau = state_evolution_fixed_point(prob, a)
    return AmpCalibration(
        alpha_star=a,
        tau_star=tau,
        lambda_amp=lambda_of_alpha(prob, a, tau),
        mse_star=prior_mse(prob, tau, a),
        alpha_capped=capped,
        alpha_floor=lo,
    )


def problem_for_design(n: int, p: int, k: int, t: float, sigma: float = 1.0) -> AmpProblem:
    """AMP problem matching ``Y = X beta + eps`` with ``X_ij ~ N(0, 1)``.

    Writing ``X = sqrt(n) A`` gives ``x = sqrt(n) beta``, so signal magnitudes
    scale by ``sqrt(n)``.
    """
    return AmpProblem(delta=n / p, gamma=k / p, t=np.sqrt(n) * t, sigma=sigma)


def lambda_for_design(n: int, p: int, k: int, t: float, sigma: float = 1.0) -> tuple[float, AmpCalibration]:
    """``lambda_AMP`` on the scale of an unnormalised ``N(0, 1)`` design.

    The penalty ``lam_A ||x||_1`` equals ``sqrt(n) lam_A ||beta||_1``.
    """
    cal = optimal_lambda_amp(problem_for_design(n, p, k, t, sigma))
    return float(np.sqrt(n) * cal.lambda_amp), cal
