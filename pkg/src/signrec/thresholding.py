"""Thresholded sign estimators, threshold selection and FWER bookkeeping.

A thresholded estimate keeps ``b_i`` only when ``|b_i| > tau`` (strict). Two
ways of choosing ``tau`` are provided:

* knockoffs: append batches of artificial null columns to ``X``, refit, and
  take a quantile of the largest artificial coefficient;
* full null: a quantile of ``||BP(eps)||_inf`` for pure-noise targets.

Quantiles are type 1 order statistics, ``sorted(x)[ceil(q N) - 1]``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple, Sequence

import numpy as np

from .core_model import (
    DesignMatrix,
    RngStream,
    SignalSpec,
    SignVector,
    _as_stream,
    as_matrix,
    gen_instance,
    sign,
)
from .errors import ParameterError, PreconditionError, SignrecError
from .parallel import pmap
from .solvers import LassoConfig, basis_pursuit, lasso

Estimator = Literal["lasso", "basis_pursuit"]


@dataclass(frozen=True, eq=False)
class ThresholdedEstimate:
    base: np.ndarray
    tau: float
    thresholded: np.ndarray
    sign: SignVector


def apply_threshold(base, tau: float) -> ThresholdedEstimate:
    """Hard threshold ``b_i 1{|b_i| > tau}``; ``tau = inf`` zeroes everything."""
    if not tau >= 0:
        raise ParameterError("tau must be non-negative")
    b = np.asarray(base, dtype=np.float64)
    out = np.where(np.abs(b) > tau, b, 0.0)
    return ThresholdedEstimate(b, float(tau), out, SignVector(sign(out)))


def empirical_quantile(values, q: float) -> float:
    """Type 1 quantile: the ``ceil(q N)``-th smallest value."""
    if not 0 < q < 1:
        raise ParameterError("quantile must lie in (0, 1)")
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ParameterError("quantile of an empty sample")
    # guard against q*N landing a hair above an integer
    idx = max(1, math.ceil(q * v.size - 1e-9))
    return float(v[idx - 1])


@dataclass
class KnockoffConfig:
    batch_size: int = 30
    batches_per_replicate: int = 10
    n_replicates: int = 1000
    quantile: float = 0.95
    estimator: Estimator = "basis_pursuit"
    lam: float | None = None
    mode: Literal["simulation", "conditional"] = "simulation"
    rho: float = 0.0
    naive_iid: bool = False

    def __post_init__(self):
        if self.batch_size < 1 or self.batches_per_replicate < 1 or self.n_replicates < 1:
            raise ParameterError("batch_size, batches_per_replicate and n_replicates must be positive")
        if not 0 < self.quantile < 1:
            raise ParameterError("quantile must lie in (0, 1)")
        if self.estimator not in ("lasso", "basis_pursuit"):
            raise ParameterError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "lasso" and not (self.lam is not None and self.lam > 0):
            raise ParameterError("the lasso estimator needs a positive lam")
        if self.mode not in ("simulation", "conditional"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if not 0 <= self.rho < 1:
            raise ParameterError("rho must lie in [0, 1)")


def knockoff_columns(X, m: int, rho: float = 0.0, rng=0, naive_iid: bool = False) -> np.ndarray:
    """``m`` artificial columns exchangeable with the columns of an equicorrelated design.

    Under ``x_j = sqrt(1-rho) z_j + sqrt(rho) w`` the shared factor ``w`` of a
    row has posterior ``N(sqrt(rho) sum(x) / d, (1-rho) / d)`` with
    ``d = 1 + (p-1) rho``; new coordinates reuse one posterior draw per row.
    With ``naive_iid`` or ``rho = 0`` the columns are i.i.d. N(0, 1).
    """
    if m < 1:
        raise ParameterError("need at least one knockoff column")
    if not 0 <= rho < 1:
        raise ParameterError("rho must lie in [0, 1)")
    Xe = as_matrix(X)
    n, p = Xe.shape
    gen = _as_stream(rng).generator()
    Z = gen.standard_normal((n, m))
    if rho == 0 or naive_iid:
        return Z
    d = 1.0 + (p - 1) * rho
    mean = rho * Xe.sum(axis=1) / d
    W = gen.standard_normal(n)
    shared = mean + np.sqrt(rho * (1.0 - rho) / d) * W
    return np.sqrt(1.0 - rho) * Z + shared[:, None]


def _fit(Y, Xa, estimator: Estimator, lam: float | None) -> np.ndarray:
    if estimator == "basis_pursuit":
        return basis_pursuit(Y, Xa).estimate
    return lasso(Y, Xa, lam, LassoConfig()).estimate


def response_sampler(design: DesignMatrix, spec: SignalSpec, sigma: float = 1.0) -> Callable[[RngStream], np.ndarray]:
    """Fresh support and noise per call, as used in simulation mode."""

    def draw(stream: RngStream) -> np.ndarray:
        return gen_instance(design, spec, sigma, stream).response

    return draw


def knockoff_statistics(X, response, cfg: KnockoffConfig, rng=0, threads: int | None = 1) -> np.ndarray:
    """Per replicate, the largest ``|b_j|`` over knockoff columns across all batches.

    ``response`` is a fixed vector in conditional mode and a callable taking
    an RngStream in simulation mode.
    """
    Xe = as_matrix(X)
    n, p = Xe.shape
    if cfg.batch_size * cfg.batches_per_replicate != p:
        warnings.warn(
            f"{cfg.batches_per_replicate} batches of {cfg.batch_size} knockoffs do not cover p={p} columns",
            stacklevel=2,
        )
    if cfg.mode == "simulation":
        if not callable(response):
            raise ParameterError("simulation mode needs a response generator")
    else:
        if callable(response):
            raise ParameterError("conditional mode needs a fixed response vector")
        response = np.asarray(response, dtype=np.float64)
        if response.shape != (n,):
            raise ParameterError(f"response has shape {response.shape}, expected ({n},)")
    stream = _as_stream(rng)

    def replicate(r: int) -> float:
        rs = stream.child("knockoff", r)
        Y = response(rs.child("response")) if cfg.mode == "simulation" else response
        best = 0.0
        for b in range(cfg.batches_per_replicate):
            K = knockoff_columns(Xe, cfg.batch_size, cfg.rho, rs.child("batch", b), cfg.naive_iid)
            try:
                est = _fit(Y, np.hstack([Xe, K]), cfg.estimator, cfg.lam)
            except SignrecError as e:
                raise type(e)(f"replicate {r}, batch {b}: {e}") from e
            best = max(best, float(np.abs(est[p:]).max()))
        return best

    return np.array(pmap(replicate, range(cfg.n_replicates), threads))


def knockoff_threshold(X, response, cfg: KnockoffConfig, rng=0, threads: int | None = 1) -> float:
    return empirical_quantile(knockoff_statistics(X, response, cfg, rng, threads), cfg.quantile)


def full_null_statistics(X, sigma: float, n_replicates: int, rng=0, threads: int | None = 1) -> np.ndarray:
    """``||BP(eps)||_inf`` for ``eps ~ N(0, sigma^2 Id)``, one per replicate."""
    Xe = as_matrix(X)
    n, _ = Xe.shape
    if sigma < 0:
        raise ParameterError("sigma must be non-negative")
    if n_replicates < 1:
        raise ParameterError("n_replicates must be positive")
    if np.linalg.matrix_rank(Xe) < n:
        raise PreconditionError("the full-null threshold needs rank(X) = n")
    stream = _as_stream(rng)

    def replicate(r: int) -> float:
        eps = sigma * stream.child("full-null", r).generator().standard_normal(n)
        return float(np.abs(basis_pursuit(eps, Xe).estimate).max(initial=0.0))

    return np.array(pmap(replicate, range(n_replicates), threads))


def full_null_threshold(X, sigma: float, alpha: float, n_replicates: int, rng=0, threads: int | None = 1) -> float:
    """``(1 - alpha)`` quantile of ``||BP(eps)||_inf`` under the all-zero model."""
    if not 0 < alpha < 1:
        raise ParameterError("alpha must lie in (0, 1)")
    return empirical_quantile(full_null_statistics(X, sigma, n_replicates, rng, threads), 1.0 - alpha)


class RecoveryStats(NamedTuple):
    fwer: float
    recovery_prob: float
    support_power: float
    n: int

    @property
    def fwer_se(self) -> float:
        return float(np.sqrt(self.fwer * (1 - self.fwer) / self.n))

    @property
    def recovery_se(self) -> float:
        return float(np.sqrt(self.recovery_prob * (1 - self.recovery_prob) / self.n))


class ReplicateOutcome(NamedTuple):
    recovered: bool
    false_positive: bool
    power_hit: bool


def replicate_outcome(truth: SignVector, est) -> ReplicateOutcome:
    s = est.sign.values if isinstance(est, ThresholdedEstimate) else sign(est)
    t = truth.values
    if s.shape != t.shape:
        raise ParameterError("estimate and truth differ in length")
    I = truth.support
    return ReplicateOutcome(
        recovered=bool(np.array_equal(s, t)),
        false_positive=bool(np.any(s[truth.nulls] != 0)),
        power_hit=bool(np.array_equal(s[I], t[I])),
    )


def summarize(outcomes: Sequence[ReplicateOutcome]) -> RecoveryStats:
    if not outcomes:
        raise ParameterError("no replicates to summarize")
    o = np.array(outcomes, dtype=bool)
    return RecoveryStats(float(o[:, 1].mean()), float(o[:, 0].mean()), float(o[:, 2].mean()), len(outcomes))


def fwer_and_recovery(truth, estimates: Sequence) -> RecoveryStats:
    """FWER, exact sign recovery and support power over replicates.

    ``truth`` is one SignVector shared by all replicates or a sequence with
    one per replicate (supports redrawn per replicate).
    """
    truths = [truth] * len(estimates) if isinstance(truth, SignVector) else list(truth)
    if len(truths) != len(estimates):
        raise ParameterError("need one truth per estimate")
    return summarize([replicate_outcome(t, e) for t, e in zip(truths, estimates)])


def separation_margin(estimate, truth: SignVector) -> float:
    """Smallest gap in ``max supp- < min nulls <= max nulls < min supp+``.

    Positive iff the ordering holds. With no nulls the two signed groups are
    compared directly; empty groups impose no constraint.
    """
    b = np.asarray(estimate, dtype=np.float64)
    neg, pos, nul = b[truth.support_minus], b[truth.support_plus], b[truth.nulls]
    top_neg = neg.max(initial=-np.inf)
    low_pos = pos.min(initial=np.inf)
    if nul.size == 0:
        return float(low_pos - top_neg)
    return float(min(nul.min() - top_neg, low_pos - nul.max()))


def threshold_gap(estimate, truth: SignVector) -> float:
    """``min_I s_i b_i - max_Ibar |b_i|``; some tau recovers ``truth`` iff this is positive."""
    b = np.asarray(estimate, dtype=np.float64)
    I = truth.support
    on = (truth.values[I] * b[I]).min(initial=np.inf)
    off = np.abs(b[truth.nulls]).max(initial=0.0)
    return float(on - off)
