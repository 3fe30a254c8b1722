import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from signrec.core_model import RngStream, SignalSpec, SignVector, gen_design
from signrec.errors import ParameterError, PreconditionError
from signrec.thresholding import (
    KnockoffConfig,
    apply_threshold,
    empirical_quantile,
    full_null_statistics,
    full_null_threshold,
    fwer_and_recovery,
    knockoff_columns,
    knockoff_statistics,
    knockoff_threshold,
    replicate_outcome,
    response_sampler,
    separation_margin,
    threshold_gap,
)

vals = arrays(np.float64, st.integers(1, 12), elements=st.floats(-10, 10))


def test_apply_threshold_is_strict():
    est = apply_threshold([0.5, -1.0, 1.5, -2.0], 1.0)
    assert est.thresholded.tolist() == [0.0, 0.0, 1.5, -2.0]
    assert est.sign.values.tolist() == [0, 0, 1, -1]
    assert not apply_threshold([3.0], np.inf).thresholded.any()
    with pytest.raises(ParameterError):
        apply_threshold([1.0], -0.1)


def test_quantile_type1():
    x = np.arange(1.0, 21.0)
    assert empirical_quantile(x, 0.95) == 19.0
    assert empirical_quantile(x, 0.951) == 20.0
    assert empirical_quantile(np.arange(1.0, 1001.0), 0.95) == 950.0
    assert empirical_quantile([3.0], 0.5) == 3.0
    with pytest.raises(ParameterError):
        empirical_quantile([], 0.5)
    with pytest.raises(ParameterError):
        empirical_quantile([1.0], 1.0)


@given(vals)
def test_threshold_gap_characterises_recovery(b):
    p = b.size
    truth = SignVector(np.sign(np.round(b)).astype(int))
    gap = threshold_gap(b, truth)
    taus = np.abs(b).tolist() + [0.0]
    some = any(replicate_outcome(truth, apply_threshold(b, t)).recovered for t in taus)
    assert some == (gap > 0 or (truth.k == 0))


@given(vals)
def test_separation_margin_sign(b):
    truth = SignVector(np.sign(np.round(b)).astype(int))
    neg, pos, nul = b[truth.support_minus], b[truth.support_plus], b[truth.nulls]
    ordered = (
        (neg.size == 0 or nul.size == 0 or neg.max() < nul.min())
        and (pos.size == 0 or nul.size == 0 or nul.max() < pos.min())
        and (nul.size > 0 or neg.size == 0 or pos.size == 0 or neg.max() < pos.min())
    )
    assert (separation_margin(b, truth) > 0) == ordered


def test_fwer_and_recovery_counts():
    truth = SignVector(np.array([1, 0, -1, 0]))
    ests = [
        np.array([2.0, 0.0, -1.0, 0.0]),   # exact
        np.array([2.0, 0.5, -1.0, 0.0]),   # false positive, support right
        np.array([2.0, 0.0, 0.0, 0.0]),    # missed one
        np.array([-2.0, 0.0, -1.0, 0.0]),  # wrong sign
    ]
    stats = fwer_and_recovery(truth, ests)
    assert stats.recovery_prob == 0.25 and stats.fwer == 0.25 and stats.support_power == 0.5 and stats.n == 4
    assert stats.fwer_se == pytest.approx(np.sqrt(0.25 * 0.75 / 4))
    with pytest.raises(ParameterError):
        fwer_and_recovery([truth], ests)


def test_knockoff_columns_iid():
    X = gen_design("setting1", 200, 10, rng=0)
    K = knockoff_columns(X, 400, rng=RngStream(1))
    assert K.shape == (200, 400)
    assert abs(K.mean()) < 0.02 and abs(K.var() - 1) < 0.02
    with pytest.raises(ParameterError):
        knockoff_columns(X, 0)


def test_knockoff_columns_exchangeable():
    # the joint law of (X, K) should be equicorrelated like X itself
    rho, n, p, m = 0.9, 20000, 20, 5
    X = gen_design("setting2", n, p, rho, rng=2)
    K = knockoff_columns(X, m, rho, RngStream(3))
    C = np.corrcoef(np.hstack([X.entries, K]), rowvar=False)
    off = C[~np.eye(p + m, dtype=bool)]
    assert np.allclose(off, rho, atol=0.01)
    naive = knockoff_columns(X, m, rho, RngStream(3), naive_iid=True)
    assert abs(np.corrcoef(X.entries[:, 0], naive[:, 0])[0, 1]) < 0.03


def test_knockoff_config_validation():
    with pytest.raises(ParameterError):
        KnockoffConfig(estimator="lasso")
    with pytest.raises(ParameterError):
        KnockoffConfig(batch_size=0)
    with pytest.raises(ParameterError):
        KnockoffConfig(quantile=1.0)
    with pytest.raises(ParameterError):
        KnockoffConfig(rho=1.0)
    assert KnockoffConfig(estimator="lasso", lam=1.0).lam == 1.0


def test_knockoff_statistics_deterministic_and_threaded():
    X = gen_design("setting1", 15, 30, rng=4)
    cfg = KnockoffConfig(batch_size=10, batches_per_replicate=3, n_replicates=8)
    draw = response_sampler(X, SignalSpec(2, 5.0), 1.0)
    a = knockoff_statistics(X, draw, cfg, RngStream(5))
    b = knockoff_statistics(X, draw, cfg, RngStream(5), threads=3)
    assert np.array_equal(a, b) and a.shape == (8,) and np.all(a >= 0)
    assert knockoff_threshold(X, draw, cfg, RngStream(5)) == empirical_quantile(a, 0.95)


def test_knockoff_conditional_mode():
    X = gen_design("setting1", 15, 30, rng=4)
    Y = np.random.default_rng(0).standard_normal(15)
    cfg = KnockoffConfig(batch_size=10, batches_per_replicate=3, n_replicates=4, mode="conditional",
                         estimator="lasso", lam=0.5)
    assert knockoff_statistics(X, Y, cfg, 1).shape == (4,)
    with pytest.raises(ParameterError):
        knockoff_statistics(X, lambda s: Y, cfg, 1)
    with pytest.raises(ParameterError):
        knockoff_statistics(X, Y, KnockoffConfig(batch_size=10, batches_per_replicate=3, n_replicates=2), 1)


def test_knockoff_coverage_warning():
    X = gen_design("setting1", 10, 20, rng=4)
    cfg = KnockoffConfig(batch_size=3, batches_per_replicate=2, n_replicates=1)
    with pytest.warns(UserWarning):
        knockoff_statistics(X, response_sampler(X, SignalSpec(1, 1.0)), cfg, 0)


def test_full_null():
    X = gen_design("setting1", 10, 30, rng=6)
    stats = full_null_statistics(X, 1.0, 50, RngStream(7))
    assert stats.shape == (50,) and np.all(stats > 0)
    assert full_null_threshold(X, 1.0, 0.05, 50, RngStream(7)) == empirical_quantile(stats, 0.95)
    assert not full_null_statistics(X, 0.0, 3, 0).any()
    with pytest.raises(PreconditionError):
        full_null_statistics(np.ones((3, 6)), 1.0, 5)
    with pytest.raises(ParameterError):
        full_null_threshold(X, 1.0, 0.0, 5)
