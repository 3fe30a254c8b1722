import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signrec.core_model import RngStream, SignVector, gen_design, sample_sign_vector
from signrec.errors import CalibrationError, ParameterError, PreconditionError
from signrec.recovery_bound import (
    analytic_orthonormal_bound,
    bound_from_intervals,
    build_zeta_context,
    calibrate_lambda,
    calibration_draws,
    mc_bound,
    noise_images,
    pass_intervals,
)


def test_orthonormal_bound_matches_closed_form():
    p, k, lam = 40, 4, 2.5
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((p, p)))
    s = SignVector(np.r_[np.ones(k, dtype=int), np.zeros(p - k, dtype=int)])
    est = mc_bound(build_zeta_context(Q, s, 1.0, lam), 200_000, RngStream(1))
    exact = analytic_orthonormal_bound(lam, p, k)
    assert abs(est.p_hat - exact) <= 4 * est.std_err


def test_zeta_context_pieces():
    X = gen_design("setting1", 12, 30, rng=2).entries
    s = sample_sign_vector(30, 4, rng=3)
    ctx = build_zeta_context(X, s, 1.0, 1.0)
    I = s.support
    # P annihilates the active columns
    assert np.allclose(ctx.P @ X[:, I], 0.0, atol=1e-10)
    assert ctx.w.shape == (26,) and ctx.P.shape == (26, 12)


def test_zero_noise_bound_is_an_indicator():
    X = gen_design("setting1", 12, 30, rng=2).entries
    s = sample_sign_vector(30, 2, rng=3)
    ctx = build_zeta_context(X, s, 0.0, 1.0)
    ic = float(np.abs(ctx.w).max() <= 1)
    assert mc_bound(ctx, 50, RngStream(0)).p_hat == ic


def test_context_validation():
    X = np.ones((2, 4))
    with pytest.raises(PreconditionError):
        build_zeta_context(X, [1, 1, 0, 0], 1.0, 1.0)
    with pytest.raises(PreconditionError):
        build_zeta_context(X, [1, 1, 1, 0], 1.0, 1.0)
    with pytest.raises(ParameterError):
        build_zeta_context(np.eye(2), [1, 0], 1.0, 0.0)
    with pytest.raises(ParameterError):
        build_zeta_context(np.eye(2), [1, 0], -1.0, 1.0)


@settings(max_examples=30)
@given(st.integers(0, 10**6))
def test_pass_intervals_match_direct_check(seed):
    gen = np.random.default_rng(seed)
    w = gen.uniform(-1.2, 1.2, 6)
    Z = gen.standard_normal((6, 50))
    Z[0, :5] = 0.0
    lo, hi = pass_intervals(w, Z)
    for mu in gen.uniform(0.0, 3.0, 10):
        direct = np.all(np.abs(w[:, None] + mu * Z) <= 1.0, axis=0)
        assert np.array_equal((lo <= mu) & (mu <= hi), direct)


def test_intervals_reproduce_mc_bound():
    X = gen_design("setting1", 15, 40, rng=4).entries
    s = sample_sign_vector(40, 3, rng=5)
    ctx = build_zeta_context(X, s, 1.0, 7.0)
    Z = noise_images(ctx, 2000, RngStream(6))
    lo, hi = pass_intervals(ctx.w, Z)
    assert bound_from_intervals(lo, hi, 7.0) == mc_bound(ctx, 2000, RngStream(6)).p_hat


def test_bound_increases_with_lambda():
    X = gen_design("setting1", 15, 40, rng=4).entries
    s = sample_sign_vector(40, 2, rng=5)
    vals = [mc_bound(build_zeta_context(X, s, 1.0, lam), 4000, RngStream(7)).p_hat for lam in (2, 5, 10, 40)]
    assert vals == sorted(vals)


def test_calibration_hits_target():
    X = gen_design("setting1", 40, 80, rng=8)
    cal = calibrate_lambda(X, 2, 1.0, 0.8, 100, 200, rng=RngStream(9))
    assert abs(cal.p_hat - 0.8) <= 2 * np.sqrt(0.8 * 0.2 / 20000)
    lo, hi, _ = calibration_draws(X.entries, 2, 1.0, 100, 200, "symmetric", RngStream(9))
    assert bound_from_intervals(lo, hi, cal.lam) == cal.p_hat
    assert cal.monotone
    assert set(cal.to_dict()) >= {"lambda", "p_hat"}


def test_calibration_is_deterministic():
    X = gen_design("setting1", 30, 60, rng=10)
    a = calibrate_lambda(X, 2, 1.0, 0.9, 40, 100, rng=RngStream(11))
    b = calibrate_lambda(X, 2, 1.0, 0.9, 40, 100, rng=RngStream(11))
    assert a.lam == b.lam


def test_calibration_fails_without_irrepresentability():
    X = gen_design("setting1", 10, 200, rng=12)
    with pytest.raises(CalibrationError):
        calibrate_lambda(X, 8, 1.0, 0.95, 20, 50, rng=RngStream(13))
    with pytest.raises(ParameterError):
        calibrate_lambda(X, 1, 1.0, 1.5, 20, 50)
