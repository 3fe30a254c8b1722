import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from signrec.amp_tuning import (
    ALPHA_MAX,
    AmpProblem,
    InadmissibleAlphaError,
    alpha_floor,
    alpha_min,
    fixed_point_residual,
    lambda_for_design,
    lambda_of_alpha,
    mse_of_alpha,
    optimal_lambda_amp,
    point_exceed,
    point_mse,
    prior_exceed,
    prior_mse,
    problem_for_design,
    state_evolution_fixed_point,
)
from signrec.errors import ParameterError


@settings(max_examples=30)
@given(st.floats(-20, 20), st.floats(0.05, 5))
def test_point_mse_by_quadrature(u, alpha):
    def integrand(z):
        v = u + z
        return (np.sign(v) * max(abs(v) - alpha, 0.0) - u) ** 2 * norm.pdf(z)

    ref = quad(integrand, -12, 12, points=[alpha - u, -alpha - u], limit=200)[0]
    assert point_mse(u, alpha) == pytest.approx(ref, rel=1e-7, abs=1e-10)
    assert point_exceed(u, alpha) == pytest.approx(norm.sf(alpha - u) + norm.cdf(-alpha - u), rel=1e-12)


def test_alpha_min_frozen():
    assert alpha_min(1 / 3) == pytest.approx(0.61922, abs=1e-5)
    assert 2 * ((1 + 0.61922**2) * norm.cdf(-0.61922) - 0.61922 * norm.pdf(0.61922)) == pytest.approx(1 / 3, abs=1e-5)


def test_alpha_min_decreases_with_delta():
    vals = [alpha_min(d) for d in (0.1, 0.3, 0.6, 1.0)]
    assert vals == sorted(vals, reverse=True)


@settings(max_examples=30)
@given(st.floats(0.2, 1.0), st.floats(0.0, 0.2), st.floats(0.5, 50), st.floats(0.1, 3))
def test_fixed_point_solves_recursion(delta, gamma, t, extra):
    prob = AmpProblem(delta, gamma, t)
    alpha = alpha_min(delta) + extra
    tau = state_evolution_fixed_point(prob, alpha)
    assert fixed_point_residual(prob, alpha, tau) <= 1e-9 * max(1.0, tau**2)


def test_fixed_point_agrees_with_iteration():
    prob = AmpProblem(0.4, 0.05, 5.0, 0.8)
    alpha = 2.0
    t2 = 1.0
    for _ in range(5000):
        t2 = prob.sigma**2 + prior_mse(prob, np.sqrt(t2), alpha) / prob.delta
    assert state_evolution_fixed_point(prob, alpha) == pytest.approx(np.sqrt(t2), rel=1e-10)


def test_inadmissible_alpha():
    prob = AmpProblem(1 / 3, 0.05, 10.0)
    with pytest.raises(InadmissibleAlphaError):
        state_evolution_fixed_point(prob, 0.6)
    with pytest.raises(ParameterError):
        state_evolution_fixed_point(prob, -1.0)


def test_prior_mse_scales():
    prob = AmpProblem(0.5, 0.0, 1.0)
    assert prior_mse(prob, 2.0, 1.0) == pytest.approx(4.0 * point_mse(0.0, 1.0))
    assert prior_exceed(prob, 2.0, 1.0) == pytest.approx(2 * norm.sf(1.0))


def test_optimum_frozen_values():
    prob = problem_for_design(100, 300, 20, 1000.0)
    cal = optimal_lambda_amp(prob)
    assert cal.alpha_star == pytest.approx(1.2932, abs=1e-3)
    lam, _ = lambda_for_design(100, 300, 20, 1000.0)
    assert lam == pytest.approx(6.4842, rel=1e-3)
    assert lambda_for_design(100, 300, 5, 1000.0)[0] == pytest.approx(15.171, rel=1e-3)


def test_optimum_beats_grid():
    prob = AmpProblem(1 / 3, 0.05, 8.0)
    cal = optimal_lambda_amp(prob)
    grid = np.linspace(cal.alpha_floor + 1e-6, ALPHA_MAX, 300)
    assert cal.mse_star <= min(mse_of_alpha(prob, a) for a in grid) + 1e-10
    assert cal.lambda_amp > 0 and cal.lambda_s == pytest.approx(cal.lambda_amp / 2)


def test_floor_is_lambda_root():
    prob = AmpProblem(1 / 3, 20 / 300, 10.0)
    a = alpha_floor(prob)
    assert a > alpha_min(prob.delta)
    assert lambda_of_alpha(prob, a + 1e-6) > 0
    if a > alpha_min(prob.delta) + 1e-3:
        assert lambda_of_alpha(prob, a - 1e-6) < 0


def test_no_signal_caps_alpha():
    cal = optimal_lambda_amp(AmpProblem(1 / 3, 0.0, 1.0))
    assert cal.alpha_capped and cal.alpha_star == ALPHA_MAX


def test_problem_validation():
    for args in [(0.0, 0.1, 1.0), (1.5, 0.1, 1.0), (0.5, -0.1, 1.0), (0.5, 0.1, 0.0), (0.5, 0.1, 1.0, 0.0)]:
        with pytest.raises(ParameterError):
            AmpProblem(*args)


def test_design_scaling():
    prob = problem_for_design(100, 300, 20, 2.0)
    assert prob.delta == pytest.approx(1 / 3) and prob.gamma == pytest.approx(1 / 15)
    assert prob.t == pytest.approx(20.0)
