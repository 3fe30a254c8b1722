import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from signrec.errors import InfeasibleError, ParameterError, UnboundedError
from signrec.simplex import solve_inequality, solve_standard


def test_tiny_lp():
    # min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
    lp = solve_inequality([-1.0, -1.0], [[1, 2], [3, 1]], [4, 6])
    assert np.allclose(lp.x, [1.6, 1.2])
    assert lp.objective == pytest.approx(-2.8)


def test_standard_equals_highs():
    gen = np.random.default_rng(0)
    for _ in range(40):
        m, N = gen.integers(2, 12), gen.integers(12, 30)
        A = gen.standard_normal((m, N))
        b = A @ np.abs(gen.standard_normal(N))
        c = np.abs(gen.standard_normal(N)) + 0.1
        lp = solve_standard(c, A, b)
        ref = linprog(c, A_eq=A, b_eq=b, method="highs")
        assert lp.objective == pytest.approx(ref.fun, rel=1e-9, abs=1e-9)
        assert np.allclose(A @ lp.x, b, atol=1e-9) and lp.x.min() >= 0


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_inequality_equals_highs(seed):
    gen = np.random.default_rng(seed)
    m, N = gen.integers(2, 10), gen.integers(2, 10)
    A = gen.standard_normal((m, N))
    b = np.abs(gen.standard_normal(m))
    c = gen.standard_normal(N)
    ref = linprog(c, A_ub=A, b_ub=b, method="highs")
    if ref.status == 3:
        with pytest.raises(UnboundedError):
            solve_inequality(c, A, b)
        return
    lp = solve_inequality(c, A, b)
    assert lp.objective == pytest.approx(ref.fun, rel=1e-8, abs=1e-8)
    assert np.all(A @ lp.x <= b + 1e-9)


def test_degenerate_basis_pursuit_lp():
    # sparse target: most basic variables sit at zero
    gen = np.random.default_rng(1)
    X = gen.standard_normal((30, 90))
    s = np.zeros(90)
    s[:12] = gen.choice([-1.0, 1.0], 12)
    A = np.hstack([X, -X])
    lp = solve_standard(np.ones(180), A, X @ s)
    ref = linprog(np.ones(180), A_eq=A, b_eq=X @ s, method="highs")
    assert lp.objective == pytest.approx(ref.fun, rel=1e-9)


def test_redundant_rows():
    A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 2.0, 1.0])
    lp = solve_standard([1.0, 2.0, 1.0], A, b)
    ref = linprog([1.0, 2.0, 1.0], A_eq=A, b_eq=b, method="highs")
    assert lp.objective == pytest.approx(ref.fun)


def test_unperturbed_path_agrees():
    gen = np.random.default_rng(2)
    A = gen.standard_normal((5, 12))
    b = A @ np.abs(gen.standard_normal(12))
    c = np.abs(gen.standard_normal(12))
    assert solve_standard(c, A, b, perturb=False).objective == pytest.approx(solve_standard(c, A, b).objective)


def test_negative_rhs_is_flipped():
    lp = solve_standard([1.0, 1.0], [[-1.0, -1.0]], [-2.0])
    assert lp.objective == pytest.approx(2.0)


def test_infeasible_and_unbounded():
    with pytest.raises(InfeasibleError):
        solve_standard([1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])
    with pytest.raises(UnboundedError):
        solve_standard([-1.0, 0.0], [[1.0, -1.0]], [0.0])


def test_dimension_checks():
    with pytest.raises(ParameterError):
        solve_standard([1.0], [[1.0, 2.0]], [1.0])
    with pytest.raises(ParameterError):
        solve_inequality([1.0], [[1.0]], [-1.0])
