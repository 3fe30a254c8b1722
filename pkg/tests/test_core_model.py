import numpy as np
import pytest
from hypothesis import given, strategies as st

from signrec.core_model import (
    DesignMatrix,
    RngStream,
    SignalSpec,
    SignVector,
    draw_response,
    gen_design,
    gen_instance,
    reference_design,
    sample_sign_vector,
    sign,
)
from signrec.errors import ParameterError


def test_stream_is_an_address():
    a = RngStream(7, (1, "x")).generator().standard_normal(5)
    b = RngStream(7, (1, "x")).generator().standard_normal(5)
    c = RngStream(7, (1, "y")).generator().standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_child_matches_explicit_id():
    s = RngStream(3).child("eval", 5).child(2)
    assert s == RngStream(3, ("eval", 5, 2))


def test_stream_rejects_bad_parts():
    with pytest.raises(ParameterError):
        RngStream(1, (-1,))
    with pytest.raises(ParameterError):
        RngStream(1, (1.5,))
    with pytest.raises(ParameterError):
        RngStream(-2)


def test_stream_frozen_values():
    # guards against silent changes in how streams are seeded
    assert RngStream(0, (0,)).generator().integers(0, 10**6, 3).tolist() == [143187, 721196, 3702]
    assert RngStream(0, ("a",)).stream_id == (3904355907,)


def test_design_is_read_only():
    X = DesignMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        X.entries[0, 0] = 5.0
    assert X.shape == (2, 3) and X.n == 2 and X.p == 3


@pytest.mark.parametrize("bad", [np.ones(3), np.ones((0, 2)), np.array([[1.0, np.nan]])])
def test_design_rejects(bad):
    with pytest.raises(ParameterError):
        DesignMatrix(bad)


def test_design_columns_and_complement():
    X = DesignMatrix(np.arange(12.0).reshape(3, 4))
    assert np.array_equal(X.columns([1, 3]), X.entries[:, [1, 3]])
    assert X.complement([1, 3]).tolist() == [0, 2]


def test_setting1_moments():
    X = gen_design("setting1", 400, 300, rng=1).entries
    assert abs(X.mean()) < 0.01
    assert abs(X.var() - 1) < 0.02


def test_setting2_correlation():
    X = gen_design("setting2", 5000, 20, rho=0.9, rng=2).entries
    C = np.corrcoef(X, rowvar=False)
    off = C[~np.eye(20, dtype=bool)]
    assert abs(off.mean() - 0.9) < 0.01
    assert np.allclose(X.var(axis=0), 1.0, atol=0.06)


def test_gen_design_validation():
    with pytest.raises(ParameterError):
        gen_design("setting3", 3, 3)
    with pytest.raises(ParameterError):
        gen_design("setting2", 3, 3, rho=1.0)
    with pytest.raises(ParameterError):
        gen_design("setting1", 0, 3)


def test_reference_design_is_fixed():
    A, B = reference_design("setting1"), reference_design("setting1")
    assert A == B and A.shape == (100, 300)
    assert not reference_design("setting2") == A


def test_sign():
    assert sign([-2.0, 0.0, 3.0, -0.0]).tolist() == [-1, 0, 1, 0]
    assert sign([1]).dtype == np.int8


def test_sign_vector_sets():
    s = SignVector(np.array([1, 0, -1, 1, 0]))
    assert s.k == 3 and s.p == 5
    assert s.support.tolist() == [0, 2, 3]
    assert s.nulls.tolist() == [1, 4]
    assert s.support_plus.tolist() == [0, 3]
    assert s.support_minus.tolist() == [2]
    assert (-s).support_minus.tolist() == [0, 3]
    with pytest.raises(ParameterError):
        SignVector(np.array([2, 0]))


@given(st.integers(1, 60), st.data(), st.sampled_from(["symmetric", "positive"]), st.integers(0, 2**32))
def test_sample_sign_vector(p, data, mode, seed):
    k = data.draw(st.integers(0, p))
    s = sample_sign_vector(p, k, mode, seed)
    assert s.k == k
    if mode == "positive":
        assert np.all(s.values >= 0)
    assert s == sample_sign_vector(p, k, mode, seed)


def test_sign_vector_uniform_support():
    counts = np.zeros(10)
    for i in range(4000):
        counts[sample_sign_vector(10, 3, rng=RngStream(5, (i,))).support] += 1
    assert np.allclose(counts / 4000, 0.3, atol=0.03)


def test_gen_instance():
    X = gen_design("setting1", 10, 20, rng=3)
    inst = gen_instance(X, SignalSpec(4, 2.5), 0.5, rng=4)
    assert inst.signs.k == 4
    assert set(np.abs(inst.beta[inst.beta != 0])) == {2.5}
    assert np.allclose(inst.response, X.entries @ inst.beta + inst.noise)
    again = gen_instance(X, SignalSpec(4, 2.5), 0.5, rng=4)
    assert np.array_equal(again.response, inst.response)


def test_gen_instance_fixed_support():
    X = gen_design("setting1", 5, 8, rng=3)
    inst = gen_instance(X, SignalSpec(2, 1.0, "positive", "fixed", (1, 6)), 0.0, rng=0)
    assert inst.beta.tolist() == [0, 1, 0, 0, 0, 0, 1, 0]
    with pytest.raises(ParameterError):
        gen_instance(X, SignalSpec(2, 1.0, "positive", "fixed", (1, 1)), 0.0)
    with pytest.raises(ParameterError):
        SignalSpec(2, 1.0, support_mode="fixed", support=(1,))


def test_signal_spec_validation():
    with pytest.raises(ParameterError):
        SignalSpec(-1, 1.0)
    with pytest.raises(ParameterError):
        SignalSpec(1, 0.0)
    with pytest.raises(ParameterError):
        SignalSpec(1, 1.0, sign_mode="nonsense")


def test_draw_response():
    X = gen_design("setting1", 6, 4, rng=0)
    beta = np.array([1.0, 0, 0, -1])
    Y, eps = draw_response(X, beta, 0.0, RngStream(1))
    assert np.allclose(Y, X.entries @ beta) and not eps.any()
