import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from signrec.core_model import DesignMatrix
from signrec.errors import FormatError
from signrec.io import MAGIC, read_matrix, read_vector, solution_text, write_matrix, write_solution, write_vector

finite = st.floats(-1e300, 1e300, allow_nan=False, allow_subnormal=True)


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=finite))
def test_matrix_roundtrip_exact(tmp_path_factory, a):
    d = tmp_path_factory.mktemp("m")
    for name in ("X.csv", "X.srx"):
        write_matrix(d / name, a)
        assert np.array_equal(read_matrix(d / name).entries, a)


def test_binary_layout(tmp_path):
    write_matrix(tmp_path / "X.srx", np.array([[1.0, 2.0, 3.0]]))
    raw = (tmp_path / "X.srx").read_bytes()
    assert raw[:4] == MAGIC and len(raw) == 4 + 16 + 24
    assert int.from_bytes(raw[4:12], "little") == 1 and int.from_bytes(raw[12:20], "little") == 3


def test_bad_files(tmp_path):
    (tmp_path / "a.csv").write_text("c0,c1\n1,2\n3\n")
    (tmp_path / "b.csv").write_text("c0\nx\n")
    (tmp_path / "c.srx").write_bytes(b"SRX2" + bytes(16))
    (tmp_path / "d.srx").write_bytes(MAGIC + (2).to_bytes(8, "little") + (2).to_bytes(8, "little") + bytes(8))
    (tmp_path / "e.csv").write_text("c0\nnan\n")
    for f in "a.csv b.csv c.srx d.srx e.csv".split():
        with pytest.raises(FormatError):
            read_matrix(tmp_path / f)


def test_vectors(tmp_path):
    write_vector(tmp_path / "s.csv", np.array([1, 0, -1]))
    assert (tmp_path / "s.csv").read_text() == "value\n1\n0\n-1\n"
    assert read_vector(tmp_path / "s.csv").tolist() == [1, 0, -1]
    (tmp_path / "h.csv").write_text("2.5\n-1\n")
    assert read_vector(tmp_path / "h.csv").tolist() == [2.5, -1.0]


def test_solution_file_reads_back(tmp_path):
    b = np.array([0.0, 1.5, -2.0])
    write_solution(tmp_path / "sol.csv", b, {"kkt_gap": 1e-12, "iterations": 4})
    text = solution_text(b, {"iterations": 4})
    assert text.startswith("# iterations=4\nindex,estimate\n0,0.0\n")
    assert np.array_equal(read_vector(tmp_path / "sol.csv"), b)


def test_read_matrix_returns_design(tmp_path):
    write_matrix(tmp_path / "X.csv", DesignMatrix(np.eye(2)))
    assert read_matrix(tmp_path / "X.csv").setting_tag == "custom"
