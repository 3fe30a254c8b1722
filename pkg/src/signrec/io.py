"""Matrix and vector files.

CSV: one header line, row-major data, ``.`` decimal separator, ``\\n`` rows.
Binary (``.srx``): magic ``SRX1``, little-endian u64 ``n``, u64 ``p``, then
``n*p`` little-endian f64 values in row-major order.
"""
from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .core_model import DesignMatrix
from .errors import FormatError, ParameterError

MAGIC = b"SRX1"
_HEADER = struct.Struct("<4sQQ")


def fmt(x: float) -> str:
    # shortest repr that round-trips a float64 exactly
    return repr(float(x))


def _is_binary(path: Path) -> bool:
    return path.suffix.lower() in (".srx", ".bin")


def write_matrix(path, X) -> None:
    path = Path(path)
    a = X.entries if isinstance(X, DesignMatrix) else np.asarray(X, dtype=np.float64)
    if a.ndim != 2:
        raise ParameterError("matrix must be 2-D")
    if _is_binary(path):
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, a.shape[0], a.shape[1]))
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        return
    buf = io.StringIO()
    buf.write(",".join(f"c{j}" for j in range(a.shape[1])) + "\n")
    for row in a:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    path.write_text(buf.getvalue())


def read_matrix(path, setting_tag: str | None = None) -> DesignMatrix:
    path = Path(path)
    if _is_binary(path) or path.read_bytes()[:4] == MAGIC:
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise FormatError(f"{path}: truncated binary matrix header")
        magic, n, p = _HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        body = raw[_HEADER.size:]
        if len(body) != 8 * n * p:
            raise FormatError(f"{path}: expected {n * p} values, found {len(body) // 8}")
        return _design(path, np.frombuffer(body, dtype="<f8").reshape(n, p), setting_tag)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if len(lines) < 2:
        raise FormatError(f"{path}: a matrix CSV needs a header line and at least one row")
    width = len(lines[0].split(","))
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != width:
            raise FormatError(f"{path}:{lineno}: expected {width} fields, found {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return _design(path, np.array(rows), setting_tag)


def _design(path, a, setting_tag) -> DesignMatrix:
    try:
        return DesignMatrix(a, setting_tag=setting_tag or "custom")
    except ParameterError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_vector(path, v, name: str = "value") -> None:
    v = np.asarray(v).ravel()
    if np.issubdtype(v.dtype, np.integer):
        body = "\n".join(str(int(x)) for x in v)
    else:
        body = "\n".join(fmt(x) for x in v)
    Path(path).write_text(f"{name}\n{body}\n")


def solution_text(estimate, diagnostics: dict) -> str:
    """``# key=value`` diagnostics block, then ``index,estimate`` rows."""
    head = "".join(f"# {k}={fmt(v) if isinstance(v, float) else v}\n" for k, v in diagnostics.items())
    body = "".join(f"{i},{fmt(x)}\n" for i, x in enumerate(np.asarray(estimate, dtype=np.float64)))
    return head + "index,estimate\n" + body


def write_solution(path, estimate, diagnostics: dict) -> None:
    Path(path).write_text(solution_text(estimate, diagnostics))


def read_vector(path) -> np.ndarray:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise FormatError(f"{path}: empty vector file")
    try:
        float(lines[0].split(",")[-1])
        data = lines  # headerless file
    except ValueError:
        data = lines[1:]
    try:
        # a trailing column holds the value; a leading index column is allowed
        return np.array([float(ln.split(",")[-1]) for ln in data])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
