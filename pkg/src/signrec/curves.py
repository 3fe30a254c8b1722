"""Identifiability and irrepresentability curves over a sparsity grid.

``p(k)`` is the fraction of random ``k``-sparse sign vectors passing the
indicator. Both kinds are evaluated on the same sampled sign vectors (sign
``i`` at sparsity ``k`` lives on stream ``(k, i)``), so the samplewise
implication IC => Idtf shows up exactly in the proportions.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .conditions import identifiability_indicator, irrepresentability_indicator
from .core_model import SignMode, _as_stream, as_matrix, sample_sign_vector
from .errors import ParameterError, SignrecError
from .io import fmt
from .parallel import pmap

Kind = Literal["identifiability", "irrepresentability"]
KINDS: tuple[Kind, ...] = ("identifiability", "irrepresentability")
CSV_COLUMNS = ("kind", "sign_mode", "k", "proportion", "std_err", "n_samples", "seed")

_INDICATORS = {
    "identifiability": identifiability_indicator,
    "irrepresentability": irrepresentability_indicator,
}


@dataclass(frozen=True)
class CurvePoint:
    k: int
    proportion: float
    std_err: float
    n_samples: int
    curve_kind: Kind
    sign_mode: SignMode


def _point(kind, mode, k, hits) -> CurvePoint:
    n = len(hits)
    ph = float(np.mean(hits))
    return CurvePoint(k, ph, float(np.sqrt(ph * (1 - ph) / n)), n, kind, mode)


def curves(
    X,
    kinds: Sequence[Kind],
    k_grid: Iterable[int],
    n_samples: int = 1000,
    sign_mode: SignMode = "symmetric",
    rng=0,
    threads: int | None = 1,
) -> list[CurvePoint]:
    """Points for several kinds at once, ordered by kind then k, sharing sign draws."""
    Xe = as_matrix(X)
    n, p = Xe.shape
    kinds = list(kinds)
    for kind in kinds:
        if kind not in _INDICATORS:
            raise ParameterError(f"unknown curve kind {kind!r}")
    ks = [int(k) for k in k_grid]
    if any(not 0 <= k <= p for k in ks):
        raise ParameterError(f"every k must lie in [0, {p}]")
    if n_samples < 1:
        raise ParameterError("n_samples must be positive")
    stream = _as_stream(rng)

    def cell(arg):
        k, i = arg
        s = sample_sign_vector(p, k, sign_mode, stream.child(k, i))
        out = []
        for kind in kinds:
            if k > n:
                # more active columns than rows: X_I has a kernel
                out.append(0)
                continue
            try:
                out.append(_INDICATORS[kind](Xe, s).indicator)
            except SignrecError as e:
                raise type(e)(f"{kind} at k={k}, sample {i}: {e}") from e
        return out

    hits = {}
    for k in ks:
        hits[k] = np.array(pmap(cell, [(k, i) for i in range(n_samples)], threads), dtype=np.int64)
    return [_point(kind, sign_mode, k, hits[k][:, j]) for j, kind in enumerate(kinds) for k in ks]


def curve(X, kind: Kind, k_grid, n_samples=1000, sign_mode: SignMode = "symmetric", rng=0, threads=1):
    return curves(X, [kind], k_grid, n_samples, sign_mode, rng, threads)


def write_curves(path, points: Sequence[CurvePoint], seed: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for pt in points:
            w.writerow([pt.curve_kind, pt.sign_mode, pt.k, fmt(pt.proportion), fmt(pt.std_err), pt.n_samples, seed])


def read_curves(path) -> list[CurvePoint]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        CurvePoint(int(r["k"]), float(r["proportion"]), float(r["std_err"]), int(r["n_samples"]), r["kind"], r["sign_mode"])
        for r in rows
    ]
