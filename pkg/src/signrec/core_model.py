"""Domain types and seeded generators for designs, signals and responses.

Everything random in the package draws from an :class:`RngStream`, which is
an address ``(master_seed, stream_id)`` rather than a stateful generator.
Two streams with the same address produce the same draws, so replicate ``r``
of an experiment sees the same noise no matter how the work is scheduled.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import ParameterError

Setting = Literal["setting1", "setting2"]
SignMode = Literal["symmetric", "positive"]

REFERENCE_SEED = 20190401
REFERENCE_SHAPE = (100, 300)
REFERENCE_RHO = 0.9


def _tag(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ParameterError(f"stream id components must be non-negative, got {part}")
        return int(part)
    if isinstance(part, str):
        # stable across processes, unlike hash()
        return zlib.crc32(part.encode("utf-8"))
    raise ParameterError(f"stream id components must be int or str, got {type(part).__name__}")


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ParameterError("master_seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        object.__setattr__(self, "stream_id", tuple(_tag(s) for s in self.stream_id))

    def child(self, *parts) -> "RngStream":
        """Address of a sub-stream; ``parts`` may mix integers and purpose tags."""
        return RngStream(self.master_seed, self.stream_id + tuple(_tag(p) for p in parts))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.stream_id)
        return np.random.Generator(np.random.Philox(seq))


def _as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise ParameterError("expected an RngStream or an integer seed")


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Dense ``n x p`` design, stored column-major and read-only."""

    entries: np.ndarray
    setting_tag: str | None = None

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ParameterError(f"design must be a non-empty 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ParameterError("design contains non-finite entries")
        a = np.asfortranarray(a).copy(order="F")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def columns(self, index) -> np.ndarray:
        return self.entries[:, np.asarray(index, dtype=np.intp)]

    def complement(self, index) -> np.ndarray:
        mask = np.ones(self.p, dtype=bool)
        mask[np.asarray(index, dtype=np.intp)] = False
        return np.flatnonzero(mask)

    def __eq__(self, other):
        if not isinstance(other, DesignMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.entries, other.entries)

    __hash__ = None


def as_matrix(X) -> np.ndarray:
    return X.entries if isinstance(X, DesignMatrix) else np.asarray(X, dtype=np.float64)


def sign(x) -> np.ndarray:
    """Elementwise ``1{x>0} - 1{x<0}`` as int8."""
    x = np.asarray(x)
    return ((x > 0).astype(np.int8) - (x < 0).astype(np.int8))


@dataclass(frozen=True, eq=False)
class SignVector:
    values: np.ndarray
    support: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1:
            raise ParameterError("sign vector must be 1-D")
        if not np.all(np.isin(v, (-1, 0, 1))):
            raise ParameterError("sign vector entries must lie in {-1, 0, 1}")
        v = v.astype(np.int8)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        supp = np.flatnonzero(v)
        supp.setflags(write=False)
        object.__setattr__(self, "support", supp)

    @classmethod
    def of(cls, x) -> "SignVector":
        return cls(sign(x))

    @classmethod
    def zeros(cls, p: int) -> "SignVector":
        return cls(np.zeros(p, dtype=np.int8))

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return int(self.support.size)

    @property
    def nulls(self) -> np.ndarray:
        return np.flatnonzero(self.values == 0)

    @property
    def support_plus(self) -> np.ndarray:
        return np.flatnonzero(self.values > 0)

    @property
    def support_minus(self) -> np.ndarray:
        return np.flatnonzero(self.values < 0)

    def __neg__(self) -> "SignVector":
        return SignVector(-self.values.astype(np.int8))

    def __eq__(self, other):
        if not isinstance(other, SignVector):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class SignalSpec:
    k: int
    t: float
    sign_mode: SignMode = "symmetric"
    support_mode: Literal["uniform", "fixed"] = "uniform"
    support: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ParameterError("k must be non-negative")
        if not self.t > 0:
            raise ParameterError("signal magnitude t must be positive")
        if self.sign_mode not in ("symmetric", "positive"):
            raise ParameterError(f"unknown sign_mode {self.sign_mode!r}")
        if self.support_mode == "fixed":
            if self.support is None or len(self.support) != self.k:
                raise ParameterError("fixed support_mode needs a support list of length k")
        elif self.support_mode != "uniform":
            raise ParameterError(f"unknown support_mode {self.support_mode!r}")


@dataclass(frozen=True, eq=False)
class RegressionInstance:
    design: DesignMatrix
    beta: np.ndarray
    sigma: float
    response: np.ndarray
    noise: np.ndarray

    @property
    def signs(self) -> SignVector:
        return SignVector.of(self.beta)


def gen_design(setting: Setting, n: int, p: int, rho: float = 0.0, rng=0) -> DesignMatrix:
    """Gaussian design for the two simulation settings.

    ``setting1`` draws i.i.d. N(0, 1) entries. ``setting2`` draws rows from
    N(0, Gamma) with unit variances and constant correlation ``rho``, sampled
    as ``sqrt(1-rho) Z + sqrt(rho) W`` with one ``W`` shared per row.
    """
    if n < 1 or p < 1:
        raise ParameterError("n and p must be positive")
    if setting == "setting2":
        if not 0 <= rho < 1:
            raise ParameterError(f"rho must lie in [0, 1), got {rho}")
    elif setting != "setting1":
        raise ParameterError(f"unknown setting {setting!r}")
    gen = _as_stream(rng).generator()
    Z = gen.standard_normal((n, p))
    if setting == "setting2" and rho > 0:
        W = gen.standard_normal((n, 1))
        Z = np.sqrt(1.0 - rho) * Z + np.sqrt(rho) * W
    return DesignMatrix(Z, setting_tag=setting)


def reference_design(setting: Setting = "setting1", seed: int = REFERENCE_SEED) -> DesignMatrix:
    """The fixed 100 x 300 matrix reused by every experiment of a setting."""
    n, p = REFERENCE_SHAPE
    rho = REFERENCE_RHO if setting == "setting2" else 0.0
    return gen_design(setting, n, p, rho, RngStream(seed, ("design", setting)))


def sample_sign_vector(p: int, k: int, sign_mode: SignMode = "symmetric", rng=0) -> SignVector:
    if not 0 <= k <= p:
        raise ParameterError(f"need 0 <= k <= p, got k={k}, p={p}")
    if sign_mode not in ("symmetric", "positive"):
        raise ParameterError(f"unknown sign_mode {sign_mode!r}")
    gen = _as_stream(rng).generator()
    values = np.zeros(p, dtype=np.int8)
    if k == 0:
        return SignVector(values)
    support = gen.choice(p, size=k, replace=False)
    if sign_mode == "symmetric":
        values[support] = np.where(gen.random(k) < 0.5, -1, 1)
    else:
        values[support] = 1
    return SignVector(values)


def gen_instance(design: DesignMatrix, spec: SignalSpec, sigma: float, rng=0) -> RegressionInstance:
    if sigma < 0:
        raise ParameterError("sigma must be non-negative")
    if spec.k > design.p:
        raise ParameterError("sparsity exceeds the number of columns")
    stream = _as_stream(rng)
    if spec.support_mode == "uniform":
        s = sample_sign_vector(design.p, spec.k, spec.sign_mode, stream.child("signs"))
        beta = spec.t * s.values.astype(np.float64)
    else:
        idx = np.asarray(spec.support, dtype=np.intp)
        if np.unique(idx).size != idx.size or idx.min(initial=0) < 0 or idx.max(initial=0) >= design.p:
            raise ParameterError("fixed support must list distinct valid column indices")
        beta = np.zeros(design.p)
        if spec.sign_mode == "symmetric":
            g = stream.child("signs").generator()
            beta[idx] = spec.t * np.where(g.random(idx.size) < 0.5, -1.0, 1.0)
        else:
            beta[idx] = spec.t
    noise = sigma * stream.child("noise").generator().standard_normal(design.n)
    response = design.entries @ beta + noise
    return RegressionInstance(design, beta, float(sigma), response, noise)


def draw_response(design: DesignMatrix, beta: np.ndarray, sigma: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """``Y = X beta + eps`` for a given ``beta``; returns ``(Y, eps)``."""
    noise = sigma * _as_stream(rng).generator().standard_normal(design.n)
    return design.entries @ beta + noise, noise
