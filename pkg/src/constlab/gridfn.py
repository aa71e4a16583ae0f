"""Dense real-valued functions on Z_N^d.

Storage is a d-dimensional float64 array with axis i carrying coordinate
x_{i+1}; the flat serialization order is mixed-radix with x_1 fastest
(Fortran ravel). Values are immutable after construction. Expectations use a
fixed-block compensated reduction so results do not depend on how callers
might partition work.
"""

from __future__ import annotations

import math
import struct
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError
from .rng import substream

_MAGIC = b"CLGF"
_VERSION = 1
_FLAG_NONNEG = 1
_BLOCK = 1 << 16


def compensated_sum(values: np.ndarray) -> float:
    """Sum with fixed 2^16-element blocks, exact fsum across block sums.

    Small arrays are fsum-exact; large ones combine numpy's in-block pairwise
    sums with an exact cross-block fsum. Block size is a constant, so the
    result never depends on caller-side partitioning.
    """
    flat = np.asarray(values, dtype=np.float64).reshape(-1)
    if flat.size == 0:
        return 0.0
    if flat.size <= _BLOCK:
        return math.fsum(flat.tolist())
    parts = [float(np.sum(flat[i:i + _BLOCK]))
             for i in range(0, flat.size, _BLOCK)]
    return math.fsum(parts)


class GridFunction:
    """Immutable dense function f: Z_N^d -> R."""

    __slots__ = ("N", "d", "values", "nonneg")

    def __init__(self, N: int, d: int, values, nonneg: bool = False):
        if N < 1 or d < 1:
            raise InvalidInputError("need N >= 1 and d >= 1")
        arr = np.asarray(values, dtype=np.float64)
        if arr.size != N ** d:
            raise InvalidInputError("value count != N^d")
        if arr.ndim == 1:
            arr = arr.reshape((N,) * d, order="F")
        elif arr.shape != (N,) * d:
            raise InvalidInputError("shape must be (N,)*d or flat")
        arr = np.ascontiguousarray(arr)
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("values must be finite")
        if nonneg and np.any(arr < 0):
            raise InvalidInputError("nonneg flag set but negatives present")
        arr.setflags(write=False)
        self.N = int(N)
        self.d = int(d)
        self.values = arr
        self.nonneg = bool(nonneg)

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, N: int, d: int, c: float) -> "GridFunction":
        return cls(N, d, np.full((N,) * d, float(c)), nonneg=(c >= 0))

    @classmethod
    def from_callable(cls, N: int, d: int, fn: Callable) -> "GridFunction":
        grids = np.indices((N,) * d)
        return cls(N, d, fn(*grids))

    # -- basics ------------------------------------------------------------

    def flat(self) -> np.ndarray:
        """Values in mixed-radix order, x_1 fastest."""
        return self.values.ravel(order="F")

    def at(self, x: Sequence[int]) -> float:
        if len(x) != self.d:
            raise InvalidInputError("point has wrong dimension")
        return float(self.values[tuple(int(c) % self.N for c in x)])

    def with_values(self, values, nonneg: bool = False) -> "GridFunction":
        return GridFunction(self.N, self.d, values, nonneg=nonneg)

    def expectation(self) -> float:
        return expectation(self)

    def __eq__(self, other):
        return (isinstance(other, GridFunction) and self.N == other.N
                and self.d == other.d
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.N, self.d, self.values.tobytes()))


def expectation(f: GridFunction) -> float:
    """E(f) = N^{-d} sum f(x), compensated."""
    return compensated_sum(f.values) / float(f.N ** f.d)


def pointwise(op, *fs: GridFunction) -> GridFunction:
    base = fs[0]
    for g in fs[1:]:
        if g.N != base.N or g.d != base.d:
            raise InvalidInputError("grid mismatch")
    return GridFunction(base.N, base.d, op(*[g.values for g in fs]))


def tensor(factors: Sequence[GridFunction]) -> GridFunction:
    """Tensor product: (f_1 x ... x f_k)(x) = prod f_i(x_i slice).

    Factors may themselves be multi-dimensional; dims add up.
    """
    if not factors:
        raise InvalidInputError("need at least one factor")
    N = factors[0].N
    if any(g.N != N for g in factors):
        raise InvalidInputError("all factors need the same modulus")
    out = factors[0].values
    for g in factors[1:]:
        out = np.multiply.outer(out, g.values)
    d = sum(g.d for g in factors)
    return GridFunction(N, d, out, nonneg=all(g.nonneg for g in factors))


def translate(f: GridFunction, v: Sequence[int]) -> GridFunction:
    """g(x) = f(x + v mod N)."""
    if len(v) != f.d:
        raise InvalidInputError("shift has wrong dimension")
    shift = tuple(-(int(c) % f.N) for c in v)
    return GridFunction(f.N, f.d, np.roll(f.values, shift, axis=tuple(range(f.d))),
                        nonneg=f.nonneg)


def translate_values(values: np.ndarray, v: Sequence[int], N: int) -> np.ndarray:
    shift = tuple(-(int(c) % N) for c in v)
    return np.roll(values, shift, axis=tuple(range(values.ndim)))


def random_probe(N: int, d: int, bound: GridFunction, seed: int) -> GridFunction:
    """f = u * bound with u independent uniform on [-1, 1] per point.

    Always satisfies |f| <= bound pointwise; zeros of the bound stay zero.
    """
    if bound.N != N or bound.d != d:
        raise InvalidInputError("bound grid mismatch")
    if not bound.nonneg and np.any(bound.values < 0):
        raise InvalidInputError("bound must be nonnegative")
    rng = substream(seed, "probe", N, d)
    u = rng.uniform(-1.0, 1.0, size=(N,) * d)
    return GridFunction(N, d, u * bound.values)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save(f: GridFunction, path) -> None:
    """Binary layout: magic, version, N, d, flags, then N^d little-endian
    float64 in x_1-fastest order."""
    flags = _FLAG_NONNEG if f.nonneg else 0
    header = struct.pack("<4sBIIQ", _MAGIC, _VERSION, f.N, f.d, flags)
    data = f.flat().astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def load(path) -> GridFunction:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<4sBIIQ"))
        magic, version, N, d, flags = struct.unpack("<4sBIIQ", header)
        if magic != _MAGIC or version != _VERSION:
            raise InvalidInputError("not a grid-function file")
        data = fh.read()
    arr = np.frombuffer(data, dtype="<f8")
    if arr.size != N ** d:
        raise InvalidInputError("truncated grid-function file")
    return GridFunction(N, d, arr.astype(np.float64),
                        nonneg=bool(flags & _FLAG_NONNEG))


def to_csv(f: GridFunction, path) -> None:
    """CSV export for d <= 2: coordinate columns plus value, header row."""
    if f.d > 2:
        raise InvalidInputError("CSV export only for d <= 2")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if f.d == 1:
            fh.write("x1,value\n")
            for i in range(f.N):
                fh.write("%d,%r\n" % (i, float(f.values[i])))
        else:
            fh.write("x1,x2,value\n")
            for j in range(f.N):
                for i in range(f.N):
                    fh.write("%d,%d,%r\n" % (i, j, float(f.values[i, j])))
