"""Integer lattice geometry for constellation bases.

A constellation shape is a tuple e = (e_1, ..., e_l) of vectors in Z^d. The
routines here decide general position, measure how far the segment [0, e]
stays from other lattice points (the quantity gating the unwrapping step),
lift a shape to a general-position basis in higher dimension, and build the
derived basis used by the counting inequalities.

All geometry is exact: integer or Fraction arithmetic throughout.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import InvalidInputError

Vec = tuple[int, ...]


def _as_vectors(vectors) -> tuple[Vec, ...]:
    vecs = tuple(tuple(int(c) for c in v) for v in vectors)
    if not vecs:
        raise InvalidInputError("need at least one vector")
    d = len(vecs[0])
    if d == 0 or any(len(v) != d for v in vecs):
        raise InvalidInputError("vectors must share a positive dimension")
    return vecs


def is_general_position(vectors: Sequence[Sequence[int]],
                        modulus: int | None = None) -> bool:
    """True if every coordinate projection of {0} u e has l+1 distinct values.

    With `modulus` the comparison is made in Z_modulus instead of Z.
    """
    vecs = _as_vectors(vectors)
    l, d = len(vecs), len(vecs[0])
    for i in range(d):
        col = [v[i] for v in vecs] + [0]
        if modulus is not None:
            col = [c % modulus for c in col]
        if len(set(col)) != l + 1:
            return False
    return True


# ---------------------------------------------------------------------------
# segment geometry: tau(e) and primitivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentGeometry:
    e_flat: Vec
    tau: Fraction
    primitive: bool


def _point_segment_distance(m: Sequence[int], e: Sequence[int]) -> Fraction:
    """Exact L-infinity distance from lattice point m to the segment
    {lambda * e : 0 <= lambda <= 1}.

    g(lambda) = max_j |m_j - lambda e_j| is convex piecewise linear, so its
    minimum over [0, 1] sits at an endpoint, at a kink of one |.| term, or at
    a crossing of two terms; all such lambda are rational and enumerable.
    """
    D = len(e)
    cands = {Fraction(0), Fraction(1)}
    for j in range(D):
        if e[j] != 0:
            lam = Fraction(m[j], e[j])
            if 0 <= lam <= 1:
                cands.add(lam)
        for k in range(j + 1, D):
            # |m_j - lam e_j| = |m_k - lam e_k| crossings, both sign choices
            for s in (1, -1):
                den = e[j] - s * e[k]
                if den != 0:
                    lam = Fraction(m[j] - s * m[k], den)
                    if 0 <= lam <= 1:
                        cands.add(lam)
    best = None
    for lam in cands:
        val = max(abs(Fraction(mj) - lam * ej) for mj, ej in zip(m, e))
        if best is None or val < best:
            best = val
    return best


def segment_geometry(e) -> SegmentGeometry:
    """Exact tau and primitivity for a shape.

    Accepts a sequence of vectors (flattened internally) or one flat integer
    sequence. tau is the infimum over lattice points m not in {0, e} of the
    L-infinity distance from m to the segment [0, e]. Only candidates within
    distance 1 of the segment's bounding box matter, because a unit neighbour
    of 0 already achieves distance <= 1.
    """
    seq = list(e)
    if seq and isinstance(seq[0], (list, tuple)):
        flat = tuple(int(c) for v in seq for c in v)
    else:
        flat = tuple(int(c) for c in seq)
    if not flat:
        raise InvalidInputError("empty shape")
    if all(c == 0 for c in flat):
        raise InvalidInputError("zero shape has no segment geometry")
    return _segment_geometry_cached(flat)


@functools.lru_cache(maxsize=4096)
def _segment_geometry_cached(flat: Vec) -> SegmentGeometry:
    D = len(flat)
    lo = [min(0, c) - 1 for c in flat]
    hi = [max(0, c) + 1 for c in flat]

    best = None
    idx = [l for l in lo]
    while True:
        m = tuple(idx)
        if m != tuple([0] * D) and m != flat:
            dist = _point_segment_distance(m, flat)
            if best is None or dist < best:
                best = dist
        # odometer over the candidate box
        j = 0
        while j < D:
            idx[j] += 1
            if idx[j] <= hi[j]:
                break
            idx[j] = lo[j]
            j += 1
        if j == D:
            break

    g = 0
    for c in flat:
        g = math.gcd(g, c)
    return SegmentGeometry(e_flat=flat, tau=best, primitive=(g == 1))


def primitive_part(e_flat: Sequence[int]) -> tuple[int, Vec]:
    """(s, e') with e = s * e', s >= 1, gcd(e') = 1."""
    g = 0
    for c in e_flat:
        g = math.gcd(g, c)
    if g == 0:
        raise InvalidInputError("zero shape")
    return g, tuple(c // g for c in e_flat)


# ---------------------------------------------------------------------------
# exact integer linear algebra helpers
# ---------------------------------------------------------------------------

def det_int(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (fraction-free Bareiss)."""
    n = len(rows)
    a = [[int(x) for x in r] for r in rows]
    if any(len(r) != n for r in a):
        raise InvalidInputError("matrix must be square")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def rank_int(rows: Sequence[Sequence[int]]) -> int:
    """Rank over Q of an integer matrix, by exact Fraction elimination."""
    a = [[Fraction(x) for x in r] for r in rows]
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    rank = 0
    row = 0
    for col in range(ncols):
        piv = None
        for i in range(row, nrows):
            if a[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        inv = a[row][col]
        for i in range(row + 1, nrows):
            if a[i][col] != 0:
                factor = a[i][col] / inv
                for j in range(col, ncols):
                    a[i][j] -= factor * a[row][j]
        row += 1
        rank += 1
        if row == nrows:
            break
    return rank


def matrix_inverse_mod(rows: Sequence[Sequence[int]], n: int) -> list[list[int]]:
    """Inverse of a square integer matrix mod n (n prime)."""
    size = len(rows)
    a = [[rows[i][j] % n for j in range(size)] + [1 if j == i else 0 for j in range(size)]
         for i in range(size)]
    for col in range(size):
        piv = None
        for i in range(col, size):
            if a[i][col] % n != 0:
                piv = i
                break
        if piv is None:
            raise InvalidInputError("matrix not invertible mod %d" % n)
        a[col], a[piv] = a[piv], a[col]
        inv = pow(a[col][col], -1, n)
        a[col] = [(x * inv) % n for x in a[col]]
        for i in range(size):
            if i != col and a[i][col]:
                f = a[i][col]
                a[i] = [(x - f * y) % n for x, y in zip(a[i], a[col])]
    return [r[size:] for r in a]


def _is_prime_small(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# ---------------------------------------------------------------------------
# Basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Basis:
    """Vectors e_1..e_l in Z^d paired with an odd prime modulus.

    Keeps the signed-integer view (geometry) and exposes a reduced mod-N view
    (grid arithmetic). When l == d the matrix with columns e_i must be
    invertible mod N.
    """
    vectors: tuple[Vec, ...]
    modulus: int
    ambient_dim: int = field(default=0)

    def __post_init__(self):
        vecs = _as_vectors(self.vectors)
        object.__setattr__(self, "vectors", vecs)
        d = len(vecs[0])
        if self.ambient_dim == 0:
            object.__setattr__(self, "ambient_dim", d)
        elif self.ambient_dim != d:
            raise InvalidInputError("ambient_dim disagrees with vectors")
        N = self.modulus
        if N <= 2 or not _is_prime_small(N):
            raise InvalidInputError("modulus must be an odd prime")
        if len(vecs) == d:
            if det_int(self.column_matrix()) % N == 0:
                raise InvalidInputError(
                    "square basis must be invertible mod the modulus")

    @property
    def l(self) -> int:
        return len(self.vectors)

    @property
    def d(self) -> int:
        return self.ambient_dim

    def column_matrix(self) -> list[list[int]]:
        """Matrix T with T[j][i] = e_i[j] (columns are the basis vectors)."""
        return [[v[j] for v in self.vectors] for j in range(self.ambient_dim)]

    def mod_vectors(self) -> tuple[Vec, ...]:
        N = self.modulus
        return tuple(tuple(c % N for c in v) for v in self.vectors)

    def is_general_position(self) -> bool:
        return is_general_position(self.vectors)


def derived_basis(b: Basis) -> Basis:
    """{e_d, e_d - e_1, ..., e_d - e_{d-1}}; preserves general position and
    invertibility (the change of columns has determinant +-1)."""
    if b.l != b.d:
        raise InvalidInputError("derived basis needs a square basis (l == d)")
    vecs = b.vectors
    last = vecs[-1]
    out = [last] + [tuple(last[j] - v[j] for j in range(b.d)) for v in vecs[:-1]]
    return Basis(vectors=tuple(out), modulus=b.modulus)


# ---------------------------------------------------------------------------
# dimension lifting
# ---------------------------------------------------------------------------

def _primes_from(start: int):
    n = max(2, start)
    while True:
        if _is_prime_small(n):
            yield n
        n += 1


def lift_to_general_position(vectors: Sequence[Sequence[int]],
                             modulus: int | None = None) -> Basis:
    """Lift l vectors in Z^d to a general-position basis of Z^{d+l}.

    The first l output vectors are (e_i, f_i); the tail coordinates f_i and
    the d completion vectors are scaled prime powers B*q^j (B exceeds every
    input magnitude), which keeps all projections distinct and nonzero. Rank
    and general position are re-validated exactly on the result, advancing to
    the next prime tuple in the unlikely degenerate case.

    Requires the input itself in general position: a repeated value in some
    coordinate projection of e u {0} survives into any extension, so no lift
    of such an input can satisfy the postcondition.
    """
    vecs = _as_vectors(vectors)
    l, d = len(vecs), len(vecs[0])
    if not is_general_position(vecs):
        raise InvalidInputError(
            "input must be in general position; a coordinate collision in "
            "e u {0} persists in every lift")
    B = 1 + max(abs(c) for v in vecs for c in v)

    gen = _primes_from(2)
    primes = [next(gen) for _ in range(l + d)]
    for _ in range(64):
        rows = []
        for i, v in enumerate(vecs):
            tail = [B * primes[i] ** (j + 1) for j in range(l)]
            rows.append(tuple(list(v) + tail))
        for k in range(d):
            q = primes[l + k]
            rows.append(tuple(B * q ** (c + 1) for c in range(d + l)))
        if rank_int(rows) == d + l and is_general_position(rows):
            if modulus is None:
                mod = _choose_modulus(rows)
            else:
                mod = modulus
            return Basis(vectors=tuple(rows), modulus=mod)
        primes = primes[1:] + [next(gen)]
    raise InvalidInputError("could not lift input to general position")


def _choose_modulus(rows) -> int:
    """Smallest odd prime exceeding all magnitudes that keeps det invertible."""
    bound = max(3, 2 * max(abs(c) for r in rows for c in r) + 1)
    det = det_int([[r[j] for r in rows] for j in range(len(rows))])
    for p in _primes_from(bound):
        if det % p != 0:
            return p


# ---------------------------------------------------------------------------
# plain-text basis format: "N=<prime>" header, one comma-separated vector
# per line
# ---------------------------------------------------------------------------

def format_basis(b: Basis) -> str:
    lines = ["N=%d" % b.modulus]
    lines += [",".join(str(c) for c in v) for v in b.vectors]
    return "\n".join(lines) + "\n"


def parse_basis(text: str) -> Basis:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].replace(" ", "").startswith("N="):
        raise InvalidInputError("first line must be N=<prime>")
    try:
        modulus = int(lines[0].split("=", 1)[1])
    except ValueError:
        raise InvalidInputError("bad modulus in header") from None
    vecs = []
    for ln in lines[1:]:
        try:
            vecs.append(tuple(int(tok) for tok in ln.split(",")))
        except ValueError:
            raise InvalidInputError("bad vector line: %r" % ln) from None
    if not vecs:
        raise InvalidInputError("no vectors in basis text")
    return Basis(vectors=tuple(vecs), modulus=modulus)


def parse_basis_file(path) -> Basis:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_basis(fh.read())
