"""Geometry tests: general position, tau, lifting, derived bases."""

import math
from fractions import Fraction

import numpy as np
import pytest

from constlab import InvalidInputError
from constlab.lattice import (
    Basis,
    derived_basis,
    det_int,
    format_basis,
    is_general_position,
    lift_to_general_position,
    parse_basis,
    primitive_part,
    rank_int,
    segment_geometry,
)


def oracle_tau(flat):
    """Brute-force tau: scan every lattice point in a box one unit wider than
    the segment's bounding box. Any point outside that box is at distance
    greater than 1 from the segment, and tau <= 1 always (a unit neighbour of
    the origin is admissible), so the box scan is exhaustive.

    Distances are minimized over an explicit rational candidate list built
    from scratch here, not shared with the library routine.
    """
    D = len(flat)
    lo = [min(0, c) - 1 for c in flat]
    hi = [max(0, c) + 1 for c in flat]
    best = None
    grid = [range(a, b + 1) for a, b in zip(lo, hi)]

    def dist(m):
        cands = [Fraction(0), Fraction(1)]
        for j in range(D):
            for k in range(D):
                for s in (1, -1):
                    den = flat[j] - s * flat[k]
                    if den:
                        cands.append(Fraction(m[j] - s * m[k], den))
            if flat[j]:
                cands.append(Fraction(m[j], flat[j]))
        out = None
        for lam in cands:
            if lam < 0 or lam > 1:
                continue
            v = max(abs(Fraction(mj) - lam * ej) for mj, ej in zip(m, flat))
            if out is None or v < out:
                out = v
        return out

    import itertools
    for m in itertools.product(*grid):
        if m == tuple([0] * D) or m == tuple(flat):
            continue
        v = dist(m)
        if best is None or v < best:
            best = v
    return best


def test_tau_known_values():
    assert segment_geometry(((1, 0), (0, 1))).tau == Fraction(1, 2)
    assert segment_geometry(((1, 2), (2, 1))).tau == Fraction(1, 3)


def test_tau_matches_bruteforce_oracle():
    rng = np.random.default_rng(7)
    seen = 0
    while seen < 25:
        d = int(rng.integers(2, 5))
        flat = tuple(int(c) for c in rng.integers(-3, 4, size=d))
        if all(c == 0 for c in flat):
            continue
        seen += 1
        got = segment_geometry(flat)
        assert got.tau == oracle_tau(flat)
        g = 0
        for c in flat:
            g = math.gcd(g, c)
        assert got.primitive == (g == 1)


def test_tau_accepts_vector_sequences_and_flat():
    a = segment_geometry(((1, 2), (2, 1)))
    b = segment_geometry((1, 2, 2, 1))
    assert a.tau == b.tau == Fraction(1, 3)
    with pytest.raises(InvalidInputError):
        segment_geometry((0, 0, 0))
    with pytest.raises(InvalidInputError):
        segment_geometry(())


def test_primitive_part():
    s, e = primitive_part((3, 6, -9))
    assert s == 3 and e == (1, 2, -3)
    s, e = primitive_part((2, 1))
    assert s == 1 and e == (2, 1)
    with pytest.raises(InvalidInputError):
        primitive_part((0, 0))


def test_general_position_definition():
    # every coordinate projection of {0, e_1, .., e_l} must have l+1 values
    assert is_general_position(((1, 2), (2, 1)))
    assert not is_general_position(((1, 2), (1, 3)))   # first coords collide
    assert not is_general_position(((0, 2), (2, 1)))   # zero collides with 0
    # mod reduction can create collisions that the integers avoid
    assert is_general_position(((1, 2), (2, 1)), modulus=101)
    assert not is_general_position(((1, 2), (6, 1)), modulus=5)


def test_exact_linear_algebra():
    assert det_int([[1, 2], [2, 1]]) == -3
    assert det_int([[2, 0, 1], [0, 1, 0], [4, 0, 2]]) == 0
    assert rank_int([[1, 2], [2, 4]]) == 1
    assert rank_int([[1, 2], [2, 1]]) == 2
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        m = rng.integers(-6, 7, size=(n, n))
        assert det_int(m.tolist()) == round(np.linalg.det(m.astype(float)))


def test_basis_validation():
    b = Basis(((1, 2), (2, 1)), 101)
    assert b.l == 2 and b.d == 2
    assert b.column_matrix() == [[1, 2], [2, 1]]
    assert b.mod_vectors() == ((1, 2), (2, 1))
    with pytest.raises(InvalidInputError):
        Basis(((1, 2), (2, 1)), 100)          # composite modulus
    with pytest.raises(InvalidInputError):
        Basis(((1, 2), (2, 1)), 2)            # even prime excluded
    with pytest.raises(InvalidInputError):
        Basis(((1, 2), (2, 4)), 101)          # det 0: not invertible
    with pytest.raises(InvalidInputError):
        Basis(((1, 2), (2, 1)), 3)            # det -3 vanishes mod 3


def test_derived_basis_example():
    b = Basis(((1, 2), (2, 1)), 101)
    dv = derived_basis(b)
    assert dv.vectors == ((2, 1), (1, -1))
    assert dv.is_general_position()


def test_derived_basis_preserves_general_position():
    rng = np.random.default_rng(11)
    done = 0
    while done < 60:
        d = int(rng.integers(2, 4))
        vecs = tuple(tuple(int(c) for c in rng.integers(-10, 11, size=d))
                     for _ in range(d))
        if not is_general_position(vecs):
            continue
        try:
            b = Basis(vecs, 101)
        except InvalidInputError:
            continue
        done += 1
        dv = derived_basis(b)
        assert dv.is_general_position()
        # the change of columns is unimodular, so invertibility survives
        assert det_int(dv.column_matrix()) % 101 != 0


def test_lift_requires_general_position():
    with pytest.raises(InvalidInputError):
        lift_to_general_position(((1, 2), (1, 5)))


def test_lift_postconditions():
    rng = np.random.default_rng(5)
    done = 0
    while done < 15:
        l = int(rng.integers(1, 4))
        d = int(rng.integers(1, 4))
        vecs = tuple(tuple(int(c) for c in rng.integers(-4, 5, size=d))
                     for _ in range(l))
        if not is_general_position(vecs):
            continue
        done += 1
        b = lift_to_general_position(vecs)
        assert b.l == l + d and b.d == d + l
        assert b.is_general_position()
        for orig, lifted in zip(vecs, b.vectors):
            assert lifted[:d] == orig
        assert det_int(b.column_matrix()) % b.modulus != 0


def test_basis_text_roundtrip():
    b = Basis(((1, 2), (2, 1)), 101)
    assert parse_basis(format_basis(b)) == b
    with pytest.raises(InvalidInputError):
        parse_basis("1,2\n2,1\n")                 # missing header
    with pytest.raises(InvalidInputError):
        parse_basis("N=101\n")                    # no vectors
    with pytest.raises(InvalidInputError):
        parse_basis("N=101\n1,x\n")
