"""Box inner products and box norms: route agreement and norm axioms."""

import numpy as np
import pytest

from constlab import (
    Basis,
    BoxNormPlan,
    GridFunction,
    InvalidInputError,
    box_inner,
    box_norm,
    change_of_basis,
    inverse_change_of_basis,
)
from constlab.rng import substream


def rand_fn(N, d, seed):
    rng = substream(seed, "test-boxnorm", N, d)
    return GridFunction(N, d, rng.uniform(-1.0, 1.0, size=(N,) * d))


def rand_basis(N, d, seed):
    rng = substream(seed, "test-basis", N, d)
    while True:
        vecs = tuple(tuple(int(c) for c in rng.integers(0, N, size=d))
                     for _ in range(d))
        try:
            return Basis(vecs, N)
        except InvalidInputError:
            continue


STD2 = Basis(((1, 0), (0, 1)), 7)


def test_naive_equals_factored_random():
    for seed in range(12):
        N, d = (5, 2) if seed % 2 else (7, 2)
        b = rand_basis(N, d, seed)
        fam = [rand_fn(N, d, 100 * seed + k) for k in range(4)]
        naive = box_inner(fam, b, strategy="naive")
        fact = box_inner(fam, b, strategy="factored")
        assert abs(naive - fact) < 1e-12 * max(1.0, abs(naive))


def test_naive_equals_factored_d3():
    b = rand_basis(5, 3, 1)
    fam = [rand_fn(5, 3, 7 * k + 3) for k in range(8)]
    naive = box_inner(fam, b, strategy="naive")
    fact = box_inner(fam, b, strategy="factored")
    assert abs(naive - fact) < 1e-12 * max(1.0, abs(naive))


def test_monte_carlo_within_three_sigma():
    b = rand_basis(7, 2, 4)
    fam = [rand_fn(7, 2, 10 + k) for k in range(4)]
    exact = box_inner(fam, b, strategy="naive")
    est = box_inner(fam, b, strategy="monte-carlo", samples=1 << 16, seed=5)
    assert est.samples == 1 << 16
    assert abs(est.value - exact) < 3.0 * est.stderr + 1e-12
    # bit-for-bit reproducible under the same seed
    est2 = box_inner(fam, b, strategy="monte-carlo", samples=1 << 16, seed=5)
    assert est.value == est2.value and est.stderr == est2.stderr


def test_box_norm_identical_family_is_power():
    # <f,..,f> = ||f||^{2^d}, so the norm of the norm's own inner is consistent
    f = rand_fn(7, 2, 42)
    b = rand_basis(7, 2, 6)
    inner = box_inner([f] * 4, b, strategy="factored")
    norm = box_norm(f, b)
    assert inner >= -1e-10
    assert abs(norm - max(inner, 0.0) ** 0.25) < 1e-13


def test_homogeneity():
    f = rand_fn(7, 2, 8)
    b = rand_basis(7, 2, 9)
    n0 = box_norm(f, b)
    for c in (2.0, -3.0, 0.5):
        g = f.with_values(c * f.values)
        assert abs(box_norm(g, b) - abs(c) * n0) < 1e-10


def test_triangle_inequality_random():
    for seed in range(20):
        b = rand_basis(7, 2, seed + 20)
        f = rand_fn(7, 2, 2 * seed)
        g = rand_fn(7, 2, 2 * seed + 1)
        h = f.with_values(f.values + g.values)
        assert box_norm(h, b) <= box_norm(f, b) + box_norm(g, b) + 1e-9


def test_gowers_cauchy_schwarz_random():
    for seed in range(20):
        b = rand_basis(7, 2, seed + 50)
        fam = [rand_fn(7, 2, 4 * seed + k) for k in range(4)]
        lhs = box_inner(fam, b, strategy="factored")
        rhs = 1.0
        for f in fam:
            rhs *= box_norm(f, b)
        assert lhs <= rhs + 1e-9


def test_d1_box_norm_collapses():
    # at d = 1 the box norm along any invertible direction equals the one
    # along 1, because t e ranges over all residues
    N = 101
    rng = substream(0, "d1")
    f = GridFunction(N, 1, rng.uniform(-1, 1, size=N))
    base = box_norm(f, Basis(((1,),), N))
    for e in (2, 3, 57, 100):
        assert abs(box_norm(f, Basis(((e,),), N)) - base) < 1e-12


def test_change_of_basis_roundtrip_and_invariance():
    N = 7
    b = Basis(((1, 2), (2, 1)), N)
    f = rand_fn(N, 2, 77)
    g = change_of_basis(f, b)
    back = inverse_change_of_basis(g, b)
    assert np.allclose(back.values, f.values, atol=0)
    # box norm along e equals box norm of f o T along the standard directions
    assert abs(box_norm(f, b) - box_norm(g, STD2)) < 1e-12


def test_plan_carries_strategy():
    f = rand_fn(7, 2, 5)
    b = rand_basis(7, 2, 3)
    plan = BoxNormPlan(basis=b, strategy="naive")
    assert abs(box_norm(f, plan) - box_norm(f, b, strategy="naive")) == 0.0


def test_family_validation():
    f = rand_fn(7, 2, 1)
    b = rand_basis(7, 2, 1)
    with pytest.raises(InvalidInputError):
        box_inner([f] * 3, b)                       # not 2^d members
    with pytest.raises(InvalidInputError):
        box_inner([f] * 4, rand_basis(5, 2, 1))     # modulus mismatch
    with pytest.raises(InvalidInputError):
        box_inner([f] * 4, b, strategy="nope")
    with pytest.raises(InvalidInputError):
        box_inner([f] * 4, b, strategy="monte-carlo", samples=0)
