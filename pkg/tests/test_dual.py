"""Dual functions: pairing identity, collapse cases, probe reports."""

import json

import numpy as np
import pytest

from constlab import (
    Basis,
    GridFunction,
    InvalidInputError,
    box_norm,
    dual_function,
    pairing,
    qap_probe,
)
from constlab.rng import substream


def rand_fn(N, d, seed):
    rng = substream(seed, "test-dual", N, d)
    return GridFunction(N, d, rng.uniform(-1.0, 1.0, size=(N,) * d))


def rand_basis(N, d, seed):
    rng = substream(seed, "test-dual-basis", N, d)
    while True:
        vecs = tuple(tuple(int(c) for c in rng.integers(0, N, size=d))
                     for _ in range(d))
        try:
            return Basis(vecs, N)
        except InvalidInputError:
            continue


def test_pairing_identity_many_probes():
    # <f, Df> = ||f||^{2^d} for every f, every direction set
    for seed in range(30):
        d = 1 + seed % 3
        N = 7
        b = rand_basis(N, d, seed)
        f = rand_fn(N, d, seed)
        df = dual_function(f, b)
        want = box_norm(f, b) ** (2 ** d)
        assert abs(pairing(f, df) - want) < 1e-10


def test_dual_naive_equals_factored():
    for seed in range(8):
        d = 1 + seed % 2
        b = rand_basis(7, d, seed + 100)
        f = rand_fn(7, d, seed + 100)
        a = dual_function(f, b, strategy="naive")
        c = dual_function(f, b, strategy="factored")
        assert np.allclose(a.values, c.values, atol=1e-12)


def test_dual_d1_is_constant_mean():
    # at d = 1 the dual is the constant E(f) regardless of direction
    N = 11
    f = rand_fn(N, 1, 0)
    for e in (1, 2, 5):
        df = dual_function(f, Basis(((e,),), N))
        assert np.allclose(df.values, f.expectation(), atol=1e-14)


def test_dual_of_constant():
    b = Basis(((1, 2), (2, 1)), 7)
    c = GridFunction.constant(7, 2, 3.0)
    df = dual_function(c, b)
    assert np.allclose(df.values, 3.0 ** 3, atol=1e-12)


def test_dual_validation():
    f = rand_fn(7, 2, 1)
    with pytest.raises(InvalidInputError):
        dual_function(f, Basis(((1, 2), (2, 1)), 11))
    with pytest.raises(InvalidInputError):
        dual_function(f, Basis(((1, 2), (2, 1)), 7), strategy="bogus")


def test_qap_probe_report():
    N = 7
    mu = GridFunction(N, 2, np.abs(rand_fn(N, 2, 50).values) + 0.1, nonneg=True)
    b = Basis(((1, 2), (2, 1)), N)
    rep = qap_probe(mu, b, probes=6, seed=3)
    assert rep.N == N and rep.d == 2
    assert rep.n_probes == 6 + 3            # six random plus three structured
    assert rep.pairing_identity_max_err < 1e-10
    assert rep.upper >= max(v for _, v, _ in rep.lower_curve)
    # curve thresholds descend and counts can only grow as eps shrinks
    epss = [e for e, _, _ in rep.lower_curve]
    counts = [c for _, _, c in rep.lower_curve]
    assert epss == sorted(epss, reverse=True)
    assert counts == sorted(counts)
    # lower bounds are certified: nonnegative pairing ratios only
    for _, v in rep.product_bounds:
        assert v >= 0.0
    # deterministic given the seed
    rep2 = qap_probe(mu, b, probes=6, seed=3)
    assert rep.to_json() == rep2.to_json()
    payload = json.loads(rep.to_json())
    assert payload["N"] == N and len(payload["lower_curve"]) == len(epss)


def test_qap_probe_validation():
    mu = GridFunction.constant(7, 2, 1.0)
    with pytest.raises(InvalidInputError):
        qap_probe(mu, Basis(((1, 2), (2, 1)), 7), probes=0, seed=1)
