"""Dual functions of the box norm and probe-based norm evidence.

The dual of f along directions e is

    Df(x) = E( prod_{w != 0} f(x + w_1 t_1 e_1 + ... + w_d t_d e_d) : t ),

the unique function with <f, Df> = ||f||^{2^d}. Only certified lower bounds
on dual-space norms are computable by probing, so `qap_probe` reports
evidence (max/min pairings over a probe family), never a pass/fail verdict.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .gridfn import (GridFunction, compensated_sum, expectation, pointwise,
                     random_probe, translate_values)
from .lattice import Basis
from .boxnorm import box_norm, change_of_basis, inverse_change_of_basis

_RATIO_FLOOR = 1e-8


def pairing(f: GridFunction, g: GridFunction) -> float:
    """<f, g> = E(f g), compensated."""
    if f.N != g.N or f.d != g.d:
        raise InvalidInputError("grid mismatch")
    return compensated_sum(f.values * g.values) / float(f.N ** f.d)


def _dual_naive(f: GridFunction, basis: Basis) -> GridFunction:
    N, d = f.N, f.d
    vectors = basis.mod_vectors()
    acc = np.zeros((N,) * d)
    idx = [0] * d
    while True:
        prod = None
        for omega in range(1, 2 ** d):
            s = [0] * d
            for i in range(d):
                if (omega >> i) & 1:
                    for j in range(d):
                        s[j] += idx[i] * vectors[i][j]
            shifted = translate_values(f.values, [c % N for c in s], N)
            prod = shifted if prod is None else prod * shifted
        acc += prod
        j = 0
        while j < d:
            idx[j] += 1
            if idx[j] < N:
                break
            idx[j] = 0
            j += 1
        if j == d:
            break
    return GridFunction(N, d, acc / float(N ** d))


def _dual_std(values: np.ndarray, N: int, d: int) -> np.ndarray:
    """Standard-basis dual by contraction: output letters are the base point,
    capital letters the averaged t-mixed coordinates."""
    if d == 1:
        return np.full(N, float(np.sum(values)) / N)
    lower = string.ascii_lowercase
    upper = string.ascii_uppercase
    subs = []
    ops = []
    for omega in range(1, 2 ** d):
        subs.append("".join(upper[i] if (omega >> i) & 1 else lower[i]
                            for i in range(d)))
        ops.append(values)
    out = "".join(lower[i] for i in range(d))
    res = np.einsum(",".join(subs) + "->" + out, *ops, optimize=True)
    return res / float(N ** d)


def dual_function(f: GridFunction, basis: Basis,
                  strategy: str = "factored") -> GridFunction:
    """Df along `basis`; factored route transforms to the standard
    directions, contracts, and transforms back."""
    if basis.modulus != f.N or basis.d != f.d or basis.l != f.d:
        raise InvalidInputError("basis incompatible with grid")
    if strategy == "naive":
        return _dual_naive(f, basis)
    if strategy != "factored":
        raise InvalidInputError("unknown strategy %r" % strategy)
    g = change_of_basis(f, basis)
    dg = GridFunction(f.N, f.d, _dual_std(g.values, f.N, f.d))
    return inverse_change_of_basis(dg, basis)


# ---------------------------------------------------------------------------
# probe report
# ---------------------------------------------------------------------------

@dataclass
class QapReport:
    N: int
    d: int
    basis: tuple
    n_probes: int
    seed: int
    upper: float
    lower_curve: list  # [eps, min <f,Df> among probes with ||f|| >= eps, count]
    product_bounds: list  # [K, certified lower bound on ||Df_1..Df_K||*]
    pairing_identity_max_err: float
    norms: list = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "N": self.N, "d": self.d,
            "basis": [list(v) for v in self.basis],
            "n_probes": self.n_probes, "seed": self.seed,
            "upper": self.upper,
            "lower_curve": [[e, v, c] for (e, v, c) in self.lower_curve],
            "product_bounds": [[k, v] for (k, v) in self.product_bounds],
            "pairing_identity_max_err": self.pairing_identity_max_err,
            "norms": self.norms,
        }
        return json.dumps(payload, sort_keys=True)


def _structured_probes(mu: GridFunction) -> list[GridFunction]:
    """Box indicators and real characters, scaled under mu."""
    N, d = mu.N, mu.d
    grids = np.indices((N,) * d)
    probes = []
    box = np.ones((N,) * d, dtype=bool)
    for i in range(d):
        box &= grids[i] < max(1, N // 2)
    probes.append(GridFunction(N, d, mu.values * box))
    for xi in ([1] + [0] * (d - 1), [1] * d):
        phase = sum(int(c) * grids[i] for i, c in enumerate(xi))
        probes.append(GridFunction(N, d, mu.values * np.cos(2 * np.pi * phase / N)))
    return probes


def qap_probe(mu: GridFunction, basis: Basis, probes: int, seed: int,
              eps_grid=(0.5, 0.25, 0.1, 0.05, 0.01)) -> QapReport:
    """Probe the quasi-algebra properties of the dual along `basis` with
    random signed scalings of mu plus structured probes, all |f| <= mu."""
    if probes < 1:
        raise InvalidInputError("need at least one probe")
    fam = [random_probe(mu.N, mu.d, mu, seed + 1000 + k) for k in range(probes)]
    fam += _structured_probes(mu)

    norms, pairings, duals = [], [], []
    max_err = 0.0
    for f in fam:
        df = dual_function(f, basis)
        nf = box_norm(f, basis)
        pr = pairing(f, df)
        max_err = max(max_err, abs(pr - nf ** (2 ** basis.d)))
        norms.append(nf)
        pairings.append(pr)
        duals.append(df)

    upper = max(pairings)
    curve = []
    for eps in eps_grid:
        vals = [p for p, n in zip(pairings, norms) if n >= eps]
        if vals:
            curve.append((float(eps), min(vals), len(vals)))

    product_bounds = []
    prod = None
    for K in range(1, min(3, len(duals)) + 1):
        prod = duals[K - 1] if prod is None else pointwise(np.multiply, prod,
                                                           duals[K - 1])
        best = 0.0
        for f, nf in zip(fam, norms):
            if nf < _RATIO_FLOOR:
                continue
            best = max(best, pairing(f, prod) / nf)
        product_bounds.append((K, best))

    return QapReport(N=mu.N, d=mu.d, basis=tuple(basis.vectors),
                     n_probes=len(fam), seed=seed, upper=upper,
                     lower_curve=curve, product_bounds=product_bounds,
                     pairing_identity_max_err=max_err,
                     norms=[float(n) for n in norms])
