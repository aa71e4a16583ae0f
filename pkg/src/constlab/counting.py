"""Constellation counting: the (d+1)-point average, empirical von Neumann
probes, wraparound unwrapping, exhaustive search, and the end-to-end
prime-constellation pipeline.

The pipeline restricts to product-form target sets (each coordinate filtered
by the same one-dimensional predicate); that covers the prime grid P^d and
keeps every scan separable, so nothing d-dimensional is ever materialized.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .boxnorm import MCEstimate, box_norm
from .errors import (InternalInconsistencyError, InvalidInputError,
                     PreconditionError)
from .gridfn import GridFunction, compensated_sum, translate_values
from .lattice import Basis, derived_basis, primitive_part, segment_geometry
from .rng import substream
from .sieve import (SieveCache, green_tao_nu, lambda_bar_vector,
                    majorization_check, make_measure_params, next_prime,
                    prime_table)

_MC_BLOCK = 1 << 15
_NORM_FLOOR = 1e-8


@dataclass(frozen=True)
class Constellation:
    """x together with x + t*e_i for every vector e_i, t a nonzero scalar."""
    x: tuple
    t: int
    vectors: tuple
    genuine: bool = True

    def __post_init__(self):
        if self.t == 0:
            raise InvalidInputError("constellations need t != 0")
        object.__setattr__(self, "x", tuple(int(c) for c in self.x))
        object.__setattr__(self, "vectors",
                           tuple(tuple(int(c) for c in v)
                                 for v in self.vectors))

    @property
    def points(self) -> tuple:
        pts = [self.x]
        for v in self.vectors:
            pts.append(tuple(c + self.t * vc for c, vc in zip(self.x, v)))
        return tuple(pts)


def _as_vectors(e) -> tuple:
    if isinstance(e, Basis):
        return e.vectors
    return tuple(tuple(int(c) for c in v) for v in e)


# ---------------------------------------------------------------------------
# counting average
# ---------------------------------------------------------------------------

def count_average(f: GridFunction, basis: Basis, strategy: str = "exact",
                  samples: int = 1 << 20, seed: int = 0):
    """Average over (x, t) of f(x) * prod_i f(x + t e_i), t ranging over all
    of Z_N including 0."""
    if f.N != basis.modulus or f.d != basis.ambient_dim:
        raise InvalidInputError("function and basis shapes disagree")
    if basis.l != basis.ambient_dim:
        raise InvalidInputError("need as many vectors as dimensions")
    N, d = f.N, f.d
    vecs = basis.vectors

    if strategy == "exact":
        per_t = []
        for t in range(N):
            prod = f.values.copy()
            for v in vecs:
                prod *= translate_values(f.values, tuple(t * c for c in v), N)
            per_t.append(float(np.sum(prod)))
        return math.fsum(per_t) / N ** (d + 1)

    if strategy != "monte-carlo":
        raise InvalidInputError("unknown strategy %r" % strategy)
    if samples < 2:
        raise InvalidInputError("need at least 2 samples")
    strides = np.array([N ** j for j in range(d)], dtype=np.int64)
    flat = f.flat()
    tot = tot_sq = 0.0
    done = k = 0
    E = np.array(vecs, dtype=np.int64)
    while done < samples:
        n = min(_MC_BLOCK, samples - done)
        rng = substream(seed, "count-mc", k)
        x = rng.integers(0, N, size=(n, d))
        t = rng.integers(0, N, size=n)
        val = flat[x @ strides]
        for i in range(d):
            pt = (x + t[:, None] * E[i]) % N
            val = val * flat[pt @ strides]
        tot += float(np.sum(val))
        tot_sq += float(np.sum(val * val))
        done += n
        k += 1
    mean = tot / samples
    var = max(tot_sq / samples - mean * mean, 0.0)
    return MCEstimate(value=mean, stderr=math.sqrt(var / samples),
                      samples=samples)


def von_neumann_probe(mu: GridFunction, basis: Basis, probes: int = 20,
                      seed: int = 0, strategy: str = "exact",
                      samples: int = 1 << 20) -> dict:
    """For probe functions dominated by mu, record |Lambda f| against the
    box norm taken in the derived direction set. Probe 0 is mu itself; odd
    probes are signed (|f| <= mu), even ones nonnegative (0 <= f <= mu)."""
    eprime = derived_basis(basis)
    pairs = []
    for k in range(probes):
        if k == 0:
            fvals = mu.values.copy()
        else:
            rng = substream(seed, "vn-probe", k)
            u = rng.random(mu.values.shape)
            if k % 2:
                fvals = (2.0 * u - 1.0) * mu.values
            else:
                fvals = u * mu.values
        f = GridFunction(mu.N, mu.d, fvals)
        lam = count_average(f, basis, strategy=strategy, samples=samples,
                            seed=seed + k)
        lam_val = lam.value if isinstance(lam, MCEstimate) else lam
        bn = box_norm(f, eprime, strategy="factored")
        ratio = abs(lam_val) / bn if bn >= _NORM_FLOOR else None
        pairs.append({"box_norm": bn, "abs_lambda": abs(lam_val),
                      "ratio": ratio, "signed": bool(k % 2 and k > 0)})
    ratios = [p["ratio"] for p in pairs if p["ratio"] is not None]
    return {
        "N": mu.N, "d": mu.d, "probes": probes, "seed": seed,
        "strategy": strategy,
        "vectors": [list(v) for v in basis.vectors],
        "derived_vectors": [list(v) for v in eprime.vectors],
        "pairs": pairs,
        "max_ratio": max(ratios) if ratios else None,
    }


# ---------------------------------------------------------------------------
# unwrapping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnwrapResult:
    """Scalar t_prime with x + t_prime * v genuine for the primitive
    direction vectors v; scale relates them to the original set
    (e = scale * vectors)."""
    t_prime: int
    scale: int
    vectors: tuple


def _in_box(point, lo: int, hi: int) -> bool:
    return all(lo <= c <= hi for c in point)


def unwrap(x, t: int, basis: Basis, interval: tuple) -> UnwrapResult | None:
    """Lift a mod-N constellation hit inside the box I^d back to a genuine
    one in Z^d, shifting t by 0 or -N (after reduction to the primitive
    direction set).

    Returns None when the hit does not actually satisfy the hypotheses
    (x or a translate outside the box, or t degenerate); raises if the box
    is too large relative to the direction geometry, or if both candidate
    scalars fail while every hypothesis holds.
    """
    lo, hi = int(interval[0]), int(interval[1])
    N = basis.modulus
    if not (0 <= lo <= hi < N):
        raise InvalidInputError("box interval must sit inside [0, N)")
    flat = tuple(c for v in basis.vectors for c in v)
    scale, prim = primitive_part(flat)
    geom = segment_geometry(prim)
    if Fraction(hi - lo, N) >= geom.tau:
        raise PreconditionError(
            "box side %d/%d is not below the unwrap threshold %s"
            % (hi - lo, N, geom.tau))
    d = basis.ambient_dim
    pvecs = tuple(tuple(prim[i * d:(i + 1) * d]) for i in range(basis.l))

    x = tuple(int(c) % N for c in x)
    if not _in_box(x, lo, hi):
        return None
    for v in basis.vectors:
        pt = tuple((c + t * vc) % N for c, vc in zip(x, v))
        if not _in_box(pt, lo, hi):
            return None

    u = (t * scale) % N
    if u == 0:
        return None
    for cand in (u, u - N):
        if all(_in_box(tuple(c + cand * vc for c, vc in zip(x, v)), lo, hi)
               for v in pvecs):
            return UnwrapResult(t_prime=cand, scale=scale, vectors=pvecs)
    raise InternalInconsistencyError(
        "unwrap hypotheses hold but neither t nor t-N is genuine at "
        "x=%r t=%d" % (x, t))


# ---------------------------------------------------------------------------
# exhaustive search
# ---------------------------------------------------------------------------

def find_constellations(A: Iterable, e, t_max: int | None = None) -> list:
    """All (x, t) with x in A, 0 < |t| <= t_max, and every x + t e_i in A,
    as genuine integer constellations."""
    vecs = _as_vectors(e)
    points = {tuple(int(c) for c in p) for p in A}
    if not points:
        return []
    if t_max is None:
        bound = max(max(abs(c) for c in p) for p in points)
        step = min(max(abs(c) for c in v) for v in vecs)
        t_max = max(1, math.ceil(bound / step))
    if t_max < 1:
        raise InvalidInputError("need t_max >= 1")
    out = []
    for t in range(-t_max, t_max + 1):
        if t == 0:
            continue
        for x in points:
            if all(tuple(c + t * vc for c, vc in zip(x, v)) in points
                   for v in vecs):
                out.append(Constellation(x=x, t=t, vectors=vecs))
    out.sort(key=lambda c: (c.t, c.x))
    return out


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _coordinate_predicate(A) -> Callable[[np.ndarray], np.ndarray]:
    """Per-coordinate membership test for the supported product-form sets."""
    if A is None or A == "primes":
        return None  # resolved against a prime table once N is known
    if A == "all":
        return lambda a: np.ones(len(a), dtype=bool)
    if A == "empty":
        return lambda a: np.zeros(len(a), dtype=bool)
    if callable(A):
        return A
    raise InvalidInputError(
        "A must be 'primes', 'all', 'empty', or a per-coordinate predicate")


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float
    vectors: tuple
    N_prime: int
    N: int
    d: int
    w: int
    W: int
    b: int
    R: float
    eps1: float
    eps2: float
    c_d: float
    tau: tuple
    eps2_shrunk: bool
    seed: int
    samples: int


def _plan_scales(alpha: float, vectors, N_prime: int):
    """Choose eps2 below the unwrap threshold, then the prime modulus N with
    (1 - alpha/(100 d)) N' <= eps2 N <= N', shrinking eps2 onto N'/N when the
    prime overshoots the upper bound."""
    d = len(vectors[0])
    flat = tuple(c for v in vectors for c in v)
    geom = segment_geometry(flat)
    tau = geom.tau
    eps2 = min(Fraction(1, 2), Fraction(3, 4) * tau)
    slack = 1 - Fraction(alpha).limit_denominator(10 ** 6) / (100 * d)
    lower = int(math.ceil(slack * N_prime / eps2))
    N = next_prime(max(lower, 5))
    shrunk = False
    if eps2 * N > N_prime:
        eps2 = Fraction(N_prime, N)
        shrunk = True
    if not (slack * N_prime <= eps2 * N <= N_prime):
        raise InternalInconsistencyError("scale planning broke its invariant")
    return geom, eps2, N, shrunk


def run_pipeline(A, alpha: float, e, N_prime: int, w: int | None = None,
                 R: float | None = None, samples: int = 1 << 18,
                 seed: int = 0, cache: SieveCache | None = None,
                 max_emit: int = 500) -> dict:
    """End-to-end search: scale planning, measure construction, the
    density-weighted g with its domination check against the product
    measure, count statistics, and the unwrapped genuine constellations."""
    vectors = _as_vectors(e)
    d = len(vectors[0])
    if any(len(v) != d for v in vectors) or len(vectors) != d:
        raise InvalidInputError("need d vectors of dimension d")
    if not (0 < alpha <= 1):
        raise InvalidInputError("alpha must lie in (0, 1]")
    if N_prime < 100:
        raise InvalidInputError("initial scale too small to window")

    geom, eps2_frac, N, shrunk = _plan_scales(alpha, vectors, N_prime)
    basis = Basis(vectors, N)
    eps1_frac = eps2_frac * Fraction(alpha).limit_denominator(10 ** 6) / (100 * d)
    params = make_measure_params(N, d, w=w, b=1, R=R,
                                 eps1=float(eps1_frac), eps2=float(eps2_frac))
    W = params.W
    if W != 2:
        # b = 1 is forced only for W = 2; other W would need the residue
        # selection sweep, which desk scales never exercise
        raise InvalidInputError("pipeline currently fixes w = 2 (W = 2)")
    c_d = float(d) ** (-d) * 2.0 ** (-(d * d) - 6 * d)
    cfg = PipelineConfig(
        alpha=alpha, vectors=vectors, N_prime=N_prime, N=N, d=d,
        w=params.w, W=W, b=params.b, R=params.R,
        eps1=float(eps1_frac), eps2=float(eps2_frac), c_d=c_d,
        tau=(geom.tau.numerator, geom.tau.denominator),
        eps2_shrunk=shrunk, seed=seed, samples=samples)

    nu = green_tao_nu(params, cache)
    if float(np.min(nu.values)) < 0:
        raise InternalInconsistencyError("nu went negative")
    lo, hi = params.window
    off = np.concatenate([nu.values[:lo], nu.values[hi + 1:]])
    if off.size and (np.min(off) != 1.0 or np.max(off) != 1.0):
        raise InternalInconsistencyError("nu must be 1 off the window")
    major = majorization_check(params, nu, cache)

    # per-coordinate factor u(a) = lambda_bar(a) * 1_window(a) * 1_A(a);
    # g(x) = c_d * prod_j u(x_j), mu(x) = prod_j nu(x_j)
    pred = _coordinate_predicate(A)
    coords = np.arange(lo, hi + 1, dtype=np.int64)
    if pred is None:
        table = prime_table(hi + 1)
        amask = table[coords]
    else:
        amask = np.asarray(pred(coords), dtype=bool)
        if amask.shape != coords.shape:
            raise InvalidInputError("predicate must return one flag per point")
    lam_bar = lambda_bar_vector(hi - lo + 1, W, params.b, start=lo,
                                cache=cache)
    u = np.zeros(N)
    u[lo:hi + 1] = lam_bar * amask
    support = np.flatnonzero(u)

    # domination scan: rows of the window grid through each support value
    max_ratio = 0.0
    nu_win = nu.values[lo:hi + 1]
    for a in support:
        grow = c_d * u[a] * u[lo:hi + 1]
        mrow = nu.values[a] * nu_win
        bad = grow > mrow
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0]) + lo
            raise InternalInconsistencyError(
                "g exceeds mu at x = (%d, %d)" % (int(a), j))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(mrow > 0, grow / mrow, 0.0)
        max_ratio = max(max_ratio, float(np.max(r)))

    mean_u = float(compensated_sum(u)) / N
    e_g = c_d * mean_u ** d

    # Monte-Carlo Lambda g (the exact separable scan below is the oracle)
    E = np.array(vectors, dtype=np.int64)
    tot = tot_sq = 0.0
    done = k = 0
    while done < samples:
        n = min(_MC_BLOCK, samples - done)
        rng = substream(seed, "pipeline-count", k)
        x = rng.integers(0, N, size=(n, d))
        t = rng.integers(0, N, size=n)
        val = np.full(n, c_d)
        for j in range(d):
            val = val * u[x[:, j]]
        for i in range(d):
            pts = (x + t[:, None] * E[i]) % N
            v = np.full(n, c_d)
            for j in range(d):
                v = v * u[pts[:, j]]
            val = val * v
        tot += float(np.sum(val))
        tot_sq += float(np.sum(val * val))
        done += n
        k += 1
    mc_mean = tot / samples
    mc_var = max(tot_sq / samples - mc_mean * mc_mean, 0.0)

    # exact separable scan: Lambda g = c_d^{d+1} E_t prod_j m_j(t) with
    # m_j(t) = E_a u(a) prod_i u(a + t E[i][j]); the t = 0 term is the
    # trivial contribution, subtracted exactly
    sup_vals = u[support]
    per_t = np.empty(N)
    hits = []
    wrapped_count = 0
    for t in range(N):
        prod_m = 1.0
        cand_lists = []
        for j in range(d):
            vals = sup_vals.copy()
            for i in range(d):
                vals = vals * u[(support + t * int(E[i][j])) % N]
            m_j = float(np.sum(vals)) / N
            prod_m *= m_j
            if t > 0:
                cand_lists.append(support[vals > 0])
        per_t[t] = prod_m
        if t > 0 and prod_m > 0 and all(len(c) for c in cand_lists):
            n_hits = 1
            for c in cand_lists:
                n_hits *= len(c)
            wrapped_count += n_hits
            hits.append((t, cand_lists))
    lambda_g_exact = c_d ** (d + 1) * float(compensated_sum(per_t)) / N
    trivial = c_d ** (d + 1) * per_t[0] / N

    genuine = []
    unwrap_failures = []
    for t, cand_lists in hits:
        for x in _product_points(cand_lists):
            res = unwrap(x, t, basis, (lo, hi))
            if res is None:
                unwrap_failures.append({"x": list(x), "t": t})
                continue
            genuine.append(Constellation(x=x, t=res.t_prime,
                                         vectors=res.vectors))
    genuine.sort(key=lambda c: (abs(c.t), c.t, c.x))

    return {
        "config": {
            "alpha": cfg.alpha, "vectors": [list(v) for v in cfg.vectors],
            "N_prime": cfg.N_prime, "N": cfg.N, "d": cfg.d, "w": cfg.w,
            "W": cfg.W, "b": cfg.b, "R": cfg.R, "eps1": cfg.eps1,
            "eps2": cfg.eps2, "c_d": cfg.c_d, "tau": list(cfg.tau),
            "eps2_shrunk": cfg.eps2_shrunk, "seed": cfg.seed,
            "samples": cfg.samples, "window": [lo, hi],
        },
        "measure": {
            "mean_nu": float(nu.expectation()),
            "majorization": major,
        },
        "g": {
            "mean_g": e_g,
            "support_per_coordinate": int(len(support)),
            "domination_max_ratio": max_ratio,
            "domination_rows_scanned": int(len(support)),
        },
        "count": {
            "lambda_g_mc": {"value": mc_mean,
                            "stderr": math.sqrt(mc_var / samples),
                            "samples": samples},
            "lambda_g_exact": lambda_g_exact,
            "trivial_term": trivial,
            "nontrivial_exact": lambda_g_exact - trivial,
            "wrapped_hits": int(wrapped_count),
            "genuine_found": len(genuine),
            "unwrap_failures": unwrap_failures,
        },
        "constellations": [
            {"x": list(c.x), "t": c.t, "points": [list(p) for p in c.points],
             "genuine": c.genuine}
            for c in genuine[:max_emit]
        ],
    }


def _product_points(cand_lists):
    for combo in itertools.product(*[list(map(int, c)) for c in cand_lists]):
        yield combo
