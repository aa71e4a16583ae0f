"""Prime sieves, truncated divisor sums, and the pseudo-random majorant.

The measure pipeline: strip small-prime bias with W = prod_{p <= w} p and a
residue b coprime to W, weight primes by lambda_bar, approximate with the
truncated divisor sum lambda_R, and normalize its square into a measure nu
that is 1 off a window and majorizes (a constant times) lambda_bar on it.

Desk-scale note: the default R = N^(1/(d 2^{d+5})) sits barely above 1, so
lambda_R degenerates to log R on most inputs; R is therefore overridable and
the majorization constant is recomputed for overridden R.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError
from .gridfn import GridFunction

log = logging.getLogger(__name__)

_CACHE_VERSION = "v1"


# ---------------------------------------------------------------------------
# basic sieves and primality
# ---------------------------------------------------------------------------

def prime_table(M: int) -> np.ndarray:
    """Boolean array of length M+1, True at primes."""
    if M < 1:
        return np.zeros(max(M + 1, 1), dtype=bool)
    t = np.ones(M + 1, dtype=bool)
    t[:2] = False
    for p in range(2, math.isqrt(M) + 1):
        if t[p]:
            t[p * p::p] = False
    return t


def primes_upto(M: int, segment: int = 1 << 20) -> np.ndarray:
    """Ascending primes <= M via a segmented sieve."""
    if M < 2:
        return np.zeros(0, dtype=np.int64)
    root = math.isqrt(M)
    base = np.flatnonzero(prime_table(root)).astype(np.int64)
    out = [base]
    lo = root + 1
    while lo <= M:
        hi = min(lo + segment - 1, M)
        seg = np.ones(hi - lo + 1, dtype=bool)
        for p in base:
            p = int(p)
            start = ((lo + p - 1) // p) * p
            if start < p * p:
                start = p * p
            if start <= hi:
                seg[start - lo::p] = False
        out.append(np.flatnonzero(seg).astype(np.int64) + lo)
        lo = hi + 1
    return np.concatenate(out)


def spf_table(M: int) -> np.ndarray:
    """Smallest prime factor for 0..M (spf[0] = 0, spf[1] = 1)."""
    spf = np.zeros(M + 1, dtype=np.int64)
    for p in range(2, math.isqrt(M) + 1):
        if spf[p] == 0:
            seg = spf[p * p::p]
            seg[seg == 0] = p
    rest = np.flatnonzero(spf[2:] == 0) + 2
    spf[rest] = rest
    if M >= 1:
        spf[1] = 1
    return spf


def mobius_table(M: int) -> np.ndarray:
    """Mobius function for 0..M."""
    mu = np.ones(M + 1, dtype=np.int64)
    mu[0] = 0
    for p in primes_upto(M):
        p = int(p)
        mu[p::p] *= -1
        mu[p * p::p * p] = 0
    return mu


_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all n < 2^64."""
    n = int(n)
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    k = max(2, int(n))
    while not is_prime(k):
        k += 1
    return k


def primorial(w: int) -> int:
    out = 1
    for p in range(2, w + 1):
        if is_prime(p):
            out *= p
    return out


def euler_phi_of_primorial(w: int) -> int:
    out = 1
    for p in range(2, w + 1):
        if is_prime(p):
            out *= p - 1
    return out


def factorize(n: int) -> list[tuple[int, int]]:
    """Trial-division factorization, fine for the desk-scale ranges here."""
    n = int(n)
    if n < 1:
        raise InvalidInputError("factorize needs n >= 1")
    out = []
    for p in (2, 3):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
    f = 5
    step = 2
    while f * f <= n:
        e = 0
        while n % f == 0:
            n //= f
            e += 1
        if e:
            out.append((f, e))
        f += step
        step = 6 - step
    if n > 1:
        out.append((n, 1))
    return out


# ---------------------------------------------------------------------------
# disk cache
# ---------------------------------------------------------------------------

class SieveCache:
    """Versioned numpy-array cache. Corrupt or mismatched entries are ignored
    and rebuilt; write failures degrade to in-memory with one warning."""

    def __init__(self, path=None):
        self.path = str(path) if path else None
        self.mem: dict[str, np.ndarray] = {}
        self._warned = False
        if self.path:
            try:
                os.makedirs(self.path, exist_ok=True)
            except OSError as exc:
                log.warning("cache dir unusable (%s); staying in memory", exc)
                self.path = None

    def _file(self, key: str) -> str:
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:20]
        return os.path.join(self.path, "%s_%s.npy" % (_CACHE_VERSION, digest))

    def get(self, key: str):
        if key in self.mem:
            return self.mem[key]
        if self.path:
            try:
                arr = np.load(self._file(key), allow_pickle=False)
                self.mem[key] = arr
                return arr
            except (OSError, ValueError):
                return None
        return None

    def put(self, key: str, arr: np.ndarray):
        self.mem[key] = arr
        if self.path:
            try:
                np.save(self._file(key), arr, allow_pickle=False)
            except OSError as exc:
                if not self._warned:
                    log.warning("cache write failed (%s); in-memory only", exc)
                    self._warned = True

    def prime_table(self, M: int) -> np.ndarray:
        key = "primetable:%d" % M
        hit = self.get(key)
        if hit is None or hit.size != M + 1:
            hit = prime_table(M)
            self.put(key, hit)
        return hit

    def mobius(self, M: int) -> np.ndarray:
        key = "mobius:%d" % M
        hit = self.get(key)
        if hit is None or hit.size != M + 1:
            hit = mobius_table(M)
            self.put(key, hit)
        return hit


def _round_R(R: float) -> float:
    return round(float(R), 12)


# ---------------------------------------------------------------------------
# weighted prime indicator and truncated divisor sum
# ---------------------------------------------------------------------------

def lambda_bar(n: int, W: int, b: int) -> float:
    """(phi(W)/W) log(Wn+b) when Wn+b is prime, else 0."""
    m = W * int(n) + b
    if not is_prime(m):
        return 0.0
    phi = _phi_of(W)
    return phi / W * math.log(m)


def _phi_of(W: int) -> int:
    phi = 1
    for p, e in factorize(W):
        phi *= (p - 1) * p ** (e - 1)
    return phi


def lambda_bar_vector(N: int, W: int, b: int, start: int = 0,
                      cache: SieveCache | None = None) -> np.ndarray:
    """Values lambda_bar(n) for n = start..start+N-1, sieved in one pass."""
    top = W * (start + N - 1) + b
    table = cache.prime_table(top) if cache else prime_table(top)
    n = np.arange(start, start + N, dtype=np.int64)
    m = W * n + b
    out = np.zeros(N)
    mask = table[m]
    phi = _phi_of(W)
    out[mask] = phi / W * np.log(m[mask].astype(np.float64))
    return out


def lambda_R(n: int, R: float) -> float:
    """Truncated divisor sum sum_{d | n, d <= R} mu(d) log(R/d).

    Divisors are visited in ascending order so the float sum matches the
    range-sieved evaluation bit for bit.
    """
    n = int(n)
    if n < 1:
        raise InvalidInputError("lambda_R needs n >= 1")
    if R <= 1:
        raise InvalidInputError("need R > 1")
    primes = [p for p, _ in factorize(n)]
    divisors = [1]
    for p in primes:
        divisors += [d * p for d in divisors]
    terms = []
    logR = math.log(R)
    for d in sorted(divisors):
        if d <= R:
            mu = -1 if (len([p for p in primes if d % p == 0]) % 2) else 1
            terms.append(mu * (logR - math.log(d)))
    return math.fsum(terms)


def lambda_R_range(lo: int, hi: int, R: float, W: int, b: int,
                   cache: SieveCache | None = None) -> np.ndarray:
    """lambda_R(W n + b) for n = lo..hi by progression sieving.

    Only squarefree d coprime to W can divide W n + b (gcd(b, W) = 1), and
    each contributes mu(d) log(R/d) along one residue class mod d. Divisors
    ascend, matching the per-point summation order exactly.
    """
    if lo < 0 or hi < lo:
        raise InvalidInputError("bad range")
    if math.gcd(W, b) != 1:
        raise InvalidInputError("need gcd(W, b) = 1")
    if R <= 1:
        raise InvalidInputError("need R > 1")
    key = "lamR:%d:%d:%r:%d:%d" % (lo, hi, _round_R(R), W, b)
    if cache:
        hit = cache.get(key)
        if hit is not None and hit.size == hi - lo + 1:
            return hit
    Rint = int(math.floor(R + 1e-12))
    mu = cache.mobius(Rint) if cache else mobius_table(Rint)
    logR = math.log(R)
    out = np.zeros(hi - lo + 1)
    for d in range(1, Rint + 1):
        m = int(mu[d])
        if m == 0 or math.gcd(d, W) != 1:
            continue
        # W n + b = 0 mod d  <=>  n = -b W^{-1} mod d
        winv = pow(W % d, -1, d) if d > 1 else 0
        n0 = (-b * winv) % d if d > 1 else 0
        first = lo + ((n0 - lo) % d)
        if first <= hi:
            out[first - lo::d] += m * (logR - math.log(d))
    if cache:
        cache.put(key, out)
    return out


# ---------------------------------------------------------------------------
# measure parameters and the measure itself
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureParams:
    """Window measure parameters on Z_N.

    N is any modulus >= 4 here (primality is a basis concern, enforced where
    mod-N inversion happens); d parameterizes the default R exponent.
    """
    N: int
    d: int
    w: int
    W: int
    b: int
    R: float
    eps1: float
    eps2: float
    R_is_default: bool = True

    def __post_init__(self):
        if self.N < 4:
            raise InvalidInputError("need N >= 4")
        if self.d < 1:
            raise InvalidInputError("need d >= 1")
        if self.w < 2:
            raise InvalidInputError("need w >= 2")
        if self.W != primorial(self.w):
            raise InvalidInputError("W must be the product of primes <= w")
        if not (1 <= self.b and math.gcd(self.b, self.W) == 1):
            raise InvalidInputError("b must be >= 1 and coprime to W")
        if not (0 < self.eps1 < self.eps2 < 1):
            raise InvalidInputError("need 0 < eps1 < eps2 < 1")
        if not (1 < self.R < self.eps1 * self.N):
            raise InvalidInputError("need 1 < R < eps1*N")

    @property
    def window(self) -> tuple[int, int]:
        lo = math.ceil(self.eps1 * self.N - 1e-9)
        hi = math.floor(self.eps2 * self.N + 1e-9)
        return lo, hi

    def majorization_constant(self) -> float:
        """Constant c with nu >= c * lambda_bar on the window: the generic
        d-dependent constant for the default R, recomputed from the actual
        R otherwise."""
        if self.R_is_default:
            return 1.0 / (self.d * 2 ** (self.d + 6))
        phi = euler_phi_of_primorial(self.w)
        return (phi / self.W) * math.log(self.R) / math.log(self.W * self.N + self.b)


def default_R(N: int, d: int) -> float:
    return float(N) ** (1.0 / (d * 2 ** (d + 5)))


def default_w(N: int) -> int:
    return max(2, int(math.floor(math.log(math.log(N)))))


def make_measure_params(N: int, d: int, w: int | None = None,
                        b: int = 1, R: float | None = None,
                        eps1: float = 0.1, eps2: float = 0.9) -> MeasureParams:
    if d < 1:
        raise InvalidInputError("need d >= 1")
    if w is not None and w < 2:
        raise InvalidInputError("need w >= 2")
    if w is None:
        w = default_w(N)
    W = primorial(w)
    R_is_default = R is None
    if R is None:
        R = default_R(N, d)
    return MeasureParams(N=N, d=d, w=w, W=W, b=b, R=float(R),
                         eps1=eps1, eps2=eps2, R_is_default=R_is_default)


def green_tao_nu(params: MeasureParams,
                 cache: SieveCache | None = None) -> GridFunction:
    """The window measure nu on Z_N: 1 off the window, normalized squared
    divisor sum on it. Nonnegative by construction."""
    N = params.N
    lo, hi = params.window
    vals = np.ones(N)
    lam = lambda_R_range(lo, hi, params.R, params.W, params.b, cache)
    phi = euler_phi_of_primorial(params.w)
    vals[lo:hi + 1] = (phi / params.W) * lam * lam / math.log(params.R)
    return GridFunction(N, 1, vals, nonneg=True)


def majorization_check(params: MeasureParams, nu: GridFunction,
                       cache: SieveCache | None = None) -> dict:
    """Scan the window for nu(n) >= c * lambda_bar(n); returns the constant,
    the minimum slack, and the first violation if any."""
    lo, hi = params.window
    lam_bar = lambda_bar_vector(hi - lo + 1, params.W, params.b, start=lo,
                                cache=cache)
    c = params.majorization_constant()
    seg = nu.values[lo:hi + 1]
    slack = seg - c * lam_bar
    bad = np.flatnonzero(slack < -1e-12)
    return {
        "constant": c,
        "min_slack": float(np.min(slack)) if slack.size else 0.0,
        "violations": int(bad.size),
        "first_violation": int(bad[0] + lo) if bad.size else None,
        "window": [lo, hi],
    }


def choose_b(A_indicator, N: int, W: int, d: int,
             cache: SieveCache | None = None) -> int:
    """Residue b (coprime to W) maximizing N^{-d} sum_x 1_A(x) prod_i
    lambda_bar_b(x_i) over x in [1, N]^d; smallest b wins ties.

    A_indicator: None (empty set), a dense boolean array indexed by x - 1,
    or a vectorized callable on (k, d) integer point arrays.
    """
    best_b, best_score = None, None
    for b in range(1, W + 1):
        if math.gcd(b, W) != 1:
            continue
        lam = lambda_bar_vector(N, W, b, start=1, cache=cache)
        score = _weighted_density(A_indicator, lam, N, d)
        if best_score is None or score > best_score:
            best_b, best_score = b, score
    return best_b


def _weighted_density(A_indicator, lam: np.ndarray, N: int, d: int) -> float:
    if A_indicator is None:
        return 0.0
    if isinstance(A_indicator, np.ndarray):
        acc = A_indicator.astype(np.float64)
        for _ in range(d):
            acc = np.tensordot(acc, lam, axes=([0], [0]))
        return float(acc) / N ** d
    support = np.flatnonzero(lam > 0) + 1  # lattice coordinates
    if support.size == 0:
        return 0.0
    total = 0.0
    # mesh over the support only; everything else has zero weight
    mesh = np.stack(np.meshgrid(*([support] * d), indexing="ij"),
                    axis=-1).reshape(-1, d)
    step = 1 << 18
    for i in range(0, mesh.shape[0], step):
        pts = mesh[i:i + step]
        inside = np.asarray(A_indicator(pts), dtype=bool)
        if inside.any():
            w = np.ones(inside.sum())
            sel = pts[inside]
            for j in range(d):
                w *= lam[sel[:, j] - 1]
            total += float(np.sum(w))
    return total / N ** d
