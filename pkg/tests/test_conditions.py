"""Linear-forms, correlation, and local-factor condition checks."""

import math
from fractions import Fraction

import numpy as np
import pytest

from constlab import (
    CorrelationSpec,
    GridFunction,
    InvalidInputError,
    LinearFormFamily,
    ThetaSystem,
    euler_factor_identity_check,
    omega_X,
    tau_weight,
    verify_correlation,
    verify_linear_forms,
    verify_local_factor_cases,
)
from constlab.conditions import (
    default_theta_system,
    default_X_collection,
    euler_factor2_exact_zero,
    euler_factor_direct,
    omega_table,
    tau_moments,
    tau_vector,
)
from constlab.rng import substream

AP3 = LinearFormFamily(coeffs=((1, 0), (1, 1), (1, 2)), shifts=(0, 0, 0))


def rand_nu(N, seed):
    rng = substream(seed, "test-cond")
    return GridFunction(N, 1, rng.uniform(0.2, 2.0, size=N), nonneg=True)


def random_theta_system(seed):
    rng = substream(seed, "test-theta")
    while True:
        m1 = int(rng.integers(1, 3))
        m0 = int(rng.integers(1, 4))
        r = int(rng.integers(2, 4))
        forms = tuple(tuple(int(c) for c in rng.integers(-5, 6, size=r))
                      for _ in range(m1))
        shifts = tuple(tuple(int(h) for h in rng.choice(20, size=m0,
                                                        replace=False))
                       for _ in range(m1))
        try:
            return ThetaSystem(forms=forms, shifts=shifts, w=2, b=1)
        except InvalidInputError:
            continue


# -- linear forms -----------------------------------------------------------

def test_family_validation():
    assert AP3.m == 3 and AP3.t == 2
    with pytest.raises(InvalidInputError):
        LinearFormFamily(coeffs=((0, 0), (1, 1)), shifts=(0, 0))
    with pytest.raises(InvalidInputError):
        LinearFormFamily(coeffs=((1, 2), (2, 4)), shifts=(0, 0))  # dependent
    with pytest.raises(InvalidInputError):
        LinearFormFamily(coeffs=((1, 2), (1,)), shifts=(0, 0))
    with pytest.raises(InvalidInputError):
        LinearFormFamily(coeffs=((1, 2),), shifts=(0, 1))


def test_linear_forms_control_is_exactly_one():
    one = GridFunction.constant(101, 1, 1.0)
    est = verify_linear_forms(one, AP3)
    assert est.value == 1.0 and est.exact and est.stderr == 0.0
    assert est.samples == 101 ** 2


def test_linear_forms_exact_matches_bruteforce():
    N = 31
    nu = rand_nu(N, 1)
    est = verify_linear_forms(nu, AP3)
    assert est.exact
    total = 0.0
    for x in range(N):
        for h in range(N):
            total += (nu.at((x,)) * nu.at(((x + h),)) * nu.at(((x + 2 * h),)))
    assert abs(est.value - total / N ** 2) < 1e-12


def test_linear_forms_mc_within_three_sigma_and_reproducible():
    N = 101
    nu = rand_nu(N, 2)
    exact = verify_linear_forms(nu, AP3).value
    mc = verify_linear_forms(nu, AP3, samples=1 << 16, seed=7,
                             enumeration_limit=1)
    assert not mc.exact and mc.samples == 1 << 16
    assert abs(mc.value - exact) < 3 * mc.stderr + 1e-12
    mc2 = verify_linear_forms(nu, AP3, samples=1 << 16, seed=7,
                              enumeration_limit=1)
    assert mc.value == mc2.value and mc.stderr == mc2.stderr
    mc3 = verify_linear_forms(nu, AP3, samples=1 << 16, seed=8,
                              enumeration_limit=1)
    assert mc.value != mc3.value


def test_linear_forms_validation():
    nu2 = GridFunction.constant(7, 2, 1.0)
    with pytest.raises(InvalidInputError):
        verify_linear_forms(nu2, AP3)
    wide = LinearFormFamily(
        coeffs=tuple(tuple(1 if j == i else 0 for j in range(13))
                     for i in range(13)),
        shifts=tuple(0 for _ in range(13)))
    with pytest.raises(InvalidInputError):
        verify_linear_forms(GridFunction.constant(3, 1, 1.0), wide)


# -- tau weight -------------------------------------------------------------

def test_tau_values():
    spec = CorrelationSpec(forms=((1,),), shifts=((0, 1),), w=2)
    N = 1001
    assert tau_weight(1, spec, N) == 1.0
    assert tau_weight(N - 1, spec, N) == 1.0          # representative -1
    assert abs(tau_weight(3, spec, N) - (1 + 1 / math.sqrt(3))) < 1e-15
    # only primes above w contribute: 6 = 2 * 3 keeps just the 3
    assert tau_weight(6, spec, N) == tau_weight(3, spec, N)
    assert abs(tau_weight(15, spec, N)
               - (1 + 1 / math.sqrt(3)) * (1 + 1 / math.sqrt(5))) < 1e-15
    with pytest.raises(InvalidInputError):
        tau_weight(0, spec, N)
    with pytest.raises(InvalidInputError):
        tau_weight(N, spec, N)
    spec3 = CorrelationSpec(forms=((1,),), shifts=((0, 1),), w=3)
    assert tau_weight(3, spec3, N) == 1.0
    spec_c = CorrelationSpec(forms=((1,),), shifts=((0, 1),), c1=2.5, c2=0.0)
    assert tau_weight(45, spec_c, N) == 2.5


def test_tau_vector_matches_pointwise():
    N = 257
    spec = CorrelationSpec(forms=((1,),), shifts=((0, 1),), c1=1.7, c2=0.6)
    tv = tau_vector(N, 2, 1.7, 0.6)
    assert math.isnan(tv[0])
    for h in range(1, N):
        assert abs(tv[h] - tau_weight(h, spec, N)) < 1e-13


def test_tau_moments_frozen():
    m = tau_moments(10 ** 4, 2, 1.0, 1.0, (1, 2))
    assert abs(m[1] - 1.5890524954) < 1e-9
    assert abs(m[2] - 2.8016656251) < 1e-9
    # first moment is nearly flat across a decade
    m5 = tau_moments(10 ** 5, 2, 1.0, 1.0, (1,))
    assert abs(m5[1] - m[1]) / m[1] < 0.05


# -- correlation ------------------------------------------------------------

def test_correlation_control():
    one = GridFunction.constant(101, 1, 1.0)
    spec = CorrelationSpec(forms=((1,),), shifts=((0, 1),), w=2)
    rep = verify_correlation(one, spec)
    assert rep.exact and rep.lhs == 1.0
    assert rep.rhs == 1.0                 # tau(-1) = 1
    assert rep.ratio == 1.0
    assert abs(rep.fitted_c1 - 1.0) < 1e-15


def test_correlation_exact_matches_bruteforce():
    N = 31
    nu = rand_nu(N, 3)
    spec = CorrelationSpec(forms=((1,),), shifts=((0, 3),), w=2)
    rep = verify_correlation(nu, spec)
    want = sum(nu.at((y,)) * nu.at((y + 3,)) for y in range(N)) / N
    assert abs(rep.lhs - want) < 1e-12
    assert abs(rep.rhs - (1 + 1 / math.sqrt(3))) < 1e-15
    assert abs(rep.fitted_c1 - rep.lhs / rep.rhs) < 1e-12  # m1 = 1
    assert abs(rep.ratio - rep.lhs / rep.rhs) < 1e-15


def test_correlation_two_blocks():
    N = 31
    nu = rand_nu(N, 4)
    spec = CorrelationSpec(forms=((1, 0), (0, 1)),
                           shifts=((0, 5), (1, 4)), w=2)
    rep = verify_correlation(nu, spec)
    assert rep.exact
    # rhs = tau(-5) * tau(-3); fitted c1 solves c1^2 base = lhs
    base = tau_weight(5, spec, N) * tau_weight(3, spec, N)
    assert abs(rep.rhs - base) < 1e-14
    assert abs(rep.fitted_c1 ** 2 * base - rep.lhs) < 1e-12


def test_correlation_mc_reproducible():
    N = 101
    nu = rand_nu(N, 5)
    spec = CorrelationSpec(forms=((1, 0), (0, 1)),
                           shifts=((0, 2), (0, 7)), w=2)
    exact = verify_correlation(nu, spec).lhs
    a = verify_correlation(nu, spec, samples=1 << 16, seed=3,
                           enumeration_limit=1)
    b = verify_correlation(nu, spec, samples=1 << 16, seed=3,
                           enumeration_limit=1)
    assert a.lhs == b.lhs and not a.exact
    assert abs(a.lhs - exact) < 3 * a.lhs_stderr + 1e-12


def test_correlation_spec_validation():
    with pytest.raises(InvalidInputError):
        CorrelationSpec(forms=((1,),), shifts=((0, 0),))
    with pytest.raises(InvalidInputError):
        CorrelationSpec(forms=((1,), (2,)), shifts=((0, 1), (0, 1)))
    with pytest.raises(InvalidInputError):
        CorrelationSpec(forms=((1,),), shifts=((0, 1),), c1=0.0)
    with pytest.raises(InvalidInputError):
        CorrelationSpec(forms=((0, 0),), shifts=((0, 1),))


# -- theta systems and local factors ----------------------------------------

def test_theta_system_basic():
    sys2 = ThetaSystem(forms=((1, 2), (3, 1)), shifts=((0, 4), (1, 5)),
                       w=3, b=1)
    assert sys2.m1 == 2 and sys2.m0 == 2 and sys2.M == 4 and sys2.r == 2
    assert sys2.W == 6
    assert sys2.block(1) == range(2, 4)
    assert sys2.block_of(3) == 1
    hom, const = sys2.theta(2)      # block 1, shift 1
    assert hom == (18, 6) and const == 6 * 1 + 1
    assert sys2.delta(0) == 4 and sys2.delta(1) == 4
    with pytest.raises(InvalidInputError):
        ThetaSystem(forms=((1, 2),), shifts=((0, 0),), w=2, b=1)
    with pytest.raises(InvalidInputError):
        ThetaSystem(forms=((1, 2),), shifts=((0, 1),), w=2, b=2)
    with pytest.raises(InvalidInputError):
        ThetaSystem(forms=((0, 0),), shifts=((0, 1),), w=2, b=1)


def test_omega_empty_set_and_range():
    sys1 = default_theta_system(3, 2)
    assert omega_X(5, sys1, ()) == 1
    for X in default_X_collection(sys1):
        om = omega_X(5, sys1, X)
        assert 0 <= om <= 1


def test_omega_exhaustive_equals_solver():
    for seed in range(25):
        system = random_theta_system(seed)
        for p in (5, 7, 11, 13):
            for X in default_X_collection(system):
                a = omega_X(p, system, X, method="exhaustive")
                b = omega_X(p, system, X, method="solver")
                assert a == b, (seed, p, X)


def test_omega_monotone_under_constraints():
    for seed in range(10):
        system = random_theta_system(seed + 100)
        M = system.M
        for p in (5, 11):
            full = list(range(M))
            prev = Fraction(1)
            for k in range(M + 1):
                om = omega_X(p, system, full[:k])
                assert om <= prev
                prev = om


def test_omega_validation():
    sys1 = default_theta_system(2, 2)
    with pytest.raises(InvalidInputError):
        omega_X(5, sys1, (9,))
    with pytest.raises(InvalidInputError):
        omega_X(5, sys1, (0,), method="bogus")


def test_local_factor_cases_default_system():
    sys1 = default_theta_system(3, 2)
    rep = verify_local_factor_cases(sys1, primes=(2, 5, 7, 11, 13))
    assert rep.ok and rep.checked > 0
    # p = 2 <= w rows all asserted omega = 0 (b = 1 odd blocks 2 | theta)
    assert not rep.violations


def test_local_factor_cases_random_systems():
    for seed in range(40):
        system = random_theta_system(seed + 500)
        rep = verify_local_factor_cases(system, primes=(5, 7, 11, 13))
        assert rep.ok, (seed, rep.violations[:1])
        assert rep.checked > 0
        for entry in rep.skipped:
            assert "why" in entry


def test_omega_table_matches_omega_X():
    for seed in (0, 3):
        system = random_theta_system(seed + 900)
        M = system.M
        for p in (5, 7):
            table = omega_table(system, p)
            assert len(table) == 2 ** M
            for mask in range(2 ** M):
                X = [a for a in range(M) if (mask >> a) & 1]
                assert table[mask] == omega_X(p, system, X)


# -- Euler factors ----------------------------------------------------------

def test_euler_direct_m1_closed_form():
    sys1 = default_theta_system(1, 2)
    # single form: E_p = 1 - omega({0}); the form 2y + 1 never vanishes mod 2
    assert abs(euler_factor_direct(sys1, 2, [0.0], [0.0]) - 1.0) < 1e-15
    for p in (3, 5, 7, 11):
        want = 1.0 - 1.0 / p
        assert abs(euler_factor_direct(sys1, p, [0.0], [0.0]) - want) < 1e-14


def test_euler_factor2_exact_zero():
    assert euler_factor2_exact_zero(2, 2, 2) == Fraction(4)
    assert euler_factor2_exact_zero(3, 1, 3) == Fraction(3, 2)
    assert euler_factor2_exact_zero(5, 2, 3) == Fraction(1)


def test_euler_identity_check():
    for M, w in ((1, 2), (2, 2), (2, 3), (3, 2), (2, 5)):
        out = euler_factor_identity_check(M, w)
        assert out["max_err"] < 1e-10, (M, w, out["max_err"])
        assert out["g2_exact_ok"]
    out = euler_factor_identity_check(2, 3)
    assert out["g2_zero_product"] == [9, 1]
    with pytest.raises(InvalidInputError):
        euler_factor_identity_check(5, 2)
    with pytest.raises(InvalidInputError):
        euler_factor_identity_check(0, 2)


def test_euler_identity_check_rejects_degenerate_primes():
    system = ThetaSystem(forms=((5, 10),), shifts=((0, 1),), w=2, b=1)
    with pytest.raises(InvalidInputError):
        euler_factor_identity_check(2, 2, system=system, primes=(5,))
