from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robin_tfree import DomainError, OutOfRange, RangeError, ResourceError
from robin_tfree.primes import small_primes
from robin_tfree.robin_core import (Factorization, RiStatus, bound_chain_check, is_t_free, psi_t, ri_check,
                                    rt_direct, rt_primorial, rt_primorial_sweep, sigma, sigma_sieve, small_scan)

KNOWN_COUNTEREXAMPLES = [3, 4, 5, 6, 8, 9, 10, 12, 16, 18, 20, 24, 30, 36, 48, 60, 72, 84, 120, 180, 240,
                         360, 720, 840, 2520, 5040]
PRIMES = small_primes(200).tolist()


def divisor_sum(n):
    return sum(d for d in range(1, n + 1) if n % d == 0)


def test_factorization_basics():
    f = Factorization.of(5040)
    assert f.pairs == ((2, 4), (3, 2), (5, 1), (7, 1))
    assert f.value == 5040 and f.radical == 210
    assert Factorization.of(1).pairs == ()
    assert Factorization.from_exponents({3: 1, 2: 2, 5: 0}).value == 12
    with pytest.raises(ValueError):
        Factorization(((3, 1), (2, 1)))


def test_sigma_examples():
    assert sigma(Factorization()) == 1
    assert sigma(Factorization.of(5040)) == 19344
    assert sigma(Factorization.of(10)) == 18


def test_sigma_against_divisor_sum():
    for n in range(1, 1500):
        assert sigma(Factorization.of(n)) == divisor_sum(n)


def test_sigma_sieve_matches_factorisation():
    sig = sigma_sieve(10**5)
    for n in range(1, 10**5 + 1, 7):
        assert sig[n] == sigma(Factorization.of(n))
    assert sig[99991] == 99992


def test_t_free():
    assert not is_t_free(Factorization(((2, 20),)), 20)
    assert is_t_free(Factorization.of(5040), 5)
    assert not is_t_free(Factorization.of(5040), 4)
    with pytest.raises(RangeError):
        is_t_free(Factorization.of(6), 1)


def test_psi_examples():
    assert psi_t(Factorization(), 2) == 1
    assert psi_t(Factorization.of(10), 2) == 18
    assert psi_t(Factorization.of(12), 5) == Fraction(3751, 108)
    assert sigma(Factorization.of(12)) <= psi_t(Factorization.of(12), 5)


def t_free_factorisations(max_primes=8):
    @st.composite
    def build(draw):
        t = draw(st.integers(2, 25))
        chosen = draw(st.lists(st.sampled_from(PRIMES), min_size=0, max_size=max_primes, unique=True))
        exps = {p: draw(st.integers(1, t - 1)) for p in chosen}
        return Factorization.from_exponents(exps), t
    return build()


@settings(max_examples=400, deadline=None)
@given(t_free_factorisations())
def test_sigma_at_most_psi_on_t_free(ft):
    f, t = ft
    assert is_t_free(f, t)
    assert sigma(f) <= psi_t(f, t)


@settings(max_examples=200, deadline=None)
@given(t_free_factorisations(), st.integers(1, 5))
def test_psi_ratio_depends_only_on_radical(ft, k):
    f, t = ft
    rad = Factorization(tuple((p, 1) for p, _ in f.pairs))
    bumped = Factorization(tuple((p, a + k) for p, a in f.pairs))
    ratio = psi_t(f, t) / f.value
    assert ratio == psi_t(rad, t) / rad.value == psi_t(bumped, t) / bumped.value


def test_psi_equals_sigma_on_squarefree():
    for n in (6, 30, 210, 2310, 30030):
        assert psi_t(Factorization.of(n), 2) == sigma(Factorization.of(n))


def test_ri_examples():
    assert ri_check(Factorization.of(5040)).status is RiStatus.VIOLATED
    v = ri_check(Factorization.of(55440))
    assert v.status is RiStatus.HOLDS
    assert v.lhs.contains(232128)
    mpmath.mp.prec = 200
    assert abs(float(v.rhs.mid()) - float(mpmath.exp(mpmath.euler) * 55440 * mpmath.log(mpmath.log(55440)))) < 1e-6
    assert ri_check(Factorization.of(3)).status is RiStatus.VIOLATED
    ref = mpmath.exp(mpmath.euler) * 5040 * mpmath.log(mpmath.log(5040))
    assert abs(float(ri_check(Factorization.of(5040)).rhs.mid()) - float(ref)) < 1e-8
    with pytest.raises(DomainError):
        ri_check(Factorization.of(2))


def test_ri_against_mpmath():
    mpmath.mp.prec = 200
    for n in range(3, 6000, 37):
        ref = mpmath.exp(mpmath.euler) * n * mpmath.log(mpmath.log(n))
        expected = RiStatus.HOLDS if divisor_sum(n) < ref else RiStatus.VIOLATED
        assert ri_check(Factorization.of(n)).status is expected


def test_small_scan_1e4():
    r = small_scan(10**4)
    assert r.metrics["counterexamples"] == KNOWN_COUNTEREXAMPLES
    assert r.metrics["count"] == 26 and r.metrics["max_counterexample"] == 5040
    assert r.passed


def test_small_scan_preconditions():
    with pytest.raises(RangeError):
        small_scan(5000)
    with pytest.raises(ResourceError):
        small_scan(10**6, max_limit=10**5)


def test_rt_small_primorial(table_1e6):
    mpmath.mp.prec = 200
    psi = 6 * (2 - mpmath.mpf(2) ** -19) * (mpmath.mpf(3) / 2) * (1 - mpmath.mpf(3) ** -20)
    ref = psi / (6 * mpmath.log(mpmath.log(6)))
    assert abs(float(ref) - 5.144) < 1e-3
    # the product form brackets the infinite tail by [1, exp(2/p_n)], so it is wide here
    r = rt_primorial(2, 20, table_1e6)
    assert float(r.lo) <= float(ref) <= float(r.hi)
    direct = rt_direct(Factorization.of(6), 20)
    assert abs(float(direct.mid()) - float(ref)) < 1e-25 and r.overlaps(direct)


def test_rt_increases_with_t(table_1e6):
    # each factor (1 - p^-t)/(1 - 1/p) grows with t, and so does R_t
    for n in (2, 4, 30):
        f = Factorization(tuple((p, 1) for p in PRIMES[:n]))
        vals = [rt_direct(f, t) for t in range(2, 25)]
        assert all(b.lo > a.hi for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("t", [2, 3, 20])
def test_rt_formula_agrees_with_direct(table_1e6, t):
    for n in range(2, 40):
        primorial = Factorization(tuple((p, 1) for p in PRIMES[:n]))
        assert rt_primorial(n, t, table_1e6).overlaps(rt_direct(primorial, t, prec=120))


def test_rt_preconditions(table_1e6):
    with pytest.raises(RangeError):
        rt_primorial(1, 2, table_1e6)
    with pytest.raises(OutOfRange):
        rt_primorial(len(table_1e6) + 1, 2, table_1e6)
    with pytest.raises(DomainError):
        rt_direct(Factorization.of(2), 2)


def test_sweep_matches_pointwise(table_1e6):
    swept = dict(rt_primorial_sweep(table_1e6, 20, 2, 3000))
    for n in (2, 3, 100, 256, 257, 1000, 3000):
        p = int(table_1e6.primes[n - 1])
        assert swept[p].overlaps(rt_primorial(n, 20, table_1e6))


def test_bound_chain_small_range(table_1e6, params):
    r = bound_chain_check(table_1e6, 20, params, 599, 20_000)
    assert r.passed and r.metrics["primes_checked"] == 2262 - 108
    with pytest.raises(RangeError):
        bound_chain_check(table_1e6, 20, params, 500, 1000)
