import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ca_oracle, encloses, sigma_over_n
from robin_tfree import PrecisionExhausted, StructureError
from robin_tfree.ca_enumerator import (PrimorialForm, benefit, benefit_ratio, check_ri_state, enumerate_until,
                                       load_checkpoint, new_state, next_step, save_checkpoint, to_primorial_form)
from robin_tfree.robin_core import Factorization, RiStatus, ri_check

FIRST_CA = [2, 6, 12, 60, 120, 360, 2520, 5040, 55440, 720720]


def walk(steps, precision=100):
    s = new_state(precision)
    out = []
    for _ in range(steps):
        next_step(s)
        out.append(dict(s.exponents))
    return s, out


@pytest.fixture(scope="module")
def walk200():
    return walk(200)


def test_benefit_examples():
    mpmath.mp.prec = 300
    assert encloses(benefit(2, 0), mpmath.log(mpmath.mpf(3) / 2) / mpmath.log(2))
    assert abs(float(benefit(2, 0).mid()) - 0.58496) < 1e-5
    assert abs(float(benefit(3, 0).mid()) - 0.26186) < 1e-5
    assert encloses(benefit(2, 1), mpmath.log(mpmath.mpf(7) / 6) / mpmath.log(2))
    assert abs(float(benefit(2, 1).mid()) - 0.22239) < 1e-5
    assert benefit_ratio(2, 0) == Fraction(3, 2)
    with pytest.raises(ValueError):
        benefit(2, -1)


def test_benefit_decreases_in_p_and_a():
    for p, q in [(2, 3), (3, 5), (97, 101)]:
        assert benefit(p, 0).certainly_gt(benefit(q, 0))
    for a in range(10):
        assert benefit(5, a).certainly_gt(benefit(5, a + 1))


def test_first_values():
    s = new_state()
    seen = []
    for _ in range(len(FIRST_CA)):
        next_step(s)
        seen.append(s.exact_n)
    assert seen == FIRST_CA


def test_step_after_5040_multiplies_by_11():
    s = new_state()
    while s.exact_n != 5040:
        next_step(s)
    next_step(s)
    assert s.exact_n == 55440


def test_first_200_match_oracle(walk200):
    _, got = walk200
    assert got == ca_oracle(200)


def test_accumulators_enclose_exact_values(walk200):
    state, got = walk200
    mpmath.mp.prec = 300
    exps = got[-1]
    log_n = mpmath.fsum(a * mpmath.log(p) for p, a in exps.items())
    assert encloses(state.log_n, log_n)
    r = sigma_over_n(exps)
    assert encloses(state.log_sigma_ratio, mpmath.log(mpmath.mpf(r.numerator) / r.denominator))


def test_exact_n_and_sigma_tracked():
    s = new_state()
    for _ in range(60):
        next_step(s)
        if s.exact_n is None:
            break
        f = Factorization.from_exponents(s.exponents)
        assert f.value == s.exact_n
        assert s.exact_sigma == math.prod((p ** (a + 1) - 1) // (p - 1)
                                                                  for p, a in s.exponents.items())


def test_ri_on_states_matches_robin_core():
    s = new_state()
    next_step(s)
    while s.exact_n is not None and s.exact_n < 10**12:
        next_step(s)
        expected = ri_check(Factorization.of(s.exact_n)).status
        assert check_ri_state(s).status is expected
    s = new_state()
    while s.exact_n != 5040:
        next_step(s)
    assert check_ri_state(s).status is RiStatus.VIOLATED
    next_step(s)
    assert check_ri_state(s).status is RiStatus.HOLDS


def test_exponents_non_increasing(walk200):
    _, got = walk200
    for exps in got:
        vals = [exps[p] for p in sorted(exps)]
        assert vals == sorted(vals, reverse=True)


def test_log_n_width_budget():
    # width grows linearly in the step count; extrapolated to 1e7 steps it stays below 1e-20
    s, _ = walk(5000)
    assert float(s.log_n.width()) * (10**7 / 5000) < 1e-20


def test_primorial_form_examples():
    form = to_primorial_form({2: 4, 3: 2, 5: 1, 7: 1})
    assert form.factors == ((7, 1), (3, 1), (2, 2))
    assert form.render() == "7#·3#·2^2"
    assert 210 * 6 * 4 == 5040 == Factorization.from_exponents(form.expand()).value
    assert to_primorial_form({2: 1}).render() == "2"
    assert to_primorial_form({}).render() == "1"
    assert PrimorialForm(((7, 2),)).render() == "(7#)^2"


def test_primorial_form_rejects_bad_shapes():
    with pytest.raises(StructureError):
        to_primorial_form({2: 1, 3: 2})
    with pytest.raises(StructureError):
        to_primorial_form({2: 2, 5: 1})


def test_primorial_round_trip_on_states(walk200):
    _, got = walk200
    for exps in got[::2][:100]:
        assert to_primorial_form(exps).expand() == exps


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 12), min_size=1, max_size=40))
def test_primorial_round_trip_random(raw):
    from robin_tfree.primes import small_primes

    vals = sorted(raw, reverse=True)
    ps = small_primes(200).tolist()[: len(vals)]
    exps = dict(zip(ps, vals))
    assert to_primorial_form(exps).expand() == exps


def test_checkpoint_round_trip(tmp_path):
    s, _ = walk(300)
    path = save_checkpoint(s, tmp_path / "ck.json", extra={"note": 1})
    back, extra = load_checkpoint(path)
    assert extra == {"note": 1}
    assert back.exps == s.exps and back.step == s.step
    assert back.log_n == s.log_n and back.log_sigma_ratio == s.log_sigma_ratio
    for _ in range(50):
        next_step(s)
        next_step(back)
    assert back.exps == s.exps and back.log_n == s.log_n


def test_checkpoint_rejects_foreign_files(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load_checkpoint(p)


def test_enumerate_target_1_records_small_violations():
    report, form = enumerate_until(1)
    m = report.metrics
    assert report.passed
    assert m["violations"] == [2, 6, 12, 60, 120, 360, 2520, 5040]
    assert m["violations_above_5040"] == [] and m["indeterminate"] == []
    assert Fraction(m["min_margin"]) > 0


def test_enumerate_target_3():
    report, form = enumerate_until(3)
    assert report.passed
    assert report.metrics["steps"] == 383
    assert form.factors[-1][0] == 2
    tops = [q for q, _ in form.factors]
    assert tops == sorted(tops, reverse=True)


def test_resume_gives_same_result(tmp_path):
    ck = tmp_path / "run.json"
    full, _ = enumerate_until(2.5)
    enumerate_until(2, checkpoint_path=ck)
    resumed, _ = enumerate_until(2.5, checkpoint_path=ck, resume=True)
    for key in ("steps", "min_margin", "violations", "final_log10_n"):
        assert resumed.metrics[key] == full.metrics[key]


def test_precision_exhausted_on_artificial_tie():
    s = new_state(60)
    # two identical entries cannot be separated by refinement
    s.frontier.append(s.frontier[0])
    with pytest.raises(PrecisionExhausted):
        next_step(s)
