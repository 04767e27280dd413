"""Divisor sums, the generalised Dedekind Psi function and Robin's inequality.

Robin's inequality (RI) reads ``sigma(n) < e^gamma n log log n``. Everything
integer-valued here is exact; the transcendental side is an interval.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import DomainError, OutOfRange, RangeError, ResourceError
from .numerics import DEFAULT_PRECISION, Interval, constants, zeta_int
from .primes import PrimeTable, mertens_product, primorial_log, small_primes
from .reports import VerificationReport

ROBIN_LAST_COUNTEREXAMPLE = 5040
SMALL_SCAN_MAX = 2 * 10**8


@dataclass(frozen=True)
class Factorization:
    """Canonical prime factorisation as (prime, exponent) pairs, primes increasing."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev = 1
        for p, a in self.pairs:
            if p <= prev or a < 1:
                raise ValueError(f"non-canonical factorisation {self.pairs}")
            prev = p

    @classmethod
    def of(cls, n: int) -> "Factorization":
        """Factor n by trial division (fine for n up to ~1e12)."""
        if n < 1:
            raise ValueError("n must be positive")
        pairs = []
        d = 2
        while d * d <= n:
            if n % d == 0:
                a = 0
                while n % d == 0:
                    n //= d
                    a += 1
                pairs.append((d, a))
            d += 1 if d == 2 else 2
        if n > 1:
            pairs.append((n, 1))
        return cls(tuple(pairs))

    @classmethod
    def from_exponents(cls, exps: dict[int, int]) -> "Factorization":
        return cls(tuple(sorted((p, a) for p, a in exps.items() if a)))

    @property
    def value(self) -> int:
        return math.prod(p**a for p, a in self.pairs)

    @property
    def radical(self) -> int:
        return math.prod(p for p, _ in self.pairs)


def sigma(f: Factorization) -> int:
    """Sum of divisors, prod (p^(a+1) - 1)/(p - 1)."""
    return math.prod((p ** (a + 1) - 1) // (p - 1) for p, a in f.pairs)


def is_t_free(f: Factorization, t: int) -> bool:
    if t < 2:
        raise RangeError("t must be at least 2")
    return all(a < t for _, a in f.pairs)


def psi_t(f: Factorization, t: int) -> Fraction:
    """Psi_t(n) = n prod_{p | n} (1 + 1/p + ... + 1/p^(t-1)), exactly."""
    if t < 2:
        raise RangeError("t must be at least 2")
    out = Fraction(f.value)
    for p, _ in f.pairs:
        out *= Fraction(p**t - 1, (p - 1) * p ** (t - 1))
    return out


class RiStatus(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class RiVerdict:
    n: int | None
    log_n: Interval
    lhs: Interval
    rhs: Interval
    status: RiStatus

    @property
    def margin(self) -> Interval:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "log_n": self.log_n,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "status": self.status.value,
        }


def classify(lhs: Interval, rhs: Interval) -> RiStatus:
    if lhs.hi < rhs.lo:
        return RiStatus.HOLDS
    if lhs.lo > rhs.hi:
        return RiStatus.VIOLATED
    return RiStatus.INDETERMINATE


def ri_check(f: Factorization, gamma: Interval | None = None,
             prec: int = DEFAULT_PRECISION) -> RiVerdict:
    """Compare the exact sigma(n) with an enclosure of e^gamma n log log n.

    An undecided comparison is repeated at doubled precision (up to 8x).
    """
    n = f.value
    if n <= 2:
        raise DomainError("RI needs n >= 3 so that log log n is defined and positive")
    s = sigma(f)
    for scale in (1, 2, 4, 8):
        p = prec * scale
        g = gamma if (gamma is not None and scale == 1) else constants(p).gamma
        log_n = Interval(n, prec=p).log()
        rhs = g.exp() * n * log_n.log()
        lhs = Interval(s, prec=p)
        status = classify(lhs, rhs)
        if status is not RiStatus.INDETERMINATE:
            break
    return RiVerdict(n=n, log_n=log_n, lhs=lhs, rhs=rhs, status=status)


# -- small-n scan ----------------------------------------------------------------------


def sigma_sieve(limit: int) -> np.ndarray:
    """sigma(n) for 0 <= n <= limit as int64 (index 0 unused), by multiplicativity."""
    sig = np.ones(limit + 1, dtype=np.int64)
    sig[0] = 0
    root = math.isqrt(limit)
    buf = np.empty(limit + 1, dtype=np.int64)
    for p in small_primes(limit).tolist():
        if p > root:
            sig[p::p] *= 1 + p
            continue
        # buf[m] = sigma(p^a) where p^a exactly divides m
        view = buf[p::p]
        view[:] = 1 + p
        pk, s = p * p, 1 + p + p * p
        while pk <= limit:
            buf[pk::pk] = s
            pk *= p
            s = s * p + 1
        sig[p::p] *= view
    return sig


def small_scan(limit: int, gamma: Interval | None = None, prec: int = DEFAULT_PRECISION,
               max_limit: int = SMALL_SCAN_MAX) -> VerificationReport:
    """List every n in [3, limit] violating RI.

    A float pass flags every n whose ratio sigma(n) / (e^gamma n log log n)
    is within 1e-9 of 1 or above; each flagged n is then decided exactly by
    :func:`ri_check`. Float error here is far below 1e-9 relative, so unflagged
    n satisfy RI.
    """
    limit = int(limit)
    if limit <= ROBIN_LAST_COUNTEREXAMPLE:
        raise RangeError(f"limit must exceed {ROBIN_LAST_COUNTEREXAMPLE}, got {limit}")
    if limit > max_limit:
        raise ResourceError(f"limit {limit} exceeds the sigma-sieve budget {max_limit}")
    sig = sigma_sieve(limit)
    n = np.arange(3, limit + 1, dtype=np.float64)
    eg = math.exp(0.57721566490153286)
    rhs = eg * n * np.log(np.log(n))
    flagged = np.flatnonzero(sig[3:] >= rhs * (1 - 1e-9)) + 3
    counterexamples, near_misses = [], []
    for m in flagged.tolist():
        v = ri_check(Factorization.of(m), gamma, prec)
        if v.status is RiStatus.VIOLATED:
            counterexamples.append(m)
        elif v.status is RiStatus.HOLDS:
            near_misses.append(m)
        else:
            raise DomainError(f"RI undecided at n={m}")
    beyond = [m for m in counterexamples if m > ROBIN_LAST_COUNTEREXAMPLE]
    return VerificationReport(
        name="small_scan",
        passed=not beyond,
        metrics={
            "limit": limit,
            "counterexamples": counterexamples,
            "count": len(counterexamples),
            "max_counterexample": max(counterexamples) if counterexamples else None,
            "counterexamples_above_5040": beyond,
            "flagged_for_exact_check": len(flagged),
            "near_misses": near_misses,
        },
    )


# -- R_t at primorials --------------------------------------------------------------------


def _rt_formula(theta_iv: Interval, mert: Interval, p_n: int, t: int, prec: int) -> Interval:
    from .bounds import tail_factor

    # prod_{p > p_n} (1 - p^-t)^-1 lies in [1, exp(2/p_n)]
    tail = Interval.hull(Interval(1, prec=prec), tail_factor(p_n, prec))
    return tail * mert / (zeta_int(t, prec) * theta_iv.log())


def rt_primorial(n: int, t: int, table: PrimeTable) -> Interval:
    """Enclosure of R_t(p_n#) = Psi_t(p_n#) / (p_n# log log p_n#) via the Euler product form."""
    if n < 2:
        raise RangeError("rt_primorial needs n >= 2")
    if n > len(table.primes):
        raise OutOfRange(f"prime index {n} beyond table ({len(table.primes)} primes)")
    if t < 2:
        raise RangeError("t must be at least 2")
    p_n = int(table.primes[n - 1])
    prec = table.precision
    return _rt_formula(primorial_log(n, table), mertens_product(p_n, table), p_n, t, prec)


def rt_direct(f: Factorization, t: int, prec: int = DEFAULT_PRECISION) -> Interval:
    """R_t(n) from the exact rational Psi_t(n)/n and an interval log log n."""
    n = f.value
    if n <= 2:
        raise DomainError("R_t needs n >= 3")
    ratio = psi_t(f, t) / n
    return Interval(ratio, prec=prec) / Interval(n, prec=prec).log().log()


def rt_primorial_sweep(table: PrimeTable, t: int, start: int = 2,
                       stop: int | None = None) -> Iterator[tuple[int, Interval]]:
    """Yield (p_n, enclosure of R_t(p_n#)) for n = start .. stop, incrementally.

    Running theta and Mertens sums are carried at 32 guard bits, so this is
    much cheaper than calling :func:`rt_primorial` for every n.
    """
    if start < 2:
        raise RangeError("start must be >= 2")
    stop = len(table.primes) if stop is None else stop
    prec = table.precision
    acc = prec + 32
    th = table.theta_prefix(start - 1).with_precision(acc)
    ml = table.mertens_log_prefix(start - 1).with_precision(acc)
    for n in range(start, stop + 1):
        p = int(table.primes[n - 1])
        pi_ = Interval(p, prec=acc)
        th = th + pi_.log()
        ml = ml + (pi_ / (p - 1)).log()
        yield p, _rt_formula(th.with_precision(prec), ml.with_precision(prec).exp(), p, t, prec)


def bound_chain_check(table: PrimeTable, t: int, params=None, p_min: int = 599,
                      p_max: int | None = None) -> VerificationReport:
    """Check exp(-gamma) R_t(p_n#) <= g_B(p_n; t) for every prime p_n in [p_min, p_max].

    A prime passes when the upper end of the left enclosure is at most the
    lower end of g_B, so a pass is rigorous.
    """
    from .bounds import GParams, g_B

    params = params if params is not None else GParams(precision=table.precision)
    p_max = table.limit if p_max is None else p_max
    if p_min < 599:
        raise RangeError("g_B is only valid for p_n >= 599")
    if p_max > table.limit:
        raise OutOfRange(f"p_max={p_max} exceeds table limit {table.limit}")
    start = int(np.searchsorted(table.primes, p_min, side="left")) + 1
    stop = int(np.searchsorted(table.primes, p_max, side="right"))
    eg = (-constants(table.precision).gamma).exp()
    failures, checked = [], 0
    worst = None
    for p, r in rt_primorial_sweep(table, t, max(start, 2), stop):
        lhs = eg * r
        g = g_B(p, t, params)
        checked += 1
        if not lhs.hi <= g.lo:
            failures.append(p)
        gap = float((g.lo - lhs.hi) / g.lo)
        if worst is None or gap < worst[1]:
            worst = (p, gap)
    return VerificationReport(
        name="bound_chain",
        passed=not failures and checked > 0,
        metrics={
            "t": t,
            "p_min": p_min,
            "p_max": p_max,
            "primes_checked": checked,
            "failures": failures[:100],
            "failure_count": len(failures),
            "min_relative_gap": worst[1] if worst else None,
            "min_relative_gap_at": worst[0] if worst else None,
        },
    )
