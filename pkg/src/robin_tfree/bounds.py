"""Explicit bound functions g_B and g_inf and the certification of a t-free exponent.

For ``599 <= p_n <= B`` the ratio ``exp(-gamma) R_t(p_n#)`` is majorised by
``g_B(p_n; t)``; for ``log p_n >= 55`` by ``g_inf(p_n; t)``. Both majorants are
non-increasing in ``p_n``, so checking ``g_B(switch_prime; t) < 1`` and
``g_inf(B; t) < 1`` settles every primorial beyond the enumerated range.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError, RangeError
from .numerics import DEFAULT_PRECISION, Interval, constants, pi, zeta_int
from .reports import VerificationReport

B_DEFAULT = 2169 * 10**22
C1_PUBLISHED = Fraction("2.645e-9")
LOG_X0 = 2000
SWITCH_PRIME = 29_996_208_012_611
MERTENS_UPPER_MIN = 767_135_587
LOG_P_INF_MIN = 55
RH_HEIGHT = 3 * 10**12

#: Linear coefficient in the g_inf denominator. The theta estimate for
#: log x >= 55 gives 1.388e-10; 1.338e-10 is the alternative variant. Both certify the same t.
G_INF_COEFFS = {"1.388": Fraction("1.388e-10"), "1.338": Fraction("1.338e-10")}
THETA_SQRT_COEFF = Fraction("1.4262")
_C_102 = Fraction(102, 100)


class Status(enum.Enum):
    PROVED = "proved"
    FAILED = "failed"
    INDETERMINATE = "indeterminate"


def compare_to_one(value: Interval) -> Status:
    """PROVED when the whole enclosure is below 1, FAILED when above."""
    if value.hi < 1:
        return Status.PROVED
    if value.lo > 1:
        return Status.FAILED
    return Status.INDETERMINATE


@dataclass(frozen=True)
class GParams:
    t: int = 2
    B: int = B_DEFAULT
    log_X0: int = LOG_X0
    switch_prime: int = SWITCH_PRIME
    precision: int = DEFAULT_PRECISION
    g_inf_coeff: str = "1.388"
    c1_source: str = "published"

    def __post_init__(self):
        if self.t < 2:
            raise RangeError(f"t must be at least 2, got {self.t}")
        if self.g_inf_coeff not in G_INF_COEFFS:
            raise ValueError(f"g_inf_coeff must be one of {sorted(G_INF_COEFFS)}")
        if self.c1_source not in ("published", "recomputed"):
            raise ValueError("c1_source must be 'published' or 'recomputed'")
        if not 599 <= self.switch_prime <= self.B:
            raise RangeError("switch_prime must lie in [599, B]")
        if self.precision < 53:
            raise ValueError("precision must be at least 53 bits")

    @property
    def C1(self) -> Interval:
        return c1_value(self)

    def with_precision(self, prec: int) -> "GParams":
        return replace(self, precision=prec)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "B": str(self.B),
            "log_X0": self.log_X0,
            "switch_prime": self.switch_prime,
            "precision": self.precision,
            "g_inf_coeff": self.g_inf_coeff + "e-10",
            "c1_source": self.c1_source,
        }


def _iv(x, prec: int) -> Interval:
    return Interval.exact(x, prec)


def _check_range(p: Interval, lo, hi, what: str):
    if p.lo < lo or (hi is not None and p.hi > hi):
        raise RangeError(f"{what}: argument {p!r} outside [{lo}, {hi if hi is not None else 'inf'}]")


# -- C1 -------------------------------------------------------------------------------


@dataclass(frozen=True)
class C1Certificate:
    piece1: Interval
    piece2: Interval
    total: Interval
    piece1_exact: Interval

    def to_dict(self) -> dict:
        return {
            "piece1": self.piece1,
            "piece2": self.piece2,
            "total": self.total,
            "piece1_exact": self.piece1_exact,
        }


@lru_cache(maxsize=None)
def _c1_certificate(B: int, log_X0: int, prec: int) -> C1Certificate:
    b = Interval(B, prec=prec)
    llb = b.log().log()
    lx0 = Interval(log_X0, prec=prec)
    # 1.405 (1 + log t) / (t log^2 t) <= 1.430 / (t log t) needs 1.405 (1 + 1/log t) <= 1.430
    if not (Interval(Fraction("1.405"), prec=prec) * (1 + 1 / b.log())).certainly_lt(Fraction("1.430")):
        raise DomainError("the 1.405 -> 1.430 majorisation fails at this B")
    piece1 = Interval(Fraction("1.430e-10"), prec=prec) * (lx0.log() - llb)
    # same integral before majorising: [log log t - 1/log t] from B to X0
    piece1_exact = Interval(Fraction("1.405e-10"), prec=prec) * (
        lx0.log() - llb - 1 / lx0 + 1 / b.log()
    )
    # 30.3 * int_{X0}^inf log t exp(-0.8 sqrt(log t)) dt / t; with u = sqrt(log t)
    # this is 2 int_c^inf u^3 e^{-0.8u} du, c = sqrt(log X0)
    c = lx0.sqrt()
    k = Interval(Fraction(4, 5), prec=prec)
    poly = c**3 / k + 3 * c**2 / k**2 + 6 * c / k**3 + 6 / k**4
    piece2 = Interval(Fraction("30.3"), prec=prec) * 2 * (-(k * c)).exp() * poly
    return C1Certificate(piece1, piece2, piece1 + piece2, piece1_exact)


def c1_pieces(params: GParams) -> C1Certificate:
    return _c1_certificate(params.B, params.log_X0, params.precision)


def c1_certificate(params: GParams) -> Interval:
    """Enclosure of the majorant for C1: the [B, X0] piece plus the tail beyond X0."""
    return c1_pieces(params).total


def c1_value(params: GParams) -> Interval:
    """The C1 fed into g_B and the Mertens lower bound, per ``params.c1_source``."""
    if params.c1_source == "recomputed":
        return c1_certificate(params)
    return Interval(C1_PUBLISHED, prec=params.precision)


def height_admissible(B: int = B_DEFAULT, height: int = RH_HEIGHT, prec: int = DEFAULT_PRECISION) -> bool:
    """Whether 4.92 sqrt(B / log B) <= height, the admissibility condition for B."""
    b = Interval(B, prec=prec)
    lhs = Interval(Fraction("4.92"), prec=prec) * (b / b.log()).sqrt()
    return lhs.hi <= height


# -- Mertens-type bounds -------------------------------------------------------------------


def _mertens_exponent(x: Interval, params: GParams) -> Interval:
    prec = params.precision
    L = x.log()
    b = Interval(params.B, prec=prec)
    pi_ = pi(prec)
    sx, sb = x.sqrt(), b.sqrt()
    return (
        _C_102 / ((x - 1) * L)
        + L / (8 * pi_ * sx)
        + c1_value(params)
        + ((L + 3) * sb - (b.log() + 3) * sx) / (4 * pi_ * sx * sb)
    )


def mertens_lower_rhs(x, params: GParams, plus_sign: bool = False) -> Interval:
    """Lower bound for prod_{p<=x} (1 - 1/p), valid for 599 <= x <= B.

    The bound is ``exp(-gamma)/log x * exp(-E(x))``, the reciprocal of the
    factor that g_B uses for prod p/(p-1). ``plus_sign=True`` returns the
    variant with ``exp(+E(x))`` instead; that variant is not a lower bound
    (it fails for most x below 1e8) and exists only so tests can show it.
    """
    xi = _iv(x, params.precision)
    _check_range(xi, 599, params.B, "mertens_lower_rhs")
    g = constants(params.precision).gamma
    e = _mertens_exponent(xi, params)
    return (-g).exp() / xi.log() * (e if plus_sign else -e).exp()


def mertens_upper_rhs(x, prec: int = DEFAULT_PRECISION) -> Interval:
    """Upper bound for prod_{p<=x} p/(p-1), valid for x >= 767 135 587."""
    xi = _iv(x, prec)
    _check_range(xi, MERTENS_UPPER_MIN, None, "mertens_upper_rhs")
    L = xi.log()
    expo = _C_102 / ((xi - 1) * L) + 1 / (6 * L**3) + 5 / (8 * L**4)
    return constants(prec).exp_gamma * L * expo.exp()


def tail_factor(p, prec: int = DEFAULT_PRECISION) -> Interval:
    """exp(2/p): bounds prod_{q > p} (1 - q^-t)^-1 for every t >= 2 when p = p_n, n >= 2."""
    pi_ = _iv(p, prec)
    if pi_.lo <= 0:
        raise DomainError(f"tail_factor needs p > 0, got {p}")
    return (2 / pi_).exp()


# -- g_B and g_inf ---------------------------------------------------------------------------


def g_B(p, t: int, params: GParams) -> Interval:
    """Majorant of exp(-gamma) R_t(p_n#) for 599 <= p_n <= B."""
    prec = params.precision
    P = _iv(p, prec)
    _check_range(P, 599, params.B, "g_B")
    L = P.log()
    num = (2 / P + _mertens_exponent(P, params)).exp() * L
    arg = P - P.sqrt() * L**2 / (8 * pi(prec))
    if not arg.lo > 1:
        raise DomainError(f"g_B: log argument {arg!r} not provably above 1")
    return num / (zeta_int(t, prec) * arg.log())


def g_inf(p, t: int, params: GParams) -> Interval:
    """Majorant of exp(-gamma) R_t(p_n#) for log p_n >= 55.

    ``p`` may be an :class:`Interval` (for instance an enclosure of e^55); the
    range check then rejects only arguments certainly below e^55.
    """
    prec = params.precision
    P = _iv(p, prec)
    if P.lo <= 0:
        raise RangeError("g_inf needs p > 0")
    L = P.log()
    if L.hi < LOG_P_INF_MIN:
        raise RangeError(f"g_inf: log p = {L!r} is below 55")
    expo = 2 / P + _C_102 / ((P - 1) * L) + 1 / (6 * L**3) + 5 / (8 * L**4)
    num = expo.exp() * L
    coeff = G_INF_COEFFS[params.g_inf_coeff]
    arg = P - coeff * P - THETA_SQRT_COEFF * P.sqrt()
    if not arg.lo > 1:
        raise DomainError(f"g_inf: log argument {arg!r} not provably above 1")
    return num / (zeta_int(t, prec) * arg.log())


# -- certification ------------------------------------------------------------------------------


@dataclass
class CertResult:
    t: int
    g_B_value: Interval
    g_inf_value: Interval
    g_B_status: Status
    g_inf_status: Status
    passed: Status
    precision: int
    retried: bool = False
    margins: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "passed": self.passed.value,
            "g_B": {"value": self.g_B_value.to_json(), "status": self.g_B_status.value},
            "g_inf": {"value": self.g_inf_value.to_json(), "status": self.g_inf_status.value},
            "margins": {k: v.to_json() for k, v in self.margins.items()},
            "precision": self.precision,
            "retried": self.retried,
        }


def _combine(a: Status, b: Status) -> Status:
    if a is Status.PROVED and b is Status.PROVED:
        return Status.PROVED
    if Status.FAILED in (a, b):
        return Status.FAILED
    return Status.INDETERMINATE


def _certify_once(t: int, params: GParams) -> CertResult:
    gb = g_B(params.switch_prime, t, params)
    gi = g_inf(params.B, t, params)
    sb, si = compare_to_one(gb), compare_to_one(gi)
    return CertResult(
        t=t,
        g_B_value=gb,
        g_inf_value=gi,
        g_B_status=sb,
        g_inf_status=si,
        passed=_combine(sb, si),
        precision=params.precision,
        margins={"g_B": 1 - gb, "g_inf": 1 - gi},
    )


def certify_t(t: int, params: GParams) -> CertResult:
    """Evaluate g_B(switch_prime; t) and g_inf(B; t) against 1.

    An undecided comparison is retried once at doubled precision.
    """
    if t < 2:
        raise RangeError(f"t must be at least 2, got {t}")
    res = _certify_once(t, params)
    if Status.INDETERMINATE in (res.g_B_status, res.g_inf_status):
        res = _certify_once(t, params.with_precision(2 * params.precision))
        res.retried = True
    return res


def scan_t(params: GParams, t_limit: int = 256) -> list[CertResult]:
    """certify_t for t = 2, 3, ... up to and including the first non-proved t."""
    out = []
    for t in range(2, t_limit + 1):
        res = certify_t(t, params)
        out.append(res)
        if res.passed is not Status.PROVED:
            break
    return out


def max_certifiable_t(params: GParams, t_limit: int = 256) -> int | None:
    """Largest t with certify_t(t) proved, or None when even t = 2 fails.

    g_B and g_inf grow with t (zeta(t) decreases), so the scan stops at the
    first failure. If nothing fails up to ``t_limit`` that limit is returned.
    """
    proved = [r.t for r in scan_t(params, t_limit) if r.passed is Status.PROVED]
    return proved[-1] if proved else None


# -- desk-scale checks and tables ---------------------------------------------------------------


def mertens_lower_check(xs, table, params: GParams, plus_sign: bool = False) -> VerificationReport:
    """prod_{p<=x} (1 - 1/p) >= mertens_lower_rhs(x) at each x (all within the table)."""
    from .primes import mertens_log

    rows, failures = [], []
    worst = None
    for x in sorted(int(v) for v in xs):
        lhs = (-mertens_log(x, table)).exp()
        rhs = mertens_lower_rhs(x, params, plus_sign)
        slack = lhs - rhs
        ok = slack.lo > 0
        rel = float(slack.lo / rhs.hi)
        rows.append({"x": x, "relative_slack": rel, "ok": ok})
        if not ok:
            failures.append(x)
        if worst is None or rel < worst[1]:
            worst = (x, rel)
    return VerificationReport(
        name="mertens_lower_check",
        passed=not failures,
        metrics={
            "points": len(rows),
            "failures": failures,
            "min_relative_slack": worst[1] if worst else None,
            "min_relative_slack_at": worst[0] if worst else None,
        },
    )


def mertens_upper_check(points, prec: int = DEFAULT_PRECISION, logs: dict | None = None) -> VerificationReport:
    """prod_{p<=x} p/(p-1) <= mertens_upper_rhs(x) at each x, primes streamed."""
    from .primes import streamed_mertens_logs

    pts = sorted(int(v) for v in points)
    for x in pts:
        if x < MERTENS_UPPER_MIN:
            raise RangeError(f"mertens_upper_check: {x} below {MERTENS_UPPER_MIN}")
    logs = logs if logs is not None else streamed_mertens_logs(pts, prec)
    rows, failures = [], []
    for x in pts:
        prod = logs[x].exp()
        rhs = mertens_upper_rhs(x, prec)
        slack = rhs - prod
        ok = slack.lo > 0
        rows.append({"x": x, "product": prod, "rhs": rhs, "relative_slack": float(slack.lo / rhs.hi), "ok": ok})
        if not ok:
            failures.append(x)
    return VerificationReport(
        name="mertens_upper_check",
        passed=not failures,
        metrics={"points": rows, "failures": failures},
    )


def geometric_grid(lo: int, hi: int, count: int) -> list[int]:
    """``count`` integers spaced geometrically from lo to hi, both ends included."""
    if count < 2 or not lo < hi:
        raise ValueError("need count >= 2 and lo < hi")
    out = [lo]
    ln = math.log(hi / lo)
    for i in range(1, count - 1):
        out.append(int(round(lo * math.exp(ln * i / (count - 1)))))
    out.append(hi)
    return sorted(set(out))


def g_table(t: int, params: GParams, grid: int = 1000, kind: str = "g_B") -> list[tuple[int, Interval]]:
    """(p, g(p; t)) on a geometric grid: [599, B] for g_B, [e^55, 10 B] for g_inf."""
    if kind == "g_B":
        ps = geometric_grid(599, params.B, grid)
        fn = g_B
    elif kind == "g_inf":
        start = int(math.ceil(Interval(LOG_P_INF_MIN, prec=params.precision).exp().hi))
        ps = geometric_grid(start, 10 * params.B, grid)
        fn = g_inf
    else:
        raise ValueError("kind must be 'g_B' or 'g_inf'")
    return [(p, fn(p, t, params)) for p in ps]


def is_non_increasing(rows: list[tuple[int, Interval]]) -> tuple[bool, list[int]]:
    """Certainly non-increasing: each value's upper end is at most the previous lower end."""
    bad = [rows[i][0] for i in range(1, len(rows)) if rows[i][1].hi > rows[i - 1][1].lo]
    return not bad, bad
