"""Greedy enumeration of colossally abundant numbers with interval-tracked logs.

Raising the exponent of ``p`` from ``a`` to ``a+1`` multiplies ``sigma(n)/n``
by ``1 + 1/(p + ... + p^(a+1))`` and ``n`` by ``p``. Taking the steps in order
of decreasing ``log(ratio)/log p`` visits exactly the colossally abundant
numbers; each prefix is optimal for some epsilon. Only ``log n`` and
``log(sigma(n)/n)`` are stored, so the numbers never need to be formed.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import DomainError, PrecisionExhausted, StructureError
from .numerics import DEFAULT_PRECISION, Interval, constants
from .primes import small_primes
from .reports import VerificationReport
from .robin_core import ROBIN_LAST_COUNTEREXAMPLE, RiStatus, RiVerdict, classify

CHECKPOINT_FORMAT = "robin-tfree-ca-checkpoint"
CHECKPOINT_VERSION = 1
MAX_REFINE = 16  # benefits are recomputed up to 16x the working precision
ACC_GUARD = 64
EXACT_LOG10_LIMIT = 100


def _prime_power_sum(p: int, a: int) -> int:
    """p + p^2 + ... + p^(a+1)."""
    return p * (p ** (a + 1) - 1) // (p - 1)


def benefit_ratio(p: int, a: int) -> Fraction:
    """Exact factor by which sigma(n)/n grows when the exponent of p goes a -> a+1."""
    return 1 + Fraction(1, _prime_power_sum(p, a))


def benefit(p: int, a: int, prec: int = DEFAULT_PRECISION) -> Interval:
    """Enclosure of log(1 + 1/(p + ... + p^(a+1))) / log p."""
    if a < 0:
        raise ValueError("exponent must be non-negative")
    return _gain(p, a, prec) / Interval(p, prec=prec).log()


def _gain(p: int, a: int, prec: int) -> Interval:
    return Interval(Fraction(1, _prime_power_sum(p, a)), prec=prec).log1p()


class _PrimeSource:
    """Primes by index, re-sieved to twice the limit when exhausted."""

    def __init__(self, limit: int = 1 << 16):
        self.limit = limit
        self.primes = small_primes(limit).tolist()

    def __getitem__(self, i: int) -> int:
        while i >= len(self.primes):
            self.limit *= 2
            self.primes = small_primes(self.limit).tolist()
        return self.primes[i]


@dataclass(order=True)
class _Entry:
    key: float  # minus a float upper bound of the benefit
    index: int
    ben: Interval = field(compare=False)
    gain: Interval = field(compare=False)
    prec: int = field(compare=False)


def _entry(source: _PrimeSource, i: int, a: int, prec: int) -> _Entry:
    p = source[i]
    gain = _gain(p, a, prec)
    ben = gain / Interval(p, prec=prec).log()
    return _Entry(-math.nextafter(float(ben.hi), math.inf), i, ben, gain, prec)


@dataclass
class CaState:
    """The current colossally abundant candidate.

    ``exps[i]`` is the exponent of the i-th prime (only primes that divide n);
    ``log_n`` and ``log_sigma_ratio`` are kept at ``precision + 64`` bits.
    """

    precision: int = DEFAULT_PRECISION
    exps: list[int] = field(default_factory=list)
    log_n: Interval | None = None
    log_sigma_ratio: Interval | None = None
    step: int = 0
    frontier: list[_Entry] = field(default_factory=list, repr=False)
    exact_n: int | None = 1
    exact_sigma: int | None = 1
    refinements: int = 0
    _source: _PrimeSource = field(default_factory=_PrimeSource, repr=False)
    _logp: list[Interval] = field(default_factory=list, repr=False)

    def __post_init__(self):
        acc = self.acc_prec
        if self.log_n is None:
            self.log_n = Interval(0, prec=acc)
        if self.log_sigma_ratio is None:
            self.log_sigma_ratio = Interval(0, prec=acc)
        if not self.frontier:
            self._rebuild_frontier()

    @property
    def acc_prec(self) -> int:
        return self.precision + ACC_GUARD

    @property
    def next_fresh_prime(self) -> int:
        return self._source[len(self.exps)]

    @property
    def exponents(self) -> dict[int, int]:
        return {self._source[i]: a for i, a in enumerate(self.exps)}

    def prime(self, i: int) -> int:
        return self._source[i]

    def log_p(self, i: int) -> Interval:
        while len(self._logp) <= i:
            j = len(self._logp)
            self._logp.append(Interval(self._source[j], prec=self.acc_prec).log())
        return self._logp[i]

    def _rebuild_frontier(self):
        self.frontier = [_entry(self._source, i, a, self.precision) for i, a in enumerate(self.exps)]
        self.frontier.append(_entry(self._source, len(self.exps), 0, self.precision))
        heapq.heapify(self.frontier)


def new_state(precision: int = DEFAULT_PRECISION) -> CaState:
    """The state for n = 1."""
    return CaState(precision=precision)


def _pick(state: CaState) -> _Entry:
    heap = state.frontier
    cands = [heapq.heappop(heap)]
    floor = math.nextafter(float(cands[0].ben.lo), -math.inf)
    while heap and -heap[0].key >= floor:
        cands.append(heapq.heappop(heap))
    if len(cands) == 1:
        return cands[0]

    prec = state.precision
    while True:
        for k, c in enumerate(cands):
            others = max(o.ben.hi for j, o in enumerate(cands) if j != k)
            if c.ben.lo > others:
                for j, o in enumerate(cands):
                    if j != k:
                        heapq.heappush(heap, o)
                return c
        prec *= 2
        if prec > MAX_REFINE * state.precision:
            break
        state.refinements += 1
        cands = [
            _entry(state._source, c.index, state.exps[c.index] if c.index < len(state.exps) else 0, prec)
            for c in cands
        ]

    best = max(cands, key=lambda c: c.ben.hi)
    tied = [c for c in cands if c.ben.overlaps(best.ben)]
    primes = [state.prime(c.index) for c in tied]
    raise PrecisionExhausted(
        f"benefits of primes {primes} not separated at {prec // 2} bits"
    )


def next_step(state: CaState) -> CaState:
    """Advance to the next colossally abundant number (mutates and returns ``state``)."""
    if not state.frontier:
        raise DomainError("empty frontier")
    e = _pick(state)
    i = e.index
    p = state.prime(i)
    if i == len(state.exps):
        state.exps.append(1)
        heapq.heappush(state.frontier, _entry(state._source, i + 1, 0, state.precision))
    else:
        state.exps[i] += 1
    a = state.exps[i]
    if i > 0 and state.exps[i - 1] < a:
        raise StructureError(f"exponent of {p} exceeds that of the previous prime")

    acc = state.acc_prec
    gain = e.gain if e.prec >= acc else _gain(p, a - 1, acc)
    state.log_n = state.log_n + state.log_p(i)
    state.log_sigma_ratio = state.log_sigma_ratio + gain
    heapq.heappush(state.frontier, _entry(state._source, i, a, state.precision))
    state.step += 1

    if state.exact_n is not None:
        state.exact_n *= p
        # sigma(p^a) / sigma(p^(a-1)) is not an integer; rebuild the factor
        state.exact_sigma = state.exact_sigma // ((p**a - 1) // (p - 1)) * ((p ** (a + 1) - 1) // (p - 1))
        if state.exact_n.bit_length() > EXACT_LOG10_LIMIT * 3.33:
            state.exact_n = state.exact_sigma = None
    return state


def _recomputed_sums(state: CaState, prec: int) -> tuple[Interval, Interval]:
    log_n = Interval(0, prec=prec)
    lsr = Interval(0, prec=prec)
    for i, a in enumerate(state.exps):
        p = state.prime(i)
        log_n = log_n + a * Interval(p, prec=prec).log()
        num = Fraction(p ** (a + 1) - 1, (p - 1) * p**a)
        lsr = lsr + Interval(num, prec=prec).log()
    return log_n, lsr


def check_ri_state(state: CaState, gamma: Interval | None = None) -> RiVerdict:
    """Robin's inequality for the state's n, compared in log space.

    sigma(n)/n < e^gamma log log n  <=>  log(sigma(n)/n) < gamma + log log log n.
    An undecided comparison is redone from the exponents at higher precision.
    """
    if not state.log_n.lo > 1:
        raise DomainError("check_ri_state needs log n > 1")
    acc = state.acc_prec
    g = gamma if gamma is not None else constants(acc).gamma
    log_n, lsr = state.log_n, state.log_sigma_ratio
    rhs = g + log_n.log().log()
    status = classify(lsr, rhs)
    prec = acc
    while status is RiStatus.INDETERMINATE and prec < 8 * acc:
        prec *= 2
        log_n, lsr = _recomputed_sums(state, prec)
        rhs = constants(prec).gamma + log_n.log().log()
        status = classify(lsr, rhs)
    return RiVerdict(n=state.exact_n, log_n=log_n, lhs=lsr, rhs=rhs, status=status)


# -- primorial form ----------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimorialForm:
    """n as a product of primorial powers, largest primorial first."""

    factors: tuple[tuple[int, int], ...]

    def expand(self) -> dict[int, int]:
        tops = {q: m for q, m in self.factors}
        if not tops:
            return {}
        primes = small_primes(max(tops)).tolist()
        out, running = {}, 0
        for p in reversed(primes):
            running += tops.get(p, 0)
            if running:
                out[p] = running
        return dict(sorted(out.items()))

    def render(self) -> str:
        parts = []
        for q, m in self.factors:
            if q == 2:
                parts.append("2" if m == 1 else f"2^{m}")
            else:
                parts.append(f"{q}#" if m == 1 else f"({q}#)^{m}")
        return "·".join(parts) if parts else "1"

    def to_dict(self) -> dict:
        return {"factors": [list(f) for f in self.factors], "text": self.render()}


def to_primorial_form(state_or_exps) -> PrimorialForm:
    """Multiplicity of q# is (exponent of q) - (exponent of the next prime)."""
    if isinstance(state_or_exps, CaState):
        items = sorted(state_or_exps.exponents.items())
    else:
        items = sorted(state_or_exps.items())
    for (p, a), (q, b) in zip(items, items[1:]):
        if b > a:
            raise StructureError(f"exponent of {q} ({b}) exceeds exponent of {p} ({a})")
    if items:
        primes = small_primes(items[-1][0]).tolist()
        if primes[: len(items)] != [p for p, _ in items]:
            raise StructureError("exponents must cover an initial run of primes")
    factors = []
    for k, (p, a) in enumerate(items):
        nxt = items[k + 1][1] if k + 1 < len(items) else 0
        if a - nxt:
            factors.append((p, a - nxt))
    return PrimorialForm(tuple(reversed(factors)))


# -- checkpoints -----------------------------------------------------------------------------------


def _rle(exps: list[int]) -> list[list[int]]:
    out: list[list[int]] = []
    for a in exps:
        if out and out[-1][0] == a:
            out[-1][1] += 1
        else:
            out.append([a, 1])
    return out


def save_checkpoint(state: CaState, path: str | Path, extra: dict | None = None) -> Path:
    """Self-describing JSON; interval endpoints as exact hex significand/exponent pairs."""
    path = Path(path)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "precision": state.precision,
        "step": state.step,
        "exponents_rle": _rle(state.exps),
        "log_n": state.log_n.to_hex(),
        "log_sigma_ratio": state.log_sigma_ratio.to_hex(),
        "exact_n": str(state.exact_n) if state.exact_n is not None else None,
        "exact_sigma": str(state.exact_sigma) if state.exact_sigma is not None else None,
        "extra": extra or {},
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload))
    tmp.replace(path)
    return path


def load_checkpoint(path: str | Path) -> tuple[CaState, dict]:
    data = json.loads(Path(path).read_text())
    if data.get("format") != CHECKPOINT_FORMAT or data.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version {CHECKPOINT_VERSION} CA checkpoint")
    exps = [a for a, count in data["exponents_rle"] for _ in range(count)]
    state = CaState(
        precision=data["precision"],
        exps=exps,
        log_n=Interval.from_hex(data["log_n"]),
        log_sigma_ratio=Interval.from_hex(data["log_sigma_ratio"]),
        step=data["step"],
        exact_n=int(data["exact_n"]) if data["exact_n"] is not None else None,
        exact_sigma=int(data["exact_sigma"]) if data["exact_sigma"] is not None else None,
    )
    return state, data.get("extra", {})


# -- the run ---------------------------------------------------------------------------------------


def enumerate_until(target_log10_exponent: float, gamma: Interval | None = None,
                    precision: int = DEFAULT_PRECISION, checkpoint_path: str | Path | None = None,
                    checkpoint_every: int = 10**6, resume: bool = False,
                    ) -> tuple[VerificationReport, PrimorialForm]:
    """Walk the CA numbers until log10(n) >= 10**target, checking RI at each.

    Violations at n <= 5040 are recorded, not treated as failures. The final
    state (the first one past the target) is checked too.
    """
    if target_log10_exponent < 1:
        raise ValueError("target exponent must be at least 1")
    acc = precision + ACC_GUARD
    g = gamma if gamma is not None else constants(acc).gamma
    if float(target_log10_exponent).is_integer():
        digits = Interval(10 ** int(target_log10_exponent), prec=acc)
    else:
        digits = Interval(10, prec=acc).pow(Fraction(str(target_log10_exponent)))
    stop_log = digits * Interval(10, prec=acc).log()

    acc_state: dict = {
        "violations": [],
        "violations_above_5040": [],
        "indeterminate": [],
        "min_margin": None,
        "min_margin_step": None,
        "min_margin_log10_n": None,
        "min_log_margin": None,
        "states_checked": 0,
    }
    state = None
    if resume and checkpoint_path is not None and Path(checkpoint_path).exists():
        state, extra = load_checkpoint(checkpoint_path)
        acc_state.update(extra)
    if state is None:
        state = new_state(precision)
    log10 = Interval(10, prec=acc).log()

    while True:
        next_step(state)
        _record(state, g, log10, acc_state)
        if checkpoint_path is not None and state.step % checkpoint_every == 0:
            save_checkpoint(state, checkpoint_path, extra=acc_state)
        if state.log_n.lo >= stop_log.hi:
            break

    if checkpoint_path is not None:
        save_checkpoint(state, checkpoint_path, extra=acc_state)
    form = to_primorial_form(state)
    metrics = dict(acc_state)
    metrics.update(
        steps=state.step,
        target_log10_exponent=target_log10_exponent,
        final_log10_n=(state.log_n / log10).to_json(),
        largest_prime=state.prime(len(state.exps) - 1),
        exponent_of_2=state.exps[0],
        log_n_width=float(state.log_n.width()),
        log_sigma_ratio_width=float(state.log_sigma_ratio.width()),
        refinements=state.refinements,
        primorial_form=form.render() if len(form.factors) <= 64 else None,
        primorial_form_head=" · ".join(form.render().split("·")[:8]),
    )
    passed = not acc_state["violations_above_5040"] and not acc_state["indeterminate"]
    return VerificationReport(name="ca_enumeration", passed=passed, metrics=metrics), form


def _record(state: CaState, gamma: Interval, log10: Interval, acc: dict):
    acc["states_checked"] += 1
    small = state.exact_n is not None and state.exact_n <= ROBIN_LAST_COUNTEREXAMPLE
    if not state.log_n.lo > 1:
        # n = 2: log log n < 0, so the right-hand side is negative
        if state.log_n.hi < 1:
            acc["violations"].append(state.exact_n)
            return
    verdict = check_ri_state(state, gamma)
    label = state.exact_n if state.exact_n is not None else {"step": state.step,
                                                            "log10_n": (state.log_n / log10).lo_str(12)}
    if verdict.status is RiStatus.VIOLATED:
        acc["violations"].append(label)
        if not small:
            acc["violations_above_5040"].append(label)
        return
    if verdict.status is RiStatus.INDETERMINATE:
        acc["indeterminate"].append(label)
        return
    if small:
        return
    log_margin = verdict.rhs - verdict.lhs
    margin = verdict.rhs.exp() - verdict.lhs.exp()
    if acc["min_margin"] is None or margin.lo < Fraction(acc["min_margin"]):
        acc["min_margin"] = margin.lo_str(20)
        acc["min_margin_step"] = state.step
        acc["min_margin_log10_n"] = (state.log_n / log10).lo_str(12)
    if acc["min_log_margin"] is None or log_margin.lo < Fraction(acc["min_log_margin"]):
        acc["min_log_margin"] = log_margin.lo_str(20)
