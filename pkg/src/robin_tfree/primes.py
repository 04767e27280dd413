"""Segmented prime sieve, Chebyshev theta, primorial logs and Mertens products.

The bulk data is kept in numpy arrays. Rigorous enclosures are produced from
exact integer products over fixed-size chunks of primes (one interval ``log``
per chunk), accumulated at a few guard bits above the working precision.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import OutOfRange, RangeError, ResourceError
from .numerics import DEFAULT_PRECISION, Interval, pi
from .reports import VerificationReport

SEGMENT_SIZE = 1 << 24
CHUNK = 256
MAX_TABLE_LIMIT = 10**9
_GUARD = 32
_EXACT_MERTENS_COUNT = 4096
_U = 2.0**-52


def small_primes(n: int) -> np.ndarray:
    """All primes <= n by a plain (unsegmented) sieve."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def iter_prime_segments(limit: int, segment_size: int = SEGMENT_SIZE) -> Iterator[np.ndarray]:
    """Yield the primes <= limit in increasing order, one numpy array per segment.

    Only odd numbers are stored; a segment holds ``segment_size`` of them, so
    memory stays flat however large ``limit`` is.
    """
    if limit < 2:
        return
    yield np.array([2], dtype=np.int64)
    base = small_primes(math.isqrt(limit))[1:]
    span = 2 * segment_size
    lo = 3
    while lo <= limit:
        hi = min(lo + span, limit + 1)  # odd numbers in [lo, hi)
        size = (hi - lo + 1) // 2
        flags = np.ones(size, dtype=bool)
        top = math.isqrt(hi - 1)
        for p in base:
            p = int(p)
            if p > top:
                break
            start = max(p * p, -(-lo // p) * p)
            if start % 2 == 0:
                start += p
            if start >= hi:
                continue
            flags[(start - lo) // 2 :: p] = False
        seg = lo + 2 * np.flatnonzero(flags).astype(np.int64)
        yield seg
        lo += span


def _prod(values: Sequence[int]) -> int:
    """Product by a balanced tree, so big-integer multiplications stay balanced."""
    v = list(values)
    if not v:
        return 1
    while len(v) > 1:
        if len(v) % 2:
            v.append(1)
        v = [a * b for a, b in zip(v[::2], v[1::2])]
    return v[0]


def _log_product(values: Sequence[int], prec: int) -> Interval:
    return Interval(_prod(values), prec=prec).log()


def _log_ratio(num: Sequence[int], den: Sequence[int], prec: int) -> Interval:
    return (Interval(_prod(num), prec=prec) / Interval(_prod(den), prec=prec)).log()


def _packed(vals: np.ndarray) -> list[int]:
    if len(vals) > 1 and int(vals[-1]) < 2**31:
        # pair up in numpy first; the products stay below 2**62
        half = len(vals) // 2
        paired = vals[: 2 * half : 2] * vals[1 : 2 * half : 2]
        return paired.tolist() + vals[2 * half :].tolist()
    return vals.tolist()


def _chunked_log_sum(arr: np.ndarray, prec: int, chunk: int = CHUNK) -> Interval:
    """Enclosure of sum(log p) over ``arr``, one interval log per chunk."""
    total = Interval(0, prec=prec)
    items = _packed(arr)
    for i in range(0, len(items), chunk):
        total = total + _log_product(items[i : i + chunk], prec)
    return total


def _chunked_mertens_sum(arr: np.ndarray, prec: int, chunk: int = CHUNK) -> Interval:
    """Enclosure of sum(log(p/(p-1))) over ``arr``, one interval log per chunk."""
    total = Interval(0, prec=prec)
    num = _packed(arr)
    den = _packed(arr - 1)
    for i in range(0, len(num), chunk):
        total = total + _log_ratio(num[i : i + chunk], den[i : i + chunk], prec)
    return total


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """All primes up to ``limit`` plus lazily built interval checkpoints.

    ``theta_prefix(k)`` encloses the sum of ``log p`` over the first ``k``
    primes; checkpoints every ``CHUNK`` primes keep queries O(CHUNK).
    """

    limit: int
    primes: np.ndarray
    precision: int = DEFAULT_PRECISION

    def __len__(self) -> int:
        return len(self.primes)

    @property
    def _acc_prec(self) -> int:
        return self.precision + _GUARD

    def count_upto(self, x) -> int:
        """pi(x) for x within the table."""
        if x > self.limit:
            raise OutOfRange(f"x={x} exceeds table limit {self.limit}")
        return int(np.searchsorted(self.primes, math.floor(x), side="right"))

    def _checkpoints(self, shift: int) -> list[Interval]:
        acc = self._acc_prec
        out = [Interval(0, prec=acc)]
        total = out[0]
        vals = self.primes.tolist()
        for i in range(0, len(vals) - CHUNK + 1, CHUNK):
            block = vals[i : i + CHUNK]
            if shift:
                step = _log_ratio(block, [v - 1 for v in block], acc)
            else:
                step = _log_product(block, acc)
            total = total + step
            out.append(total)
        return out

    @cached_property
    def theta_checkpoints(self) -> list[Interval]:
        return self._checkpoints(0)

    @cached_property
    def mertens_checkpoints(self) -> list[Interval]:
        return self._checkpoints(-1)

    def theta_prefix(self, k: int) -> Interval:
        """Enclosure of log(p_1 * ... * p_k)."""
        if not 0 <= k <= len(self.primes):
            raise OutOfRange(f"prime index {k} outside table of {len(self.primes)} primes")
        j = k // CHUNK
        base = self.theta_checkpoints[j]
        rest = self.primes[j * CHUNK : k].tolist()
        if rest:
            base = base + _log_product(rest, self._acc_prec)
        return base.with_precision(self.precision)

    def mertens_log_prefix(self, k: int) -> Interval:
        """Enclosure of sum over the first k primes of log(p/(p-1))."""
        if not 0 <= k <= len(self.primes):
            raise OutOfRange(f"prime index {k} outside table of {len(self.primes)} primes")
        j = k // CHUNK
        base = self.mertens_checkpoints[j]
        rest = self.primes[j * CHUNK : k].tolist()
        if rest:
            acc = self._acc_prec
            base = base + _log_ratio(rest, [v - 1 for v in rest], acc)
        return base.with_precision(self.precision)

    def theta_float_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Float lower/upper bounds for theta(p_i), every prime in the table.

        Each chunk starts from its interval checkpoint; the in-chunk partial
        sums are float64 with an error radius that assumes numpy's ``log`` is
        within 2 ulps and charges one rounding per addition.
        """
        n = len(self.primes)
        m = -(-n // CHUNK)
        logs = np.zeros(m * CHUNK)
        logs[:n] = np.log(self.primes.astype(np.float64))
        within = np.cumsum(logs.reshape(m, CHUNK), axis=1)
        cps = self.theta_checkpoints
        base_lo = np.array([math.nextafter(float(c.lo), -math.inf) for c in cps[:m]])
        base_hi = np.array([math.nextafter(float(c.hi), math.inf) for c in cps[:m]])
        pos = np.arange(CHUNK, dtype=np.float64) + 8.0
        err = pos * _U * (np.abs(base_hi)[:, None] + within)
        lo = (base_lo[:, None] + within - err).reshape(-1)[:n]
        hi = (base_hi[:, None] + within + err).reshape(-1)[:n]
        return lo, hi


def sieve(limit: int, precision: int = DEFAULT_PRECISION, max_limit: int = MAX_TABLE_LIMIT,
          segment_size: int = SEGMENT_SIZE) -> PrimeTable:
    """Build a :class:`PrimeTable` of all primes <= limit."""
    limit = int(limit)
    if limit < 2:
        raise RangeError("sieve limit must be at least 2")
    if limit > max_limit:
        raise ResourceError(
            f"limit {limit} exceeds the in-memory table budget {max_limit}; "
            "use iter_prime_segments for streamed work"
        )
    segs = list(iter_prime_segments(limit, segment_size))
    primes = np.concatenate(segs) if segs else np.zeros(0, dtype=np.int64)
    return PrimeTable(limit=limit, primes=primes, precision=precision)


# -- queries ------------------------------------------------------------------------


def theta(x, table: PrimeTable) -> Interval:
    """Enclosure of the Chebyshev function, the sum of log p over p <= x."""
    return table.theta_prefix(table.count_upto(x))


def primorial_log(n: int, table: PrimeTable) -> Interval:
    """Enclosure of log(p_n#), the log of the product of the first n primes."""
    return table.theta_prefix(n)


def mertens_log(x, table: PrimeTable) -> Interval:
    return table.mertens_log_prefix(table.count_upto(x))


def mertens_product(x, table: PrimeTable) -> Interval:
    """Enclosure of the product over p <= x of (1 - 1/p)**-1."""
    k = table.count_upto(x)
    if k <= _EXACT_MERTENS_COUNT:
        ps = table.primes[:k].tolist()
        prec = table.precision
        return Interval(_prod(ps), prec=prec) / Interval(_prod([p - 1 for p in ps]), prec=prec)
    return table.mertens_log_prefix(k).exp()


def streamed_mertens_logs(points: Sequence[int], precision: int = DEFAULT_PRECISION,
                          segment_size: int = SEGMENT_SIZE) -> dict[int, Interval]:
    """Enclosures of sum_{p<=x} log(p/(p-1)) at each x, without holding the primes.

    Used for thresholds beyond the in-memory table budget (around 1e9).
    """
    pts = sorted({int(x) for x in points})
    if not pts:
        return {}
    acc = precision + _GUARD
    total = Interval(0, prec=acc)
    out: dict[int, Interval] = {}
    idx = 0
    for seg in iter_prime_segments(pts[-1], segment_size):
        start = 0
        while idx < len(pts) and pts[idx] < seg[-1]:
            cut = int(np.searchsorted(seg, pts[idx], side="right"))
            part = seg[start:cut]
            if len(part):
                total = total + _chunked_mertens_sum(part, acc)
            out[pts[idx]] = total.with_precision(precision)
            start = cut
            idx += 1
        part = seg[start:]
        if len(part):
            total = total + _chunked_mertens_sum(part, acc)
    while idx < len(pts):
        out[pts[idx]] = total.with_precision(precision)
        idx += 1
    return out


# -- the bound |theta(x) - x| <= sqrt(x) log^2 x / (8 pi) -------------------------------

THETA_CHECK_MIN = 599


def theta_error_bound(x, prec: int = DEFAULT_PRECISION) -> Interval:
    """sqrt(x) * log(x)**2 / (8 pi) as an interval."""
    xi = Interval.exact(x, prec)
    return xi.sqrt() * xi.log() ** 2 / (8 * pi(prec))


def theta_bound_check(x_min, x_max, table: PrimeTable) -> VerificationReport:
    """Check |theta(x) - x| <= sqrt(x) log^2 x / (8 pi) at every critical x in a range.

    theta is constant between primes, so on [p_k, p_{k+1}) the quantity
    theta(x) - x peaks at p_k and x - theta(x) peaks just below p_{k+1}; the
    bound is increasing with slope below one there, so checking those points,
    plus both range endpoints, covers the whole range.
    """
    if x_min < THETA_CHECK_MIN:
        raise RangeError(f"x_min={x_min} is below 599, where the bound is not valid")
    if not x_min < x_max:
        raise RangeError("need x_min < x_max")
    if x_max > table.limit:
        raise OutOfRange(f"x_max={x_max} exceeds table limit {table.limit}")

    prec = table.precision
    ps = table.primes
    i0 = int(np.searchsorted(ps, math.ceil(x_min), side="left"))
    i1 = int(np.searchsorted(ps, math.floor(x_max), side="right"))
    th_lo, th_hi = table.theta_float_bounds()

    x = ps[i0:i1].astype(np.float64)
    f = np.sqrt(x) * np.log(x) ** 2 / (8 * math.pi)
    f_err = 1e-13 * f
    # theta(p) - p <= f(p)
    upper_slack = f - (th_hi[i0:i1] - x)
    # p - theta(p-) <= f(p), theta(p-) = theta of the previous prime
    prev_lo = th_lo[i0 - 1 : i1 - 1] if i0 > 0 else np.concatenate(([0.0], th_lo[: i1 - 1]))
    lower_slack = f - (x - prev_lo)
    if len(x) and ps[i0] <= x_min:
        lower_slack[0] = np.inf  # left limit at x_min lies outside the range

    n_points = 2 * len(x)
    refined = 0
    failures: list[dict] = []
    worst = (math.inf, None, None)

    def rigorous(xv, side: str, left_limit: bool = False) -> Interval:
        bound = theta_error_bound(xv, prec)
        xi = Interval.exact(xv, prec)
        k = table.count_upto(xv)
        if left_limit:
            k -= 1  # xv is prime; theta just below it
        th = table.theta_prefix(k)
        gap = th - xi if side == "upper" else xi - th
        return bound - gap

    for side, slack in (("upper", upper_slack), ("lower", lower_slack)):
        suspect = np.flatnonzero(slack <= f_err)
        for j in suspect.tolist():
            refined += 1
            s = rigorous(int(x[j]), side, left_limit=(side == "lower"))
            if not s.lo > 0:
                failures.append({"x": int(x[j]), "side": side, "slack": s.to_json()})
        if len(slack):
            k = int(np.argmin(slack))
            if slack[k] < worst[0]:
                worst = (float(slack[k]), int(x[k]), side)

    for xv in {x_min, x_max}:
        for side in ("upper", "lower"):
            n_points += 1
            s = rigorous(xv, side)
            if not s.lo > 0:
                failures.append({"x": str(xv), "side": side, "slack": s.to_json()})
            if float(s.lo) < worst[0]:
                worst = (float(s.lo), str(xv), side)

    rel = (upper_slack / f, lower_slack / f)
    min_rel = min(float(np.min(r)) for r in rel) if len(x) else math.inf
    return VerificationReport(
        name="theta_bound_check",
        passed=not failures,
        metrics={
            "x_min": str(x_min),
            "x_max": str(x_max),
            "primes_in_range": len(x),
            "critical_points": n_points,
            "refined_points": refined,
            "min_slack": worst[0],
            "min_slack_at": worst[1],
            "min_slack_side": worst[2],
            "min_relative_slack": min_rel,
            "failures": failures[:20],
        },
    )


# -- binary cache ---------------------------------------------------------------------------

_MAGIC = b"RTPT"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQ32s")


def save_table(table: PrimeTable, path: str | Path) -> Path:
    """Write the primes to ``path`` with a versioned, checksummed header."""
    path = Path(path)
    data = np.ascontiguousarray(table.primes, dtype="<u8").tobytes()
    digest = hashlib.sha256(data).digest()
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, table.limit, len(table.primes), digest))
        fh.write(data)
    return path


def load_table(path: str | Path, precision: int = DEFAULT_PRECISION) -> PrimeTable:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, limit, count, digest = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a prime table cache")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    data = raw[_HEADER.size :]
    if len(data) != 8 * count or hashlib.sha256(data).digest() != digest:
        raise ValueError(f"{path}: checksum or length mismatch")
    primes = np.frombuffer(data, dtype="<u8").astype(np.int64)
    return PrimeTable(limit=int(limit), primes=primes, precision=precision)
