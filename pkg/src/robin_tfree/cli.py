"""Batch command line: ``robin-tfree <command> [options]``.

Every command writes one JSON report (to ``--output`` or stdout) holding the
resolved configuration, deterministic metrics and a ``timing`` block. Tables
go to CSV via ``--csv``.

Exit codes
----------
0   verified / proved
1   check failed (a bound violated, a g value above 1)
2   indeterminate (interval comparison undecided)
64  usage or configuration error
65  argument outside a function's domain (DomainError)
66  argument outside a supported range (RangeError, OutOfRange)
69  memory or size budget exceeded (ResourceError)
70  internal consistency failure (StructureError)
74  file read or write failure
75  precision exhausted; rerun with a larger --precision
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (DomainError, OutOfRange, PrecisionExhausted, RangeError, ResourceError,
                     StructureError)
from .reports import Stopwatch, VerificationReport, jsonable, write_csv, write_json

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INDETERMINATE = 2
EXIT_USAGE = 64
EXIT_DOMAIN = 65
EXIT_RANGE = 66
EXIT_RESOURCE = 69
EXIT_STRUCTURE = 70
EXIT_IO = 74
EXIT_PRECISION = 75


class ConfigError(ValueError):
    """Invalid command-line configuration, reported with exit code 64."""


def parse_int(text: str) -> int:
    """Parse ``10000000``, ``10^7``, ``1e8``, ``2.169e25`` or ``1_000`` into an exact int."""
    s = str(text).strip().replace("_", "")
    try:
        if "^" in s:
            base, exp = s.split("^", 1)
            value = Decimal(base) ** int(exp)
        else:
            value = Decimal(s)
    except (InvalidOperation, ValueError):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value != value.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def parse_int_list(text: str) -> list[int]:
    if text.strip().lower() in ("", "none"):
        return []
    return [parse_int(part) for part in text.split(",")]


@dataclass
class RunConfig:
    command: str
    precision: int
    t: int | None = None
    limit: int | None = None
    target_exp: float | None = None
    output: str | None = None
    g_inf_coeff: str = "1.388"
    c1_source: str = "published"
    options: dict = field(default_factory=dict)

    def validate(self):
        if self.precision < 53:
            raise ConfigError(f"--precision must be at least 53 bits, got {self.precision}")
        if self.t is not None and self.t < 2:
            raise ConfigError(f"--t must be at least 2, got {self.t}")
        if self.target_exp is not None and self.target_exp < 1:
            raise ConfigError("--target-exp must be at least 1")
        if self.limit is not None and self.limit < 1:
            raise ConfigError("--limit must be positive")

    def to_dict(self) -> dict:
        return jsonable(asdict(self))

    def params(self, t: int | None = None):
        from .bounds import GParams

        opts = self.options
        kwargs = {}
        if "B" in opts:
            kwargs["B"] = opts["B"]
        if "switch_prime" in opts:
            kwargs["switch_prime"] = opts["switch_prime"]
        try:
            return GParams(t=t or self.t or 2, precision=self.precision, g_inf_coeff=self.g_inf_coeff,
                           c1_source=self.c1_source, **kwargs)
        except (RangeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


# -- commands -------------------------------------------------------------------------------


def _status_code(status) -> int:
    return {"proved": EXIT_OK, "failed": EXIT_FAILED}.get(status.value, EXIT_INDETERMINATE)


def cmd_certify(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from .bounds import certify_t

    res = certify_t(cfg.t, cfg.params())
    report = VerificationReport("certify", res.passed.value == "proved", {"result": res.to_dict()})
    return report, _status_code(res.passed)


def cmd_max_t(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from .bounds import Status, scan_t

    rows = scan_t(cfg.params(), cfg.options["t_limit"])
    proved = [r.t for r in rows if r.passed is Status.PROVED]
    t_star = proved[-1] if proved else None
    if cfg.options.get("csv"):
        write_csv(cfg.options["csv"], ["t", "outcome", "g_B_margin_lo", "g_inf_margin_lo"],
                  [(r.t, r.passed.value, r.margins["g_B"].lo_str(12), r.margins["g_inf"].lo_str(12))
                   for r in rows])
    report = VerificationReport("max_t", t_star is not None, {
        "t_star": t_star,
        "scan": [r.to_dict() for r in rows],
    })
    return report, EXIT_OK if t_star is not None else EXIT_FAILED


def cmd_c1(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from fractions import Fraction

    from .bounds import C1_PUBLISHED, c1_pieces

    c = c1_pieces(cfg.params())
    ok = (c.piece1.hi <= Fraction("5.055e-10") and c.piece2.hi <= Fraction("2.139e-9")
          and c.total.hi <= C1_PUBLISHED)
    return VerificationReport("c1", bool(ok), {"certificate": c.to_dict()}), EXIT_OK if ok else EXIT_FAILED


def cmd_small_scan(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from .robin_core import small_scan

    report = small_scan(cfg.limit, prec=cfg.precision)
    return report, EXIT_OK if report.passed else EXIT_FAILED


def cmd_ca(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from .ca_enumerator import enumerate_until

    opts = cfg.options
    report, _ = enumerate_until(cfg.target_exp, precision=cfg.precision,
                                checkpoint_path=opts.get("checkpoint"),
                                checkpoint_every=opts["checkpoint_every"], resume=opts["resume"])
    if report.metrics["indeterminate"] and not report.metrics["violations_above_5040"]:
        return report, EXIT_INDETERMINATE
    return report, EXIT_OK if report.passed else EXIT_FAILED


def cmd_g_table(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from .bounds import g_table, is_non_increasing

    params = cfg.params()
    metrics = {}
    ok = True
    for kind in ("g_B", "g_inf"):
        rows = g_table(cfg.t, params, cfg.options["grid"], kind)
        mono, bad = is_non_increasing(rows)
        ok = ok and mono
        metrics[kind] = {"points": len(rows), "non_increasing": mono, "violations": bad[:20],
                         "first": rows[0][1], "last": rows[-1][1]}
        csv_path = cfg.options.get("csv")
        if csv_path:
            path = Path(csv_path)
            if kind == "g_inf":
                path = path.with_name(path.stem + "_g_inf" + path.suffix)
            write_csv(path, ["p", "t", f"{kind}.lo", f"{kind}.hi"],
                      [(p, cfg.t, v.lo_str(20), v.hi_str(20)) for p, v in rows])
            metrics[kind]["csv"] = str(path)
    return VerificationReport("g_table", ok, metrics), EXIT_OK if ok else EXIT_FAILED


def cmd_theta_check(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from .primes import sieve, theta_bound_check

    opts = cfg.options
    table = sieve(opts["x_max"], cfg.precision)
    report = theta_bound_check(opts["x_min"], opts["x_max"], table)
    return report, EXIT_OK if report.passed else EXIT_FAILED


def cmd_mertens_check(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from .bounds import mertens_lower_check, mertens_upper_check
    from .primes import sieve

    opts = cfg.options
    params = cfg.params()
    rng = np.random.default_rng(opts["seed"])
    xs = rng.integers(599, opts["x_max"], opts["samples"], endpoint=True).tolist()
    table = sieve(opts["x_max"], cfg.precision)
    lower = mertens_lower_check(xs, table, params)
    metrics = {"lower": lower.metrics}
    ok = lower.passed
    if opts["upper_points"]:
        upper = mertens_upper_check(opts["upper_points"], cfg.precision)
        metrics["upper"] = upper.metrics
        ok = ok and upper.passed
    return VerificationReport("mertens_check", ok, metrics), EXIT_OK if ok else EXIT_FAILED


def cmd_bound_chain(cfg: RunConfig) -> tuple[VerificationReport, int]:
    from .primes import sieve
    from .robin_core import bound_chain_check

    opts = cfg.options
    table = sieve(opts["p_max"], cfg.precision)
    report = bound_chain_check(table, cfg.t, cfg.params(), opts["p_min"], opts["p_max"])
    return report, EXIT_OK if report.passed else EXIT_FAILED


COMMANDS = {
    "certify": cmd_certify,
    "max-t": cmd_max_t,
    "c1": cmd_c1,
    "small-scan": cmd_small_scan,
    "ca": cmd_ca,
    "g-table": cmd_g_table,
    "theta-check": cmd_theta_check,
    "mertens-check": cmd_mertens_check,
    "bound-chain": cmd_bound_chain,
}


# -- argument parsing ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_precision() -> int:
    raw = os.environ.get("ROBIN_TFREE_PRECISION", "100")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"ROBIN_TFREE_PRECISION must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=None,
                        help="working precision in bits (default: $ROBIN_TFREE_PRECISION or 100)")
    common.add_argument("--output", "-o", default=None, help="JSON report path (default: stdout)")
    bparams = argparse.ArgumentParser(add_help=False)
    bparams.add_argument("--g-inf-coeff", choices=["1.388", "1.338"], default="1.388",
                         help="linear coefficient (x1e-10) in the g_inf denominator")
    bparams.add_argument("--c1-source", choices=["published", "recomputed"], default="published",
                         help="use the published C1 constant or the recomputed enclosure")
    bparams.add_argument("--B", type=parse_int, default=None, help="upper end of the g_B range")
    bparams.add_argument("--switch-prime", type=parse_int, default=None)

    parser = _Parser(prog="robin-tfree", description=__doc__.split("\n\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog=__doc__.split("\n\n", 1)[1])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("certify", parents=[common, bparams],
                       help="test g_B(switch_prime; t) < 1 and g_inf(B; t) < 1")
    p.add_argument("--t", type=int, required=True)

    p = sub.add_parser("max-t", parents=[common, bparams], help="largest t that certifies")
    p.add_argument("--t-limit", type=int, default=256)
    p.add_argument("--csv", default=None, help="write t,outcome,margins")

    sub.add_parser("c1", parents=[common, bparams], help="recompute the C1 certificate")

    p = sub.add_parser("small-scan", parents=[common], help="all RI counterexamples up to a limit")
    p.add_argument("--limit", type=parse_int, required=True)

    p = sub.add_parser("ca", parents=[common], help="walk CA numbers up to 10^(10^k)")
    p.add_argument("--target-exp", type=float, required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--checkpoint-every", type=parse_int, default=10**6)
    p.add_argument("--resume", action="store_true")

    p = sub.add_parser("g-table", parents=[common, bparams], help="g_B and g_inf on geometric grids")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--grid", type=int, default=1000)
    p.add_argument("--csv", default=None, help="g_B CSV path; g_inf goes next to it with suffix _g_inf")

    p = sub.add_parser("theta-check", parents=[common], help="|theta(x) - x| bound on a range")
    p.add_argument("--x-min", type=parse_int, default=599)
    p.add_argument("--x-max", type=parse_int, default=10**8)

    p = sub.add_parser("mertens-check", parents=[common, bparams],
                       help="Mertens product bounds at random and fixed points")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x-max", type=parse_int, default=10**8)
    p.add_argument("--upper-points", type=parse_int_list, default=[767_135_587, 10**9],
                   help="comma-separated x >= 767135587 for the upper bound, or 'none'")

    p = sub.add_parser("bound-chain", parents=[common, bparams],
                       help="exp(-gamma) R_t(p#) <= g_B(p; t) for primes in a range")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--p-min", type=parse_int, default=599)
    p.add_argument("--p-max", type=parse_int, default=10**6)
    return parser


_OPTION_KEYS = ("t_limit", "csv", "checkpoint", "checkpoint_every", "resume", "grid", "x_min", "x_max",
                "samples", "seed", "upper_points", "p_min", "p_max")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    ns = vars(args)
    options = {k: ns[k] for k in _OPTION_KEYS if k in ns}
    if ns.get("B") is not None:
        options["B"] = ns["B"]
    if ns.get("switch_prime") is not None:
        options["switch_prime"] = ns["switch_prime"]
    cfg = RunConfig(
        command=args.command,
        precision=args.precision if args.precision is not None else _default_precision(),
        t=ns.get("t"),
        limit=ns.get("limit"),
        target_exp=ns.get("target_exp"),
        output=args.output,
        g_inf_coeff=ns.get("g_inf_coeff", "1.388"),
        c1_source=ns.get("c1_source", "published"),
        options=options,
    )
    cfg.validate()
    if "samples" in options and options["samples"] < 1:
        raise ConfigError("--samples must be positive")
    if "grid" in options and options["grid"] < 2:
        raise ConfigError("--grid must be at least 2")
    if "x_max" in options and options["x_max"] <= options.get("x_min", 599):
        raise ConfigError("--x-max must exceed --x-min (and 599)")
    return cfg


_ERROR_CODES = (
    (PrecisionExhausted, EXIT_PRECISION),
    (DomainError, EXIT_DOMAIN),
    (RangeError, EXIT_RANGE),
    (OutOfRange, EXIT_RANGE),
    (ResourceError, EXIT_RESOURCE),
    (StructureError, EXIT_STRUCTURE),
    (OSError, EXIT_IO),
)


def _emit(payload: dict, output: str | None):
    if output:
        write_json(output, payload)
    else:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"robin-tfree: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    clock = Stopwatch()
    try:
        report, code = COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"robin-tfree: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except tuple(cls for cls, _ in _ERROR_CODES) as exc:
        code = next(c for cls, c in _ERROR_CODES if isinstance(exc, cls))
        print(f"robin-tfree: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code

    report.timing = clock.timing()
    payload = report.to_dict(config=cfg.to_dict())
    payload["exit_code"] = code
    try:
        _emit(payload, cfg.output)
    except OSError as exc:
        print(f"robin-tfree: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
