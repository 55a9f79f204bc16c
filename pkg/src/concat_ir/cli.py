"""Command line: ``concat-ir {analyze,plan,simulate,mac-selftest}``.

Exit codes: 0 success, 2 usage, 3 planning failure, 4 simulation mismatch,
5 abort-dominated simulation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis
from .analysis import ModelKind
from .auth import bits_to_int, crc_hash, degree, is_irreducible, run_selftest
from .codec import code_for_length
from .errors import ParameterError, PlanningError
from .protocol import ProtocolId, SessionConfig, valid_length
from .sim import ChannelModel, end_to_end

EXIT_OK, EXIT_USAGE, EXIT_PLAN, EXIT_MISMATCH, EXIT_ABORTS = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    code = code_for_length(args.code)
    if args.curve == (args.table is not None):
        raise UsageError("give exactly one of --table or --curve")
    if args.curve:
        if args.samples is None or args.samples < 2:
            raise UsageError("--curve needs --samples N with N >= 2")
        _emit(analysis.curve_csv(code.n, args.samples), args.out)
        return EXIT_OK
    if args.table == 3:
        rows = analysis.round_table(code, p=args.p if args.p is not None else 0.03, rounds=args.rounds,
                                    closed_form=not args.stable)
        _emit(analysis.format_csv(["round", "error_rate", "left_rate"], rows), args.out)
        return EXIT_OK
    table_n, ps = analysis.TABLE_P[args.table]
    if code.n != table_n:
        raise UsageError(f"--table {args.table} is defined for --code {table_n}")
    try:
        rows = analysis.depth_table(code, ps, args.target_alpha, ModelKind(args.model))
    except PlanningError as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLAN
    _emit(analysis.format_csv(["p", "l", "eta", "alpha"], rows), args.out)
    return EXIT_OK


def cmd_plan(args) -> int:
    code = code_for_length(args.code)
    try:
        pl = analysis.plan(code, args.p, args.target_alpha, ModelKind(args.model))
    except PlanningError as exc:
        print(f"planning failed: {exc}")
        print(f"contraction bound at p={args.p}: {analysis.contraction_bound(code.n, args.p):.6f}")
        print(f"p_th={analysis.p_threshold(code.n):.6f}")
        return EXIT_PLAN
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    print(f"code={code} p={args.p} target_alpha={args.target_alpha:g} model={pl.model.value}")
    print(f"l={pl.depth_l}")
    print(f"eta={float(pl.eta):.3f} ({pl.eta})")
    print(f"alpha={pl.predicted_alpha:.3e}")
    for i, (rate, left) in enumerate(pl.per_round, start=1):
        print(f"round {i}: error_rate={rate:.3e} left_rate={float(left):.3f}")
    if args.out:
        rows = [(i, r, left) for i, (r, left) in enumerate(pl.per_round, start=1)]
        Path(args.out).write_text(analysis.format_csv(["round", "error_rate", "left_rate"], rows))
    return EXIT_OK


def cmd_simulate(args) -> int:
    code = code_for_length(args.code)
    pid = ProtocolId(args.protocol)
    raw_len = args.len if args.len is not None else code.n**args.depth
    if pid is not ProtocolId.SYNDROME_IR and not valid_length(code, args.depth, raw_len):
        unit = code.n**args.depth
        lo = raw_len // unit * unit
        near = " or ".join(str(x) for x in (lo, lo + unit) if x > 0)
        raise UsageError(f"--len {raw_len} is invalid for protocol {args.protocol}; nearest valid length: {near}")
    if pid is ProtocolId.SYNDROME_IR and raw_len < code.n**2:
        raise UsageError(f"--len must be at least n^2 = {code.n ** 2} for protocol 1")
    try:
        cfg = SessionConfig(pid, code, args.depth, args.mac_width,
                            args.expected_p if args.expected_p is not None else max(args.p, 1e-12),
                            args.gate_delta)
        report = end_to_end(cfg, raw_len, ChannelModel(args.p, args.seed), args.trials, args.workers)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc

    print(f"protocol={int(pid)} code={code} depth={args.depth} p={args.p} len={raw_len} "
          f"trials={args.trials} seed={args.seed}")
    print(f"input_error_rate={report.input_error_rate:.6g}")
    print(f"reconciled_bits={report.reconciled_bits}")
    print(f"mismatched_trials={report.end_to_end_mismatch_count} mismatched_bits={report.mismatched_bits}")
    print(f"aborts={report.abort_count}")
    if report.per_round_error_rates:
        print("per_round_error_rates=" + ",".join(f"{r:.4g}" for r in report.per_round_error_rates))
    print(f"wall_time={report.wall_time:.3f}s", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(report.to_csv())
    if report.end_to_end_mismatch_count:
        return EXIT_MISMATCH
    if 2 * report.abort_count >= report.trials:
        return EXIT_ABORTS
    return EXIT_OK


def _parse_bits(s: str) -> list[int]:
    if not s or set(s) - {"0", "1"}:
        raise UsageError(f"not a bit string: {s!r}")
    return [int(c) for c in s]


def cmd_mac_selftest(args) -> int:
    if (args.poly is None) != (args.msg is None):
        raise UsageError("--poly and --msg go together")
    if args.poly is not None:
        try:
            poly = int(args.poly, 0)
        except ValueError:
            raise UsageError(f"cannot parse polynomial {args.poly!r}") from None
        if degree(poly) < 1:
            raise UsageError("polynomial must have degree >= 1")
        h = crc_hash(_parse_bits(args.msg), poly)
        key = _parse_bits(args.key) if args.key else [0] * degree(poly)
        if len(key) != degree(poly):
            raise UsageError(f"--key must have {degree(poly)} bits")
        tag = bits_to_int(h) ^ bits_to_int(key)
        print(format(tag, f"0{degree(poly)}b"))
        if not is_irreducible(poly):
            print(f"warning: {args.poly} is not irreducible", file=sys.stderr)
        return EXIT_OK
    failures = run_selftest(args.cases, args.seed, tamper=args.tamper)
    if failures:
        for f in failures[:20]:
            print(f"FAIL {f}")
        print(f"{len(failures)} failure(s)")
        return 1
    print(f"MAC self-test passed ({args.cases} cases)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="concat-ir", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="reproduce depth tables and p1(p) curves as CSV")
    a.add_argument("--code", type=int, choices=(7, 15), required=True)
    a.add_argument("--table", type=int, choices=(1, 2, 3))
    a.add_argument("--curve", action="store_true")
    a.add_argument("--samples", type=int)
    a.add_argument("--model", choices=[m.value for m in ModelKind], default="distance",
                   help="per-round model for tables 1 and 2")
    a.add_argument("--target-alpha", type=float, default=1e-9)
    a.add_argument("--p", type=float, help="channel error rate for table 3 (default 0.03)")
    a.add_argument("--rounds", type=int, default=6)
    a.add_argument("--stable", action="store_true",
                   help="table 3: use the cancellation-free sum instead of the closed form "
                        "(differs once rates fall below ~1e-8)")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plan", help="choose the concatenation depth")
    p.add_argument("--code", type=int, choices=(7, 15), required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--target-alpha", type=float, default=1e-9)
    p.add_argument("--model", choices=[m.value for m in ModelKind], default="lemma1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="run end-to-end reconciliation trials")
    s.add_argument("--protocol", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--code", type=int, choices=(7, 15), default=15)
    s.add_argument("--depth", type=int, default=5)
    s.add_argument("--p", type=float, default=0.03)
    s.add_argument("--len", type=int)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--expected-p", type=float, help="gate's assumed channel rate (default: --p)")
    s.add_argument("--gate-delta", type=float)
    s.add_argument("--mac-width", type=int, default=64)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mac-selftest", help="check the CRC one-time-pad MAC")
    m.add_argument("--tamper", action="store_true", help="corrupt every message in transit")
    m.add_argument("--poly", help="print the tag of --msg under this polynomial, e.g. 0b1011")
    m.add_argument("--msg", help="message bits, highest-degree coefficient first")
    m.add_argument("--key", help="one-time pad bits (default all zero)")
    m.add_argument("--cases", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_mac_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
