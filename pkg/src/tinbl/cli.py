"""Command-line front end.

Exit status: 0 when every check passes, 1 when a check fails, 2 for usage
or input errors. All randomness comes from ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import gates
from .algebra import BitValue, ExpansionCapError, ProductString, Superposition
from .measure import DEFAULT_THRESHOLD, measure_coefficient, orthogonality_matrix
from .rns import Rns, RtwId
from .signals import compile_expr, compile_superposition, expr_from_json, expr_to_json
from .universes import UniverseKind, build_universe, check_stats, expand_universe, universe_stats

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_M = 3
DEFAULT_TICKS = 10_000
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    m: int
    seed: int
    ticks: int
    threshold: str
    format: str
    out: str | None

    def rns(self) -> Rns:
        return Rns(self.m, self.seed)


# --------------------------------------------------------------------------
# state files

def state_to_json(y: Superposition) -> dict:
    return {"m": y.m, "terms": [[s, c] for s, c in y.pairs()]}


def state_to_csv(y: Superposition) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["string", "coefficient"])
    w.writerows(y.pairs())
    return buf.getvalue()


def state_from_json(obj, m: int | None = None) -> Superposition:
    """Accepts a state object, a bare pair list, or any report embedding one under ``output``."""
    if isinstance(obj, dict) and "terms" not in obj and isinstance(obj.get("output"), dict):
        obj = obj["output"]
    if isinstance(obj, dict):
        m = obj.get("m", m)
        pairs = obj["terms"]
    else:
        pairs = obj
    return Superposition.from_pairs(((str(s), int(c)) for s, c in pairs), m=m)


def load_state(path: str, m: int | None = None) -> Superposition:
    try:
        text = Path(path).read_text() if path != "-" else sys.stdin.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        try:
            return state_from_json(json.loads(text), m)
        except json.JSONDecodeError:
            rows = [r for r in csv.reader(io.StringIO(text)) if r]
            if rows and rows[0][0].strip().lower() == "string":
                rows = rows[1:]
            return Superposition.from_pairs(((r[0], int(r[1])) for r in rows), m=m)
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise UsageError(f"malformed state in {path}: {exc}") from exc


def state_arg(args) -> Superposition:
    """Load ``--state``; an explicit ``-m`` must agree with the file."""
    y = load_state(args.state, args.m)
    if args.m is not None and y.m != args.m:
        raise UsageError(f"state has m={y.m} but -m {args.m} was given")
    return y


def parse_string(text: str, m: int) -> ProductString:
    try:
        return ProductString.parse(text, m)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_bit(text: str) -> BitValue:
    try:
        return BitValue.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# --------------------------------------------------------------------------
# output

def emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        try:
            Path(cfg.out).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {cfg.out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def emit_json(cfg: RunConfig, payload: dict) -> None:
    emit(cfg, json.dumps({"config": asdict(cfg), **payload}, indent=2) + "\n")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands

def cmd_rns_dump(cfg: RunConfig, args) -> int:
    rns = cfg.rns()
    if args.rails:
        try:
            ids = [RtwId(*map(int, tok.split(":"))) for tok in args.rails.split(",")]
        except (ValueError, TypeError) as exc:
            raise UsageError(f"bad --rails {args.rails!r}; expected e.g. 1:0,2:1") from exc
        for r in ids:
            if r.bit_index > cfg.m:
                raise UsageError(f"{r} out of range for m={cfg.m}")
    else:
        ids = [RtwId.from_stream(s) for s in range(rns.n_rails)]
    block = rns.stream_signs([r.stream for r in ids], np.arange(cfg.ticks))
    header = ["t"] + [f"rail_{r.bit_index}_{r.rail}" for r in ids]
    rows = ([t] + block[:, t].tolist() for t in range(cfg.ticks))
    if cfg.format == "json":
        emit_json(cfg, {"rails": header[1:], "signs": block.T.tolist()})
    else:
        emit(cfg, csv_text(header, rows))
    return EXIT_OK


def _emit_state(cfg: RunConfig, y: Superposition, extra: dict) -> None:
    if cfg.format == "csv":
        emit(cfg, state_to_csv(y))
    elif cfg.format == "text":
        emit(cfg, "".join(f"{c:+d} {s}\n" for s, c in y.pairs()))
    else:
        emit_json(cfg, {**extra, "output": state_to_json(y)})


def cmd_expand(cfg: RunConfig, args) -> int:
    kind = UniverseKind(args.kind)
    try:
        y = expand_universe(kind, cfg.m)
    except ExpansionCapError as exc:
        raise UsageError(str(exc)) from exc
    _emit_state(cfg, y, {"kind": kind.value, "term_count": len(y)})
    return EXIT_OK


def cmd_universe(cfg: RunConfig, args) -> int:
    if args.expand:
        return cmd_expand(cfg, args)
    kind = UniverseKind(args.kind)
    stats = universe_stats(kind, cfg.m, cfg.ticks, cfg.rns())
    problems = check_stats(stats, Fraction(cfg.threshold))
    if cfg.format == "csv":
        emit(cfg, csv_text(["abs_amplitude", "count"], stats.csv_rows()))
    elif cfg.format == "text":
        lines = [f"{kind.value} universe, m={cfg.m}, ticks={stats.ticks}, zeros={stats.zero_count}"]
        lines += [f"  |U|={a}: {c}" for a, c in stats.sorted_histogram()]
        lines += [f"FAIL {p}" for p in problems] or ["PASS"]
        emit(cfg, "\n".join(lines) + "\n")
    else:
        emit_json(cfg, {**stats.to_json(), "pass": not problems, "problems": problems})
    return EXIT_FAIL if problems else EXIT_OK


def cmd_eval(cfg: RunConfig, args) -> int:
    if args.state:
        y = state_arg(args)
        cfg.m = y.m
        expr = compile_superposition(y)
    elif args.universe:
        expr = build_universe(UniverseKind(args.universe), cfg.m)
    else:
        try:
            expr = expr_from_json(json.loads(Path(args.expr).read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot load expression {args.expr}: {exc}") from exc
    if args.save_expr:
        Path(args.save_expr).write_text(json.dumps(expr_to_json(expr)) + "\n")
    prog = compile_expr(expr)
    if prog.max_bit > cfg.m:
        raise UsageError(f"expression uses bit {prog.max_bit} but m={cfg.m}")
    amps = prog.eval_window(args.t0, cfg.ticks, cfg.rns())
    ts = range(args.t0, args.t0 + cfg.ticks)
    if cfg.format == "json":
        emit_json(cfg, {"t0": args.t0, "amplitudes": [str(int(a)) for a in amps]})
    else:
        emit(cfg, csv_text(["t", "amplitude"], ((t, int(a)) for t, a in zip(ts, amps))))
    return EXIT_OK


def _gate_payload(report: gates.GateReport, y_in: Superposition | None) -> dict:
    return {
        "gate": report.gate,
        "inputs": report.inputs,
        "input": None if y_in is None else state_to_json(y_in),
        "output": state_to_json(report.output),
        "ticks": report.ticks,
        "consistent": report.consistent,
        "mismatched_ticks": report.mismatches[:20],
    }


def cmd_gate(cfg: RunConfig, args) -> int:
    if args.gate == "not":
        if len(args.operands) != 1:
            raise UsageError("usage: gate not BIT (--state FILE | --string S)")
        try:
            i = int(args.operands[0])
        except ValueError as exc:
            raise UsageError(f"bit index must be an integer, got {args.operands[0]!r}") from exc
        if args.state:
            y = state_arg(args)
        elif args.string:
            y = Superposition.of(parse_string(args.string, cfg.m))
        else:
            raise UsageError("gate not needs --state or --string")
        if not 1 <= i <= y.m:
            raise UsageError(f"bit index {i} out of range 1..{y.m}")
        cfg.m = y.m
        report = gates.check_not(i, y, cfg.rns(), cfg.ticks)
        y_in = y
    else:
        if len(args.operands) != 2:
            raise UsageError(f"usage: gate {args.gate} A B  (A, B in L H X V)")
        a, b = (parse_bit(x) for x in args.operands)
        cfg.m = 1
        report = gates.check_single(args.gate, a, b, cfg.rns(), cfg.ticks)
        y_in = None
    if cfg.format == "text":
        pairs = report.output.pairs()
        emit(cfg, f"{pairs[0][0]}\n" if len(pairs) == 1 and pairs[0][1] == 1 else f"{report.output!r}\n")
    elif cfg.format == "csv":
        emit(cfg, state_to_csv(report.output))
    else:
        emit_json(cfg, _gate_payload(report, y_in))
    return EXIT_OK if report.consistent else EXIT_FAIL


def render_table(gate: str) -> str:
    table = gates.truth_table(gate)
    head = f"{gate.upper():>5} | " + " ".join(v.name for v in gates.ORDER)
    lines = [head, "-" * len(head)]
    for a, row in zip(gates.ORDER, table):
        lines.append(f"{a.name:>5} | " + " ".join(v.name for v in row))
    return "\n".join(lines) + "\n"


def cmd_truth_table(cfg: RunConfig, args) -> int:
    table = gates.truth_table(args.gate)
    bad = gates.table_mismatches(args.gate) if args.check else []
    if cfg.format == "json":
        entries = [
            {"row": a.name, "col": b.name, "out": table[r][c].name}
            for r, a in enumerate(gates.ORDER)
            for c, b in enumerate(gates.ORDER)
        ]
        payload = {"gate": args.gate, "labels": [v.name for v in gates.ORDER], "entries": entries}
        if args.check:
            payload["pass"] = not bad
            payload["mismatches"] = [[a.name, b.name, g.name, e.name] for a, b, g, e in bad]
        emit_json(cfg, payload)
    elif cfg.format == "csv":
        emit(cfg, csv_text(["in"] + [v.name for v in gates.ORDER],
                           ([a.name] + [v.name for v in row] for a, row in zip(gates.ORDER, table))))
    else:
        text = render_table(args.gate)
        if args.check:
            text += "".join(f"MISMATCH {a}{b}: got {g}, expected {e}\n" for a, b, g, e in bad) or "check: PASS\n"
        emit(cfg, text)
    return EXIT_FAIL if bad else EXIT_OK


def cmd_measure(cfg: RunConfig, args) -> int:
    if args.what == "ortho":
        report = orthogonality_matrix(cfg.rns(), cfg.ticks, threshold=Fraction(cfg.threshold))
        if cfg.format == "text":
            lines = [" ".join(f"{float(x):+.5f}" for x in row) for row in report.means()]
            lines.append("PASS" if report.passed else f"FAIL {report.failures()}")
            emit(cfg, "\n".join(lines) + "\n")
        else:
            emit_json(cfg, report.to_json())
        return EXIT_OK if report.passed else EXIT_FAIL

    if args.state:
        y = state_arg(args)
    elif args.numbers:
        try:
            y = Superposition.numbers([int(x) for x in args.numbers.split(",")], cfg.m)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("measure coeff needs --state or --numbers")
    if not args.string:
        raise UsageError("measure coeff needs --string")
    cfg.m = y.m
    strings = [parse_string(s, y.m) for s in args.string]
    rns = cfg.rns()
    results = []
    for w in strings:
        est = measure_coefficient(y, w, cfg.ticks, rns, threshold=Fraction(cfg.threshold))
        results.append({"string": str(w), "exact": y.coefficient(w), **est.to_json()})
    ok = all(r["pass"] for r in results)
    if cfg.format == "text":
        emit(cfg, "".join(f"{r['string']}: {r['mean']} (exact {r['exact']}) {'PASS' if r['pass'] else 'FAIL'}\n"
                          for r in results))
    elif cfg.format == "csv":
        emit(cfg, csv_text(["string", "exact", "mean", "tolerance", "pass"],
                           ((r["string"], r["exact"], r["mean"], r["tolerance"], r["pass"]) for r in results)))
    else:
        emit_json(cfg, {"estimates": results, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# argument parsing

def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _threshold(text: str) -> str:
    try:
        if Fraction(text) <= 0:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(f"threshold must be a positive number, got {text!r}") from None
    return text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-m", "--m", type=_positive, default=None, help=f"noise-bits (default {DEFAULT_M})")
    common.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    common.add_argument("-n", "--ticks", type=_positive, default=DEFAULT_TICKS, help="clock ticks to sample")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)
    common.add_argument("--threshold", type=_threshold, default=str(DEFAULT_THRESHOLD),
                        help="pass bound in standard deviations (default 5)")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    p = argparse.ArgumentParser(prog="tinbl", description="Ternary instantaneous noise-based logic simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    rns = sub.add_parser("rns", help="reference noise system")
    rsub = rns.add_subparsers(dest="action", required=True)
    dump = rsub.add_parser("dump", parents=[common], help="write rail sign waveforms")
    dump.add_argument("--rails", help="comma list of BIT:RAIL, e.g. 1:0,2:1")
    dump.set_defaults(func=cmd_rns_dump, default_format="csv")

    kinds = [k.value for k in UniverseKind]
    uni = sub.add_parser("universe", parents=[common], help="amplitude statistics of a Universe")
    uni.add_argument("kind", choices=kinds)
    uni.add_argument("--expand", action="store_true", help="print the symbolic expansion instead")
    uni.set_defaults(func=cmd_universe, default_format="json")

    exp = sub.add_parser("expand", parents=[common], help="symbolic expansion of a Universe")
    exp.add_argument("kind", choices=kinds)
    exp.set_defaults(func=cmd_expand, default_format="json")

    ev = sub.add_parser("eval", parents=[common], help="waveform of a state or expression")
    src = ev.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", help="state file (JSON or CSV)")
    src.add_argument("--universe", choices=kinds)
    src.add_argument("--expr", help="expression JSON tree")
    ev.add_argument("--t0", type=int, default=0)
    ev.add_argument("--save-expr", help="also write the expression JSON tree here")
    ev.set_defaults(func=cmd_eval, default_format="csv")

    gate = sub.add_parser("gate", parents=[common], help="apply a gate and cross-check it")
    gate.add_argument("gate", choices=("not", "xor", "xnor"))
    gate.add_argument("operands", nargs="*", help="not: BIT; xor/xnor: A B")
    gate.add_argument("--state", help="input state file for not")
    gate.add_argument("--string", help="single product string input for not, e.g. LHH")
    gate.set_defaults(func=cmd_gate, default_format="json")

    tt = sub.add_parser("truth-table", parents=[common], help="XOR/XNOR truth tables")
    tt.add_argument("gate", choices=("xor", "xnor"))
    tt.add_argument("--check", action="store_true", help="exit 1 on any mismatch with the reference table")
    tt.set_defaults(func=cmd_truth_table, default_format="text")

    meas = sub.add_parser("measure", help="correlation measurements")
    msub = meas.add_subparsers(dest="what", required=True)
    ortho = msub.add_parser("ortho", parents=[common], help="rail orthogonality matrix")
    ortho.set_defaults(func=cmd_measure, default_format="json")
    coeff = msub.add_parser("coeff", parents=[common], help="coefficient of product strings in a state")
    coeff.add_argument("--state", help="state file (JSON or CSV)")
    coeff.add_argument("--numbers", help="comma list of integers, e.g. 7,4,1")
    coeff.add_argument("--string", action="append", help="product string to measure (repeatable)")
    coeff.set_defaults(func=cmd_measure, default_format="json")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(
        m=args.m or DEFAULT_M,
        seed=args.seed,
        ticks=args.ticks,
        threshold=args.threshold,
        format=args.format or args.default_format,
        out=args.out,
    )
    try:
        return args.func(cfg, args)
    except UsageError as exc:
        print(f"tinbl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
