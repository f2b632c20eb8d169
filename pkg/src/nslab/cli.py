"""Command line front end.

Every subcommand reads one JSON document and writes one JSON document to
stdout with sorted keys.  Exit codes: 0 ok, 1 a check failed, 2 the reduction
got stuck, 3 a move certificate failed, 64 usage, 65 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from . import jsonio
from .bounds_audit import audit, audit_passed, scenario_from_datum
from .charge import ZeroImaginary, central_charge, slope, stability_verdict
from .curve_graph import Subcurve, chain_profile, genus, is_admissible_tree, is_p1_tree
from .error_charge import definity_check, err_charge, is_flat
from .generators import random_initial_state
from .reduction_engine import CertificateError, ReductionError, StuckState, run, validate_semistable_type
from .sheaf_on_tree import classify_positivity, h0, h0_oracle

log = logging.getLogger("nslab")

EX_OK, EX_FAIL, EX_STUCK, EX_CERT, EX_USAGE, EX_DATAERR = 0, 1, 2, 3, 64, 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


Outcome = Tuple[int, Dict[str, Any]]


def _load(args) -> Any:
    path = args.input or args.path
    if path is None:
        raise UsageError("an input file is required")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise jsonio.SchemaError(f"invalid JSON: {exc}") from None


def _write(path: Optional[str], obj: Any) -> None:
    if path:
        Path(path).write_text(jsonio.dumps(obj) + "\n", encoding="utf-8")


def cmd_genus(args) -> Outcome:
    g = jsonio.read_curve(_load(args))
    return EX_OK, {"genus": genus(g)}


def cmd_tree(args) -> Outcome:
    obj = _load(args)
    jsonio.validate(obj, jsonio.TREE_QUERY)
    g = jsonio.read_curve(obj["curve"])
    ids = obj.get("subcurve", {}).get("vertices", sorted(g.vertex_ids))
    unknown = set(ids) - g.vertex_ids
    if unknown:
        raise jsonio.SchemaError(f"unknown vertices {sorted(unknown)}")
    s = Subcurve(g, frozenset(ids))
    out: Dict[str, Any] = {"p1_tree": is_p1_tree(s), "admissible": is_admissible_tree(g, s)}
    if out["p1_tree"]:
        prof = chain_profile(s)
        out["chain"] = {"is_chain": prof.is_chain, "length": prof.length, "ends": list(prof.ends)}
    return EX_OK, out


def cmd_h0(args) -> Outcome:
    F = jsonio.read_sheaf(_load(args))
    if not F.is_nonnegative:
        raise jsonio.SchemaError("h0 needs a nonnegative sheaf")
    out: Dict[str, Any] = {"h0": h0(F)}
    if args.seed is not None:
        out["oracle"] = h0_oracle(F, args.seed)
    return EX_OK, out


def cmd_positivity(args) -> Outcome:
    F = jsonio.read_sheaf(_load(args))
    return EX_OK, {"class": classify_positivity(F).value}


def cmd_charge(args) -> Outcome:
    c = jsonio.read_charge(_load(args))
    return EX_OK, jsonio.value_to_json(central_charge(c))


def cmd_slope(args) -> Outcome:
    obj = _load(args)
    if isinstance(obj, dict) and "re" in obj:
        z = jsonio.read_value(obj)
    else:
        z = central_charge(jsonio.read_charge(obj))
    try:
        return EX_OK, {"slope": jsonio.rat_str(slope(z))}
    except ZeroImaginary as exc:
        return EX_FAIL, {"error": str(exc)}


def cmd_stability(args) -> Outcome:
    obj = _load(args)
    jsonio.validate(obj, jsonio.STABILITY)
    tot = jsonio.read_charge(obj["total"])
    subs = [jsonio.read_charge(s) for s in obj.get("subobjects", ())]
    try:
        v = stability_verdict(tot, subs)
    except ValueError as exc:
        raise jsonio.SchemaError(str(exc)) from None
    return EX_OK, {"verdict": v.verdict.value, "witness_index": v.witness_index}


def cmd_err(args) -> Outcome:
    d = jsonio.read_datum(_load(args))
    z = err_charge(d)
    out: Dict[str, Any] = {**jsonio.value_to_json(z), "flat": is_flat(d)}
    if args.report:
        df = definity_check(d)
        _write(args.report, {
            "neg_im_nonneg": df.neg_im_nonneg,
            "im_zero_iff_no_vertical": df.im_zero_iff_no_vertical,
            "integer_when_im_zero": df.integer_when_im_zero,
        })
    return EX_OK, out


def cmd_reduce(args) -> Outcome:
    d = jsonio.read_datum(_load(args))
    try:
        d.stabilization
    except ValueError as exc:
        raise jsonio.SchemaError(f"curve has no stable model: {exc}") from None
    result = run(d)
    final = result.final
    _write(args.trace, jsonio.trace_to_json(d, final, args.seed))
    out: Dict[str, Any] = {"steps": result.steps, "err": jsonio.value_to_json(err_charge(final.datum))}
    verdict = validate_semistable_type(final)
    if not verdict.ok:
        out["violations"] = verdict.violations
        return EX_FAIL, out
    return EX_OK, out


def cmd_audit(args) -> Outcome:
    s = jsonio.read_scenario(_load(args))
    reports = audit(s)
    body = {"passed": audit_passed(reports), "checks": [jsonio.report_to_json(r) for r in reports]}
    _write(args.report, body)
    return (EX_OK if body["passed"] else EX_FAIL), body


def cmd_fuzz(args) -> Outcome:
    if args.seed is None:
        raise UsageError("fuzz needs --seed")
    failures: List[Dict[str, Any]] = []
    steps = []
    for k in range(args.count):
        seed = args.seed + k
        d = random_initial_state(seed)
        try:
            result = run(d)
        except ReductionError as exc:
            failures.append({"seed": seed, "error": type(exc).__name__, "detail": str(exc)})
            continue
        steps.append(result.steps)
        verdict = validate_semistable_type(result.final)
        reports = audit(scenario_from_datum(result.final.datum))
        bad = verdict.violations + [r.check for r in reports if not r.passed and not r.informational]
        if bad:
            failures.append({"seed": seed, "error": "validation", "detail": ",".join(bad)})
    body = {"cases": args.count, "failures": failures, "max_steps": max(steps, default=0), "total_steps": sum(steps)}
    _write(args.report, body)
    return (EX_OK if not failures else EX_FAIL), body


COMMANDS: Dict[str, Tuple[Callable[[Any], Outcome], str]] = {
    "genus": (cmd_genus, "arithmetic genus of a curve"),
    "tree": (cmd_tree, "rational tree and admissibility tests on a subcurve"),
    "h0": (cmd_h0, "global sections of a sheaf on a rational tree"),
    "positivity": (cmd_positivity, "positivity class of a sheaf"),
    "charge": (cmd_charge, "central charge of a charge datum"),
    "slope": (cmd_slope, "slope of a charge"),
    "stability": (cmd_stability, "slope comparison against declared subobjects"),
    "err": (cmd_err, "error charge of a datum"),
    "reduce": (cmd_reduce, "run the reduction to a flat datum"),
    "audit": (cmd_audit, "boundedness checks on a scenario"),
    "fuzz": (cmd_fuzz, "reduce and audit seeded random data"),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, (_, help_text) in COMMANDS.items():
        c = sub.add_parser(name, help=help_text)
        c.add_argument("path", nargs="?", help="input JSON file")
        c.add_argument("-i", "--input", help="input JSON file")
        c.add_argument("--seed", type=int)
        c.add_argument("--trace", help="write the move trace here")
        c.add_argument("--report", help="write the report here")
        c.add_argument("--format", choices=("json", "text"), default="json")
        if name == "fuzz":
            c.add_argument("--count", type=int, default=20)
    return p


def _text(obj: Any, prefix: str = "") -> List[str]:
    if isinstance(obj, dict):
        lines = []
        for k in sorted(obj):
            lines.extend(_text(obj[k], f"{prefix}{k}." if isinstance(obj[k], (dict, list)) else f"{prefix}{k}"))
        return lines
    if isinstance(obj, list):
        lines = []
        for i, v in enumerate(obj):
            lines.extend(_text(v, f"{prefix}{i}." if isinstance(v, (dict, list)) else f"{prefix}{i}"))
        return lines
    return [f"{prefix}: {json.dumps(obj)}"]


def main(argv: Optional[List[str]] = None) -> int:
    level = os.environ.get("NSL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        code, body = handler(args)
    except UsageError as exc:
        print(f"nslab: {exc}", file=sys.stderr)
        return EX_USAGE
    except jsonio.SchemaError as exc:
        print(f"nslab: invalid input: {exc}", file=sys.stderr)
        return EX_DATAERR
    except StuckState as exc:
        print(jsonio.dumps({"error": "StuckState", "detail": str(exc)}))
        return EX_STUCK
    except (CertificateError, ReductionError) as exc:
        print(jsonio.dumps({"error": type(exc).__name__, "detail": str(exc)}))
        return EX_CERT
    if args.format == "text":
        print("\n".join(_text(body)))
    else:
        print(jsonio.dumps(body))
    return code


if __name__ == "__main__":
    sys.exit(main())
