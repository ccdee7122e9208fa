"""Command line entry point.

Exit status: 0 when every check passes, 1 when a check fails or the input is
rejected by the mathematics, 2 when an input file cannot be parsed, 3 when a
weight is not completely positive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cpmap import CpFamilySampler, choi_kraus
from .errors import NotCompletelyPositive, OpWeightError
from .jsonio import dumps
from .ksgns import KsgnsTriplet, Weight, build_canonical_ksgns, verify_ksgns
from .regular import SeedData, build_quotient_module, certify_regular, construct_weight
from .report import Report
from .suites import SUITES, SuiteConfig, run_suites
from .tensor import check_factorization, tensor_weight

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_NOT_CP = 0, 1, 2, 3


class InputError(Exception):
    """An input file that is not valid JSON or does not describe the expected object."""


def _load(path: str, decode):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg} (char {exc.pos})") from exc
    try:
        return decode(data)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, OpWeightError):
            raise
        raise InputError(f"{path}: malformed content: {type(exc).__name__}: {exc}") from exc


def _document(command: str, report: Report, result=None) -> dict:
    doc = {"command": command, "passed": report.passed, "report": report.to_json()}
    if result is not None:
        doc["result"] = result
    return doc


def _canonical(phi: Weight, tol: float) -> KsgnsTriplet:
    try:
        return build_canonical_ksgns(phi, tol)
    except NotCompletelyPositive as exc:
        exc.witness = dict(exc.witness or {}, choi_min_eigenvalue=choi_kraus(phi.as_cpmap())[1])
        raise


def cmd_ksgns(args) -> tuple[dict, Report]:
    phi = _load(args.weight, Weight.from_json)
    t = _canonical(phi, args.tol)
    rep = verify_ksgns(phi, t, args.tol, compare_canonical=False)
    return _document("ksgns", rep, t.to_json()), rep


def cmd_verify(args) -> tuple[dict, Report]:
    phi = _load(args.weight, Weight.from_json)
    t = _load(args.triplet, KsgnsTriplet.from_json)
    rep = verify_ksgns(phi, t, args.tol)
    return _document("verify", rep), rep


def cmd_construct(args) -> tuple[dict, Report]:
    seed = _load(args.seed_file, SeedData.from_json)
    built = construct_weight(seed, args.tol)
    rep = Report().extend(built.report)
    if not built.weight.densely_defined:
        rep.skip("net", "weight is not densely defined")
        rep.skip("quotient", "weight is not densely defined")
    else:
        reg = certify_regular(built.weight, t=built.triplet, tol=args.tol)
        rep.extend(reg.report)
        if built.triplet.E.dim:
            sampler = CpFamilySampler(built.triplet, 1.0, seed=args.seed)
            samples = [sampler.sample() for _ in range(min(args.samples, 10))]
            rep.extend(build_quotient_module(built.weight, built.triplet, samples=samples, tol=args.tol).report,
                       "quotient/")
        else:
            rep.skip("quotient", "module is zero")
    return _document("construct", rep, built.weight.to_json()), rep


def cmd_tensor(args) -> tuple[dict, Report]:
    phi1 = _load(args.first, Weight.from_json)
    phi2 = _load(args.second, Weight.from_json)
    f1 = certify_regular(phi1, t=_canonical(phi1, args.tol), tol=args.tol)
    f2 = certify_regular(phi2, t=_canonical(phi2, args.tol), tol=args.tol)
    tw = tensor_weight(f1, f2, args.tol)
    rep = Report().extend(f1.report, "first/").extend(f2.report, "second/")
    rep.extend(tw.report, "product/").extend(check_factorization(tw, args.tol), "factorization/")
    return _document("tensor", rep, tw.weight.to_json()), rep


def cmd_suite(args) -> tuple[dict, Report]:
    cfg = SuiteConfig(tol=args.tol, seed=args.seed, samples=args.samples)
    rep = run_suites(cfg, args.only)
    doc = _document("suite", rep)
    doc["config"] = {"tol": args.tol, "seed": args.seed, "samples": args.samples}
    return doc, rep


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="base tolerance (default 1e-9)")
    common.add_argument("--seed", type=_seed, default=0, help="random seed (default 0)")
    common.add_argument("--samples", type=int, default=200, help="random instances per suite (default 200)")
    common.add_argument("--out", help="write the output here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")

    parser = argparse.ArgumentParser(prog="opweight", description="Operator-valued weights and their dilations.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("ksgns", parents=[common], help="canonical dilation of a weight")
    p.add_argument("weight")
    p.set_defaults(func=cmd_ksgns)
    p = sub.add_parser("verify", parents=[common], help="check a triplet against a weight")
    p.add_argument("weight")
    p.add_argument("triplet")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("construct", parents=[common], help="build a weight from seed data")
    p.add_argument("seed_file", metavar="seed")
    p.set_defaults(func=cmd_construct)
    p = sub.add_parser("tensor", parents=[common], help="tensor product of two weights")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_tensor)
    p = sub.add_parser("suite", parents=[common], help="run the property suites")
    p.add_argument("--only", action="append", choices=sorted(SUITES), help="run only this suite (repeatable)")
    p.set_defaults(func=cmd_suite)
    return parser


def _emit(args, doc: dict, report: Report | None):
    if args.format == "json":
        text = dumps(doc) + "\n"
    else:
        lines = [report.to_text()] if report is not None and report.checks else []
        if "error" in doc:
            lines.append(f"ERROR {doc['error']}: {doc['message']}")
        else:
            lines.append(f"{doc['command']}: {'PASS' if doc['passed'] else 'FAIL'} "
                         f"({len(report.checks) - len(report.failures())}/{len(report.checks)} checks)")
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc, report = args.func(args)
    except InputError as exc:
        print(f"opweight: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NotCompletelyPositive as exc:
        _emit(args, {"command": args.command, "error": "NotCompletelyPositive", "message": str(exc),
                     "witness": exc.witness, "passed": False}, None)
        return EXIT_NOT_CP
    except OpWeightError as exc:
        _emit(args, {"command": args.command, "error": type(exc).__name__, "message": str(exc), "passed": False},
              None)
        return EXIT_FAIL
    _emit(args, doc, report)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
