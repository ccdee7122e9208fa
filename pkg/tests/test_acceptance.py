"""Acceptance criteria 1-12, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or directly as a script.
Criteria 1-11 read the aggregate report of every property suite at the
default configuration (tolerance 1e-9, seed 0, 200 instances); criterion 12
drives the command line in subprocesses.
"""

import subprocess
import sys
import time
from pathlib import Path

import pytest

from opweight.suites import SuiteConfig, run_suites

FIXTURES = Path(__file__).parent / "fixtures"
RUNTIME_BUDGET = 60.0

CRITERIA = {
    1: ("canonical dilation reconstruction", "reconstruction"),
    2: ("complete-positivity oracles agree", "cp-oracles"),
    3: ("dominated-map round trip", "dominated"),
    4: ("directedness join", "join"),
    5: ("operator monotonicity of t/(1+t)", "monotone"),
    6: ("functional below a dominating functional", "omega"),
    7: ("seed construction round trip", "construct"),
    8: ("truncating-net clauses", "truncating-net"),
    9: ("tensor product", "tensor"),
    10: ("compact representative", "compactness"),
    11: ("square-norm inequality never violated", "inequality"),
}


def run_all() -> tuple:
    start = time.perf_counter()
    report = run_suites(SuiteConfig())
    return report, time.perf_counter() - start


def summarize(report, prefix: str) -> tuple[bool, str]:
    checks = [c for c in report.checks if c.label.startswith(prefix + "/")]
    if not checks:
        return False, "no checks recorded"
    failed = [c.label for c in checks if not c.passed]
    bounded = [c for c in checks if c.threshold and c.threshold > 0 and c.skipped is None]
    detail = f"{len(checks) - len(failed)}/{len(checks)} checks"
    if bounded:
        tight = max(bounded, key=lambda c: c.residual / c.threshold)
        detail += f", tightest {tight.label} = {tight.residual:.3e} (limit {tight.threshold:.1e})"
    if failed:
        detail += f", failed: {', '.join(failed)}"
    return not failed, detail


def _cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "opweight", *args], capture_output=True)


def cli_contract() -> tuple[bool, str]:
    """Byte-identical repeated runs plus the pass / property-fail / parse-fail exit codes."""
    weight = str(FIXTURES / "identity_weight.json")
    runs = [("construct", str(FIXTURES / "identity_seed.json")),
            ("suite", "--only", "join", "--only", "tensor", "--samples", "10")]
    identical = all(_cli(*r).stdout == _cli(*r).stdout for r in runs)
    codes = {
        "pass": _cli("verify", weight, str(FIXTURES / "identity_triplet.json")).returncode,
        "property-fail": _cli("verify", weight, str(FIXTURES / "perturbed_triplet.json")).returncode,
        "parse-fail": _cli("ksgns", str(FIXTURES / "malformed.json")).returncode,
    }
    ok = identical and codes == {"pass": 0, "property-fail": 1, "parse-fail": 2}
    return ok, f"byte-identical={identical}, exit codes {codes}"


def line(n: int, name: str, ok: bool, detail: str) -> str:
    return f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.fixture(scope="module")
def suite_run():
    return run_all()


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, suite_run, capsys):
    name, prefix = CRITERIA[n]
    ok, detail = summarize(suite_run[0], prefix)
    with capsys.disabled():
        print("\n" + line(n, name, ok, detail))
    assert ok, detail


def test_criterion_12_cli(capsys):
    ok, detail = cli_contract()
    with capsys.disabled():
        print("\n" + line(12, "command-line determinism and exit codes", ok, detail))
    assert ok, detail


def test_suite_runtime(suite_run, capsys):
    elapsed = suite_run[1]
    with capsys.disabled():
        print(f"\nall suites ran in {elapsed:.1f} s (budget {RUNTIME_BUDGET:.0f} s)")
    assert elapsed <= RUNTIME_BUDGET


if __name__ == "__main__":
    report, elapsed = run_all()
    results = [summarize(report, CRITERIA[n][1]) for n in sorted(CRITERIA)]
    for n, (ok, detail) in zip(sorted(CRITERIA), results):
        print(line(n, CRITERIA[n][0], ok, detail))
    ok12, detail12 = cli_contract()
    print(line(12, "command-line determinism and exit codes", ok12, detail12))
    print(f"all suites ran in {elapsed:.1f} s (budget {RUNTIME_BUDGET:.0f} s)")
    sys.exit(0 if ok12 and all(ok for ok, _ in results) else 1)
