"""``verify``: run verification suites and compare reports.

Usage::

    verify <suite> [--config FILE] [--seed N] [--out DIR]
                   [--theta-over-hbar 0.5,1,2] [--tolerance-scale F]
    verify diff A.json B.json [--factor 2]

Exit status: 0 when every check passes (or no regression), 1 on a failed
check (or a regression), 2 on a usage, configuration or I/O error.  The
environment variable ``QMLAB_OUT`` overrides the output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import ConfigInvalid, IoFailure, SchemaMismatch
from .report import diff_reports, load_report
from .suites import ALL, SUITES, RunConfig, run_suite

OUT_ENV = "QMLAB_OUT"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ratios(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _run_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="verify", description="Run a verification suite and write a JSON report.")
    p.add_argument("suite", choices=(*SUITES, ALL))
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=_u64, help="64-bit seed for random test states")
    p.add_argument("--out", help=f"output directory (overridden by ${OUT_ENV})")
    p.add_argument("--theta-over-hbar", type=_ratios, help="theta/hbar ratios for the hybrid sweep")
    p.add_argument("--tolerance-scale", type=float, help="multiply every upper-bound tolerance")
    p.add_argument("-q", "--quiet", action="store_true", help="print only the summary line")
    return p


def _diff_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="verify diff", description="Compare two reports for residual regressions.")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--factor", type=float, default=2.0, help="growth factor flagged as a regression")
    return p


def load_config(args) -> RunConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
    data["suite"] = args.suite
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_dir"] = args.out
    if args.theta_over_hbar is not None:
        data["theta_over_hbar"] = args.theta_over_hbar
    if args.tolerance_scale is not None:
        data["tolerance_scale"] = args.tolerance_scale
    if os.environ.get(OUT_ENV):
        data["output_dir"] = os.environ[OUT_ENV]
    return RunConfig.from_dict(data)


def _prepare_out(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise IoFailure(f"output directory {out} is not writable: {exc}") from exc
    return out


def _main_run(argv) -> int:
    args = _run_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        out = _prepare_out(cfg.output_dir)
    except (ConfigInvalid, IoFailure) as exc:
        print(f"verify: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_suite(cfg, out)
    try:
        path = report.write(out / "report.json")
    except IoFailure as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.quiet:
        for c in sorted(report.checks, key=lambda c: c.check_id):
            op = "<=" if c.sense == "upper" else ">="
            print(f"{'PASS' if c.passed else 'FAIL'}  {c.check_id:<36} {c.measured:.3e} {op} {c.tolerance:.1e}")
    s = report.summary
    print(f"{s['passed']}/{s['total']} checks passed; report: {path}")
    return EXIT_OK if report.all_passed else EXIT_FAIL


def _main_diff(argv) -> int:
    args = _diff_parser().parse_args(argv)
    try:
        result = diff_reports(load_report(args.a), load_report(args.b), args.factor)
    except (SchemaMismatch, IoFailure) as exc:
        print(f"verify diff: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for cid, ratio in result["ratios"].items():
        flag = "REGRESSION" if cid in result["regressions"] else "ok"
        print(f"{flag:<10} {cid:<36} x{ratio:.3g}")
    for cid in result["only_in_a"]:
        print(f"missing    {cid} (only in {args.a})")
    for cid in result["only_in_b"]:
        print(f"new        {cid} (only in {args.b})")
    print(f"{len(result['regressions'])} regression(s)")
    return EXIT_FAIL if result["regressions"] else EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "diff":
        return _main_diff(argv[1:])
    return _main_run(argv)


if __name__ == "__main__":
    sys.exit(main())
