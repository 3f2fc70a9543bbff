"""Command-line entry point: ``airyspline solve ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .cases import CASE_NAMES, build_case, error_table
from .config import load_config
from .errors import AirySplineError
from .export import FieldSampleGrid, report_lines, sample_and_export
from .solver import GAUGES, MODES, SolveOptions, solve

log = logging.getLogger("airyspline")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ints(text: str, count: int, what: str):
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} expects {count} comma-separated integers") from None
    if len(vals) != count or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"{what} expects {count} comma-separated positive integers")
    return vals


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="airyspline", description="Spline-based Airy stress function solver.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("solve", help="solve a built-in case or a TOML problem file")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--case", choices=CASE_NAMES)
    src.add_argument("--config", type=Path, help="TOML problem description")
    src.add_argument("--all", action="store_true", help="solve every built-in case")
    s.add_argument("--aspect", type=_positive, help="beam aspect ratio l/c")
    s.add_argument("--degrees", type=lambda t: _ints(t, 2, "--degrees"), metavar="P,Q")
    s.add_argument("--net", type=lambda t: _ints(t, 2, "--net"), metavar="N,M")
    s.add_argument("--quadrature", type=lambda t: _ints(t, 1, "--quadrature")[0], metavar="K")
    s.add_argument("--bc-mode", choices=MODES)
    s.add_argument("--bc-weight", type=_positive)
    s.add_argument("--gauge", choices=GAUGES)
    s.add_argument("--samples", type=lambda t: _ints(t, 2, "--samples"), default=(21, 21), metavar="NX,NY")
    s.add_argument("--output", type=Path, help="directory for stress.csv, report.txt, profiles.csv")
    s.add_argument("--jobs", type=int, default=1, help="worker processes for --all")
    return parser


def _options(args, base: SolveOptions | None = None) -> SolveOptions:
    base = base or SolveOptions()
    return SolveOptions(
        mode=args.bc_mode or base.mode,
        bc_weight=args.bc_weight if args.bc_weight is not None else base.bc_weight,
        tolerance=base.tolerance,
        gauge=args.gauge or base.gauge,
    )


def _overrides(args):
    return dict(degrees=args.degrees, net=args.net, aspect=args.aspect, quadrature=args.quadrature)


def run_case(name: str | None, args, output: Path | None) -> list:
    """Solve one case and export; returns the report lines."""
    if name is None:
        case, opts = load_config(args.config)
        if args.quadrature is not None:
            case.quadrature = args.quadrature
        opts = _options(args, opts)
    else:
        case = build_case(name, **_overrides(args))
        opts = _options(args)
    log.info("solving %s (%d control values, mode %s)", case.name, case.ndof, opts.mode)
    sol = solve(case.problem(), opts)
    errors = error_table(sol, case)
    if output is not None:
        sample_and_export(sol, case, output, FieldSampleGrid(*args.samples), errors)
    return report_lines(sol, case, errors)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.aspect is not None and args.case not in (None, "beam-uniform-load") and not args.all:
        parser.error("--aspect applies to beam-uniform-load only")
    if args.config is not None and any(v is not None for v in (args.degrees, args.net, args.aspect)):
        parser.error("--degrees/--net/--aspect apply to built-in cases only")
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        if args.all:
            if args.aspect is not None:
                parser.error("--aspect cannot be combined with --all")
            outputs = {n: (args.output / n if args.output else None) for n in CASE_NAMES}
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    futures = {n: pool.submit(run_case, n, args, outputs[n]) for n in CASE_NAMES}
                    reports = {n: f.result() for n, f in futures.items()}
            else:
                reports = {n: run_case(n, args, outputs[n]) for n in CASE_NAMES}
            for n in CASE_NAMES:
                print("\n".join(reports[n]))
                print()
        else:
            print("\n".join(run_case(args.case, args, args.output)))
    except (AirySplineError, OSError) as exc:
        print(f"airyspline: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
