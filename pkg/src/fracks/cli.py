"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 config error,
3 unrepairable singularity.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import SimulationConfig, load_config, parse_list
from .errors import ConfigError, UnrepairableSingularityError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_SINGULAR = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracks", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write snapshot tables for every configured time")
    sim.add_argument("config")
    sim.add_argument("--out", help="output directory (overrides [output] directory)")

    sw = sub.add_parser("sweep", help="one snapshot per parameter value at the sweep time")
    sw.add_argument("config")
    sw.add_argument("--axis", required=True, choices=("omega", "K", "alpha"))
    sw.add_argument("--values", help="comma-separated values; default from [sweeps]")
    sw.add_argument("--out")

    val = sub.add_parser("validate", help="run the self-check suite")
    val.add_argument("config", nargs="?")

    ml = sub.add_parser("ml", help="evaluate the Mittag-Leffler function E_alpha(x + iy)")
    ml.add_argument("--alpha", required=True, type=float)
    ml.add_argument("--re", required=True, type=float)
    ml.add_argument("--im", type=float, default=0.0)
    return parser


def _load(path: str | None, out: str | None = None) -> SimulationConfig:
    cfg = load_config(path) if path else SimulationConfig()
    if out:
        cfg = cfg.with_updates(output_dir=out)
    return cfg


def _run(args) -> int:
    if args.command == "ml":
        from .fractional_kernel import mittag_leffler

        v = mittag_leffler(args.alpha, complex(args.re, args.im))
        print(f"{v.real:.17g} {v.imag:+.17g}j")
        return EXIT_OK

    if args.command == "validate":
        from .validation import validate

        report = validate(_load(args.config))
        print(report.render())
        return report.exit_code

    from .pipeline import simulate, sweep

    cfg = _load(args.config, args.out)
    if args.command == "simulate":
        out = simulate(cfg)
        print(out)
        return EXIT_OK

    values = parse_list(args.values) if args.values else None
    outcome = sweep(cfg, args.axis, values)
    print(outcome.directory)
    for f in outcome.failures:
        print(f"unrepairable at {f['axis']} = {f['value']}: {f['error']}", file=sys.stderr)
    return EXIT_SINGULAR if outcome.failures else EXIT_OK


def main(argv=None, *, quiet: bool = False) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        if not quiet:
            print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnrepairableSingularityError as exc:
        if not quiet:
            print(f"unrepairable singularity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ValueError as exc:
        # bad numeric arguments to the ml utility and similar
        if not quiet:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
