"""``fraflow`` command line.

Exit codes: 0 success, 1 verify failure, 2 config error, 3 divergence or
solver failure (partial outputs kept), 4 file I/O error.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import PreconditionError
from .config import ConfigError, load_config, preset_names
from .plotdata import write_plotdata
from .runner import RunFailure, execute
from .verify import run_checks

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3, 4


def _err(msg):
    print(f"fraflow: {msg}", file=sys.stderr)


def _experiment(args, sweep):
    try:
        spec = load_config(args.config)
    except ConfigError as exc:
        _err(f"{args.config}: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    try:
        record = execute(spec, out_dir=args.out, sweep=sweep)
    except RunFailure as exc:
        _err(f"run stopped: {exc}; partial outputs in {exc.record.out_dir}")
        return EXIT_DIVERGED
    except (PreconditionError, TypeError) as exc:
        _err(f"{args.config}: invalid experiment: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    print(f"{spec.name}: wrote {len(record.files)} files to {record.out_dir} "
          f"({record.wall_ms / 1e3:.1f} s)")
    if any(record.diverged):
        print(f"{spec.name}: {sum(record.diverged)} run(s) diverged; see sweep.csv")
    return EXIT_OK


def _verify(args):
    results = run_checks()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def _plotdata(args):
    try:
        files = write_plotdata(args.run_dir)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_IO
    for f in files:
        print(f)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="fraflow",
        description="Fractional inertial optimization flows: experiments and checks.",
        epilog="presets: " + ", ".join(preset_names()),
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run one experiment"), ("sweep", "run the sweep grid")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config", help="config file path or preset name")
        s.add_argument("--out", help="output directory (overrides config and FRAFLOW_OUT)")
    sub.add_parser("verify", help="run the built-in oracle checks")
    s = sub.add_parser("plotdata", help="log-log CSV and SVG charts for a run directory")
    s.add_argument("run_dir")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _experiment(args, sweep=False)
    if args.command == "sweep":
        return _experiment(args, sweep=True)
    if args.command == "verify":
        return _verify(args)
    return _plotdata(args)


if __name__ == "__main__":
    sys.exit(main())
