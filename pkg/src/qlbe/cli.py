"""Command line entry point ``qlbe``.

Exit codes: 0 success, 2 configuration error, 3 numeric error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import DEFAULTS, EXPERIMENTS, parse_config
from .errors import ConfigError, NumericError, ParameterError
from .experiments import COLUMNS, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _epilog():
    lines = ["config keys (key = value, # comments) and defaults:"]
    for key, (default, text) in DEFAULTS.items():
        if isinstance(default, tuple):
            default = ",".join(str(x) for x in default)
        lines.append(f"  {key:<15} {str(default):<14} {text}")
    lines.append("")
    lines.append("CSV columns:")
    for exp, cols in COLUMNS.items():
        lines.append(f"  {exp}: {', '.join(cols)}")
    lines.append("")
    lines.append("exit codes: 0 ok, 2 config error, 3 numeric error, 4 I/O error")
    return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(
        prog="qlbe",
        description="Monte Carlo unraveling of the quantum linear Boltzmann equation.",
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="config file (key = value lines); defaults apply when omitted")
    p.add_argument("--seed", help="master seed")
    p.add_argument("--workers", help="worker processes")
    p.add_argument("--out", help="output CSV path, - for stdout")
    p.add_argument("--mass-ratio", dest="mass_ratio")
    p.add_argument("--cross-section", dest="cross_section", choices=("constant", "gaussian"))
    p.add_argument("--a")
    p.add_argument("--u0", help="x,y,z")
    p.add_argument("--n-real", dest="n_realizations")
    p.add_argument("--t-final", dest="t_final")
    p.add_argument("--version", action="version", version=f"qlbe {__version__}")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {
        "experiment": args.experiment,
        "master_seed": args.seed,
        "n_workers": args.workers,
        "output": args.out,
        "mass_ratio": args.mass_ratio,
        "cross_section": args.cross_section,
        "a": args.a,
        "u0": args.u0,
        "n_realizations": args.n_realizations,
        "t_final": args.t_final,
    }
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"qlbe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"qlbe: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        table = run(cfg)
    except NumericError as exc:
        print(f"qlbe: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ParameterError as exc:
        print(f"qlbe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.output == "-":
            sys.stdout.write(table.to_csv())
        else:
            table.write(cfg.output)
    except OSError as exc:
        print(f"qlbe: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
