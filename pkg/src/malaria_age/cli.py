"""Command-line entry point: ``malaria-age <mode> [--config FILE] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import random
import sys

import numpy as np

from .config import MODES, default_config, parse_config
from .errors import ConfigError

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_RNG = 0, 1, 2, 3

HELP = {
    "simulate": "integrate the PDE once per initial I_v0 value",
    "r0": "basic reproduction number by double quadrature",
    "equilibria": "parasite-free and endemic equilibria",
    "stability": "local stability verdicts",
    "sweep": "R0 and long-run state across Lambda_v values",
    "compare-ode": "constant-parameter PDE against the age-integrated ODE",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="malaria-age", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (sectioned key-value text)")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--threads", type=int, default=1, help="parallel runs within one bundle")
    common.add_argument("--seedless", action="store_true",
                        help="fail if any random number generator state is consumed")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sub.add_parser(mode, parents=[common], help=HELP[mode])
    return parser


def _rng_state():
    return random.getstate(), np.random.get_state(legacy=False)


def _same_rng(a, b):
    return a[0] == b[0] and repr(a[1]) == repr(b[1])


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    # imported here so --help stays fast
    from .report import execute, write_bundle

    try:
        if args.config:
            with open(args.config) as fh:
                config = parse_config(fh.read(), mode=args.mode)
        else:
            config = default_config(args.mode)
    except ConfigError as exc:
        where = args.config or "<default>"
        print(f"{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    before = _rng_state() if args.seedless else None
    bundle = execute(config, threads=max(1, args.threads))
    if args.seedless and not _same_rng(before, _rng_state()):
        print("random number generator state changed during a --seedless run", file=sys.stderr)
        return EXIT_RNG

    out = args.out or config.output.directory
    try:
        files = write_bundle(bundle, out)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for key in ("R0", "status"):
        if key in bundle.results:
            print(f"{key} = {bundle.results[key]}")
    print(f"wrote {len(files)} files to {out}")
    for tag, msg in bundle.failures:
        print(f"FAILED {tag}: {msg}", file=sys.stderr)
    return EXIT_OK if bundle.ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
