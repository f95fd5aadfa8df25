"""Command-line entry point: ``kinetic-dg --config FILE [overrides]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, KineticError, SolverAbort

_OVERRIDES = {
    "kn": ("--kn", float),
    "tau": ("--tau", float),
    "t_end": ("--t-end", float),
    "order_x": ("--order-x", int),
    "order_v": ("--order-v", int),
    "elements": ("--elements", int),
    "scheme": ("--scheme", str),
    "smoothing_c": ("--smoothing-c", float),
    "output_dir": ("--output-dir", str),
}


def build_parser():
    ap = argparse.ArgumentParser(prog="kinetic-dg", description="Run a 1D kinetic DG scenario.")
    ap.add_argument("--config", required=True, help="key=value scenario file")
    for key, (flag, typ) in _OVERRIDES.items():
        ap.add_argument(flag, dest=key, type=typ, default=None)
    ap.add_argument("--collision", choices=("boltzmann", "bgk", "off"), default=None)
    ap.add_argument("-q", "--quiet", action="store_true", help="only print the final summary")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    from .driver import run

    try:
        cfg = load_config(args.config)
        changes = {k: getattr(args, k) for k in list(_OVERRIDES) + ["collision"] if getattr(args, k) is not None}
        if changes:
            cfg = cfg.replace(**changes)
        result = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverAbort as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 3
    except (KineticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(result.final_report.summary())
    print(f"wrote {len(result.snapshots)} snapshots to {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
