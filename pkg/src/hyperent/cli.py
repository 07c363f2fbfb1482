"""Command line entry point.

Exit codes: 0 ok, 2 config schema violation, 3 unresolvable ``derive``
entry, 4 incomplete or missing data.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, DerivationError, load_config
from .tomo import IncompleteDataError

EXIT_OK, EXIT_SCHEMA, EXIT_DERIVE, EXIT_INCOMPLETE = 0, 2, 3, 4

log = logging.getLogger("hyperent")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperent", description="Time/frequency-bin hyperentanglement twin")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", type=Path, help="experiment config (YAML or JSON)")
            p.add_argument("--seed", type=_u64, help="overrides run.seed")
        p.add_argument("--out", type=Path, help="output directory (default: run.output_dir)")

    common(sub.add_parser("simulate", help="sample coincidence counts to counts.csv"))
    p = sub.add_parser("tomo", help="maximum-likelihood reconstruction per DoF")
    common(p, config=False)
    p.add_argument("--counts", type=Path, help="counts CSV (default: OUT/counts.csv)")
    p = sub.add_parser("metrics", help="figures of merit with Monte-Carlo error bars")
    common(p, config=False)
    p.add_argument("--counts", type=Path, help="counts CSV (default: OUT/counts.csv)")
    common(sub.add_parser("report", help="summary table and plot data"), config=False)
    common(sub.add_parser("sweep", help="two-photon interference fringes and visibilities"))
    return parser


def _out_dir(args, cfg=None) -> Path:
    if args.out is not None:
        return args.out
    return Path(cfg.run.output_dir if cfg is not None else "out")


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command in ("simulate", "sweep"):
            cfg = load_config(args.config).with_seed(args.seed)
            out = _out_dir(args, cfg)
            path = pipeline.cmd_simulate(cfg, out) if args.command == "simulate" else pipeline.cmd_sweep(cfg, out)
            print(path)
        elif args.command == "tomo":
            out = _out_dir(args)
            for path in pipeline.cmd_tomo(args.counts or out / pipeline.COUNTS_FILE, out):
                print(path)
        elif args.command == "metrics":
            print(pipeline.cmd_metrics(_out_dir(args), args.counts))
        elif args.command == "report":
            path = pipeline.cmd_report(_out_dir(args))
            sys.stdout.write(path.read_text())
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_SCHEMA
    except DerivationError as exc:
        log.error("derivation error: %s", exc)
        return EXIT_DERIVE
    except IncompleteDataError as exc:
        log.error("incomplete data: %s", exc)
        return EXIT_INCOMPLETE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
