"""Command-line entry point: ``netac {decay,verify,train,benchmark}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ExperimentConfig
from .errors import NetacError
from .experiments import COMMAND_TABLE


def _grid(text: str) -> list[int]:
    try:
        r, c = text.lower().split("x")
        return [int(r), int(c)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected RxC, got {text!r}") from None


def _seeds(text: str) -> list[int]:
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netac", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMAND_TABLE:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int, help="single seed")
        p.add_argument("--seeds", type=_seeds, help="comma list or inclusive range, e.g. 0-99")
        p.add_argument("--out", help="output directory")
        p.add_argument("--model", help="model file (JSON)")
        p.add_argument("--kappa", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--frozen-policy", dest="frozen_policy", action="store_true", default=None)
        p.add_argument("--rescale", dest="rescale", action="store_true", default=None)
        p.add_argument("--no-rescale", dest="rescale", action="store_false")
        p.add_argument("--grid", type=_grid, help="wireless user grid, e.g. 3x3")
        p.add_argument("--env", choices=["mdp", "wireless"])
        p.add_argument("--oracle", action="store_true", default=None,
                       help="record exact J and gradient norm (mdp env only)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    seeds = args.seeds if args.seeds is not None else ([args.seed] if args.seed is not None else None)
    overrides = {"seeds": seeds, "out": args.out, "model": args.model, "kappa": args.kappa,
                 "horizon": args.horizon, "frozen_policy": args.frozen_policy,
                 "rescale": args.rescale, "grid": args.grid, "env": args.env, "oracle": args.oracle}
    try:
        cfg = ExperimentConfig.load(args.config, args.command, overrides)
        return COMMAND_TABLE[args.command](cfg)
    except NetacError as exc:
        print(f"netac {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
