"""``timd-lab`` command line."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .harness import LabConfig, load_config_file, run

# CLI flag -> LabConfig field
_FLAGS = {
    "input": str, "format": str, "width": int, "height": int, "depth": int,
    "max_size": int, "min_size": int, "split_threshold": float, "lambda": float,
    "gate_ratio": float, "max_candidates": int, "subset": str, "neighbor_map": str,
    "out_dir": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timd-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="code one frame and write stats, block table and images")
    p.add_argument("--config", help="key = value settings file (TOML syntax); flags override it")
    p.add_argument("--input", help="input file")
    p.add_argument("--format", choices=["pgm", "y4m", "raw"])
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--depth", type=int, choices=[8, 10])
    p.add_argument("--max-size", type=int)
    p.add_argument("--min-size", type=int)
    p.add_argument("--split-threshold", type=float)
    p.add_argument("--lambda", type=float, dest="lambda")
    p.add_argument("--gate-ratio", type=float)
    p.add_argument("--max-candidates", type=int)
    p.add_argument("--subset", choices=["full", "mpm"])
    p.add_argument("--neighbor-map", help="neighbour offset file (default: packaged 41-offset map)")
    p.add_argument("--ablate", help="comma list of: non_adjacent, transform_inherit, merge")
    p.add_argument("--out-dir")
    p.add_argument("--dump-map", action="store_true", help="also write coded_map.json")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> LabConfig:
    settings = load_config_file(args.config) if args.config else {}
    ablate = settings.pop("ablate", [])
    if isinstance(ablate, str):
        ablate = ablate.split(",")
    for flag in _FLAGS:
        value = getattr(args, flag)
        if value is not None:
            settings["lam" if flag == "lambda" else flag] = value
    config = LabConfig(**settings)
    if args.ablate is not None:
        ablate = args.ablate.split(",")
    return config.with_ablations(ablate)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        if config.input is None:
            raise ValueError("--input (or 'input' in --config) is required")
        t0 = time.perf_counter()
        stats, result = run(config, dump_map=args.dump_map)
    except (OSError, ValueError) as exc:
        print(f"timd-lab: error: {exc}", file=sys.stderr)
        return 2
    n = len(result.decisions)
    counts = ", ".join(f"{k}={v}" for k, v in stats.block_counts.items())
    print(f"coded {n} blocks in {time.perf_counter() - t0:.1f}s ({counts}); "
          f"ablations: {','.join(config.ablations) or 'none'}; wrote {config.out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
