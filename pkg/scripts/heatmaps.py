"""Tightness and gain heatmaps for the three state ensembles.

Writes one export directory per ensemble under --out (records.csv,
heatmap_*.csv with json sidecars, metadata.json).

    python3 scripts/heatmaps.py --n-pairs 20 --copies 2 --restarts 4 --out heatmaps
"""

import argparse
import sys
import time
from pathlib import Path

from nmdistill.ensembles import EnsembleKind, EnsembleSpec
from nmdistill.optimizer import OptimizerConfig
from nmdistill.sweep import SweepConfig, default_epsilon_grid, export_sweep, is_singular, parse_grid, run_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-pairs", type=int, default=20)
    ap.add_argument("--grid", default=None, help="'a,b,c' or 'start:stop:num'; default 24 points")
    ap.add_argument("--copies", default="2")
    ap.add_argument("--restarts", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kinds", default=",".join(k.value for k in EnsembleKind))
    ap.add_argument("--out", default="heatmaps")
    args = ap.parse_args(argv)

    grid = default_epsilon_grid() if args.grid is None else [e for e in parse_grid(args.grid) if not is_singular(e)]
    copies = tuple(int(c) for c in args.copies.split(","))
    for kind in args.kinds.split(","):
        spec = EnsembleSpec(kind, args.n_pairs, args.seed)
        config = SweepConfig(epsilon_grid=tuple(grid), copy_numbers=copies, ensemble=spec,
                             optimizer=OptimizerConfig(n_restarts=args.restarts, seed=args.seed))
        t0 = time.perf_counter()
        result = run_sweep(config)
        meta = export_sweep(result, Path(args.out) / spec.kind.value)
        print(f"{spec.kind.value}: {len(result.records)} cells, {len(result.errors)} errors, "
              f"extremes {meta['extremes']} ({time.perf_counter() - t0:.0f} s)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
