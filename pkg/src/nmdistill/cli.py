"""Command line entry point: ``nmdistill <subcommand> ...``.

Subcommands write JSON (or CSV for sweeps) to stdout or ``--out``. Failures
exit with status 1 (bad input) or 2 (usage) and print
``{"error": <type>, "message": <text>}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channels import NonInvertible, classify_regime, computational_pair, intermediate_map, model_channels
from .distillation import DistillationInstance
from .ensembles import EnsembleKind, EnsembleSpec, sample_ensemble
from .io import dumps, pairs_from_json, pairs_to_json, read_json, read_matrix
from .optimizer import OptimizerConfig, optimize
from .saturation import saturation_feasible
from .sweep import SweepConfig, export_sweep, parse_grid, run_sweep

BUILTIN_COMPUTATIONAL = "builtin:computational"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(obj, out: str | None) -> None:
    text = dumps(obj) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_pair(spec: str, index: int):
    if spec == BUILTIN_COMPUTATIONAL:
        return computational_pair()
    pairs = pairs_from_json(read_json(spec))
    if not 0 <= index < len(pairs):
        raise IndexError(f"pair index {index} out of range for {len(pairs)} pairs")
    return pairs[index]


def cmd_classify(args) -> None:
    grid = [args.epsilon] if args.epsilon is not None else parse_grid(args.grid)
    rows = []
    for eps in grid:
        row = {"epsilon": eps}
        try:
            m = intermediate_map(*model_channels(eps))
            row.update(regime=m.regime.value, transfer_eigenvalues=list(m.transfer_eigenvalues),
                       positive=m.is_positive, cp=m.is_cp)
        except NonInvertible as exc:
            row.update(regime="SINGULAR", message=str(exc))
        rows.append(row)
    if args.json:
        _emit(rows, args.out)
        return
    lines = [f"{'epsilon':>12}  regime"]
    lines += [f"{r['epsilon']:>12.6g}  {r['regime']}" for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_optimize(args) -> None:
    rho1, rho2 = _load_pair(args.pair, args.pair_index)
    config = OptimizerConfig.from_json(args.config) if args.config else OptimizerConfig()
    inst = DistillationInstance.for_model(args.epsilon, rho1, rho2, args.n, args.dim_r, args.dim_d)
    res = optimize(inst, config)
    beta, beta_sharp = inst.bounds
    try:
        regime = classify_regime(args.epsilon).value
    except NonInvertible:
        regime = "SINGULAR"
    out = {
        "epsilon": args.epsilon,
        "n": args.n,
        "regime": regime,
        "delta_d": inst.undistilled(),
        "beta": beta,
        "beta_sharp": beta_sharp,
        "tightness": res.best_value / beta if beta > 0 else float("nan"),
        "config": config.to_dict(),
        **res.to_dict(include_theta=not args.no_theta),
    }
    _emit(out, args.out)


def cmd_check_saturation(args) -> None:
    A = read_matrix(args.a)
    B = read_matrix(args.b)
    _emit(saturation_feasible(A, B).to_dict(), args.out)


def cmd_sweep(args) -> None:
    data = read_json(args.config)
    out_dir = args.out or data.get("output_dir")
    if not out_dir:
        raise ValueError("no output directory: pass --out or set output_dir in the config")
    config = SweepConfig.from_dict(data)
    pairs = None
    if args.pairs:
        pairs = pairs_from_json(read_json(args.pairs))
    result = run_sweep(config, pairs)
    meta = export_sweep(result, out_dir)
    summary = {"output_dir": str(out_dir), "records": len(result.records),
               "errors": len(meta["errors"]), "config_hash": meta["config_hash"]}
    sys.stdout.write(dumps(summary) + "\n")


def cmd_sample(args) -> None:
    spec = EnsembleSpec(EnsembleKind.parse(args.kind), args.n_pairs, args.seed)
    pairs = sample_ensemble(spec)
    _emit(pairs_to_json(pairs, kind=spec.kind.value, seed=spec.seed), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nmdistill", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="regime of the intermediate map")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--epsilon", type=float)
    grp.add_argument("--grid", help="'a,b,c' or 'start:stop:num'")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("optimize", help="optimize the coarse-graining map for one pair")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--pair", default=BUILTIN_COMPUTATIONAL,
                   help=f"pairs file from 'sample' or {BUILTIN_COMPUTATIONAL}")
    p.add_argument("--pair-index", type=int, default=0)
    p.add_argument("--config", help="optimizer config JSON")
    p.add_argument("--dim-r", type=int, default=2)
    p.add_argument("--dim-d", type=int, default=2)
    p.add_argument("--no-theta", action="store_true", help="omit best_theta from the output")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("check-saturation", help="feasibility of saturating the general bound")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_saturation)

    p = sub.add_parser("sweep", help="ensemble sweep with heatmap exports")
    p.add_argument("--config", required=True)
    p.add_argument("--pairs", help="use pairs from this file instead of sampling")
    p.add_argument("--out", help="output directory (overrides output_dir in the config)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample", help="sample a state-pair ensemble")
    p.add_argument("--kind", required=True, choices=[k.value for k in EnsembleKind])
    p.add_argument("--n-pairs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("UsageError", str(exc), 2)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with np.errstate(all="ignore"):
            args.func(args)
    except Exception as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
