"""Ensemble sweeps over the noise strength, global row ordering and heatmap exports."""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .channels import NonInvertible, Regime, classify_regime
from .distillation import DistillationInstance
from .ensembles import EnsembleKind, EnsembleSpec, sample_ensemble
from .io import dumps, fmt_float, write_json
from .optimizer import OptimizerConfig, optimize

log = logging.getLogger(__name__)

WEAK_EDGE = 0.25
SINGULAR_EPSILONS = (0.25, 0.5)
SINGULAR = "SINGULAR"


class BoundMode(str, enum.Enum):
    STANDARD = "STANDARD"  # min{1, ‖A − B‖₁}
    SHARP = "SHARP"  # min{1, ½‖A − B‖₁}


class Metric(str, enum.Enum):
    TIGHTNESS = "tightness"
    GAIN = "gain"
    OPTIMIZED_VALUE = "optimized_value"


def default_epsilon_grid() -> list[float]:
    grid = np.linspace(0.02, 0.48, 25)
    return [float(e) for e in grid if not any(math.isclose(e, s, abs_tol=1e-12) for s in SINGULAR_EPSILONS)]


def parse_grid(text: str) -> list[float]:
    """``"0.1,0.2,0.3"`` or ``"start:stop:num"`` (inclusive linspace)."""
    if ":" in text:
        start, stop, num = text.split(":")
        return [float(e) for e in np.linspace(float(start), float(stop), int(num))]
    return [float(e) for e in text.split(",") if e.strip()]


def is_singular(eps: float) -> bool:
    return any(math.isclose(eps, s, abs_tol=1e-12) for s in SINGULAR_EPSILONS)


@dataclass(frozen=True)
class SweepConfig:
    epsilon_grid: tuple = field(default_factory=lambda: tuple(default_epsilon_grid()))
    copy_numbers: tuple = (2, 3)
    ensemble: EnsembleSpec = field(default_factory=lambda: EnsembleSpec(EnsembleKind.ORTHOGONAL_PURE, 20, 0))
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    bound_mode: BoundMode = BoundMode.STANDARD
    dim_r: int = 2
    dim_d: int = 2

    def __post_init__(self):
        grid = tuple(float(e) for e in self.epsilon_grid)
        if any(not 0.0 < e <= 0.5 for e in grid):
            raise ValueError("epsilon grid must lie in (0, 0.5]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("epsilon grid must be strictly ascending")
        copies = tuple(int(n) for n in self.copy_numbers)
        if any(n not in (1, 2, 3) for n in copies):
            raise ValueError("copy numbers must be drawn from {1, 2, 3}")
        object.__setattr__(self, "epsilon_grid", grid)
        object.__setattr__(self, "copy_numbers", copies)
        object.__setattr__(self, "bound_mode", BoundMode(self.bound_mode))

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known - {"output_dir"}
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        kwargs = {}
        if "epsilon_grid" in data:
            grid = data["epsilon_grid"]
            if isinstance(grid, str):
                grid = parse_grid(grid)
            elif isinstance(grid, dict):
                grid = np.linspace(grid["start"], grid["stop"], int(grid["num"])).tolist()
                grid = [e for e in grid if not is_singular(e)] if data.get("drop_singular", True) else grid
            kwargs["epsilon_grid"] = tuple(grid)
        if "copy_numbers" in data:
            kwargs["copy_numbers"] = tuple(data["copy_numbers"])
        if "ensemble" in data:
            kwargs["ensemble"] = EnsembleSpec.from_dict(data["ensemble"])
        if "optimizer" in data:
            kwargs["optimizer"] = OptimizerConfig.from_dict(data["optimizer"])
        for key in ("bound_mode", "dim_r", "dim_d"):
            if key in data:
                kwargs[key] = data[key]
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "epsilon_grid": list(self.epsilon_grid),
            "copy_numbers": list(self.copy_numbers),
            "ensemble": self.ensemble.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "bound_mode": self.bound_mode.value,
            "dim_r": self.dim_r,
            "dim_d": self.dim_d,
        }

    def digest(self) -> str:
        return hashlib.sha256(dumps(self.to_dict(), indent=0).encode()).hexdigest()


def task_seed(master_seed: int, pair_index: int, epsilon_index: int, n: int) -> int:
    """Independent 64-bit seed for one sweep cell."""
    ss = np.random.SeedSequence([int(master_seed), int(pair_index), int(epsilon_index), int(n)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepRecord:
    pair_index: int
    epsilon_index: int
    epsilon: float
    n: int
    delta_d: float
    delta_d_prime: float
    beta: float
    beta_sharp: float
    tightness: float
    gain: float
    regime: str
    task_seed: int
    best_restart: int
    iterations: int
    converged_restarts: int

    def metric(self, metric: Metric) -> float:
        metric = Metric(metric)
        if metric is Metric.TIGHTNESS:
            return self.tightness
        if metric is Metric.GAIN:
            return self.gain
        return self.delta_d_prime

    def row(self) -> list[str]:
        out = []
        for name in RECORD_FIELDS:
            v = getattr(self, name)
            out.append(fmt_float(v) if isinstance(v, float) else str(v))
        return out


RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(SweepRecord))


@dataclass
class SweepResult:
    config: SweepConfig
    records: list[SweepRecord]
    errors: list[dict]
    pairs: list


def _tightness(value: float, bound: float) -> float:
    return value / bound if bound > 0 else float("nan")


def run_cell(config: SweepConfig, pair, pair_index: int, eps_index: int, n: int) -> SweepRecord:
    eps = config.epsilon_grid[eps_index]
    rho1, rho2 = pair
    inst = DistillationInstance.for_model(eps, rho1, rho2, n, config.dim_r, config.dim_d)
    seed = task_seed(config.ensemble.seed, pair_index, eps_index, n)
    opt_config = dataclasses.replace(config.optimizer, seed=seed)
    res = optimize(inst, opt_config)
    delta_d = inst.undistilled()
    beta, beta_sharp = inst.bounds
    bound = beta if config.bound_mode is BoundMode.STANDARD else beta_sharp
    try:
        regime = SINGULAR if is_singular(eps) else classify_regime(eps).value
    except NonInvertible:
        regime = SINGULAR
    return SweepRecord(
        pair_index=pair_index,
        epsilon_index=eps_index,
        epsilon=eps,
        n=n,
        delta_d=float(delta_d),
        delta_d_prime=res.best_value,
        beta=float(beta),
        beta_sharp=float(beta_sharp),
        tightness=_tightness(res.best_value, bound),
        gain=res.best_value - float(delta_d),
        regime=regime,
        task_seed=seed,
        best_restart=res.best_restart,
        iterations=int(np.sum(res.iterations_used)),
        converged_restarts=int(np.sum(res.converged)),
    )


def run_sweep(config: SweepConfig, pairs: Optional[Sequence] = None) -> SweepResult:
    """One record per (pair, epsilon, n); failing cells are collected in ``errors``."""
    if pairs is None:
        pairs = sample_ensemble(config.ensemble)
    records, errors = [], []
    for n in config.copy_numbers:
        for k, pair in enumerate(pairs):
            for i, eps in enumerate(config.epsilon_grid):
                try:
                    records.append(run_cell(config, pair, k, i, n))
                except Exception as exc:  # one bad cell must not sink the sweep
                    log.warning("sweep cell failed (pair=%d, eps=%g, n=%d): %s", k, eps, n, exc)
                    errors.append({"pair_index": k, "epsilon_index": i, "epsilon": eps, "n": n,
                                   "error": type(exc).__name__, "message": str(exc)})
        log.info("finished n=%d (%d records so far)", n, len(records))
    return SweepResult(config, records, errors, list(pairs))


def _select(records: Iterable[SweepRecord], n: int) -> list[SweepRecord]:
    return [r for r in records if r.n == n]


def sorting_score(records: Sequence[SweepRecord], n_pairs: Optional[int] = None) -> np.ndarray:
    """Mean two-copy tightness of each pair over the strong-regime grid points (epsilon > 0.25)."""
    recs = [r for r in _select(records, 2) if r.epsilon > WEAK_EDGE]
    if not recs:
        raise ValueError("no two-copy records with epsilon > 0.25; sorting score undefined")
    if n_pairs is None:
        n_pairs = 1 + max(r.pair_index for r in _select(records, 2))
    sums = np.zeros(n_pairs)
    counts = np.zeros(n_pairs)
    for r in recs:
        sums[r.pair_index] += r.tightness
        counts[r.pair_index] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts


def sort_pairs(scores) -> np.ndarray:
    """Zero-based permutation putting scores in ascending order, ties by original index."""
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise ValueError("sorting scores must be finite")
    return np.argsort(scores, kind="stable")


def extract_extremes(records: Sequence[SweepRecord], n: int) -> tuple[int, int]:
    """``(best, worst)`` pair indices by peak distilled change over 0 < epsilon < 0.25."""
    peaks: dict[int, float] = {}
    for r in _select(records, n):
        if 0.0 < r.epsilon < WEAK_EDGE:
            peaks[r.pair_index] = max(peaks.get(r.pair_index, -math.inf), r.delta_d_prime)
    if not peaks:
        raise ValueError(f"no weak-regime records for n = {n}")
    order = sorted(peaks)
    vals = np.array([peaks[k] for k in order])
    return order[int(np.argmax(vals))], order[int(np.argmin(vals))]


class MissingCells(ValueError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"heatmap has {len(self.missing)} missing (pair, epsilon) cells: {self.missing[:10]}")


def heatmap_matrix(records: Sequence[SweepRecord], metric: Metric, pi: Sequence[int], n: int,
                   epsilon_grid: Sequence[float]) -> np.ndarray:
    cells = {(r.pair_index, r.epsilon_index): r.metric(metric) for r in _select(records, n)}
    missing = [(int(k), float(epsilon_grid[i])) for k in pi for i in range(len(epsilon_grid))
               if (int(k), i) not in cells]
    if missing:
        raise MissingCells(missing)
    return np.array([[cells[(int(k), i)] for i in range(len(epsilon_grid))] for k in pi])


ROW_NOTE = "# rows: pairs in ascending sorting-score order; first data row is the bottom of the heatmap"


def export_heatmap(records: Sequence[SweepRecord], metric: Metric, pi: Sequence[int], path,
                   n: int, epsilon_grid: Sequence[float], metadata: Optional[dict] = None) -> Path:
    """Write the metric matrix (rows follow ``pi``) as CSV plus a JSON sidecar."""
    metric = Metric(metric)
    M = heatmap_matrix(records, metric, pi, n, epsilon_grid)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(ROW_NOTE + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair_index"] + [fmt_float(e) for e in epsilon_grid])
        for k, row in zip(pi, M):
            writer.writerow([str(int(k))] + [fmt_float(v) for v in row])
    sidecar = {
        "metric": metric.value,
        "n": n,
        "epsilon_grid": list(epsilon_grid),
        "pi": [int(k) for k in pi],
        "row_order": "ascending sorting score, bottom to top",
        **(metadata or {}),
    }
    write_json(path.with_suffix(".json"), sidecar)
    return path


def read_heatmap(path) -> tuple[np.ndarray, list[int], list[float]]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(line for line in fh if not line.startswith("#"))]
    grid = [float(e) for e in rows[0][1:]]
    labels = [int(r[0]) for r in rows[1:]]
    M = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return M, labels, grid


def write_records_csv(records: Sequence[SweepRecord], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_FIELDS)
        for r in sorted(records, key=lambda r: (r.n, r.pair_index, r.epsilon_index)):
            writer.writerow(r.row())
    return path


def read_records_csv(path) -> list[SweepRecord]:
    types = {f.name: f.type for f in dataclasses.fields(SweepRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kwargs = {}
            for name, text in row.items():
                t = types[name]
                kwargs[name] = int(text) if t == "int" else float(text) if t == "float" else text
            out.append(SweepRecord(**kwargs))
    return out


def global_order(records: Sequence[SweepRecord], n_pairs: int) -> tuple[np.ndarray, str]:
    """The permutation shared by every export, with a note on where it came from."""
    try:
        scores = sorting_score(records, n_pairs)
        return sort_pairs(scores), "sorting score over two-copy strong-regime tightness"
    except ValueError as exc:
        log.warning("falling back to identity row order: %s", exc)
        return np.arange(n_pairs), f"identity ({exc})"


def export_sweep(result: SweepResult, out_dir) -> dict:
    """Records CSV, one heatmap per (n, metric), and a metadata JSON. Returns the metadata."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    n_pairs = len(result.pairs)
    pi, pi_source = global_order(result.records, n_pairs)
    meta_common = {"config_hash": cfg.digest(), "ensemble_seed": cfg.ensemble.seed,
                   "ensemble": cfg.ensemble.to_dict(), "bound_mode": cfg.bound_mode.value}

    write_records_csv(result.records, out_dir / "records.csv")
    files = ["records.csv"]
    for n in cfg.copy_numbers:
        for metric in Metric:
            name = f"heatmap_{metric.value}_n{n}.csv"
            try:
                export_heatmap(result.records, metric, pi, out_dir / name, n, cfg.epsilon_grid, meta_common)
                files += [name, name.replace(".csv", ".json")]
            except MissingCells as exc:
                result.errors.append({"n": n, "metric": metric.value, "error": "MissingCells",
                                      "missing": [list(c) for c in exc.missing]})

    extremes = {}
    for n in cfg.copy_numbers:
        try:
            best, worst = extract_extremes(result.records, n)
            extremes[str(n)] = {"best_pair": best, "worst_pair": worst}
        except ValueError:
            pass

    metadata = {
        "config": cfg.to_dict(),
        **meta_common,
        "pi": [int(k) for k in pi],
        "pi_source": pi_source,
        "task_seeds": "SeedSequence([ensemble_seed, pair_index, epsilon_index, n])",
        "measures": {"mixed": "Hilbert-Schmidt", "pure": "Haar", "ortho": "Haar unitary columns"},
        "extremes": extremes,
        "errors": result.errors,
        "files": files,
    }
    write_json(out_dir / "metadata.json", metadata)
    return metadata


def load_sweep_config(path) -> tuple[SweepConfig, Optional[str]]:
    with open(path) as fh:
        data = json.load(fh)
    return SweepConfig.from_dict(data), data.get("output_dir")
