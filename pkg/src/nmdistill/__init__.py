"""Multi-copy distillation of non-Markovianity for a two-step qubit dephasing model."""

__version__ = "0.1.0"

from .channels import (
    IntermediateMap,
    NonInvertible,
    PauliChannel,
    Regime,
    classify_regime,
    computational_pair,
    difference_operator,
    intermediate_map,
    model_channels,
)
from .distillation import (
    Bounds,
    CoarseGrainer,
    DistillationInstance,
    DistillationRecord,
    distilled_delta_d,
    general_bound,
    undistilled_delta_d,
)
from .ensembles import EnsembleKind, EnsembleSpec, sample_ensemble
from .linalg import ContractViolation, spectral_split, trace_norm
from .optimizer import OptimizationResult, OptimizerConfig, optimize
from .saturation import SaturationReport, construct_saturating_map, saturation_feasible
from .sweep import SweepConfig, SweepRecord, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
