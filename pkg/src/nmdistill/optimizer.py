"""Multi-start ascent of the distilled distinguishability change over dilation unitaries.

Each restart walks on the unitary group. At the current unitary ``U`` the
objective is probed along every generator direction ``E_j`` of the fixed basis
through ``U -> exp(±i h E_j) U``. Each such factor is a phase or a 2x2 rotation
acting on two rows, so all central differences are evaluated in one batched
pass without any matrix exponential. Steps ``U -> exp(i t H(g)) U`` are chosen
by a Barzilai-Borwein estimate followed by Armijo backtracking; a step is only
accepted if it does not decrease the objective.

The objective has kinks wherever an output eigenvalue crosses zero, and the
optimum typically sits on one (the image of ``B`` is driven to zero). Plain
ascent stalls there, so each restart first climbs a sequence of smoothed
objectives, ``|v| -> sqrt(v² + μ²)`` with decreasing ``μ``, and finishes on the
exact objective.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .distillation import (
    CoarseGrainer,
    DistillationInstance,
    input_columns,
    swap_unitary,
)
from .linalg import (
    ContractViolation,
    expm_hermitian,
    generator_from_unitary,
    hermitian_from_generator,
    unitary_from_generator,
)

log = logging.getLogger(__name__)

ARMIJO = 1e-4
MIN_STEP = 1e-14
MAX_STEP = 1e2


@dataclass(frozen=True)
class OptimizerConfig:
    n_restarts: int = 16
    max_iterations: int = 500
    gradient_step: float = 1e-5
    convergence_tol: float = 1e-8
    seed: int = 0
    param_init_scale: float = 1.0
    # Consecutive sub-tolerance iterations needed to declare convergence.
    patience: int = 5
    swap_seed: bool = True
    # Smoothing widths climbed in order before the exact objective; empty for plain ascent.
    smoothing_schedule: tuple = (1e-1, 1e-2, 1e-3, 1e-4)

    def __post_init__(self):
        schedule = tuple(float(mu) for mu in self.smoothing_schedule)
        if any(mu <= 0 for mu in schedule):
            raise ContractViolation("smoothing widths must be positive")
        object.__setattr__(self, "smoothing_schedule", schedule)
        if self.n_restarts < 1 or self.max_iterations < 1 or self.patience < 1:
            raise ContractViolation("restart, iteration and patience counts must be positive")
        if not 1e-8 <= self.gradient_step <= 1e-2:
            raise ContractViolation(f"gradient_step must lie in [1e-8, 1e-2], got {self.gradient_step}")
        if self.convergence_tol <= 0 or self.param_init_scale <= 0:
            raise ContractViolation("convergence_tol and param_init_scale must be positive")
        if not 0 <= self.seed < 2**64:
            raise ContractViolation("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ContractViolation(f"unknown optimizer config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "OptimizerConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["smoothing_schedule"] = list(self.smoothing_schedule)
        return out


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    best_theta: np.ndarray
    best_value: float
    restart_values: np.ndarray
    iterations_used: np.ndarray
    converged: np.ndarray
    best_restart: int = 0
    traces: list = field(default_factory=list, repr=False)

    def to_dict(self, include_theta: bool = True) -> dict:
        out = {
            "best_value": float(self.best_value),
            "best_restart": int(self.best_restart),
            "restart_values": [float(v) for v in self.restart_values],
            "iterations_used": [int(v) for v in self.iterations_used],
            "converged": [bool(v) for v in self.converged],
        }
        if include_theta:
            out["best_theta"] = [float(v) for v in self.best_theta]
        return out


def _isometry_from_theta(theta, instance: DistillationInstance) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (instance.n_params,):
        raise ContractViolation(
            f"theta must have (m r d)^2 = {instance.n_params} entries, got {theta.size}")
    U = unitary_from_generator(theta, instance.dim_total)
    return U[:, input_columns(instance.dim_m, instance.dim_r, instance.dim_d)]


def objective(theta, instance: DistillationInstance) -> float:
    """Distilled change for the coarse-graining map generated by ``theta``."""
    return float(instance.value_at_isometry(_isometry_from_theta(theta, instance)))


def finite_difference_gradient(theta, instance: DistillationInstance, step: float = 1e-5) -> np.ndarray:
    """Central differences of :func:`objective` in the global generator coordinates."""
    theta = np.asarray(theta, dtype=float)
    N = instance.dim_total
    if theta.shape != (N * N,):
        raise ContractViolation(f"theta must have {N * N} entries, got {theta.size}")
    cols = input_columns(instance.dim_m, instance.dim_r, instance.dim_d)
    H = hermitian_from_generator(theta, N)
    grad = np.empty_like(theta)
    # One Hermitian exponential per probe; batch them for eigh.
    chunk = 256
    for start in range(0, theta.size, chunk):
        idx = np.arange(start, min(start + chunk, theta.size))
        Hs = np.empty((2, idx.size, N, N), dtype=complex)
        for k, j in enumerate(idx):
            unit = np.zeros(theta.size)
            unit[j] = step
            E = hermitian_from_generator(unit, N)
            Hs[0, k] = H + E
            Hs[1, k] = H - E
        w, Q = np.linalg.eigh(Hs)
        V = (Q * np.exp(1j * w)[..., None, :]) @ Q[..., cols, :].conj().swapaxes(-1, -2)
        f = instance.value_at_isometry(V)
        grad[idx] = (f[0] - f[1]) / (2 * step)
    return grad


class _LocalProbe:
    """Row-mixing data for the ``exp(i h E_j)`` factors in generator order."""

    def __init__(self, N: int, h: float):
        self.N = N
        self.h = h
        self.p, self.q = np.triu_indices(N, 1)

    def gradient(self, V: np.ndarray, instance: DistillationInstance, smoothing: float = 0.0) -> np.ndarray:
        N, p, q, h = self.N, self.p, self.q, self.h
        K = p.size
        k = np.arange(K)
        vp, vq = V[p], V[q]
        values = []
        for sgn in (1.0, -1.0):
            c, s = np.cos(sgn * h), np.sin(sgn * h)
            Vd = np.repeat(V[None], N, axis=0)
            Vd[np.arange(N), np.arange(N)] *= np.exp(1j * sgn * h)
            Vr = np.repeat(V[None], K, axis=0)
            Vr[k, p] = c * vp + 1j * s * vq
            Vr[k, q] = 1j * s * vp + c * vq
            Vi = np.repeat(V[None], K, axis=0)
            Vi[k, p] = c * vp - s * vq
            Vi[k, q] = s * vp + c * vq
            values.append(np.concatenate([
                instance.value_at_isometry(Vd, smoothing),
                instance.value_at_isometry(Vr, smoothing),
                instance.value_at_isometry(Vi, smoothing),
            ]))
        return (values[0] - values[1]) / (2 * h)


def local_gradient(U: np.ndarray, instance: DistillationInstance, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of ``δ -> f(exp(i H(δ)) U)`` at ``δ = 0``."""
    cols = input_columns(instance.dim_m, instance.dim_r, instance.dim_d)
    return _LocalProbe(instance.dim_total, step).gradient(U[:, cols], instance)


@dataclass
class _RestartOutcome:
    unitary: np.ndarray
    value: float
    iterations: int
    converged: bool
    trace: list


def _ascend(U: np.ndarray, instance: DistillationInstance, config: OptimizerConfig,
            probe: _LocalProbe, keep_trace: bool, smoothing: float = 0.0) -> _RestartOutcome:
    N = instance.dim_total
    cols = input_columns(instance.dim_m, instance.dim_r, instance.dim_d)
    f = float(instance.value_at_isometry(U[:, cols], smoothing))
    trace = [f] if keep_trace else []
    g = probe.gradient(U[:, cols], instance, smoothing)
    t = 1.0 / max(1.0, float(np.linalg.norm(g)))
    stall = 0
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        gg = float(g @ g)
        if gg <= (10 * config.convergence_tol) ** 2:
            # Stationarity certificate; "it" counts the iterations actually taken.
            converged = True
            it -= 1
            break
        while t >= MIN_STEP:
            U_new = expm_hermitian(hermitian_from_generator(t * g, N)) @ U
            f_new = float(instance.value_at_isometry(U_new[:, cols], smoothing))
            if f_new >= f + ARMIJO * t * gg:
                break
            t *= 0.5
        else:
            # No ascent step exists at this resolution: a (possibly nonsmooth) stationary point.
            converged = True
            break
        improvement = f_new - f
        U, f = U_new, f_new
        if keep_trace:
            trace.append(f)
        g_new = probe.gradient(U[:, cols], instance, smoothing)
        s = t * g
        y = g_new - g
        sy = float(s @ y)
        # Ascent on f is descent on -f, hence the sign flip in the BB quotient.
        t = float(s @ s) / -sy if sy < 0 else 2.0 * t
        t = min(max(t, 1e-8), MAX_STEP)
        g = g_new
        stall = stall + 1 if improvement < config.convergence_tol else 0
        if stall >= config.patience:
            converged = True
            break
    return _RestartOutcome(U, f, it, converged, trace)


def _climb(U: np.ndarray, instance: DistillationInstance, config: OptimizerConfig,
           probe: _LocalProbe, keep_trace: bool) -> _RestartOutcome:
    """One restart: smoothed stages in order, then the exact objective.

    ``trace`` holds one list of accepted values per stage, each non-decreasing.
    Iterations are summed over stages; convergence refers to the exact stage.
    """
    stages, iterations = [], 0
    for mu in config.smoothing_schedule + (0.0,):
        out = _ascend(U, instance, config, probe, keep_trace, mu)
        U = out.unitary
        iterations += out.iterations
        stages.append(out.trace)
    return _RestartOutcome(U, out.value, iterations, out.converged, stages if keep_trace else [])


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(restart)]))


def initial_unitaries(instance: DistillationInstance, config: OptimizerConfig) -> list[np.ndarray]:
    N = instance.dim_total
    starts = []
    for r in range(config.n_restarts):
        if r == 0 and config.swap_seed and instance.dim_d >= 2:
            starts.append(swap_unitary(instance.n_copies, instance.dim_r, instance.dim_d))
            continue
        theta = config.param_init_scale * restart_rng(config.seed, r).standard_normal(N * N)
        starts.append(unitary_from_generator(theta, N))
    return starts


def optimize(instance: DistillationInstance, config: OptimizerConfig | None = None,
             keep_traces: bool = False) -> OptimizationResult:
    """Maximize the distilled change over coarse-graining maps.

    Restart 0 starts from the swap seed (the single-copy baseline), the rest
    from Gaussian generators. Each restart climbs the smoothing schedule and
    then the exact objective. Restarts are independent, and the best one is
    chosen by value with ties going to the lowest index.
    """
    config = config or OptimizerConfig()
    probe = _LocalProbe(instance.dim_total, config.gradient_step)
    outcomes = []
    for r, U0 in enumerate(initial_unitaries(instance, config)):
        out = _climb(U0, instance, config, probe, keep_traces)
        log.debug("restart %d: value=%.12g iterations=%d converged=%s",
                  r, out.value, out.iterations, out.converged)
        outcomes.append(out)

    thetas = [generator_from_unitary(o.unitary) for o in outcomes]
    # Report values of the returned parameter vectors so best_value == objective(best_theta).
    values = np.array([objective(th, instance) for th in thetas])
    best = int(np.argmax(values))
    return OptimizationResult(
        best_theta=thetas[best],
        best_value=float(values[best]),
        restart_values=values,
        iterations_used=np.array([o.iterations for o in outcomes]),
        converged=np.array([o.converged for o in outcomes]),
        best_restart=best,
        traces=[o.trace for o in outcomes],
    )


def best_coarse_grainer(result: OptimizationResult, instance: DistillationInstance) -> CoarseGrainer:
    return CoarseGrainer(instance.n_copies, result.best_theta, instance.dim_r, instance.dim_d)
