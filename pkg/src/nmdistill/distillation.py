"""Coarse-graining maps from dilation unitaries and the distinguishability changes they induce.

Dilation space ordering is ``(system copies m, auxiliary r, output d)``. The
system is fed in with both ancillas in ``|0>`` and everything but the output
factor is traced away, so only the ``m`` columns of ``U`` with ancilla index
``(0, 0)`` ever matter. Those columns form an isometry ``V`` of shape
``(m r d, m)`` whose row blocks are the Kraus operators of the map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channels import (
    PauliChannel,
    apply_channel,
    choi_matrix,
    difference_operator,
    validate_state,
)
from .linalg import (
    ContractViolation,
    generator_from_unitary,
    partial_trace,
    smoothed_abs_sum,
    smoothed_trace_norm_2x2,
    trace_norm,
    trace_norm_2x2,
    unitary_from_generator,
)

DELTA_TOL = 1e-12
BOUND_TOL = 1e-9


def input_columns(dim_m: int, dim_r: int, dim_d: int) -> np.ndarray:
    """Column indices of ``U`` hit by ``psi ⊗ |0_r><0_r| ⊗ |0_d><0_d|``."""
    return np.arange(dim_m) * dim_r * dim_d


def apply_isometry_map(V: np.ndarray, X: np.ndarray, dim_m: int, dim_r: int, dim_d: int) -> np.ndarray:
    """``Tr_{m,r}[V X V^H]`` for an isometry (or a stack of them) ``V``."""
    Y = V @ X
    lead = V.shape[:-2]
    Y = Y.reshape(*lead, dim_m * dim_r, dim_d, dim_m)
    W = V.reshape(*lead, dim_m * dim_r, dim_d, dim_m)
    return np.einsum("...aci,...aei->...ce", Y, W.conj())


def dilation_apply(U: np.ndarray, psi: np.ndarray, dim_m: int, dim_r: int, dim_d: int) -> np.ndarray:
    """The map written out literally: embed, conjugate by ``U``, trace system and auxiliary."""
    e_r = np.zeros((dim_r, dim_r), dtype=complex)
    e_r[0, 0] = 1.0
    e_d = np.zeros((dim_d, dim_d), dtype=complex)
    e_d[0, 0] = 1.0
    big = np.kron(np.kron(np.asarray(psi, dtype=complex), e_r), e_d)
    return partial_trace(U @ big @ U.conj().T, [dim_m, dim_r, dim_d], keep=[2])


def swap_unitary(n_copies: int, dim_r: int = 2, dim_d: int = 2) -> np.ndarray:
    """Unitary exchanging the first system qubit with the first two output levels.

    With one copy and ``dim_r = 1`` the induced map is the identity; for more
    copies it is the partial trace onto the first copy.
    """
    if dim_d < 2:
        raise ContractViolation("swap seed needs dim_d >= 2")
    dim_m = 2**n_copies
    rest = dim_m // 2
    N = dim_m * dim_r * dim_d
    U = np.zeros((N, N), dtype=complex)

    def index(s0, srest, a, c):
        return ((s0 * rest + srest) * dim_r + a) * dim_d + c

    for s0 in range(2):
        for srest in range(rest):
            for a in range(dim_r):
                for c in range(dim_d):
                    if c < 2:
                        src, dst = index(s0, srest, a, c), index(c, srest, a, s0)
                    else:
                        src = dst = index(s0, srest, a, c)
                    U[dst, src] = 1.0
    return U


@dataclass(frozen=True, eq=False)
class CoarseGrainer:
    """CPTP map from ``n_copies`` qubits to a ``dim_d`` level output, given by a dilation generator."""

    n_copies: int
    theta: np.ndarray
    dim_r: int = 2
    dim_d: int = 2
    verify: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.n_copies < 1:
            raise ContractViolation("n_copies must be >= 1")
        if not 1 <= self.dim_r <= self.dim_d:
            raise ContractViolation(f"need 1 <= dim_r <= dim_d, got r={self.dim_r}, d={self.dim_d}")
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if theta.size != self.dim_total**2:
            raise ContractViolation(
                f"theta must have (m r d)^2 = {self.dim_total ** 2} entries, got {theta.size}")
        object.__setattr__(self, "theta", theta)
        U = unitary_from_generator(theta, self.dim_total)
        object.__setattr__(self, "_unitary", U)
        object.__setattr__(self, "_isometry", U[:, input_columns(self.dim_m, self.dim_r, self.dim_d)])
        if self.verify:
            self.check_cptp()

    @property
    def dim_m(self) -> int:
        return 2**self.n_copies

    @property
    def dim_total(self) -> int:
        return self.dim_m * self.dim_r * self.dim_d

    @property
    def unitary(self) -> np.ndarray:
        return self._unitary

    @property
    def isometry(self) -> np.ndarray:
        return self._isometry

    def kraus_operators(self) -> np.ndarray:
        return self._isometry.reshape(self.dim_m * self.dim_r, self.dim_d, self.dim_m)

    def choi(self) -> np.ndarray:
        return choi_matrix(self, self.dim_m)

    def check_cptp(self, psd_tol: float = 1e-9, tp_tol: float = 1e-10) -> None:
        V = self._isometry
        if np.max(np.abs(V.conj().T @ V - np.eye(self.dim_m))) > tp_tol:
            raise ContractViolation("dilation isometry is not trace preserving")
        C = self.choi()
        if np.linalg.eigvalsh(0.5 * (C + C.conj().T))[0] < -psd_tol:
            raise ContractViolation("coarse-graining Choi matrix is not PSD")

    @classmethod
    def identity_seed(cls, n_copies: int, dim_r: int = 2, dim_d: int = 2) -> "CoarseGrainer":
        N = 2**n_copies * dim_r * dim_d
        return cls(n_copies, np.zeros(N * N), dim_r, dim_d)

    @classmethod
    def from_unitary(cls, U: np.ndarray, n_copies: int, dim_r: int = 2, dim_d: int = 2) -> "CoarseGrainer":
        return cls(n_copies, generator_from_unitary(U), dim_r, dim_d)

    @classmethod
    def swap(cls, n_copies: int, dim_r: int = 2, dim_d: int = 2) -> "CoarseGrainer":
        return cls.from_unitary(swap_unitary(n_copies, dim_r, dim_d), n_copies, dim_r, dim_d)

    def __call__(self, psi) -> np.ndarray:
        return coarse_grain(self, psi)


def coarse_grain(cg: CoarseGrainer, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (cg.dim_m, cg.dim_m):
        raise ContractViolation(f"expected a {cg.dim_m}x{cg.dim_m} input, got {psi.shape}")
    return apply_isometry_map(cg.isometry, psi, cg.dim_m, cg.dim_r, cg.dim_d)


def undistilled_delta_d(lam1: PauliChannel, lam2: PauliChannel, rho1, rho2) -> float:
    """Single-copy change of trace distance between the two time steps."""
    D = validate_state(rho2) - validate_state(rho1)
    return 0.5 * (trace_norm(apply_channel(lam2, D)) - trace_norm(apply_channel(lam1, D)))


def evolved_differences(lam1, lam2, rho1, rho2, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(A, B)``: the n-copy output differences after Λ₂ and Λ₁ respectively."""
    return difference_operator(lam2, rho1, rho2, n), difference_operator(lam1, rho1, rho2, n)


def _output_trace_norm(X: np.ndarray) -> float:
    if X.shape == (2, 2):
        return float(trace_norm_2x2(X))
    return trace_norm(0.5 * (X + X.conj().T))


def distilled_from_operators(cg: CoarseGrainer, A: np.ndarray, B: np.ndarray) -> float:
    return 0.5 * (_output_trace_norm(coarse_grain(cg, A)) - _output_trace_norm(coarse_grain(cg, B)))


def distilled_delta_d(cg: CoarseGrainer, lam1, lam2, rho1, rho2) -> float:
    A, B = evolved_differences(lam1, lam2, rho1, rho2, cg.n_copies)
    return distilled_from_operators(cg, A, B)


class Bounds(NamedTuple):
    beta: float
    beta_sharp: float


def bounds_from_operators(A: np.ndarray, B: np.ndarray) -> Bounds:
    gap = trace_norm(A - B)
    return Bounds(min(1.0, gap), min(1.0, 0.5 * gap))


def general_bound(lam1, lam2, rho1, rho2, n: int) -> Bounds:
    """Cap on the distilled gain: ``beta = min(1, ‖A−B‖₁)`` and ``beta_sharp = min(1, ½‖A−B‖₁)``."""
    A, B = evolved_differences(lam1, lam2, rho1, rho2, n)
    return bounds_from_operators(A, B)


@dataclass(frozen=True)
class DistillationRecord:
    delta_d: float
    delta_d_prime: float
    beta: float
    beta_sharp: float
    epsilon: float
    n_copies: int

    def __post_init__(self):
        if self.delta_d_prime > self.beta + BOUND_TOL or self.delta_d_prime > self.beta_sharp + BOUND_TOL:
            raise ContractViolation(
                f"distilled change {self.delta_d_prime} exceeds bound "
                f"(beta={self.beta}, beta_sharp={self.beta_sharp})")
        if abs(self.delta_d) > 1 + DELTA_TOL or abs(self.delta_d_prime) > 1 + DELTA_TOL:
            raise ContractViolation("trace-distance change outside [-1, 1]")

    @property
    def tightness(self) -> float:
        return self.delta_d_prime / self.beta if self.beta > 0 else float("nan")

    @property
    def tightness_sharp(self) -> float:
        return self.delta_d_prime / self.beta_sharp if self.beta_sharp > 0 else float("nan")


@dataclass(frozen=True, eq=False)
class DistillationInstance:
    """Everything the objective needs for one (channels, state pair, n, dims) point.

    ``A`` and ``B`` are computed once here; the coarse-graining map is the only
    part that varies during optimization.
    """

    lam1: PauliChannel
    lam2: PauliChannel
    rho1: np.ndarray
    rho2: np.ndarray
    n_copies: int
    dim_r: int = 2
    dim_d: int = 2

    def __post_init__(self):
        if not 1 <= self.dim_r <= self.dim_d:
            raise ContractViolation(f"need 1 <= dim_r <= dim_d, got r={self.dim_r}, d={self.dim_d}")
        rho1 = validate_state(self.rho1)
        rho2 = validate_state(self.rho2)
        object.__setattr__(self, "rho1", rho1)
        object.__setattr__(self, "rho2", rho2)
        A, B = evolved_differences(self.lam1, self.lam2, rho1, rho2, self.n_copies)
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "bounds", bounds_from_operators(A, B))

    @classmethod
    def for_model(cls, epsilon: float, rho1, rho2, n_copies: int, dim_r: int = 2, dim_d: int = 2):
        from .channels import model_channels

        lam1, lam2 = model_channels(epsilon)
        return cls(lam1, lam2, rho1, rho2, n_copies, dim_r, dim_d)

    @property
    def dim_m(self) -> int:
        return 2**self.n_copies

    @property
    def dim_total(self) -> int:
        return self.dim_m * self.dim_r * self.dim_d

    @property
    def n_params(self) -> int:
        return self.dim_total**2

    def undistilled(self) -> float:
        return undistilled_delta_d(self.lam1, self.lam2, self.rho1, self.rho2)

    def value_at_isometry(self, V: np.ndarray, smoothing: float = 0.0) -> np.ndarray:
        """Distilled change for one isometry or a stack of them (output dimension 2 is vectorized).

        With ``smoothing = μ > 0`` every ``|v|`` in the trace norms is replaced by
        ``sqrt(v² + μ²)``, a smooth surrogate used only while optimizing.
        """
        dims = (self.dim_m, self.dim_r, self.dim_d)
        LA = apply_isometry_map(V, self.A, *dims)
        LB = apply_isometry_map(V, self.B, *dims)
        if self.dim_d == 2:
            if smoothing:
                return 0.5 * (smoothed_trace_norm_2x2(LA, smoothing) - smoothed_trace_norm_2x2(LB, smoothing))
            return 0.5 * (trace_norm_2x2(LA) - trace_norm_2x2(LB))
        wa = np.linalg.eigvalsh(0.5 * (LA + np.swapaxes(LA, -1, -2).conj()))
        wb = np.linalg.eigvalsh(0.5 * (LB + np.swapaxes(LB, -1, -2).conj()))
        return 0.5 * (smoothed_abs_sum(wa, smoothing) - smoothed_abs_sum(wb, smoothing))
