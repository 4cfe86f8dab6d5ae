"""Pauli-diagonal qubit channels, the two-step dephasing model and the regime classifier."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import I2, X, Y, Z, ContractViolation, as_hermitian, tensor_power

WEIGHT_TOL = 1e-12
STATE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
CP_TOL = 1e-10
SINGULAR_TOL = 1e-12


class NonInvertible(ArithmeticError):
    """Raised when a channel has a vanishing transfer eigenvalue."""

    def __init__(self, index: int, value: float):
        axis = "xyz"[index]
        super().__init__(f"channel is not invertible: transfer eigenvalue lambda_{axis} = {value:.3e}")
        self.index = index
        self.value = value


@dataclass(frozen=True)
class PauliChannel:
    """Qubit channel ``rho -> p_I rho + p_z Z rho Z + p_x X rho X + p_y Y rho Y``."""

    p_identity: float
    p_z: float
    p_x: float
    p_y: float = 0.0

    def __post_init__(self):
        w = self.weights
        if np.any(w < -WEIGHT_TOL) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ContractViolation(f"invalid Pauli weights {tuple(w)}")

    @property
    def weights(self) -> np.ndarray:
        """Weights in (I, X, Y, Z) order."""
        return np.array([self.p_identity, self.p_x, self.p_y, self.p_z], dtype=float)

    @property
    def transfer_eigenvalues(self) -> tuple[float, float, float]:
        pi, px, py, pz = self.weights
        return (pi - pz + px - py, pi - pz - px + py, pi + pz - px - py)

    @classmethod
    def from_transfer(cls, lx: float, ly: float, lz: float) -> "PauliChannel":
        return cls(
            p_identity=(1 + lx + ly + lz) / 4,
            p_z=(1 - lx - ly + lz) / 4,
            p_x=(1 + lx - ly - lz) / 4,
            p_y=(1 - lx + ly - lz) / 4,
        )

    def superoperator(self) -> np.ndarray:
        """4x4 matrix acting on row-major vectorized 2x2 operators."""
        return pauli_superoperator(self.weights)

    def choi(self) -> np.ndarray:
        return choi_matrix(self, 2)

    def __call__(self, rho) -> np.ndarray:
        return apply_channel(self, rho)


def pauli_superoperator(weights) -> np.ndarray:
    pi, px, py, pz = weights
    S = np.zeros((4, 4), dtype=complex)
    for p, s in ((pi, I2), (px, X), (py, Y), (pz, Z)):
        S += p * np.kron(s, s.conj())
    return S


def identity_channel() -> PauliChannel:
    return PauliChannel(1.0, 0.0, 0.0, 0.0)


def model_channels(epsilon: float) -> tuple[PauliChannel, PauliChannel]:
    """The two-step channel pair (Λ₁, Λ₂) mixing Z and X errors with strength ``epsilon``."""
    eps = float(epsilon)
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"epsilon must lie in [0, 0.5], got {epsilon}")
    lam1 = PauliChannel(1 - 2 * eps, eps, eps, 0.0)
    flip = 2 * eps * (1 - 2 * eps)
    lam2 = PauliChannel((1 - 2 * eps) ** 2 + 4 * eps**2, flip, flip, 0.0)
    return lam1, lam2


def validate_state(rho, tol: float = STATE_TOL) -> np.ndarray:
    rho = as_hermitian(rho)
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ContractViolation(f"state trace is {np.trace(rho).real!r}, expected 1")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise ContractViolation("state is not positive semidefinite")
    return rho


def apply_channel(ch: PauliChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ContractViolation(f"qubit channel needs a 2x2 operator, got shape {rho.shape}")
    return (
        ch.p_identity * rho
        + ch.p_z * (Z @ rho @ Z)
        + ch.p_x * (X @ rho @ X)
        + ch.p_y * (Y @ rho @ Y)
    )


def apply_channel_power(ch: PauliChannel, M, n: int) -> np.ndarray:
    """Apply ``ch`` independently to each of the ``n`` qubit factors of ``M``."""
    if int(n) != n or n < 1:
        raise ContractViolation(f"n must be a positive integer, got {n}")
    n = int(n)
    M = np.asarray(M, dtype=complex)
    dim = 2**n
    if M.shape != (dim, dim):
        raise ContractViolation(f"expected a {dim}x{dim} operator for n = {n}, got {M.shape}")
    S = ch.superoperator().reshape(2, 2, 2, 2)  # (out_row, out_col, in_row, in_col)
    T = M.reshape((2,) * (2 * n))
    for j in range(n):
        T = np.tensordot(S, T, axes=([2, 3], [j, n + j]))
        # tensordot puts the new (row, col) axes first; move them back into place.
        T = np.moveaxis(T, [0, 1], [j, n + j])
    return T.reshape(dim, dim)


def choi_matrix(channel: Callable[[np.ndarray], np.ndarray], dim_in: int) -> np.ndarray:
    """Unnormalised Choi matrix ``sum_ij |i><j| ⊗ channel(|i><j|)``."""
    blocks = []
    for i in range(dim_in):
        row = []
        for j in range(dim_in):
            E = np.zeros((dim_in, dim_in), dtype=complex)
            E[i, j] = 1.0
            row.append(np.asarray(channel(E), dtype=complex))
        blocks.append(row)
    return np.block(blocks)


def is_cptp(channel: Callable[[np.ndarray], np.ndarray], dim_in: int,
            psd_tol: float = CP_TOL, tp_tol: float = 1e-10) -> bool:
    C = choi_matrix(channel, dim_in)
    C = 0.5 * (C + C.conj().T)
    if np.linalg.eigvalsh(C)[0] < -psd_tol:
        return False
    d_out = C.shape[0] // dim_in
    # Trace preservation: tracing the output factor must give the identity.
    red = np.trace(C.reshape(dim_in, d_out, dim_in, d_out), axis1=1, axis2=3)
    return bool(np.max(np.abs(red - np.eye(dim_in))) <= tp_tol)


class Regime(str, enum.Enum):
    MARKOVIAN = "MARKOVIAN"
    WEAK = "WEAK"
    ESSENTIAL = "ESSENTIAL"


@dataclass(frozen=True)
class IntermediateMap:
    """The map Λ₂ ∘ Λ₁⁻¹, Pauli-diagonal with transfer eigenvalues ``(v_x, v_y, v_z)``."""

    transfer_eigenvalues: tuple[float, float, float]
    is_positive: bool
    is_cp: bool

    @property
    def regime(self) -> Regime:
        if self.is_cp:
            return Regime.MARKOVIAN
        if self.is_positive:
            return Regime.WEAK
        return Regime.ESSENTIAL

    def choi(self) -> np.ndarray:
        return choi_matrix(self, 2)

    def __call__(self, rho) -> np.ndarray:
        vx, vy, vz = self.transfer_eigenvalues
        w = ((1 + vx + vy + vz) / 4, (1 + vx - vy - vz) / 4,
             (1 - vx + vy - vz) / 4, (1 - vx - vy + vz) / 4)
        rho = np.asarray(rho, dtype=complex)
        return w[0] * rho + w[1] * (X @ rho @ X) + w[2] * (Y @ rho @ Y) + w[3] * (Z @ rho @ Z)


def intermediate_map(lam1: PauliChannel, lam2: PauliChannel) -> IntermediateMap:
    l1 = lam1.transfer_eigenvalues
    l2 = lam2.transfer_eigenvalues
    for i, v in enumerate(l1):
        if abs(v) <= SINGULAR_TOL:
            raise NonInvertible(i, v)
    v = tuple(float(b / a) for a, b in zip(l1, l2))
    positive = max(abs(x) for x in v) <= 1 + POSITIVITY_TOL
    partial = IntermediateMap(v, positive, False)
    choi_min = float(np.linalg.eigvalsh(partial.choi())[0])
    return IntermediateMap(v, positive, choi_min >= -CP_TOL)


def classify_regime(epsilon: float) -> Regime:
    lam1, lam2 = model_channels(epsilon)
    return intermediate_map(lam1, lam2).regime


def difference_operator(ch: PauliChannel, rho1, rho2, n: int) -> np.ndarray:
    """``ch^{⊗n}(rho2^{⊗n} - rho1^{⊗n})``."""
    rho1 = validate_state(rho1)
    rho2 = validate_state(rho2)
    D = tensor_power(rho2, n) - tensor_power(rho1, n)
    return apply_channel_power(ch, D, n)


def computational_pair() -> tuple[np.ndarray, np.ndarray]:
    """``(rho1, rho2) = (|1><1|, |0><0|)``."""
    return (np.diag([0.0, 1.0]).astype(complex), np.diag([1.0, 0.0]).astype(complex))
