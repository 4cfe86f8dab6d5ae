"""Dense linear algebra shared by the channel, distillation and saturation code.

All operators are plain ``numpy`` arrays. Functions that require Hermitian
input check it and raise :class:`ContractViolation` otherwise.

Generator basis
---------------
A real vector ``theta`` of length ``N**2`` maps to a Hermitian ``H`` as::

    theta[:N]                    -> H[p, p]
    theta[N:N + K]               -> Re H[p, q],  p < q
    theta[N + K:]                -> Im H[p, q],  p < q

with ``K = N(N-1)/2`` and the ``(p, q)`` pairs enumerated in row-major order
(``numpy.triu_indices(N, 1)``). ``H[q, p]`` is the complex conjugate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
ZERO_TOL = 1e-9


class ContractViolation(ValueError):
    """An input broke a documented precondition."""


def is_hermitian(M: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    return bool(np.max(np.abs(M - M.conj().T), initial=0.0) <= tol * scale)


def as_hermitian(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``M`` as a complex square array, raising if it is not Hermitian."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ContractViolation(f"expected a non-empty square matrix, got shape {M.shape}")
    if not is_hermitian(M, tol):
        err = np.max(np.abs(M - M.conj().T))
        raise ContractViolation(f"matrix is not Hermitian (max |M - M^H| = {err:.3e})")
    return M


def trace_norm(M) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    M = as_hermitian(M)
    return float(np.sum(np.abs(np.linalg.eigvalsh(M))))


def trace_norm_2x2(M: np.ndarray) -> np.ndarray:
    """Closed-form trace norm for a stack of 2x2 Hermitian matrices (no checks)."""
    a = M[..., 0, 0].real
    c = M[..., 1, 1].real
    b = M[..., 0, 1]
    radius = np.sqrt(0.25 * (a - c) ** 2 + np.abs(b) ** 2)
    return np.maximum(np.abs(a + c), 2.0 * radius)


def smoothed_abs_sum(eigenvalues: np.ndarray, mu: float) -> np.ndarray:
    """``Σ sqrt(v² + μ²)`` over the last axis; the trace norm at ``μ = 0``."""
    return np.sqrt(eigenvalues**2 + mu**2).sum(-1)


def smoothed_trace_norm_2x2(M: np.ndarray, mu: float) -> np.ndarray:
    """Smooth surrogate of :func:`trace_norm_2x2` with the kinks at zero eigenvalues rounded off."""
    a = M[..., 0, 0].real
    c = M[..., 1, 1].real
    b = M[..., 0, 1]
    radius = np.sqrt(0.25 * (a - c) ** 2 + np.abs(b) ** 2)
    mid = 0.5 * (a + c)
    return np.sqrt((mid + radius) ** 2 + mu**2) + np.sqrt((mid - radius) ** 2 + mu**2)


@dataclass(frozen=True)
class SpectralSplit:
    """Jordan decomposition ``M = delta_plus - delta_minus`` with its projectors."""

    delta_plus: np.ndarray
    delta_minus: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    p_zero: np.ndarray
    eigenvalues: np.ndarray  # descending
    zero_tol: float = ZERO_TOL

    @property
    def rank_plus(self) -> int:
        return int(np.sum(self.eigenvalues > self.zero_tol))

    @property
    def rank_minus(self) -> int:
        return int(np.sum(self.eigenvalues < -self.zero_tol))

    @property
    def rank_zero(self) -> int:
        return len(self.eigenvalues) - self.rank_plus - self.rank_minus

    @property
    def near_degenerate(self) -> bool:
        """True when some eigenvalue sits close to the kernel threshold."""
        w = np.abs(self.eigenvalues)
        return bool(np.any((w > 0.1 * self.zero_tol) & (w < 10.0 * self.zero_tol)))


def spectral_split(M, zero_tol: float = ZERO_TOL) -> SpectralSplit:
    """Split a Hermitian matrix into positive, negative and kernel parts.

    Eigenvalues with ``|v| <= zero_tol`` are assigned to the kernel.
    """
    if zero_tol <= 0:
        raise ContractViolation("zero_tol must be positive")
    M = as_hermitian(M)
    w, Q = np.linalg.eigh(M)
    w, Q = w[::-1], Q[:, ::-1]
    pos = w > zero_tol
    neg = w < -zero_tol
    zero = ~(pos | neg)

    def proj(mask):
        Qm = Q[:, mask]
        return Qm @ Qm.conj().T

    def part(mask, vals):
        Qm = Q[:, mask]
        return (Qm * vals[mask]) @ Qm.conj().T

    return SpectralSplit(
        delta_plus=part(pos, w),
        delta_minus=part(neg, -w),
        p_plus=proj(pos),
        p_minus=proj(neg),
        p_zero=proj(zero),
        eigenvalues=w.copy(),
        zero_tol=zero_tol,
    )


def positive_part(M, zero_tol: float = ZERO_TOL) -> np.ndarray:
    return spectral_split(M, zero_tol).delta_plus


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def tensor_power(M, n: int) -> np.ndarray:
    """``M ⊗ M ⊗ ... ⊗ M`` with ``n`` factors."""
    if int(n) != n or n < 1:
        raise ContractViolation(f"tensor power needs n >= 1, got {n}")
    M = np.asarray(M)
    out = M
    for _ in range(int(n) - 1):
        out = np.kron(out, M)
    return out


def partial_trace(M, factor_dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every tensor factor of ``M`` not listed in ``keep``.

    ``factor_dims`` gives the local dimensions in Kronecker order; ``keep`` is
    an index or collection of indices into it. Kept factors stay in their
    original order.
    """
    M = np.asarray(M)
    dims = [int(d) for d in factor_dims]
    if any(d < 1 for d in dims):
        raise ContractViolation(f"factor dimensions must be positive, got {dims}")
    total = int(np.prod(dims))
    if M.ndim != 2 or M.shape != (total, total):
        raise ContractViolation(f"matrix shape {M.shape} does not match factor dims {dims}")
    if np.isscalar(keep) or isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise ContractViolation(f"invalid keep indices {keep} for {len(dims)} factors")

    k = len(dims)
    T = M.reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep]
    # Trace pairs from the highest index down so earlier axes keep their position.
    for i in sorted(traced, reverse=True):
        cur = T.ndim // 2
        T = np.trace(T, axis1=i, axis2=i + cur)
    kd = int(np.prod([dims[i] for i in keep]))
    return T.reshape(kd, kd)


def hermitian_from_generator(theta, N: int) -> np.ndarray:
    """Hermitian matrix built from ``theta`` in the fixed generator basis."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N * N,):
        raise ContractViolation(f"generator needs {N * N} parameters, got {theta.size}")
    p, q = np.triu_indices(N, 1)
    K = len(p)
    H = np.zeros((N, N), dtype=complex)
    H[np.arange(N), np.arange(N)] = theta[:N]
    off = theta[N:N + K] + 1j * theta[N + K:]
    H[p, q] = off
    H[q, p] = off.conj()
    return H


def generator_from_hermitian(H) -> np.ndarray:
    """Inverse of :func:`hermitian_from_generator`."""
    H = as_hermitian(H, tol=1e-9)
    N = H.shape[0]
    p, q = np.triu_indices(N, 1)
    return np.concatenate([H.diagonal().real, H[p, q].real, H[p, q].imag])


def expm_hermitian(H: np.ndarray, t: complex = 1j) -> np.ndarray:
    """``exp(t H)`` via the eigendecomposition of Hermitian ``H``."""
    w, Q = np.linalg.eigh(H)
    return (Q * np.exp(t * w)) @ Q.conj().T


def unitary_from_generator(theta, N: int) -> np.ndarray:
    """``exp(i H(theta))`` for the generator basis documented above."""
    return expm_hermitian(hermitian_from_generator(theta, N))


def generator_from_unitary(U) -> np.ndarray:
    """A parameter vector whose exponential reproduces the unitary ``U``.

    Uses the complex Schur form, which is diagonal for normal matrices, so the
    eigenvectors stay orthonormal even for degenerate spectra.
    """
    from scipy.linalg import schur

    U = np.asarray(U, dtype=complex)
    T, Zs = schur(U, output="complex")
    phases = np.angle(np.diag(T))
    H = (Zs * phases) @ Zs.conj().T
    return generator_from_hermitian(0.5 * (H + H.conj().T))


def is_unitary(U, tol: float = 1e-10) -> bool:
    U = np.asarray(U)
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[1])), initial=0.0) <= tol)


def is_psd(M, tol: float = 1e-10) -> bool:
    M = np.asarray(M, dtype=complex)
    M = 0.5 * (M + M.conj().T)
    return bool(np.linalg.eigvalsh(M)[0] >= -tol)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)
