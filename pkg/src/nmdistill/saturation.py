"""When can a coarse-graining map saturate the contractivity bound exactly?

For traceless Hermitian ``A`` and ``B`` with ``Δ = A - B`` the question reduces
to whether some ``0 ≼ E₀ ≼ P₀`` (``P₀`` the kernel projector of ``Δ``) makes
``Tr((P₊ + E₀) B)`` non-negative. The objective is linear over that
spectrahedron, so its maximum is the positive part of ``B`` compressed to the
kernel, and no semidefinite solver is required.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .linalg import (
    ZERO_TOL,
    ContractViolation,
    SpectralSplit,
    as_hermitian,
    spectral_split,
    trace_norm,
)

TRACELESS_TOL = 1e-10
FEASIBLE_TOL = 1e-10
EQUALITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SaturationReport:
    feasible: bool
    margin: float
    witness_e0: Optional[np.ndarray]
    split: SpectralSplit
    near_degenerate: bool = False

    @property
    def effect(self) -> Optional[np.ndarray]:
        """``P₊ + E₀``, the effect of the first outcome of the witness map."""
        if self.witness_e0 is None:
            return None
        return self.split.p_plus + self.witness_e0

    def to_dict(self) -> dict:
        from .io import matrix_to_json

        return {
            "feasible": self.feasible,
            "margin": self.margin,
            "near_degenerate": self.near_degenerate,
            "eigenvalues": [float(v) for v in self.split.eigenvalues],
            "rank_plus": self.split.rank_plus,
            "rank_minus": self.split.rank_minus,
            "rank_zero": self.split.rank_zero,
            "witness_e0": None if self.witness_e0 is None else matrix_to_json(self.witness_e0),
        }


def _check_traceless(M: np.ndarray, name: str) -> None:
    tr = np.trace(M)
    if abs(tr) > TRACELESS_TOL:
        raise ContractViolation(f"{name} must be traceless, |Tr {name}| = {abs(tr):.3e}")


def saturation_feasible(A, B, zero_tol: float = ZERO_TOL) -> SaturationReport:
    """Decide whether some CPTP map attains ``‖λ(A)‖₁ − ‖λ(B)‖₁ = ‖λ(A−B)‖₁ = ‖A−B‖₁``."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ContractViolation(f"shape mismatch {A.shape} vs {B.shape}")
    _check_traceless(A, "A")
    _check_traceless(B, "B")

    split = spectral_split(A - B, zero_tol)
    base = float(np.trace(split.p_plus @ B).real)

    # Maximise Tr(E₀ B) over 0 ≼ E₀ ≼ P₀: project onto positive eigenvectors of P₀ B P₀ inside ker Δ.
    w_all, Q_all = np.linalg.eigh(split.p_zero)
    kernel = Q_all[:, w_all > 0.5]
    e0 = np.zeros_like(A)
    gain = 0.0
    if kernel.shape[1]:
        Bk = kernel.conj().T @ B @ kernel
        wk, Qk = np.linalg.eigh(0.5 * (Bk + Bk.conj().T))
        pos = wk > zero_tol
        gain = float(np.sum(wk[pos]))
        vecs = kernel @ Qk[:, pos]
        e0 = vecs @ vecs.conj().T

    margin = base + gain
    feasible = margin >= -FEASIBLE_TOL
    return SaturationReport(
        feasible=feasible,
        margin=margin,
        witness_e0=e0 if feasible else None,
        split=split,
        near_degenerate=split.near_degenerate,
    )


@dataclass(frozen=True, eq=False)
class MeasurementMap:
    """Measure-and-prepare channel ``X -> Σ_k Tr(F_k X) |k><k|`` on a ``dim_out``-level output."""

    effects: tuple
    dim_out: int = 2

    def __post_init__(self):
        if len(self.effects) > self.dim_out:
            raise ContractViolation("more outcomes than output levels")

    @property
    def dim_in(self) -> int:
        return self.effects[0].shape[0]

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        out = np.zeros((self.dim_out, self.dim_out), dtype=complex)
        for k, F in enumerate(self.effects):
            out[k, k] = np.trace(F @ X)
        return out

    def is_cptp(self, tol: float = 1e-10) -> bool:
        total = sum(self.effects)
        if np.max(np.abs(total - np.eye(self.dim_in))) > tol:
            return False
        return all(np.linalg.eigvalsh(0.5 * (F + F.conj().T))[0] >= -tol for F in self.effects)


def construct_saturating_map(A, B, report: SaturationReport, d: int = 2) -> MeasurementMap:
    """Two-outcome measurement with effects ``P₊ + E₀`` and ``I − P₊ − E₀``."""
    if not report.feasible:
        raise ContractViolation("saturation is infeasible for this pair; no witness map exists")
    if d < 2:
        raise ContractViolation("output dimension must be at least 2")
    F0 = report.effect
    F1 = np.eye(F0.shape[0], dtype=complex) - F0
    return MeasurementMap((F0, F1), dim_out=d)


def saturation_gaps(channel: Callable, A, B) -> tuple[float, float]:
    """Return the two gaps of the saturation chain for a given map.

    First entry: ``‖λ(A−B)‖₁ − (‖λ(A)‖₁ − ‖λ(B)‖₁)``; second: ``‖A−B‖₁ − ‖λ(A−B)‖₁``.
    Both are zero exactly when the map saturates.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    la, lb, ld = (np.asarray(channel(M)) for M in (A, B, A - B))
    herm = lambda M: 0.5 * (M + M.conj().T)  # noqa: E731
    na, nb, nd = trace_norm(herm(la)), trace_norm(herm(lb)), trace_norm(herm(ld))
    return nd - (na - nb), trace_norm(A - B) - nd


def common_eigenbasis(A, B) -> np.ndarray:
    """Eigenvectors of a generic combination of two commuting Hermitian matrices."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    # Irrational weight keeps accidental degeneracies of A + cB unlikely.
    _, Q = np.linalg.eigh(A + (np.sqrt(2) + np.pi / 7) * B)
    return Q


def triangle_equality_spectral(A, B, tol: float = EQUALITY_TOL) -> bool:
    """Commuting with sign-aligned eigenvalues on a common eigenbasis."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    comm = A @ B - B @ A
    if np.max(np.abs(comm), initial=0.0) > tol:
        return False
    Q = common_eigenbasis(A, B)
    va = np.einsum("ij,ik,kj->j", Q.conj(), A, Q).real
    vb = np.einsum("ij,ik,kj->j", Q.conj(), B, Q).real
    return bool(np.all(va * vb >= -tol))


def triangle_equality_holds(A, B, tol: float = EQUALITY_TOL) -> bool:
    """Whether ``‖A+B‖₁ = ‖A‖₁ + ‖B‖₁``.

    The norm comparison decides; the spectral characterization is evaluated
    alongside and a warning is emitted if the two disagree.
    """
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ContractViolation(f"shape mismatch {A.shape} vs {B.shape}")
    by_norm = abs(trace_norm(A) + trace_norm(B) - trace_norm(A + B)) <= tol
    by_spectrum = triangle_equality_spectral(A, B, tol)
    if by_norm != by_spectrum:
        warnings.warn("norm and spectral triangle-equality tests disagree; using the norm test",
                      RuntimeWarning, stacklevel=2)
    return by_norm


@dataclass(frozen=True)
class SupportCheck:
    by_norm: bool
    by_projectors: bool
    ambiguous: bool

    def __bool__(self) -> bool:
        return self.by_norm


def orthogonal_support_check(channel: Callable, delta, zero_tol: float = ZERO_TOL,
                             tol: float = EQUALITY_TOL) -> SupportCheck:
    delta = as_hermitian(delta)
    split = spectral_split(delta, zero_tol)
    herm = lambda M: 0.5 * (M + M.conj().T)  # noqa: E731
    out = herm(np.asarray(channel(delta), dtype=complex))
    by_norm = abs(trace_norm(delta) - trace_norm(out)) <= tol

    out_split = spectral_split(out, zero_tol)
    img_plus = herm(np.asarray(channel(split.delta_plus), dtype=complex))
    img_minus = herm(np.asarray(channel(split.delta_minus), dtype=complex))
    pp, pm = out_split.p_plus, out_split.p_minus
    residuals: Sequence[float] = (
        np.abs(pp @ img_plus @ pp - img_plus).max(),
        np.abs(pm @ img_minus @ pm - img_minus).max(),
        np.abs(pp @ img_minus @ pp).max(),
        np.abs(pm @ img_plus @ pm).max(),
    )
    by_projectors = max(residuals) <= tol
    ambiguous = split.near_degenerate or out_split.near_degenerate
    return SupportCheck(by_norm, by_projectors, ambiguous)


def orthogonal_support_condition(channel: Callable, delta, zero_tol: float = ZERO_TOL,
                                 tol: float = EQUALITY_TOL) -> bool:
    """Whether ``channel`` preserves the trace norm of ``delta``.

    Decided by comparing norms. The projector identities on the supports of the
    image's positive and negative parts are also evaluated; when they disagree
    with the norm test and the spectra are not near-degenerate a warning is
    raised, since the two are equivalent in exact arithmetic.
    """
    check = orthogonal_support_check(channel, delta, zero_tol, tol)
    if check.by_norm != check.by_projectors and not check.ambiguous:
        warnings.warn("norm and projector support tests disagree; using the norm test",
                      RuntimeWarning, stacklevel=2)
    return check.by_norm
