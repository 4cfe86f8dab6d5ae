"""Random qubit state pairs.

Measures: Hilbert-Schmidt for mixed states (``G G^H / Tr`` with complex
Ginibre ``G``), Haar for pure states, and the first two columns of a Haar
unitary for orthogonal pairs. Pair ``k`` draws from its own seed stream
``(seed, k)``, so it does not depend on how many pairs are requested.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import projector


class EnsembleKind(str, enum.Enum):
    MIXED = "mixed"
    RANDOM_PURE = "pure"
    ORTHOGONAL_PURE = "ortho"

    @classmethod
    def parse(cls, value) -> "EnsembleKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for kind in cls:
            if text.lower() == kind.value or text.upper() == kind.name:
                return kind
        raise ValueError(f"unknown ensemble kind {value!r}; use mixed, pure or ortho")


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    n_pairs: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind.parse(self.kind))
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "n_pairs": self.n_pairs, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleSpec":
        return cls(EnsembleKind.parse(data["kind"]), int(data["n_pairs"]), int(data.get("seed", 0)))


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(ginibre(rng, dim, dim))
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def random_pure_state(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    v = ginibre(rng, dim, 1)[:, 0]
    return projector(v / np.linalg.norm(v))


def random_mixed_state(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    G = ginibre(rng, dim, dim)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def pair_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def sample_pair(kind: EnsembleKind, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    if kind is EnsembleKind.MIXED:
        return random_mixed_state(rng), random_mixed_state(rng)
    if kind is EnsembleKind.RANDOM_PURE:
        return random_pure_state(rng), random_pure_state(rng)
    U = haar_unitary(2, rng)
    return projector(U[:, 0]), projector(U[:, 1])


def sample_ensemble(spec: EnsembleSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    return [sample_pair(spec.kind, pair_rng(spec.seed, k)) for k in range(spec.n_pairs)]
