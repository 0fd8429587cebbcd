"""Entanglement diagnostics and the conditional-fringe witness.

Density operators act on C^D (x) C^D with basis (l1, l2) in row-major order
over ``slit_indices(D)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .states import CorrelatedMixture, QuditPureState


@dataclass(eq=False)
class DensityOperator:
    dimension: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.dimension**2
        if m.shape != (n, n):
            raise ValueError(f"density matrix shape {m.shape} does not match D={self.dimension}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > 1e-10 * scale:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {tr!r} != 1")
        if np.min(np.linalg.eigvalsh(m)) < -1e-9:
            raise ValueError("density matrix has a negative eigenvalue")
        self.matrix = m


def to_density(state) -> DensityOperator:
    if isinstance(state, DensityOperator):
        return state
    if isinstance(state, QuditPureState):
        v = state.amplitudes.reshape(-1)
        return DensityOperator(state.dimension, np.outer(v, v.conj()))
    if isinstance(state, CorrelatedMixture):
        return DensityOperator(state.dimension, np.diag(state.pair_probabilities().reshape(-1)).astype(complex))
    raise TypeError(f"cannot build a density operator from {type(state).__name__}")


def mix(weights: Sequence[float], states: Sequence) -> DensityOperator:
    """Convex combination of states (pure, mixtures or density operators)."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("mixing weights must be nonnegative and sum to 1")
    rhos = [to_density(s) for s in states]
    D = rhos[0].dimension
    if any(r.dimension != D for r in rhos):
        raise ValueError("cannot mix states of different dimension")
    return DensityOperator(D, sum(w * r.matrix for w, r in zip(weights, rhos)))


def schmidt_spectrum(state: QuditPureState) -> np.ndarray:
    return np.linalg.svd(state.amplitudes, compute_uv=False)


def entanglement_entropy(state: QuditPureState) -> float:
    """Von Neumann entropy of either reduced state, in bits."""
    if not state.is_normalized:
        raise ValueError(f"entropy needs a normalized state (norm {state.norm!r})")
    p = schmidt_spectrum(state) ** 2
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def partial_transpose(rho: DensityOperator) -> np.ndarray:
    """Transpose over photon 2."""
    D = rho.dimension
    m = rho.matrix.reshape(D, D, D, D)
    return m.transpose(0, 3, 2, 1).reshape(D * D, D * D)


NEG_EIG_TOL = 1e-12


def negativity(rho) -> float:
    """Sum of |negative eigenvalues| of the partial transpose.

    Eigenvalues above -NEG_EIG_TOL count as round-off, so separable states give 0.
    """
    rho = to_density(rho)
    ev = np.linalg.eigvalsh(partial_transpose(rho))
    return float(-np.sum(ev[ev < -NEG_EIG_TOL])) + 0.0


def purity(rho) -> float:
    m = to_density(rho).matrix
    return float(np.real(np.trace(m @ m)))


@dataclass(frozen=True)
class WitnessResult:
    score: float
    visibilities: tuple[float, ...]
    verdict: str

    @property
    def entangled(self) -> bool:
        return self.verdict == "entangled-signature"


def conditionality_witness(slices: Sequence, score_threshold: float = 0.05, visibility_threshold: float = 0.1) -> WitnessResult:
    """Flag conditional fringes across slices taken at different x2.

    The score is the largest sup-norm distance between unit-normalized slices.
    Both a large score and visible fringes on every slice are required.
    """
    if len(slices) < 2:
        raise ValueError("need at least two fringe slices")
    grid = np.asarray(slices[0].x1)
    for s in slices[1:]:
        if s.x1.shape != grid.shape or not np.array_equal(s.x1, grid):
            raise ValueError("fringe slices must share the same x1 grid")
    if len({s.x2 for s in slices}) != len(slices):
        raise ValueError("fringe slices must be taken at distinct x2")
    normed = [s.normalized() for s in slices]
    score = 0.0
    for i in range(len(normed)):
        for j in range(i + 1, len(normed)):
            score = max(score, float(np.max(np.abs(normed[i] - normed[j]))))
    vis = tuple(float(s.visibility) for s in slices)
    ok = score > score_threshold and all(v > visibility_threshold for v in vis)
    return WitnessResult(score, vis, "entangled-signature" if ok else "no-signature")
