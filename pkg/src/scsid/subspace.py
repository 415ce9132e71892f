"""Right-singular signal subspace of the stacked observations and the
similarity graph built from it."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import StackedObservations

DEFAULT_GAP_THRESHOLD = 10.0


class RankDeficiencyWarning(UserWarning):
    pass


def _fix_signs(M: np.ndarray) -> np.ndarray:
    """Flip columns so the first largest-magnitude entry of each is >= 0."""
    idx = np.argmax(np.abs(M), axis=0)
    signs = np.where(M[idx, np.arange(M.shape[1])] < 0, -1.0, 1.0)
    return M * signs


@dataclass(frozen=True, eq=False)
class SignalSubspace:
    V: np.ndarray
    singular_values: np.ndarray
    gap_ratio: float

    @property
    def rank(self) -> int:
        return self.V.shape[1]


@dataclass(frozen=True, eq=False)
class SimilarityGraph:
    W: np.ndarray

    @property
    def n(self) -> int:
        return self.W.shape[0]


def signal_subspace(Z, r: int, gap_threshold: float = DEFAULT_GAP_THRESHOLD) -> SignalSubspace:
    """Top-``r`` right singular vectors of ``Z`` as an ``N x r`` matrix.

    ``gap_ratio`` is ``s_r / s_{r+1}`` (``inf`` when ``r`` exhausts the
    spectrum or ``s_{r+1}`` vanishes).  A ratio below ``gap_threshold`` only
    triggers a :class:`RankDeficiencyWarning`; the rank is never adapted.
    """
    Z = Z.Z if isinstance(Z, StackedObservations) else np.asarray(Z, dtype=float)
    if not 1 <= r <= min(Z.shape):
        raise ValueError(f"rank {r} outside [1, {min(Z.shape)}] for Z of shape {Z.shape}")
    # LAPACK orders equal singular values stably; the sign fix makes V unique otherwise
    _, s, Vt = np.linalg.svd(Z, full_matrices=False)
    V = _fix_signs(Vt[:r].T)
    if r < s.size and s[r] > 0:
        gap = float(s[r - 1] / s[r])
    else:
        gap = np.inf
    if gap < gap_threshold:
        warnings.warn(
            f"weak signal subspace: s_r/s_(r+1) = {gap:.3g} < {gap_threshold}",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return SignalSubspace(V, s, gap)


def similarity(sub: SignalSubspace) -> SimilarityGraph:
    """Edge weights ``W = |V V^T|``."""
    V = sub.V if isinstance(sub, SignalSubspace) else np.asarray(sub)
    W = np.abs(V @ V.T)
    # enforce exact symmetry; the product is symmetric only up to round-off
    W = 0.5 * (W + W.T)
    return SimilarityGraph(W)
