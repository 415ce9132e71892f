"""Normalized-Laplacian spectral clustering of the similarity graph."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .errors import EmptyClusterError
from .model import StackedObservations
from .subspace import SimilarityGraph, _fix_signs, signal_subspace, similarity


@dataclass(frozen=True)
class ScsConfig:
    """Tuning knobs of the SCS labelling stage."""

    restarts: int = 20
    max_iter: int = 300
    seed: int = 0
    row_normalize: bool = False
    zero_tol: float = 1e-9
    gap_threshold: float = 10.0
    max_repairs: int = 50


@dataclass(frozen=True, eq=False)
class NormalizedLaplacian:
    """``L = I - R^{-1} W`` together with the degrees used to build it.

    Isolated vertices (zero row sum) get a unit self-loop: their row of
    ``R^{-1} W`` becomes the indicator of the vertex itself, so each forms a
    singleton component.
    """

    L: np.ndarray
    degrees: np.ndarray
    isolated: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.L if dtype is None else self.L.astype(dtype)

    def symmetric(self) -> np.ndarray:
        """``R^{1/2} L R^{-1/2} = I - R^{-1/2} W R^{-1/2}`` (same spectrum as ``L``)."""
        s = np.sqrt(self.degrees)
        S = s[:, None] * self.L / s[None, :]
        return 0.5 * (S + S.T)


@dataclass(frozen=True, eq=False)
class SpectralEmbedding:
    coords: np.ndarray
    eigenvalues: np.ndarray
    next_eigenvalue: float = np.nan


@dataclass(frozen=True, eq=False)
class LabelAssignment:
    labels: np.ndarray
    K: int
    eigen_gap: float = np.nan
    inertia: float = np.nan
    diagnostics: dict = field(default_factory=dict)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)


def normalized_laplacian(W) -> NormalizedLaplacian:
    W = W.W if isinstance(W, SimilarityGraph) else np.asarray(W, dtype=float)
    deg = W.sum(axis=1)
    isolated = deg <= 0
    P = W / np.where(isolated, 1.0, deg)[:, None]
    if isolated.any():
        idx = np.flatnonzero(isolated)
        P[idx, :] = 0.0
        P[idx, idx] = 1.0
    L = np.eye(W.shape[0]) - P
    return NormalizedLaplacian(L, np.where(isolated, 1.0, deg), isolated)


def spectral_embed(lap: NormalizedLaplacian, K: int) -> SpectralEmbedding:
    """Eigenvectors of ``L`` for its ``K`` smallest eigenvalues, one row per vertex.

    Solved through the symmetric similar matrix and mapped back with
    ``R^{-1/2}``, so the spectrum is real and the solver is ``eigh``.
    """
    n = lap.L.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"K={K} must lie in [1, {n}]")
    top = min(K, n - 1)
    try:
        vals, U = scipy.linalg.eigh(lap.symmetric(), subset_by_index=[0, top])
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigen-solver did not converge: {exc}") from exc
    coords = U[:, :K] / np.sqrt(lap.degrees)[:, None]
    coords = _fix_signs(coords)
    nxt = float(vals[K]) if vals.size > K else np.nan
    return SpectralEmbedding(coords, vals[:K], nxt)


def _kmeanspp(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [int(rng.integers(n))]
    d2 = ((X - X[centers[0]]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        centers.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[centers].copy()


def kmeans(X, K: int, restarts: int = 20, seed: int = 0, max_iter: int = 300,
           max_repairs: int = 50, lloyd=None):
    """Best-of-``restarts`` Lloyd K-means with k-means++ seeding.

    Restart ``r`` draws its seeds from ``default_rng([seed, r])``.  The lowest
    inertia wins; equal inertia goes to the earliest restart.
    Returns ``(labels, centroids, inertia)``.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < K:
        raise EmptyClusterError(f"cannot form {K} clusters from {X.shape[0]} points")
    lloyd = lloyd or kernels.lloyd
    best = None
    for r in range(restarts):
        init = _kmeanspp(X, K, np.random.default_rng([seed, r]))
        labels, C, inertia, _, _, status = lloyd(X, init, max_iter, max_repairs)
        if status:
            continue
        if best is None or inertia < best[2]:
            best = (np.asarray(labels), np.asarray(C), float(inertia))
    if best is None:
        raise EmptyClusterError(f"every restart ended with an unrepairable empty cluster (K={K})")
    return best


def cluster(emb: SpectralEmbedding, K: int, restarts: int = 20, seed: int = 0,
            max_iter: int = 300, row_normalize: bool = False,
            max_repairs: int = 50) -> LabelAssignment:
    X = emb.coords
    if row_normalize:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        X = X / np.where(norms > 0, norms, 1.0)
    labels, _, inertia = kmeans(X, K, restarts, seed, max_iter, max_repairs)
    gap = emb.next_eigenvalue - emb.eigenvalues[-1]
    return LabelAssignment(labels, K, float(gap), inertia)


def scs_labels(Z: StackedObservations, K: int, n_d: int,
               cfg: ScsConfig = ScsConfig()) -> LabelAssignment:
    """Label samples by spectral clustering on the ``K*N_d`` signal subspace."""
    Zm = Z.Z if isinstance(Z, StackedObservations) else np.asarray(Z, dtype=float)
    r = K * n_d
    if Zm.shape[1] < r:
        raise ValueError(f"N = {Zm.shape[1]} samples < K*N_d = {r}")
    sub = signal_subspace(Zm, r, cfg.gap_threshold)
    lap = normalized_laplacian(similarity(sub))
    emb = spectral_embed(lap, K)
    out = cluster(emb, K, cfg.restarts, cfg.seed, cfg.max_iter, cfg.row_normalize,
                  cfg.max_repairs)
    # Gershgorin bound on the largest Laplacian eigenvalue
    lam_max = float(np.max(np.abs(lap.L).sum(axis=1))) or 1.0
    small = np.append(emb.eigenvalues, emb.next_eigenvalue)
    diag = {
        "singular_values": sub.singular_values.tolist(),
        "subspace_gap_ratio": sub.gap_ratio,
        "laplacian_eigenvalues": [float(v) for v in small if np.isfinite(v)],
        "near_zero_eigenvalues": int(np.sum(small <= cfg.zero_tol * lam_max)),
        "isolated_vertices": np.flatnonzero(lap.isolated).tolist(),
        "cluster_sizes": np.bincount(out.labels, minlength=K).tolist(),
        "kmeans_backend": kernels.BACKEND,
    }
    return LabelAssignment(out.labels, K, out.eigen_gap, out.inertia, diag)
