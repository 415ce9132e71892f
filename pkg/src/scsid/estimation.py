"""Per-cluster total least squares and the full SCS identification."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .clustering import LabelAssignment, ScsConfig, scs_labels
from .errors import InsufficientSamplesError, ScsError, UnidentifiableBlockError
from .model import Dataset, ModelSpec, stack

COND_THRESHOLD = 1e8
MAX_ALIGN_K = 8


@dataclass(frozen=True, eq=False)
class TlsFit:
    theta: np.ndarray
    D: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class ModelEstimate:
    thetas: tuple
    D_hat: np.ndarray
    labels: LabelAssignment
    residuals: tuple

    @property
    def K(self) -> int:
        return len(self.thetas)


def noise_ratio_of(spec: ModelSpec) -> Optional[float]:
    """``sigma_w^2 / sigma_e^2``, or None when either variance is zero."""
    if spec.sigma_e2 > 0 and spec.sigma_w2 > 0:
        return spec.sigma_w2 / spec.sigma_e2
    return None


def tls_submodel(Zi, n_d: int, noise_ratio: Optional[float] = None,
                 cond_threshold: float = COND_THRESHOLD, cluster: int = 0) -> TlsFit:
    """Errors-in-variables fit of ``[x; y] = [I; Theta] d`` on one cluster.

    The rank-``N_d`` truncated SVD ``U1 S1 V1^T`` of the cluster's data is split
    into input rows ``Ux`` and output rows ``Uy``; then ``Theta = Uy Ux^{-1}`` and
    ``D = Ux S1 V1^T``.  With a known ``noise_ratio = sigma_w^2/sigma_e^2`` the
    output rows are scaled to the input noise level before the SVD and the
    estimate is scaled back.
    """
    Zi = np.asarray(Zi, dtype=float)
    n_i = Zi.shape[1]
    if n_i < n_d:
        raise InsufficientSamplesError(
            f"cluster {cluster + 1} has {n_i} samples, fewer than N_d={n_d}"
        )
    scale = 1.0
    if noise_ratio is not None:
        if not (noise_ratio > 0 and math.isfinite(noise_ratio)):
            raise ValueError(f"noise_ratio must be positive and finite, got {noise_ratio}")
        scale = math.sqrt(noise_ratio)
    Zw = Zi.copy()
    if scale != 1.0:
        Zw[n_d:] /= scale
    U, s, Vt = np.linalg.svd(Zw, full_matrices=False)
    Ux, Uy = U[:n_d, :n_d], U[n_d:, :n_d]
    cond = np.linalg.cond(Ux)
    if not cond < cond_threshold:
        raise UnidentifiableBlockError(cluster, cond)
    theta = scale * np.linalg.solve(Ux.T, Uy.T).T
    D = (Ux * s[:n_d]) @ Vt[:n_d]
    residual = float(np.sum(s[n_d:] ** 2))
    return TlsFit(theta, D, residual)


def identify(ds: Dataset, K: int, n_d: int, cfg: ScsConfig = ScsConfig(),
             noise_ratio: Optional[float] = None,
             labels: Optional[np.ndarray] = None) -> ModelEstimate:
    """SCS identification: label the samples, then fit each cluster by TLS.

    Passing ``labels`` skips the clustering stage (used for the clairvoyant
    reference).  A failing cluster aborts the whole fit; the raised error
    carries the label assignment in its ``assignment`` attribute.
    """
    Z = stack(ds)
    if Z.n < K * n_d:
        raise InsufficientSamplesError(f"N = {Z.n} samples < K*N_d = {K * n_d}")
    if labels is None:
        assignment = scs_labels(Z, K, n_d, cfg)
    else:
        assignment = LabelAssignment(np.asarray(labels, dtype=np.int64), K)
    D_hat = np.empty((n_d, Z.n))
    thetas, residuals = [], []
    for k in range(K):
        idx = assignment.labels == k
        try:
            fit = tls_submodel(Z.Z[:, idx], n_d, noise_ratio, cluster=k)
        except ScsError as exc:
            exc.assignment = assignment
            raise
        thetas.append(fit.theta)
        residuals.append(fit.residual)
        D_hat[:, idx] = fit.D
    return ModelEstimate(tuple(thetas), D_hat, assignment, tuple(residuals))


def clairvoyant_ml(ds: Dataset, spec: ModelSpec) -> ModelEstimate:
    """TLS with the true labels and the true noise ratio."""
    if ds.labels is None:
        raise ValueError("clairvoyant ML needs the true labels")
    return identify(ds, spec.K, spec.n_d, noise_ratio=noise_ratio_of(spec), labels=ds.labels)


def align_to_truth(est: ModelEstimate, truth) -> tuple:
    """Match estimated submodels to true ones.

    ``truth`` is a :class:`ModelSpec` or a sequence of matrices.  Returns
    ``(perm, aligned)`` where ``aligned.thetas[i] = est.thetas[perm[i]]`` and
    ``perm`` minimizes the total squared Frobenius error over all ``K!``
    permutations (first in lexicographic order on ties).  Labels are
    relabelled accordingly.
    """
    thetas = truth.thetas if isinstance(truth, ModelSpec) else tuple(truth)
    K = len(thetas)
    if est.K != K:
        raise ValueError(f"estimate has {est.K} submodels, truth has {K}")
    if K > MAX_ALIGN_K:
        raise ValueError(f"exhaustive alignment is limited to K <= {MAX_ALIGN_K}")
    cost = np.array([[np.sum((est.thetas[j] - thetas[i]) ** 2) for j in range(K)]
                     for i in range(K)])
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(K)):
        c = sum(cost[i, perm[i]] for i in range(K))
        if c < best_cost:
            best, best_cost = perm, c
    inv = np.argsort(best)
    labels = replace(est.labels, labels=inv[est.labels.labels])
    aligned = ModelEstimate(
        tuple(est.thetas[j] for j in best),
        est.D_hat,
        labels,
        tuple(est.residuals[j] for j in best),
    )
    return best, aligned


def misclassification(labels, truth_labels) -> float:
    return float(np.mean(np.asarray(labels) != np.asarray(truth_labels)))
