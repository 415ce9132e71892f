"""Noiseless identifiability test: each submodel's input graph must be connected."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesignError

DEFAULT_TOL = 1e-8
LAPLACIAN_VARIANT = "unnormalized"


@dataclass(frozen=True)
class SubmodelReport:
    zero_multiplicity: int
    smallest_eigenvalues: tuple
    dropped_zero_columns: int


@dataclass(frozen=True)
class IdentifiabilityReport:
    per_submodel: tuple
    identifiable: bool
    tol: float
    laplacian: str = LAPLACIAN_VARIANT

    def to_dict(self) -> dict:
        return {
            "identifiable": self.identifiable,
            "tol": self.tol,
            "laplacian": self.laplacian,
            "per_submodel": [
                {
                    "submodel": i + 1,
                    "zero_multiplicity": r.zero_multiplicity,
                    "smallest_eigenvalues": list(r.smallest_eigenvalues),
                    "dropped_zero_columns": r.dropped_zero_columns,
                }
                for i, r in enumerate(self.per_submodel)
            ],
        }


def _nonzero_columns(D):
    D = np.atleast_2d(np.asarray(D, dtype=float))
    keep = np.any(D != 0, axis=0)
    return D[:, keep], int((~keep).sum())


def input_graph_weights(D) -> np.ndarray:
    """``|D^T (D D^T)^{-1} D|`` after dropping all-zero columns of ``D``."""
    D, _ = _nonzero_columns(D)
    G = D @ D.T
    if D.shape[1] < D.shape[0] or np.linalg.matrix_rank(G) < D.shape[0]:
        raise DegenerateDesignError(
            f"input block of shape {D.shape} does not have full row rank"
        )
    P = D.T @ np.linalg.solve(G, D)
    W = np.abs(P)
    return 0.5 * (W + W.T)


def laplacian_spectrum(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    L = np.diag(W.sum(axis=1)) - W
    return np.linalg.eigvalsh(L)


def _count_zeros(ev, W, tol):
    # scale by max(lambda_max, max weight) so an edgeless graph counts every vertex
    scale = max(ev[-1], float(np.max(W)))
    return int(np.sum(ev <= tol * scale))


def zero_multiplicity(W, tol: float = DEFAULT_TOL) -> int:
    """Number of Laplacian eigenvalues at or below ``tol * max(lambda_max, max W)``."""
    W = np.asarray(W, dtype=float)
    return _count_zeros(laplacian_spectrum(W), W, tol)


def check_identifiable(blocks, tol: float = DEFAULT_TOL) -> IdentifiabilityReport:
    """Run the connectivity test on every submodel's input block ``D_i``."""
    reports = []
    for D in blocks:
        Dn, dropped = _nonzero_columns(D)
        W = input_graph_weights(Dn)
        ev = laplacian_spectrum(W)
        mult = _count_zeros(ev, W, tol)
        reports.append(SubmodelReport(mult, tuple(float(v) for v in ev[:3]), dropped))
    return IdentifiabilityReport(
        tuple(reports), all(r.zero_multiplicity == 1 for r in reports), tol
    )


def blocks_from_labels(D, labels, K=None):
    D = np.atleast_2d(np.asarray(D, dtype=float))
    labels = np.asarray(labels)
    K = int(labels.max()) + 1 if K is None else K
    return [D[:, labels == k] for k in range(K)]
