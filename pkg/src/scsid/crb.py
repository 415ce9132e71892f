"""Clairvoyant Cramer-Rao bounds (labels known) for one linear submodel.

Parameters are ordered ``[vec(Theta^T); d_1; ...; d_N]``: the rows of
``Theta`` stacked, then the noiseless inputs.  For ``y = Theta d + w`` the
regressor is ``H(d) = I_{N_y} (x) d^T`` so that ``Theta d = H(d) vec(Theta^T)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateDesignError, OutOfScopeError

COND_GUARD = 1e12
SELF_CHECK_RTOL = 1e-6


def regressor(d, n_y: int) -> np.ndarray:
    """``H(d) = I (x) d^T``, shape ``N_y x N_y*N_d``."""
    return np.kron(np.eye(n_y), np.atleast_1d(d)[None, :])


def entry_names(n_y: int, n_d: int, prefix: str = "theta") -> list[str]:
    return [f"{prefix}[{j},{c}]" for j in range(n_y) for c in range(n_d)]


def _spd_inverse(M: np.ndarray, what: str) -> np.ndarray:
    M = 0.5 * (M + M.T)
    ev = np.linalg.eigvalsh(M)
    if ev[0] <= 0 or ev[-1] / ev[0] > COND_GUARD:
        raise DegenerateDesignError(f"{what} is singular or ill-conditioned")
    c = scipy.linalg.cho_factor(M)
    inv = scipy.linalg.cho_solve(c, np.eye(M.shape[0]))
    return 0.5 * (inv + inv.T)


def _check_variances(sigma_e2, sigma_w2, need_e=True):
    if sigma_w2 == 0:
        raise OutOfScopeError(
            "sigma_w^2 = 0 makes y = Theta d a hard constraint; the constrained "
            "bound is not provided"
        )
    if sigma_w2 < 0 or sigma_e2 < 0 or (need_e and sigma_e2 == 0):
        raise ValueError("noise variances must be positive")


@dataclass(frozen=True, eq=False)
class FisherBlocks:
    F_theta: np.ndarray
    F_d: np.ndarray
    F_theta_d: tuple

    def full(self) -> np.ndarray:
        """Assemble the full ``(N_y N_d + N N_d)`` square information matrix."""
        p = self.F_theta.shape[0]
        nd = self.F_d.shape[0]
        n = len(self.F_theta_d)
        F = np.zeros((p + n * nd, p + n * nd))
        F[:p, :p] = self.F_theta
        for i, C in enumerate(self.F_theta_d):
            s = slice(p + i * nd, p + (i + 1) * nd)
            F[:p, s] = C
            F[s, :p] = C.T
            F[s, s] = self.F_d
        return F

    def theta_schur(self, skip=None) -> np.ndarray:
        """Information on ``theta`` after eliminating the inputs (optionally
        leaving sample ``skip`` out entirely)."""
        Fd_inv = np.linalg.inv(self.F_d)
        S = self.F_theta.copy()
        for i, C in enumerate(self.F_theta_d):
            if i != skip:
                S -= C @ Fd_inv @ C.T
        return S


def fisher(theta, D, sigma_e2: float, sigma_w2: float) -> FisherBlocks:
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    _check_variances(sigma_e2, sigma_w2)
    n_y, n_d = theta.shape
    F_theta = np.kron(np.eye(n_y), D @ D.T) / sigma_w2
    F_d = np.eye(n_d) / sigma_e2 + theta.T @ theta / sigma_w2
    cross = tuple(regressor(D[:, i], n_y).T @ theta / sigma_w2 for i in range(D.shape[1]))
    return FisherBlocks(F_theta, F_d, cross)


def sigma_theta(theta, sigma_e2, sigma_w2) -> np.ndarray:
    """``Theta (sigma_w^2 I + sigma_e^2 Theta^T Theta)^{-1} Theta^T``."""
    theta = np.atleast_2d(theta)
    n_d = theta.shape[1]
    M = sigma_w2 * np.eye(n_d) + sigma_e2 * theta.T @ theta
    return theta @ np.linalg.solve(M, theta.T)


def _theta_bracket(theta, D, sigma_e2, sigma_w2):
    n_y = theta.shape[0]
    S = sigma_theta(theta, sigma_e2, sigma_w2)
    # sum_t H(d_t)^T S H(d_t) = S (x) D D^T
    return np.kron(np.eye(n_y), D @ D.T) - sigma_e2 * np.kron(S, D @ D.T)


def ccrb_theta(theta, D, sigma_e2: float, sigma_w2: float, verify: bool = True) -> np.ndarray:
    """Lower bound on ``Cov(vec(Theta^T))`` with known labels.

    With ``verify`` the result is compared against the inverse of the Schur
    complement of the assembled information matrix.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    _check_variances(sigma_e2, sigma_w2, need_e=False)
    bound = sigma_w2 * _spd_inverse(_theta_bracket(theta, D, sigma_e2, sigma_w2),
                                    "information on theta")
    if verify and sigma_e2 > 0:
        ref = _spd_inverse(fisher(theta, D, sigma_e2, sigma_w2).theta_schur(),
                           "Schur complement")
        err = np.max(np.abs(ref - bound)) / np.max(np.abs(ref))
        if err > SELF_CHECK_RTOL:
            raise ArithmeticError(f"closed-form bound disagrees with Schur inverse ({err:.2e})")
    return bound


def ccrb_d(i: int, theta, D, sigma_e2: float, sigma_w2: float) -> np.ndarray:
    """Lower bound on ``Cov(d_i)``: Schur complement of the information matrix on ``d_i``."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    _check_variances(sigma_e2, sigma_w2, need_e=False)
    n_y, n_d = theta.shape
    if D.shape[1] < 2:
        raise DegenerateDesignError("the input bound needs at least two samples")
    if sigma_e2 == 0:
        return np.zeros((n_d, n_d))
    # theta information with every input except d_i eliminated; sample i still
    # contributes its regressor term
    d_i = D[:, i]
    J = (_theta_bracket(theta, np.delete(D, i, axis=1), sigma_e2, sigma_w2)
         + np.kron(np.eye(n_y), np.outer(d_i, d_i)))
    C_i = sigma_w2 * _spd_inverse(J, "information on theta")
    G = regressor(d_i, n_y).T @ theta
    M = (np.eye(n_d) + (sigma_e2 / sigma_w2) * theta.T @ theta
         - (sigma_e2 / sigma_w2 ** 2) * G.T @ C_i @ G)
    return sigma_e2 * _spd_inverse(M, f"input information at sample {i}")


@dataclass(frozen=True, eq=False)
class CrbReport:
    cov_theta: np.ndarray
    cov_d: dict = field(default_factory=dict)
    entries: tuple = ()

    def diagonal(self) -> np.ndarray:
        return np.diag(self.cov_theta).copy()


def crb_report(theta, D, sigma_e2, sigma_w2, d_indices=(), prefix="theta") -> CrbReport:
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    cov = ccrb_theta(theta, D, sigma_e2, sigma_w2)
    cov_d = {int(i): ccrb_d(int(i), theta, D, sigma_e2, sigma_w2) for i in d_indices}
    return CrbReport(cov, cov_d, tuple(entry_names(*theta.shape, prefix=prefix)))


def per_submodel(spec, D, labels, d_indices=()) -> list:
    """One :class:`CrbReport` per submodel, each using only its own samples."""
    D = np.atleast_2d(D)
    out = []
    for k, theta in enumerate(spec.thetas):
        idx = np.flatnonzero(np.asarray(labels) == k)
        Dk = D[:, idx]
        rep = crb_report(theta, Dk, spec.sigma_e2, spec.sigma_w2, prefix=f"theta{k + 1}")
        for i in d_indices:
            pos = np.flatnonzero(idx == i)
            if pos.size:
                rep.cov_d[int(i)] = ccrb_d(int(pos[0]), theta, Dk, spec.sigma_e2,
                                           spec.sigma_w2)
        out.append(rep)
    return out
