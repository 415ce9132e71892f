"""Jump / piecewise linear model types, synthetic data and SNR.

Submodel labels are 0-based (``0..K-1``) everywhere inside the library; the
CSV and JSON formats written by :mod:`scsid.io` use 1-based labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InsufficientSamplesError, ModelSpecError


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# switching rules

@dataclass(frozen=True, eq=False)
class EpochDriven:
    """Exogenous switching: an explicit submodel label for every time index."""

    labels: np.ndarray

    def __post_init__(self):
        labels = _frozen(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise ModelSpecError("epoch labels must be a non-empty 1-D sequence")
        if labels.min() < 0:
            raise ModelSpecError("epoch labels must be non-negative")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_blocks(cls, sizes: Sequence[int], shuffle_seed: Optional[int] = None):
        """Block-sequential epochs (``sizes[0]`` samples of submodel 0, ...).

        With ``shuffle_seed`` the time order is randomly permuted, giving an
        interleaved switching pattern with the same per-submodel counts.
        """
        labels = np.repeat(np.arange(len(sizes)), sizes)
        if shuffle_seed is not None:
            labels = np.random.default_rng(shuffle_seed).permutation(labels)
        return cls(labels)

    @property
    def horizon(self) -> int:
        return int(self.labels.size)

    def block_sizes(self) -> Optional[list[int]]:
        """Sizes if the labels are block-sequential ``0..0 1..1 ...``, else None."""
        if np.any(np.diff(self.labels) < 0) or np.any(np.diff(self.labels) > 1):
            return None
        if self.labels[0] != 0:
            return None
        return np.bincount(self.labels).tolist()


@dataclass(frozen=True)
class HalfSpace:
    """Two-cell input partition: label 0 where ``normal . d >= offset``."""

    normal: tuple
    offset: float = 0.0
    low: float = -1.0
    high: float = 1.0

    n_classes = 2

    def assign(self, D: np.ndarray) -> np.ndarray:
        s = np.asarray(self.normal, dtype=float) @ D
        return np.where(s >= self.offset, 0, 1).astype(np.int64)


@dataclass(frozen=True)
class Chessboard:
    """Alternating grid over the box ``[low, high]^N_d``.

    Cell ``(i_1, ..., i_Nd)`` belongs to class ``(i_1 + ... + i_Nd) mod n_classes``.
    The default 4x4 board with two classes puts 8 cells in each class.
    """

    cells: int = 4
    low: float = -1.0
    high: float = 1.0
    n_classes: int = 2

    def cell_index(self, D: np.ndarray) -> np.ndarray:
        u = (np.asarray(D, dtype=float) - self.low) / (self.high - self.low)
        return np.clip(np.floor(u * self.cells), 0, self.cells - 1).astype(np.int64)

    def assign(self, D: np.ndarray) -> np.ndarray:
        return (self.cell_index(D).sum(axis=0) % self.n_classes).astype(np.int64)


InputDriven = Union[HalfSpace, Chessboard]
SwitchingRule = Union[EpochDriven, HalfSpace, Chessboard]


def _check_in_box(rule, D):
    if np.any(D < rule.low) or np.any(D > rule.high):
        raise ModelSpecError(
            f"input outside the partition domain [{rule.low}, {rule.high}]"
        )


# --------------------------------------------------------------------------
# model and data


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Ground-truth hybrid model with ``K`` submodels ``y = Theta_i d``."""

    thetas: tuple
    sigma_e2: float
    sigma_w2: float
    switching: SwitchingRule

    def __post_init__(self):
        thetas = tuple(_frozen(np.atleast_2d(t)) for t in self.thetas)
        if not thetas:
            raise ModelSpecError("at least one submodel is required")
        shape = thetas[0].shape
        if any(t.shape != shape or t.ndim != 2 for t in thetas):
            raise ModelSpecError("all submodel matrices must share one N_y x N_d shape")
        object.__setattr__(self, "thetas", thetas)
        K, (n_y, n_d) = len(thetas), shape
        if n_d + n_y < K * n_d:
            raise ModelSpecError(
                f"rank condition violated: N_d + N_y = {n_d + n_y} < K*N_d = {K * n_d}"
            )
        for i in range(K):
            for j in range(i + 1, K):
                if np.array_equal(thetas[i], thetas[j]):
                    raise ModelSpecError(f"submodels {i + 1} and {j + 1} are identical")
        if self.sigma_e2 < 0 or self.sigma_w2 < 0:
            raise ModelSpecError("noise variances must be non-negative")
        n_classes = (
            int(self.switching.labels.max()) + 1
            if isinstance(self.switching, EpochDriven)
            else self.switching.n_classes
        )
        if n_classes > K:
            raise ModelSpecError(f"switching rule refers to {n_classes} submodels, K={K}")

    @property
    def K(self) -> int:
        return len(self.thetas)

    @property
    def n_d(self) -> int:
        return self.thetas[0].shape[1]

    @property
    def n_y(self) -> int:
        return self.thetas[0].shape[0]

    def with_noise(self, sigma_e2: float, sigma_w2: float) -> "ModelSpec":
        return ModelSpec(self.thetas, sigma_e2, sigma_w2, self.switching)

    def extended_matrix(self) -> np.ndarray:
        """``A = [I ... I; Theta_1 ... Theta_K]``."""
        eye = np.eye(self.n_d)
        return np.vstack([np.hstack([eye] * self.K), np.hstack(self.thetas)])

    def labels_for(self, D: np.ndarray) -> np.ndarray:
        rule = self.switching
        if isinstance(rule, EpochDriven):
            if rule.horizon != D.shape[1]:
                raise ModelSpecError(
                    f"horizon {D.shape[1]} does not match {rule.horizon} epoch labels"
                )
            return rule.labels.copy()
        _check_in_box(rule, D)
        return rule.assign(D)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed inputs ``X`` (N_d x N) and outputs ``Y`` (N_y x N), plus optional truth."""

    X: np.ndarray
    Y: np.ndarray
    D: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        X = _frozen(np.atleast_2d(self.X))
        Y = _frozen(np.atleast_2d(self.Y))
        n = X.shape[1]
        if Y.shape[1] != n:
            raise ValueError(f"X has {n} columns but Y has {Y.shape[1]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if self.D is not None:
            D = _frozen(np.atleast_2d(self.D))
            if D.shape != X.shape:
                raise ValueError(f"D has shape {D.shape}, X has {X.shape}")
            object.__setattr__(self, "D", D)
        if self.labels is not None:
            labels = _frozen(self.labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValueError(f"labels must have length {n}")
            if labels.min() < 0:
                raise ValueError("labels must be non-negative")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def has_truth(self) -> bool:
        return self.D is not None and self.labels is not None

    def permuted(self, perm: np.ndarray) -> "Dataset":
        perm = np.asarray(perm)
        return Dataset(
            self.X[:, perm],
            self.Y[:, perm],
            None if self.D is None else self.D[:, perm],
            None if self.labels is None else self.labels[perm],
        )


@dataclass(frozen=True, eq=False)
class StackedObservations:
    """``Z = [X; Y]``, one column ``z_n = [x_n; y_n]`` per sample."""

    Z: np.ndarray
    n_x: int

    @property
    def X(self) -> np.ndarray:
        return self.Z[: self.n_x]

    @property
    def Y(self) -> np.ndarray:
        return self.Z[self.n_x:]

    @property
    def n(self) -> int:
        return self.Z.shape[1]


def stack(ds: Dataset) -> StackedObservations:
    return StackedObservations(_frozen(np.vstack([ds.X, ds.Y])), ds.X.shape[0])


# --------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class UniformBox:
    """Input sampler: i.i.d. uniform on ``[low, high]^N_d``.

    If ``seed`` is None the generator's noise seed is reused for the inputs.
    """

    low: float = -1.0
    high: float = 1.0
    seed: Optional[int] = None

    def sample(self, n_d: int, n: int, seed=None) -> np.ndarray:
        s = self.seed if self.seed is not None else seed
        return np.random.default_rng(s).uniform(self.low, self.high, size=(n_d, n))


InputSource = Union[np.ndarray, UniformBox]


def noiseless_outputs(spec: ModelSpec, D: np.ndarray, labels: np.ndarray) -> np.ndarray:
    Y = np.empty((spec.n_y, D.shape[1]))
    for k, theta in enumerate(spec.thetas):
        idx = labels == k
        Y[:, idx] = theta @ D[:, idx]
    return Y


def generate(spec: ModelSpec, horizon: int, inputs: InputSource, seed) -> Dataset:
    """Draw a dataset ``x_n = d_n + e_n``, ``y_n = Theta_{l(n)} d_n + w_n``.

    ``inputs`` is either a fixed ``N_d x N`` design or a :class:`UniformBox`.
    Noise comes from ``numpy.random.default_rng(seed)``: first the ``e`` block,
    then the ``w`` block, so identical arguments give identical arrays.
    """
    K, n_d = spec.K, spec.n_d
    if horizon < K * n_d:
        raise InsufficientSamplesError(f"horizon {horizon} < K*N_d = {K * n_d}")
    if isinstance(inputs, UniformBox):
        D = inputs.sample(n_d, horizon, seed)
    else:
        D = np.array(np.atleast_2d(inputs), dtype=float)
    if D.shape != (n_d, horizon):
        raise ModelSpecError(f"input design has shape {D.shape}, expected {(n_d, horizon)}")
    labels = spec.labels_for(D)
    counts = np.bincount(labels, minlength=K)
    if counts.min() < n_d:
        k = int(counts.argmin())
        raise InsufficientSamplesError(
            f"submodel {k + 1} receives {counts[k]} samples, fewer than N_d={n_d}"
        )
    rng = np.random.default_rng(seed)
    E = math.sqrt(spec.sigma_e2) * rng.standard_normal((n_d, horizon))
    Wn = math.sqrt(spec.sigma_w2) * rng.standard_normal((spec.n_y, horizon))
    return Dataset(D + E, noiseless_outputs(spec, D, labels) + Wn, D, labels)


def signal_energy(spec: ModelSpec, D: np.ndarray, labels: np.ndarray) -> float:
    """``sum_n ||Theta_{l(n)} d_n||^2 + ||d_n||^2``."""
    return float(np.sum(noiseless_outputs(spec, D, labels) ** 2) + np.sum(D ** 2))


def snr_db(ds: Dataset, spec: ModelSpec) -> float:
    """Signal-to-noise ratio in dB; ``math.inf`` when both variances are zero."""
    if not ds.has_truth:
        raise ValueError("snr_db needs a dataset with ground truth")
    noise = ds.n * (spec.n_d * spec.sigma_e2 + spec.n_y * spec.sigma_w2)
    if noise == 0:
        return math.inf
    return 10.0 * math.log10(signal_energy(spec, ds.D, ds.labels) / noise)


# --------------------------------------------------------------------------
# the two reference scenarios


def example1(n_per_model: int = 200, sigma2: float = 0.0, shuffle_seed=None) -> ModelSpec:
    """SISO bi-model JLM, gains 0.7 and 0.8, epoch-driven."""
    return ModelSpec(
        ([[0.7]], [[0.8]]),
        sigma2,
        sigma2,
        EpochDriven.from_blocks([n_per_model, n_per_model], shuffle_seed),
    )


EXAMPLE2_THETAS = (
    [[0.7, 0.4], [0.5, 0.3]],
    [[0.8, 0.9], [0.2, 0.5]],
)


def example2(sigma2: float = 0.0, cells: int = 4) -> ModelSpec:
    """2x2 MIMO PLM on a chessboard partition of ``[-1, 1]^2``."""
    return ModelSpec(EXAMPLE2_THETAS, sigma2, sigma2, Chessboard(cells=cells))


def example1_inputs(n: int = 400, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(1, n))


def chessboard_inputs(board: Chessboard, per_cell: int = 100, seed: int = 0) -> np.ndarray:
    """``per_cell`` uniform points in every cell of a 2-D board, in shuffled order.

    Stratifying per cell gives exactly equal class counts (``per_cell * cells^2 / 2``).
    """
    rng = np.random.default_rng(seed)
    width = (board.high - board.low) / board.cells
    cols = []
    for i in range(board.cells):
        for j in range(board.cells):
            lo = board.low + width * np.array([i, j], dtype=float)
            cols.append(lo[:, None] + width * rng.random((2, per_cell)))
    D = np.hstack(cols)
    return D[:, rng.permutation(D.shape[1])]
