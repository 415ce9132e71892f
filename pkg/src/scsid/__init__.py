"""Spectral clustering on subspace (SCS) identification of jump and
piecewise linear models."""
from .clustering import ScsConfig, scs_labels
from .estimation import align_to_truth, clairvoyant_ml, identify
from .kernels import BACKEND
from .model import Dataset, ModelSpec, generate, snr_db, stack

__all__ = [
    "BACKEND",
    "Dataset",
    "ModelSpec",
    "ScsConfig",
    "align_to_truth",
    "clairvoyant_ml",
    "generate",
    "identify",
    "scs_labels",
    "snr_db",
    "stack",
]
__version__ = "0.1.0"
