"""Backend selection for the hot K-means kernel.

The compiled extension is used when it was built; set ``SCSID_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _lloyd_py

BACKEND = "python"
lloyd = _lloyd_py.lloyd

if os.environ.get("SCSID_PURE_PYTHON", "") in ("", "0"):
    try:
        from ._lloyd import lloyd  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

python_lloyd = _lloyd_py.lloyd
