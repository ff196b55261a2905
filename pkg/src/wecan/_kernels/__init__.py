"""Hot per-edge kernels with a compiled core and a pure-numpy fallback.

The compiled Cython extension ``_core`` is preferred when importable; the
numpy implementation is the fallback. Set ``WECAN_KERNEL_BACKEND`` to
``cython`` or ``numpy`` to force a backend (forcing ``cython`` raises if
the extension is missing).
"""

import os

from . import _numpy_impl

_requested = os.environ.get("WECAN_KERNEL_BACKEND", "").strip().lower()

if _requested not in ("", "cython", "numpy"):
    raise ImportError(f"WECAN_KERNEL_BACKEND={_requested!r}; expected 'cython' or 'numpy'")

if _requested == "numpy":
    _impl = _numpy_impl
    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _numpy_impl
        BACKEND = "numpy"


def get_backend(name: str):
    """Return a backend module by name, for benchmarks and parity tests."""
    if name == "numpy":
        return _numpy_impl
    if name == "cython":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")


structural_scores = _impl.structural_scores
weighted_score_sum = _impl.weighted_score_sum
weight_gradients = _impl.weight_gradients
scatter_columns = _impl.scatter_columns
