"""Backend selection for the numerical kernels.

The compiled Cython module is used when it imports cleanly; otherwise the
numpy implementations are used.  Setting ``LIFIWIFI_BACKEND=python`` in the
environment forces the fallback (useful for benchmarking and for checking
that both paths agree).
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("LIFIWIFI_BACKEND", "").lower() not in ("python", "numpy", "py"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

mixture_logsum = _impl.mixture_logsum
simplex_project = _impl.simplex_project
capped_simplex_project = _impl.capped_simplex_project

__all__ = ["BACKEND", "mixture_logsum", "simplex_project", "capped_simplex_project"]
