"""CRF inference kernels with backend selection at import.

The compiled Cython extension is preferred when present; the numpy
implementation is the fallback. Set BASNER_KERNELS=python (or =c) to force a
backend, e.g. for the benchmark in benchmarks/bench_kernels.py.
"""
import os

from . import _pykernels

_choice = os.environ.get("BASNER_KERNELS", "auto")

if _choice == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "c"
    except ImportError:
        if _choice == "c":
            raise
        _impl = _pykernels
        BACKEND = "python"

forward_backward = _impl.forward_backward
viterbi = _impl.viterbi

__all__ = ["forward_backward", "viterbi", "BACKEND"]
