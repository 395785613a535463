"""Accelerated inner kernels with pure-Python fallback.

The compiled extension is optional; if it failed to build, the Python
implementation is used and ``BACKEND`` reports which one is active.
"""

try:
    from crb._accel._lcs import lcs_length

    BACKEND = "cython"
except ImportError:  # pragma: no cover - build-env dependent
    from crb._accel._lcs_py import lcs_length

    BACKEND = "python"

__all__ = ["lcs_length", "BACKEND"]
