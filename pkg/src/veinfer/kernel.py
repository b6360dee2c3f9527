"""Kernel lane selection: compiled sweep kernel with pure-Python fallback.

The compiled extension is preferred when importable; set
``VE_INFER_KERNEL=python`` or ``VE_INFER_KERNEL=cython`` to force a lane.
Both lanes consume the PCG64 stream identically, so results are
bit-identical whichever lane runs.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel as _kernel_cy
except ImportError:
    _kernel_cy = None

__all__ = ["active_kernel", "available_kernels"]


def available_kernels() -> dict[str, object]:
    lanes = {"python": _kernel_py}
    if _kernel_cy is not None:
        lanes["cython"] = _kernel_cy
    return lanes


def active_kernel():
    """The kernel module used by `run_chain`, honouring VE_INFER_KERNEL."""
    forced = os.environ.get("VE_INFER_KERNEL", "").strip().lower()
    lanes = available_kernels()
    if forced:
        if forced not in ("python", "cython"):
            raise ValueError(f"VE_INFER_KERNEL must be 'python' or 'cython', got {forced!r}")
        if forced not in lanes:
            raise RuntimeError("VE_INFER_KERNEL=cython but the compiled kernel is not installed")
        return lanes[forced]
    return lanes.get("cython", _kernel_py)
