"""Kernel backend selection.

The compiled Cython kernels are preferred when the extension built; the
pure-numpy fallback is always available. ``WAVEDISTILL_BACKEND=python``
(or ``cython``) forces a choice, which the kernel benchmark and the
backend-parity tests rely on.
"""

import os

from . import _kernels_py


def _load(name):
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}; use 'cython' or 'python'")


_forced = os.environ.get("WAVEDISTILL_BACKEND")
if _forced:
    _impl = _load(_forced)
else:
    try:
        _impl = _load("cython")
    except ImportError:
        _impl = _kernels_py

BACKEND_NAME = _impl.BACKEND_NAME
analysis = _impl.analysis
synthesis = _impl.synthesis
tap_grad = _impl.tap_grad


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active one)."""
    if name is None:
        return _impl
    return _load(name)
