"""Backend selection for the hot kernels.

The compiled Cython extension is preferred when importable; the pure-numpy
fallback is always available.  Set ``CHIRALSIM_KERNEL=python`` (or
``cython``) to force a choice; forcing ``cython`` raises if the extension
was not built.
"""

import os

from . import py_kernel

_requested = os.environ.get("CHIRALSIM_KERNEL", "").strip().lower()

if _requested == "python":
    backend = py_kernel
elif _requested == "cython":
    from . import _cy_kernel as backend  # noqa: F401  (ImportError is the contract)
else:
    try:
        from . import _cy_kernel as backend
    except ImportError:
        backend = py_kernel

rhs = backend.rhs
integrate_rk4 = backend.integrate_rk4
COMPILED = backend.COMPILED
NAME = backend.NAME


def backend_name():
    """Name of the active kernel backend ('cython' or 'python')."""
    return NAME
