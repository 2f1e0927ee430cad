"""Backend selection for the sender loop.

The compiled extension is used when it was built; set
``CYCLIC_ETL_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

if os.environ.get("CYCLIC_ETL_PURE_PYTHON") or _compiled is None:
    active = _kernels_py
else:
    active = _compiled

BACKEND = active.NAME


def get_backend(name=None):
    """Kernel module by name; ``None`` returns the one selected at import."""
    if name is None:
        return active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {sorted(BACKENDS)}") from None
