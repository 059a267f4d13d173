"""Backend selection for the hot kernels.

The compiled extension is used when it was built; setting
``LNCDIS_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _core
except ImportError:  # extension not built
    _core = None
else:
    BACKENDS["compiled"] = _core

if _core is not None and os.environ.get("LNCDIS_PURE_PYTHON", "") in ("", "0"):
    backend = _core
    BACKEND_NAME = "compiled"
else:
    backend = _fallback
    BACKEND_NAME = "python"


def get(name=None):
    """Kernel module by name; ``None`` returns the active one."""
    if name is None:
        return backend
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
