"""Hot numerical kernels: compiled Cython core with a pure-NumPy fallback.

The compiled extension is selected automatically at import.  Set
``FIBERGATE_BACKEND=pure`` (or ``compiled``) to force a choice; forcing
``compiled`` when the extension is missing raises at import time.
"""
from __future__ import annotations

import os

from . import purepy

_requested = os.environ.get("FIBERGATE_BACKEND", "").strip().lower()

if _requested == "pure":
    _impl = purepy
elif _requested == "compiled":
    from . import _core as _impl  # noqa: F401  (ImportError is the point)
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = purepy

BACKEND = "pure" if _impl is purepy else "compiled"

rk45_lincomb = _impl.rk45_lincomb
node_rk4 = _impl.node_rk4

# the generic-callable integrator has no compiled counterpart
rk45_callable = purepy.rk45_callable


def available_backends() -> dict[str, object]:
    """Importable backend modules, keyed by name (for benchmarks/tests)."""
    found = {"pure": purepy}
    try:
        from . import _core

        found["compiled"] = _core
    except ImportError:
        pass
    return found
