"""Hot numeric kernels.

The jitted implementations are used when numba imports cleanly. Set
``VCSELNET_DISABLE_NUMBA=1`` to force the pure-numpy path (useful for
debugging and for the backend benchmark).
"""

import os

from . import _numpy

_disabled = os.environ.get("VCSELNET_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

if _disabled:
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is an optional accelerator
        _impl = _numpy
        BACKEND = "numpy"

los_gains = _impl.los_gains
best_response = _impl.best_response
proportional_response = _impl.proportional_response
enumerate_assignments = _impl.enumerate_assignments

__all__ = [
    "BACKEND",
    "los_gains",
    "best_response",
    "proportional_response",
    "enumerate_assignments",
]
