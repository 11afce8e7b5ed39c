"""Numeric kernel backends.

The compiled Cython extension is preferred when it was built; the pure
Python module is the reference implementation and the fallback.  Set
``RESCUE_SPATAP_PURE=1`` in the environment to force the fallback.  Both
backends implement the same functions with bit-identical results.
"""

import os

from . import _pykernels as pure

try:
    from . import _cykernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is None or os.environ.get("RESCUE_SPATAP_PURE", "0") not in ("", "0"):
    active = pure
else:
    active = compiled

backend_name = active.BACKEND


def available_backends():
    """Mapping of backend name to kernel module, for tests and benchmarks."""
    table = {"pure": pure}
    if compiled is not None:
        table["compiled"] = compiled
    return table
