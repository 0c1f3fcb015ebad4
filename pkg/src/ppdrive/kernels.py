"""Hot big-integer kernels with import-time backend selection.

The compiled GMP extension (``ppdrive._kernels``) is used when it is
importable; otherwise the pure-Python module is used. Set
``PPDRIVE_PURE_PYTHON=1`` to force the fallback.

``BACKEND`` names the active implementation: ``"gmp"`` or ``"python"``.
"""

import os

from . import _pykernels

if os.environ.get("PPDRIVE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "gmp"

powmod = _impl.powmod
powmod_many = _impl.powmod_many
prod_mod = _impl.prod_mod


def available_backends():
    """Map backend name to module for every backend importable here."""
    backends = {"python": _pykernels}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        backends["gmp"] = _kernels
    return backends
