"""Hot kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; setting ``NSAC_PURE_PYTHON=1``
forces the fallback.  ``BACKEND`` names the active choice.
"""

import os

from . import _pykernels

if os.environ.get("NSAC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"
closures = _impl.closures
implicit_solve = _impl.implicit_solve


def available_backends():
    """Map backend name to module for every backend importable here."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
