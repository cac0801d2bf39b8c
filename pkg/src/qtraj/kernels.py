"""Kernel backend selection.

The compiled extension is used when importable; set ``QTRAJ_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _fallback

try:
    if os.environ.get("QTRAJ_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _fallback

evolve_fine_bin = _impl.evolve_fine_bin
apply_fine_record = _impl.apply_fine_record


def backends():
    """Available ``{name: module}`` pairs, compiled first."""
    out = {}
    if _compiled is not None:
        out["cython"] = _compiled
    out["python"] = _fallback
    return out
