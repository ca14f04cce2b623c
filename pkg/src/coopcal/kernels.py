"""Select the compiled matching kernels when available, else the numpy fallback.

Set ``COOPCAL_PURE_PYTHON=1`` in the environment to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
coarse_match_all = _kernels_py.coarse_match_all
consensus_filter = _kernels_py.consensus_filter

if os.environ.get("COOPCAL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        BACKEND = "cython"
        coarse_match_all = _compiled.coarse_match_all
        consensus_filter = _compiled.consensus_filter


def backends() -> dict:
    """All importable backends, keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled

        out["cython"] = compiled
    except ImportError:
        pass
    return out
