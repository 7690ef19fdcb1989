"""Selects the compiled kernels when available, else the numpy fallback.

Set ``LIEFLOW_PURE=1`` to force the fallback.  ``BACKEND`` names the active one.
"""

import os

from . import _core_py

if os.environ.get("LIEFLOW_PURE", "") not in ("", "0"):
    _impl = _core_py
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _core_py
        BACKEND = "python"

edges_step2 = _impl.edges_step2
tarjan_scc = _impl.tarjan_scc

__all__ = ["BACKEND", "edges_step2", "tarjan_scc"]
