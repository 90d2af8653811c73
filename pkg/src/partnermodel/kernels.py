"""Backend selection for the hot event loops.

Imports the compiled extension when available, otherwise the pure-Python
fallback.  Set ``PARTNERMODEL_PURE_PYTHON=1`` to force the fallback.  Both
backends expose ``macro_run``, ``branching_run`` and ``rk4_run`` with the
same signatures and, for equal seeds, bit-identical results.
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("PARTNERMODEL_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _fallback
    BACKEND = "fallback"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "fallback"

macro_run = _impl.macro_run
branching_run = _impl.branching_run
rk4_run = _impl.rk4_run
