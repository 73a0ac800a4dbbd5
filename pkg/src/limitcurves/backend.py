"""Kernel backend selection: compiled extension when importable, numpy fallback otherwise.

Set ``LIMITCURVES_PURE=1`` to force the pure-numpy kernel. Both backends are
arithmetic-identical; ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("LIMITCURVES_PURE", "0") not in ("", "0"):
    from . import _scan_py as _impl

    BACKEND = "pure"
else:
    try:
        from . import _scan_cy as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _scan_py as _impl  # type: ignore[no-redef]

        BACKEND = "pure"


def best_stop_index(prefix_low, denom_base, wbars, thresholds) -> int:
    prefix_low = np.ascontiguousarray(prefix_low, dtype=np.float64)
    denom_base = np.ascontiguousarray(denom_base, dtype=np.float64)
    wbars = np.ascontiguousarray(wbars, dtype=np.float64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    return int(_impl.best_stop_index(prefix_low, denom_base, wbars, thresholds))
