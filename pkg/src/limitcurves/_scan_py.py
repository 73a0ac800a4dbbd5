"""Pure-numpy grid-scan kernel; semantics identical to the compiled variant."""

from __future__ import annotations

import numpy as np


def best_stop_index(prefix_low, denom_base, wbars, thresholds) -> int:
    """Smallest loss-group index whose stand-in CDF clears its threshold.

    For each candidate weight bound ``wbars[j]`` (``inf`` marks an infeasible
    level) the first group index with
    ``prefix_low[k] / (denom_base[k] + wbars[j]) >= thresholds[j]`` is found;
    the minimum over all feasible levels is returned, or -1 when no level
    produces a crossing. A zero denominator counts as CDF value 0.
    """
    finite = np.isfinite(wbars)
    if not np.any(finite):
        return -1
    den = denom_base[np.newaxis, :] + wbars[finite, np.newaxis]
    num = np.broadcast_to(prefix_low, den.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0.0, num / den, 0.0)
    hit = ratio >= thresholds[finite, np.newaxis]
    rows = hit.any(axis=1)
    if not rows.any():
        return -1
    return int(np.argmax(hit[rows], axis=1).min())
