# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid-scan kernel; semantics identical to the pure-numpy variant."""

from libc.math cimport isinf


def best_stop_index(const double[::1] prefix_low,
                    const double[::1] denom_base,
                    const double[::1] wbars,
                    const double[::1] thresholds):
    """Smallest loss-group index whose stand-in CDF clears its threshold.

    ``inf`` entries in ``wbars`` mark infeasible levels and are skipped; a
    zero denominator counts as CDF value 0. Returns -1 when no level produces
    a crossing.
    """
    cdef Py_ssize_t n_groups = prefix_low.shape[0]
    cdef Py_ssize_t n_levels = wbars.shape[0]
    cdef Py_ssize_t best = n_groups
    cdef Py_ssize_t j, k
    cdef double w, threshold, den, ratio
    for j in range(n_levels):
        w = wbars[j]
        if isinf(w):
            continue
        threshold = thresholds[j]
        for k in range(best):
            den = denom_base[k] + w
            ratio = prefix_low[k] / den if den > 0.0 else 0.0
            if ratio >= threshold:
                best = k
                break
    return -1 if best == n_groups else best
