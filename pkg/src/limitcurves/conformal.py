"""Certified-quantile engine: order-statistic weight bounds, the weighted
stand-in CDF, and miscalibration-indexed limit curves.

The scale of the weights never matters: every quantity below is a ratio of
weight sums, so the unknown trial/target prior constant cancels and callers
can hand in unnormalized selection odds.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import backend
from .weights import check_gamma


def default_alpha_grid() -> np.ndarray:
    """Miscoverage grid 0.01, 0.02, ..., 0.99."""
    return np.arange(1, 100) / 100.0


def default_beta_grid(alpha: float, points: int = 49) -> np.ndarray:
    """Evenly spaced grid strictly inside (0, alpha), proportional to alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if points < 1:
        raise ValueError("need at least one grid point")
    return alpha * np.arange(1, points + 1) / (points + 1)


class CalibrationSet:
    """Losses with per-sample lower/upper shift weights, sorted by loss.

    Ties keep their original input order; weights follow their sample through
    the sort.
    """

    def __init__(self, losses, lower, upper):
        losses = np.asarray(losses, dtype=np.float64)
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        if losses.ndim != 1 or losses.shape[0] == 0:
            raise ValueError("losses must be a nonempty vector")
        if lower.shape != losses.shape or upper.shape != losses.shape:
            raise ValueError("weights must align with the losses")
        if not np.all(np.isfinite(losses)):
            raise ValueError("losses must be finite")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("weights must be finite")
        if np.any(lower < 0) or np.any(upper < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(lower > upper):
            raise ValueError("lower weights must not exceed upper weights")
        order = np.argsort(losses, kind="stable")
        self.order = order
        self.losses = losses[order]
        self.lower = lower[order]
        self.upper = upper[order]
        # last index of every run of equal losses: the points where the
        # stand-in CDF can jump
        m = self.losses.shape[0]
        if m == 1:
            self.group_ends = np.array([0], dtype=np.int64)
        else:
            changes = np.flatnonzero(self.losses[1:] != self.losses[:-1])
            self.group_ends = np.append(changes, m - 1).astype(np.int64)

    @property
    def size(self) -> int:
        return self.losses.shape[0]

    @classmethod
    def from_shift_weights(cls, losses, base_weights) -> "CalibrationSet":
        """Gamma-free construction: lower = upper = odds * action ratio."""
        base = np.asarray(base_weights, dtype=np.float64)
        return cls(losses, base, base)

    def scaled(self, gamma: float) -> "CalibrationSet":
        g = check_gamma(gamma)
        return CalibrationSet(self.losses, self.lower / g, self.upper * g)


class WeightBoundSet:
    """Ascending upper shift weights of the weight-bound half."""

    def __init__(self, upper_weights):
        w = np.asarray(upper_weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] == 0:
            raise ValueError("need at least one upper weight")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("upper weights must be finite and nonnegative")
        self.upper = np.sort(w)

    @property
    def size(self) -> int:
        return self.upper.shape[0]

    def scaled(self, gamma: float) -> "WeightBoundSet":
        g = check_gamma(gamma)
        return WeightBoundSet(self.upper * g)


def weight_bound(ws: WeightBoundSet, beta: float) -> float:
    """Order statistic bounding the out-of-sample upper weight at level 1 - beta.

    Returns ``math.inf`` when the sample is too small for the requested level;
    downstream code treats that as "no finite quantile" rather than doing
    arithmetic with the infinity.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie strictly inside (0, 1)")
    position = math.ceil((ws.size + 1.0) * (1.0 - beta))
    if position > ws.size:
        return math.inf
    return float(ws.upper[position - 1])


def _weight_bound_values(sorted_upper: np.ndarray, betas: np.ndarray) -> np.ndarray:
    m = sorted_upper.shape[0]
    positions = np.ceil((m + 1.0) * (1.0 - betas))
    out = np.full(betas.shape, math.inf)
    ok = positions <= m
    if ok.any():
        out[ok] = sorted_upper[positions[ok].astype(np.int64) - 1]
    return out


def stand_in_cdf(cal: CalibrationSet, w: float, ell: float) -> float:
    """Weighted stand-in for the unknown loss CDF at ``ell``.

    Samples at or below ``ell`` contribute their lower weight, samples above
    contribute their upper weight, and ``w`` occupies the out-of-sample slot.
    ``w = inf`` gives 0. The function is a nondecreasing right-continuous step
    function of ``ell`` jumping only at observed losses.
    """
    if math.isinf(w):
        return 0.0
    if w < 0:
        raise ValueError("out-of-sample weight must be nonnegative")
    below = cal.losses <= ell
    num = float(np.sum(cal.lower[below]))
    den = (num + float(np.sum(cal.upper[~below]))) + w
    return num / den if den > 0 else 0.0


def _scan_arrays(losses_sorted, lower, upper, group_ends):
    prefix_all = np.cumsum(lower)
    rev = np.cumsum(upper[::-1])[::-1]
    suffix_after = np.empty_like(rev)
    suffix_after[:-1] = rev[1:]
    suffix_after[-1] = 0.0
    prefix = prefix_all[group_ends]
    denom_base = prefix + suffix_after[group_ends]
    return losses_sorted[group_ends], prefix, denom_base


def quantile(cal: CalibrationSet, w_bound: float, alpha: float, beta: float) -> float | None:
    """Smallest observed loss where the stand-in CDF reaches (1-alpha)/(1-beta).

    Computed in one ascending pass with prefix sums. ``None`` means no
    observed loss reaches the level (including an infinite weight bound);
    callers report it as the trivial loss-support limit.
    """
    if not 0.0 < beta < alpha < 1.0:
        raise ValueError("need 0 < beta < alpha < 1")
    if math.isinf(w_bound):
        return None
    if w_bound < 0:
        raise ValueError("weight bound must be nonnegative")
    loss_ends, prefix, denom_base = _scan_arrays(
        cal.losses, cal.lower, cal.upper, cal.group_ends
    )
    threshold = (1.0 - alpha) / (1.0 - beta)
    idx = backend.best_stop_index(
        prefix, denom_base, np.array([w_bound]), np.array([threshold])
    )
    return None if idx < 0 else float(loss_ends[idx])


def _best_limit(loss_ends, prefix, denom_base, sorted_upper_bound, alpha, betas):
    wbars = _weight_bound_values(sorted_upper_bound, betas)
    thresholds = (1.0 - alpha) / (1.0 - betas)
    idx = backend.best_stop_index(prefix, denom_base, wbars, thresholds)
    return None if idx < 0 else float(loss_ends[idx])


def limit(
    cal: CalibrationSet,
    ws: WeightBoundSet,
    alpha: float,
    gamma: float = 1.0,
    beta_grid=None,
) -> float | None:
    """Tightest certified limit at miscoverage ``alpha``: the minimum over the
    beta grid of the level-(1-beta) weight bound's quantile."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    g = check_gamma(gamma)
    betas = (
        default_beta_grid(alpha)
        if beta_grid is None
        else np.asarray(beta_grid, dtype=np.float64)
    )
    if betas.ndim != 1 or betas.shape[0] == 0:
        raise ValueError("beta grid must be a nonempty vector")
    if np.any(betas <= 0) or np.any(betas >= alpha):
        raise ValueError("beta grid must lie strictly inside (0, alpha)")
    loss_ends, prefix, denom_base = _scan_arrays(
        cal.losses, cal.lower / g, cal.upper * g, cal.group_ends
    )
    return _best_limit(loss_ends, prefix, denom_base, ws.upper * g, alpha, betas)


@dataclasses.dataclass(frozen=True)
class LimitPoint:
    """One limit-curve entry; ``trivial`` marks the loss-support sentinel."""

    gamma: float
    alpha: float
    limit: float
    trivial: bool


@dataclasses.dataclass(frozen=True)
class LimitCurve:
    """Limit-curve entries over (gamma, alpha) grids plus per-gamma informativeness."""

    points: tuple[LimitPoint, ...]
    informativeness: dict[float, float]
    alpha_grid: np.ndarray
    gammas: tuple[float, ...]
    l_max: float

    def for_gamma(self, gamma: float) -> list[LimitPoint]:
        return [p for p in self.points if p.gamma == gamma]


def limit_curve(
    cal: CalibrationSet,
    ws: WeightBoundSet,
    alpha_grid=None,
    gammas=(1.0,),
    l_max: float | None = None,
    beta_points: int = 49,
) -> LimitCurve:
    """Limit curves for every (gamma, alpha) pair.

    ``l_max`` is the declared upper bound of the loss support; entries whose
    stand-in CDF never reaches the level are reported at ``l_max`` with
    ``trivial=True``. Informativeness per gamma is one minus the smallest
    alpha with a nontrivial limit (0 when there is none). Weights are sorted
    once; every cell reuses the same prefix sums.
    """
    if l_max is None:
        raise ValueError("l_max (declared loss-support upper bound) is required")
    l_max = float(l_max)
    if float(cal.losses[-1]) >= l_max:
        raise ValueError("all observed losses must lie strictly below l_max")
    alphas = (
        default_alpha_grid()
        if alpha_grid is None
        else np.sort(np.asarray(alpha_grid, dtype=np.float64))
    )
    if alphas.shape[0] == 0:
        raise ValueError("alpha grid must be nonempty")
    if np.any(alphas <= 0) or np.any(alphas >= 1):
        raise ValueError("alpha grid must lie strictly inside (0, 1)")
    gamma_list = [check_gamma(g) for g in gammas]
    if not gamma_list:
        raise ValueError("need at least one gamma")

    points: list[LimitPoint] = []
    informativeness: dict[float, float] = {}
    for g in gamma_list:
        loss_ends, prefix, denom_base = _scan_arrays(
            cal.losses, cal.lower / g, cal.upper * g, cal.group_ends
        )
        sorted_bound = ws.upper * g
        finite_alphas = []
        for a in alphas:
            a = float(a)
            value = _best_limit(
                loss_ends, prefix, denom_base, sorted_bound, a, default_beta_grid(a, beta_points)
            )
            if value is None:
                points.append(LimitPoint(g, a, l_max, True))
            else:
                points.append(LimitPoint(g, a, value, False))
                finite_alphas.append(a)
        informativeness[g] = (1.0 - min(finite_alphas)) if finite_alphas else 0.0
    return LimitCurve(tuple(points), informativeness, alphas, tuple(gamma_list), l_max)
