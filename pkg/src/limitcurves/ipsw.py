"""Inverse-probability-of-sampling-weighting baseline: expected-loss value and
empirical-CDF quantile limits. These carry no miscalibration certificate and
serve as the comparison point for the certified curves."""

from __future__ import annotations

import numpy as np

from .data import PolicySpec, TrialDataset, TrialDesign
from .weights import action_probability_ratios


def _odds_values(odds, m: int) -> np.ndarray:
    values = np.asarray(getattr(odds, "values", odds), dtype=np.float64)
    if values.shape != (m,):
        raise ValueError(f"odds must align with the {m} trial rows")
    return values


def ipsw_value(
    trial: TrialDataset,
    odds,
    policy: PolicySpec,
    design: TrialDesign,
    n_target: int,
) -> float:
    """Reweighted mean loss (1/n) * sum_i odds_i * ratio_i * loss_i."""
    if n_target < 1:
        raise ValueError("n_target must be at least 1")
    values = _odds_values(odds, trial.m)
    ratios = action_probability_ratios(policy, design, trial)
    return float(np.sum(values * ratios * trial.losses) / n_target)


def ipsw_cdf(
    trial: TrialDataset,
    odds,
    policy: PolicySpec,
    design: TrialDesign,
    n_target: int,
    ell: float,
) -> float:
    """Reweighted empirical CDF at ``ell``; deliberately not clipped to 1."""
    if n_target < 1:
        raise ValueError("n_target must be at least 1")
    values = _odds_values(odds, trial.m)
    ratios = action_probability_ratios(policy, design, trial)
    return float(np.sum(values * ratios * (trial.losses <= ell)) / n_target)


def ipsw_quantile(
    trial: TrialDataset,
    odds,
    policy: PolicySpec,
    design: TrialDesign,
    n_target: int,
    alpha: float,
    normalized: bool = False,
) -> float | None:
    """Smallest observed loss where the reweighted CDF reaches 1 - alpha.

    ``None`` when the total mass never reaches the level. ``normalized=True``
    rescales the weights to total mass 1 before the scan.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if n_target < 1:
        raise ValueError("n_target must be at least 1")
    values = _odds_values(odds, trial.m)
    ratios = action_probability_ratios(policy, design, trial)
    weights = values * ratios
    order = np.argsort(trial.losses, kind="stable")
    losses = trial.losses[order]
    if normalized:
        total = float(weights.sum())
        if total <= 0:
            return None
        cum = np.cumsum(weights[order]) / total
    else:
        cum = np.cumsum(weights[order]) / n_target
    threshold = 1.0 - alpha
    # evaluate only at the last index of each tie group (right continuity)
    if losses.shape[0] == 1:
        ends = np.array([0])
    else:
        ends = np.append(np.flatnonzero(losses[1:] != losses[:-1]), losses.shape[0] - 1)
    reached = cum[ends] >= threshold
    if not reached.any():
        return None
    return float(losses[ends[int(np.argmax(reached))]])
