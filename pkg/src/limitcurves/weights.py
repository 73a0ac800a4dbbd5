"""Per-sample distribution-shift weights under a declared miscalibration factor."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .data import PolicySpec, TrialDataset, TrialDesign


def check_gamma(gamma: float) -> float:
    g = float(gamma)
    if not math.isfinite(g) or g < 1.0:
        raise ValueError("gamma must be a finite real >= 1 (1 = perfectly calibrated)")
    return g


@dataclasses.dataclass(frozen=True)
class WeightPair:
    """Lower and upper shift weights for one sample."""

    lower: float
    upper: float


def policy_ratio(
    policy: PolicySpec,
    design: TrialDesign,
    x,
    a: int,
    split_strategy: str = "random",
) -> float:
    """Action-probability ratio p_policy(a|x) / p_design(a).

    Matched-split samples carry ratio 1: conditional on inclusion, their
    actions are already distributed as the evaluated policy.
    """
    if split_strategy == "matched":
        return 1.0
    if a < 0 or a >= design.k_actions:
        raise ValueError("action index out of range")
    if policy.kind == "table":
        raise ValueError("row-aligned table policies need the vectorized form")
    row = policy.prob_matrix(1, design.k_actions)[0]
    return float(row[a] / design.probs[a])


def action_probability_ratios(
    policy: PolicySpec, design: TrialDesign, trial: TrialDataset
) -> np.ndarray:
    """Vector of p_policy(a_i|x_i) / p_design(a_i) over all trial rows."""
    probs = policy.prob_matrix(trial.m, trial.k_actions)
    return probs[np.arange(trial.m), trial.actions] / design.probs[trial.actions]


def bounded_weights(odds: float, ratio: float, gamma: float) -> WeightPair:
    """Weight pair (odds*ratio/gamma, gamma*odds*ratio) bracketing the unknown shift."""
    if odds <= 0 or not math.isfinite(odds):
        raise ValueError("odds must be strictly positive and finite")
    if ratio < 0:
        raise ValueError("ratio must be nonnegative")
    g = check_gamma(gamma)
    base = odds * ratio
    return WeightPair(base / g, base * g)


def bounded_weight_arrays(odds, ratios, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`bounded_weights` over aligned odds and ratio vectors."""
    odds = np.asarray(odds, dtype=np.float64)
    ratios = np.asarray(ratios, dtype=np.float64)
    if odds.shape != ratios.shape:
        raise ValueError("odds and ratios must align")
    if np.any(odds <= 0) or not np.all(np.isfinite(odds)):
        raise ValueError("odds must be strictly positive and finite")
    if np.any(ratios < 0):
        raise ValueError("ratios must be nonnegative")
    g = check_gamma(gamma)
    base = odds * ratios
    return base / g, base * g
