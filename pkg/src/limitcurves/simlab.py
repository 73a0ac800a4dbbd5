"""Synthetic lab: two-covariate Gaussian populations with a hidden selection
factor, an analytic true-odds oracle, and the Monte Carlo miscoverage harness.

The generator never needs an explicit sampling mechanism: covariates are drawn
per population and the true selection odds follow from Bayes' rule on the two
Gaussian families, with the prior ratio exposed as a parameter (it cancels in
the certified limits but matters for the reweighting baseline).
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .conformal import CalibrationSet, WeightBoundSet, default_beta_grid, limit
from .data import (
    PolicySpec,
    TargetCovariates,
    TrialDataset,
    TrialDesign,
    matched_split,
    random_split,
    sample_actions,
)
from .ipsw import ipsw_quantile
from .propensity import LabeledPool, LogisticConfig, fit_logistic, predict_odds
from .weights import action_probability_ratios

LOSS_NOISE_SD = 1.0


@dataclasses.dataclass(frozen=True)
class PopulationParams:
    """Means and variances of the two covariates and the hidden factor."""

    mean_x0: float
    mean_x1: float
    mean_u: float
    var_x0: float
    var_x1: float
    var_u: float

    def __post_init__(self):
        if min(self.var_x0, self.var_x1, self.var_u) <= 0:
            raise ValueError("variances must be positive")


POPULATIONS = {
    "A": PopulationParams(0.5, 0.5, 0.5, 1.0, 1.0, 1.0),
    "B": PopulationParams(0.0, 0.5, 0.0, 1.25, 1.5, 1.25),
    "C": PopulationParams(0.0, 0.0, 0.0, 1.5, 1.5, 1.5),
    "D": PopulationParams(0.25, 0.25, 0.25, 1.0, 0.25, 0.5),
    "trial": PopulationParams(0.0, 0.0, 0.0, 1.0, 1.0, 1.0),
}


@dataclasses.dataclass(frozen=True)
class SimScenario:
    """Target/trial populations, trial design, and sample sizes for one study."""

    target: PopulationParams
    trial: PopulationParams = POPULATIONS["trial"]
    design: TrialDesign = TrialDesign.uniform(2)
    n: int = 2000
    m: int = 500
    m_train: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.m_train < 1:
            raise ValueError("sample sizes must be at least 1")


def scenario(name: str, **overrides) -> SimScenario:
    """Scenario with a named built-in target population."""
    if name not in POPULATIONS:
        raise ValueError(f"unknown population {name!r}; choose from {sorted(POPULATIONS)}")
    return SimScenario(target=POPULATIONS[name], **overrides)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_target(
    params: PopulationParams, n: int, seed
) -> tuple[TargetCovariates, np.ndarray]:
    """Draw covariate-only target rows; the hidden factor is returned separately
    and only for oracle use."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = _rng(seed)
    draws = rng.standard_normal((n, 3))
    x0 = params.mean_x0 + math.sqrt(params.var_x0) * draws[:, 0]
    x1 = params.mean_x1 + math.sqrt(params.var_x1) * draws[:, 1]
    u = params.mean_u + math.sqrt(params.var_u) * draws[:, 2]
    return TargetCovariates(np.column_stack([x0, x1])), u


def loss_mean(actions, x, u) -> np.ndarray:
    """Conditional mean loss: a * x0^2 + x1 + a * u + (1 - a)."""
    a = np.asarray(actions, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return a * x[..., 0] ** 2 + x[..., 1] + a * np.asarray(u) + (1.0 - a)


def sample_losses(actions, x, u, rng: np.random.Generator) -> np.ndarray:
    mean = loss_mean(actions, x, u)
    return mean + LOSS_NOISE_SD * rng.standard_normal(mean.shape[0])


def sample_trial(
    params: PopulationParams, m: int, design: TrialDesign, seed
) -> tuple[TrialDataset, np.ndarray]:
    """Draw trial records with design-randomized actions and model losses."""
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = _rng(seed)
    draws = rng.standard_normal((m, 3))
    x0 = params.mean_x0 + math.sqrt(params.var_x0) * draws[:, 0]
    x1 = params.mean_x1 + math.sqrt(params.var_x1) * draws[:, 1]
    u = params.mean_u + math.sqrt(params.var_u) * draws[:, 2]
    x = np.column_stack([x0, x1])
    actions = sample_actions(
        np.broadcast_to(design.probs, (m, design.k_actions)), rng
    )
    losses = sample_losses(actions, x, u, rng)
    return TrialDataset(x, actions, losses, design.k_actions), u


def _gaussian_log_density(v, mean: float, var: float) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return -0.5 * (np.log(2.0 * math.pi * var) + (v - mean) ** 2 / var)


def true_odds(
    x, target: PopulationParams, trial: PopulationParams, prior_ratio: float = 1.0
) -> np.ndarray | float:
    """Exact covariate selection odds via Bayes on the two Gaussian families,
    with the hidden factor marginalized out (it is independent of x)."""
    if prior_ratio <= 0:
        raise ValueError("prior_ratio must be positive")
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != 2:
        raise ValueError("expected two covariates per row")
    log_ratio = (
        _gaussian_log_density(arr[:, 0], target.mean_x0, target.var_x0)
        - _gaussian_log_density(arr[:, 0], trial.mean_x0, trial.var_x0)
        + _gaussian_log_density(arr[:, 1], target.mean_x1, target.var_x1)
        - _gaussian_log_density(arr[:, 1], trial.mean_x1, trial.var_x1)
    )
    odds = prior_ratio * np.exp(log_ratio)
    return float(odds[0]) if single else odds


def true_odds_with_u(
    x, u, target: PopulationParams, trial: PopulationParams, prior_ratio: float = 1.0
) -> np.ndarray | float:
    """Selection odds given covariates and the hidden factor."""
    base = true_odds(x, target, trial, prior_ratio)
    u_arr = np.asarray(u, dtype=np.float64)
    factor = np.exp(
        _gaussian_log_density(u_arr, target.mean_u, target.var_u)
        - _gaussian_log_density(u_arr, trial.mean_u, trial.var_u)
    )
    out = base * factor
    return float(out) if np.isscalar(base) and u_arr.ndim == 0 else out


def true_miscalibration(
    x, u, model_odds, scenario: SimScenario, prior_ratio: float = 1.0
) -> np.ndarray | float:
    """Ratio of the exact selection odds (with the hidden factor) to the
    model's nominal odds; 1 everywhere means a perfectly calibrated model."""
    model_odds = np.asarray(model_odds, dtype=np.float64)
    if np.any(model_odds <= 0):
        raise ValueError("model odds must be strictly positive")
    exact = true_odds_with_u(x, u, scenario.target, scenario.trial, prior_ratio)
    return exact / model_odds


@dataclasses.dataclass(frozen=True)
class CertifiedMethod:
    """Certified limit configuration for the miscoverage harness."""

    gamma: float
    split: str = "matched"
    split_frac: float = 0.5
    odds_source: str = "fitted"
    beta_points: int = 49
    fit: LogisticConfig = LogisticConfig(l2=1e-4)

    def __post_init__(self):
        if self.split not in ("matched", "random"):
            raise ValueError("split must be 'matched' or 'random'")
        if self.odds_source not in ("fitted", "oracle"):
            raise ValueError("odds_source must be 'fitted' or 'oracle'")
        if self.gamma < 1.0:
            raise ValueError("gamma must be >= 1")


@dataclasses.dataclass(frozen=True)
class IpswMethod:
    """Reweighting-baseline configuration for the miscoverage harness."""

    odds_source: str = "fitted"
    normalized: bool = False
    fit: LogisticConfig = LogisticConfig(l2=1e-4)

    def __post_init__(self):
        if self.odds_source not in ("fitted", "oracle"):
            raise ValueError("odds_source must be 'fitted' or 'oracle'")


@dataclasses.dataclass(frozen=True)
class MiscoverageRow:
    alpha: float
    exceed_rate: float
    gap: float
    se: float


@dataclasses.dataclass(frozen=True)
class MiscoverageReport:
    """Empirical exceed rates per alpha; gap = alpha - exceed rate, with
    se = sqrt(rate * (1 - rate) / (runs * per_run))."""

    rows: tuple[MiscoverageRow, ...]
    runs: int
    per_run: int
    method: dict


def run_rng(master_seed: int, run_index: int) -> np.random.Generator:
    """Per-run generator derived from (master seed, run index); reproducible
    independently of execution order."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(run_index,))
    )


def _fitted_trial_odds(scn: SimScenario, target_x: np.ndarray, trial: TrialDataset, method, rng):
    train_covs, _ = sample_target(scn.trial, scn.m_train, rng)
    pool = LabeledPool(
        np.vstack([target_x, train_covs.x]),
        np.concatenate([np.zeros(target_x.shape[0], dtype=np.int64),
                        np.ones(scn.m_train, dtype=np.int64)]),
    )
    model = fit_logistic(pool, method.fit)
    return predict_odds(model, trial.x)


def _certified_limits(scn, trial, odds_values, policy, method, alphas, rng):
    split_seed = int(rng.integers(0, 2**63 - 1))
    if method.split == "matched":
        split = matched_split(trial, policy, scn.design, seed=split_seed)
        base_prime = odds_values[split.idx_prime]
        base_double = odds_values[split.idx_double_prime]
    else:
        split = random_split(trial, frac=method.split_frac, seed=split_seed)
        ratios = action_probability_ratios(policy, scn.design, trial)
        base = odds_values * ratios
        base_prime = base[split.idx_prime]
        base_double = base[split.idx_double_prime]
    cal = CalibrationSet.from_shift_weights(split.d_double_prime.losses, base_double)
    ws = WeightBoundSet(base_prime)
    return {
        a: limit(cal, ws, a, method.gamma, default_beta_grid(a, method.beta_points))
        for a in alphas
    }


def miscoverage_gap(
    scn: SimScenario,
    method,
    alphas,
    runs: int,
    per_run: int,
    seed: int = 0,
    policy: PolicySpec | None = None,
) -> MiscoverageReport:
    """Monte Carlo miscoverage of a method: regenerate the study ``runs`` times,
    compute the per-alpha limits, then draw ``per_run`` fresh target individuals
    under the policy and count losses exceeding the limit. Trivial limits cover
    by construction and contribute no exceed events."""
    if runs < 1 or per_run < 1:
        raise ValueError("runs and per_run must be at least 1")
    alphas = [float(a) for a in alphas]
    if not alphas or any(not 0.0 < a < 1.0 for a in alphas):
        raise ValueError("alphas must lie strictly inside (0, 1)")
    if policy is None:
        policy = PolicySpec.constant(1)
    if not isinstance(method, (CertifiedMethod, IpswMethod)):
        raise ValueError("method must be a CertifiedMethod or an IpswMethod")

    exceed = {a: 0 for a in alphas}
    for run_index in range(runs):
        rng = run_rng(seed, run_index)
        target_covs, _ = sample_target(scn.target, scn.n, rng)
        trial, _ = sample_trial(scn.trial, scn.m, scn.design, rng)
        if method.odds_source == "oracle":
            odds_values = np.asarray(
                true_odds(trial.x, scn.target, scn.trial, prior_ratio=scn.n / scn.m_train)
            )
        else:
            odds_values = np.asarray(
                _fitted_trial_odds(scn, target_covs.x, trial, method, rng)
            )

        if isinstance(method, CertifiedMethod):
            limits = _certified_limits(scn, trial, odds_values, policy, method, alphas, rng)
        else:
            limits = {
                a: ipsw_quantile(
                    trial, odds_values, policy, scn.design, scn.n, a, method.normalized
                )
                for a in alphas
            }

        fresh_covs, fresh_u = sample_target(scn.target, per_run, rng)
        fresh_actions = sample_actions(
            policy.prob_matrix(per_run, scn.design.k_actions), rng
        )
        fresh_losses = sample_losses(fresh_actions, fresh_covs.x, fresh_u, rng)
        for a in alphas:
            bound = limits[a]
            if bound is not None:
                exceed[a] += int(np.sum(fresh_losses > bound))

    total = runs * per_run
    rows = []
    for a in alphas:
        rate = exceed[a] / total
        rows.append(
            MiscoverageRow(a, rate, a - rate, math.sqrt(rate * (1.0 - rate) / total))
        )
    return MiscoverageReport(tuple(rows), runs, per_run, dataclasses.asdict(method))
