"""Dataset containers, validation, and the two trial-splitting strategies."""

from __future__ import annotations

import dataclasses

import numpy as np

PROB_TOL = 1e-9


def _as_matrix(rows, name: str) -> np.ndarray:
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array of covariate rows")
    if x.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one row")
    return x


@dataclasses.dataclass(frozen=True)
class TrialSample:
    """One trial record: covariates, the assigned action, and the observed loss."""

    x: np.ndarray
    a: int
    l: float


class TrialDataset:
    """Trial records (covariates, action, loss) with a fixed action count.

    With ``strict=True`` non-finite covariates or losses are rejected at
    construction; loaders pass ``strict=False`` and rely on
    :func:`validate_dataset` to report problems instead.
    """

    def __init__(self, x, actions, losses, k_actions: int, strict: bool = True):
        self.x = _as_matrix(x, "trial covariates")
        self.actions = np.asarray(actions, dtype=np.int64)
        self.losses = np.asarray(losses, dtype=np.float64)
        if self.actions.shape != (self.m,) or self.losses.shape != (self.m,):
            raise ValueError("actions and losses must align with the covariate rows")
        if k_actions < 1:
            raise ValueError("k_actions must be at least 1")
        self.k_actions = int(k_actions)
        if self.actions.min() < 0 or self.actions.max() >= self.k_actions:
            raise ValueError("action indices must lie in [0, k_actions)")
        if strict:
            if not np.all(np.isfinite(self.x)):
                raise ValueError("trial covariates must be finite")
            if not np.all(np.isfinite(self.losses)):
                raise ValueError("trial losses must be finite")

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @classmethod
    def from_samples(cls, samples, k_actions: int, strict: bool = True) -> "TrialDataset":
        samples = list(samples)
        if not samples:
            raise ValueError("need at least one trial sample")
        x = np.stack([np.asarray(s.x, dtype=np.float64) for s in samples])
        a = np.array([s.a for s in samples], dtype=np.int64)
        l = np.array([s.l for s in samples], dtype=np.float64)
        return cls(x, a, l, k_actions, strict=strict)

    def samples(self) -> list[TrialSample]:
        return [
            TrialSample(self.x[i].copy(), int(self.actions[i]), float(self.losses[i]))
            for i in range(self.m)
        ]

    def subset(self, indices: np.ndarray) -> "TrialDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return TrialDataset(
            self.x[idx], self.actions[idx], self.losses[idx], self.k_actions, strict=False
        )


class TargetCovariates:
    """Covariate-only rows drawn from the target population."""

    def __init__(self, rows, strict: bool = True):
        self.x = _as_matrix(rows, "target covariates")
        if strict and not np.all(np.isfinite(self.x)):
            raise ValueError("target covariates must be finite")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


class PolicySpec:
    """Action-probability rule for the evaluated policy.

    Three kinds are supported: ``constant`` (always play one action),
    ``uniform`` (equal mass on every action) and ``table`` (explicit per-row
    probability vectors aligned to a dataset's rows).
    """

    def __init__(self, kind: str, action: int | None = None, table=None):
        if kind not in ("constant", "uniform", "table"):
            raise ValueError(f"unknown policy kind: {kind!r}")
        self.kind = kind
        self.action = None if action is None else int(action)
        self.table = None
        if kind == "constant":
            if self.action is None or self.action < 0:
                raise ValueError("constant policy needs a nonnegative action index")
        elif kind == "table":
            t = np.asarray(table, dtype=np.float64)
            if t.ndim != 2 or t.shape[0] == 0:
                raise ValueError("policy table must be a nonempty 2-d array")
            if np.any(t < 0):
                raise ValueError("policy probabilities must be nonnegative")
            if np.any(np.abs(t.sum(axis=1) - 1.0) > PROB_TOL):
                raise ValueError("policy probability rows must sum to 1")
            self.table = t

    @classmethod
    def constant(cls, action: int) -> "PolicySpec":
        return cls("constant", action=action)

    @classmethod
    def uniform(cls) -> "PolicySpec":
        return cls("uniform")

    @classmethod
    def from_table(cls, table) -> "PolicySpec":
        return cls("table", table=table)

    def prob_matrix(self, n_rows: int, k_actions: int) -> np.ndarray:
        """Per-row action probabilities as an (n_rows, k_actions) matrix."""
        if self.kind == "constant":
            if self.action >= k_actions:
                raise ValueError("constant policy action exceeds the action count")
            out = np.zeros((n_rows, k_actions))
            out[:, self.action] = 1.0
            return out
        if self.kind == "uniform":
            return np.full((n_rows, k_actions), 1.0 / k_actions)
        if self.table.shape != (n_rows, k_actions):
            raise ValueError(
                f"policy table shape {self.table.shape} does not match "
                f"({n_rows}, {k_actions})"
            )
        return self.table


class TrialDesign:
    """Covariate-free randomization probabilities of the trial."""

    def __init__(self, probs):
        p = np.asarray(probs, dtype=np.float64)
        if p.ndim != 1 or p.shape[0] < 1:
            raise ValueError("design probabilities must be a nonempty vector")
        if np.any(p <= 0):
            raise ValueError("design probabilities must be strictly positive")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError("design probabilities must sum to 1")
        self.probs = p

    @classmethod
    def uniform(cls, k_actions: int) -> "TrialDesign":
        return cls(np.full(k_actions, 1.0 / k_actions))

    @property
    def k_actions(self) -> int:
        return self.probs.shape[0]


@dataclasses.dataclass(frozen=True)
class SplitResult:
    """Partition of a trial dataset into the weight-bound half and the calibration half."""

    d_prime: TrialDataset
    d_double_prime: TrialDataset
    strategy: str
    seed: int
    idx_prime: np.ndarray
    idx_double_prime: np.ndarray


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def validate_dataset(
    trial: TrialDataset, target: TargetCovariates, l_max: float | None = None
) -> ValidationReport:
    """Report-only consistency checks between a trial dataset and target covariates."""
    checks = []
    checks.append(
        CheckResult(
            "dimension_match",
            trial.dim == target.dim,
            f"trial d={trial.dim}, target d={target.dim}",
        )
    )
    checks.append(
        CheckResult("trial_covariates_finite", bool(np.all(np.isfinite(trial.x))))
    )
    checks.append(CheckResult("trial_losses_finite", bool(np.all(np.isfinite(trial.losses)))))
    checks.append(
        CheckResult("target_covariates_finite", bool(np.all(np.isfinite(target.x))))
    )
    checks.append(
        CheckResult(
            "actions_in_range",
            bool(trial.actions.min() >= 0 and trial.actions.max() < trial.k_actions),
            f"k_actions={trial.k_actions}",
        )
    )
    if l_max is not None:
        finite = trial.losses[np.isfinite(trial.losses)]
        below = finite.size == trial.losses.size and bool(np.all(finite < l_max))
        checks.append(CheckResult("losses_below_l_max", below, f"l_max={l_max}"))
    return ValidationReport(tuple(checks))


def sample_actions(prob_matrix: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one action per row from per-row probability vectors."""
    cum = np.cumsum(prob_matrix, axis=1)
    u = rng.random(prob_matrix.shape[0])
    drawn = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(drawn, prob_matrix.shape[1] - 1).astype(np.int64)


def random_split(trial: TrialDataset, frac: float = 0.5, seed: int = 0) -> SplitResult:
    """Seeded random partition with |D'| = round(frac * m)."""
    if not 0.0 < frac < 1.0:
        raise ValueError("frac must lie strictly inside (0, 1)")
    m_prime = int(np.floor(frac * trial.m + 0.5))
    if m_prime < 1 or m_prime >= trial.m:
        raise ValueError(
            f"degenerate split: frac={frac} over m={trial.m} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(trial.m)
    idx_prime = np.sort(perm[:m_prime])
    idx_double = np.sort(perm[m_prime:])
    return SplitResult(
        trial.subset(idx_prime),
        trial.subset(idx_double),
        "random",
        int(seed),
        idx_prime,
        idx_double,
    )


def matched_split(
    trial: TrialDataset, policy: PolicySpec, design: TrialDesign, seed: int = 0
) -> SplitResult:
    """Rejection-style partition: a sample joins the calibration half when a fresh
    policy draw reproduces its recorded action.

    Assumes the recorded actions were randomized covariate-free per ``design``.
    """
    if design.k_actions != trial.k_actions:
        raise ValueError("design action count does not match the trial dataset")
    probs = policy.prob_matrix(trial.m, trial.k_actions)
    rng = np.random.default_rng(seed)
    drawn = sample_actions(probs, rng)
    match = drawn == trial.actions
    idx_double = np.flatnonzero(match)
    idx_prime = np.flatnonzero(~match)
    if idx_double.size == 0 or idx_prime.size == 0:
        raise ValueError("degenerate matched split: one side is empty")
    return SplitResult(
        trial.subset(idx_prime),
        trial.subset(idx_double),
        "matched",
        int(seed),
        idx_prime,
        idx_double,
    )
