"""Selection-odds models: in-repo logistic fit, external scores, reliability diagnostics."""

from __future__ import annotations

import csv
import dataclasses
import json
import math

import numpy as np

from .fileio import atomic_write_text

LOGIT_CLAMP = 30.0


@dataclasses.dataclass(frozen=True)
class LogisticConfig:
    """Hyperparameters of the full-batch line-search gradient fit.

    ``max_coef`` is a separation guard: once any standardized coefficient
    exceeds it the likelihood is effectively degenerate and the fit is
    reported as non-converged. A positive ``l2`` keeps coefficients finite.
    """

    l2: float = 1e-6
    max_iter: int = 1000
    tol: float = 1e-6
    init_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_coef: float = 100.0

    def __post_init__(self):
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclasses.dataclass(frozen=True)
class FitReport:
    converged: bool
    iterations: int
    grad_max: float
    objectives: tuple[float, ...]


class LabeledPool:
    """Covariate rows labeled 0 (target) or 1 (trial)."""

    def __init__(self, x, labels, strict: bool = True):
        self.x = np.asarray(x, dtype=np.float64)
        if self.x.ndim != 2 or self.x.shape[0] == 0:
            raise ValueError("pool covariates must be a nonempty 2-d array")
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.labels.shape != (self.x.shape[0],):
            raise ValueError("labels must align with the covariate rows")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ValueError("labels must be 0 (target) or 1 (trial)")
        if len(np.unique(self.labels)) < 2:
            raise ValueError("pool must contain both target and trial rows")
        if strict and not np.all(np.isfinite(self.x)):
            raise ValueError("pool covariates must be finite")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def drop_feature(self, k: int) -> "LabeledPool":
        if not 0 <= k < self.dim:
            raise ValueError(f"feature index {k} out of range for d={self.dim}")
        kept = np.delete(self.x, k, axis=1)
        return LabeledPool(kept, self.labels, strict=False)


@dataclasses.dataclass(frozen=True)
class LogisticModel:
    """Logistic model of the trial-membership probability, in standardized feature space."""

    coefficients: np.ndarray
    intercept: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    report: FitReport | None = None

    @property
    def dim(self) -> int:
        return self.coefficients.shape[0]

    @property
    def raw_coefficients(self) -> np.ndarray:
        """Coefficients mapped back to the unstandardized feature space."""
        return self.coefficients / self.feature_scale

    @property
    def raw_intercept(self) -> float:
        return float(self.intercept - np.sum(self.coefficients * self.feature_mean / self.feature_scale))


def _nll_and_grad(z, s, theta, l2):
    w = theta[:-1]
    b = theta[-1]
    logits = z @ w + b
    nll = float(np.mean(np.logaddexp(0.0, logits) - s * logits))
    obj = nll + 0.5 * l2 * float(w @ w)
    p = 1.0 / (1.0 + np.exp(-logits))
    resid = p - s
    grad = np.empty_like(theta)
    grad[:-1] = z.T @ resid / z.shape[0] + l2 * w
    grad[-1] = float(np.mean(resid))
    return obj, grad


def fit_logistic(pool: LabeledPool, config: LogisticConfig = LogisticConfig()) -> LogisticModel:
    """Minimize the L2-regularized negative log-likelihood by gradient descent
    with backtracking line search. Standardization is fitted on the pool;
    the intercept is not penalized and no class reweighting is applied."""
    mean = pool.x.mean(axis=0)
    scale = pool.x.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    z = (pool.x - mean) / scale
    s = pool.labels.astype(np.float64)

    theta = np.zeros(pool.dim + 1)
    obj, grad = _nll_and_grad(z, s, theta, config.l2)
    objectives = [obj]
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        gmax = float(np.max(np.abs(grad)))
        if gmax <= config.tol:
            converged = True
            iterations -= 1
            break
        gsq = float(grad @ grad)
        step = config.init_step
        while step > 1e-18:
            candidate = theta - step * grad
            cand_obj, cand_grad = _nll_and_grad(z, s, candidate, config.l2)
            if cand_obj <= obj - config.armijo * step * gsq:
                break
            step *= config.backtrack
        else:
            break  # line search stalled
        theta, obj, grad = candidate, cand_obj, cand_grad
        objectives.append(obj)
        if float(np.max(np.abs(theta[:-1]))) > config.max_coef:
            break  # separation guard
    gmax = float(np.max(np.abs(grad)))
    if gmax <= config.tol and float(np.max(np.abs(theta[:-1]))) <= config.max_coef:
        converged = True
    report = FitReport(converged, iterations, gmax, tuple(objectives))
    return LogisticModel(theta[:-1].copy(), float(theta[-1]), mean, scale, report)


def predict_logit(model: LogisticModel, x) -> np.ndarray | float:
    """Clamped log-odds of trial membership, ``log p(S=1|x) / p(S=0|x)``."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} features, got {arr.shape[1]}")
    z = (arr - model.feature_mean) / model.feature_scale
    logits = np.clip(z @ model.coefficients + model.intercept, -LOGIT_CLAMP, LOGIT_CLAMP)
    return float(logits[0]) if single else logits


def predict_odds(model: LogisticModel, x) -> np.ndarray | float:
    """Nominal selection odds ``p(S=0|x) / p(S=1|x)``; strictly positive and finite."""
    logits = predict_logit(model, x)
    return np.exp(-logits) if isinstance(logits, np.ndarray) else math.exp(-logits)


class OddsTable:
    """Per-row nominal selection odds aligned to a dataset, with a provenance tag."""

    def __init__(self, values, provenance: str):
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape[0] == 0:
            raise ValueError("odds table must be a nonempty vector")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise ValueError("odds must be strictly positive and finite")
        if provenance not in ("fitted", "external"):
            raise ValueError("provenance must be 'fitted' or 'external'")
        self.provenance = provenance

    def __len__(self) -> int:
        return self.values.shape[0]

    def aligned(self, n_rows: int) -> np.ndarray:
        if len(self) != n_rows:
            raise ValueError(f"odds table has {len(self)} rows, dataset has {n_rows}")
        return self.values


def odds_table_from_model(model: LogisticModel, x) -> OddsTable:
    return OddsTable(predict_odds(model, np.asarray(x, dtype=np.float64)), "fitted")


def load_external_scores(path, prior_correction: float = 1.0) -> OddsTable:
    """Read an ``id,p_s1`` or ``id,odds`` score file; ids must cover 0..N-1.

    ``prior_correction`` multiplies the odds, for scores produced by models
    trained with class balancing.
    """
    if prior_correction <= 0 or not math.isfinite(prior_correction):
        raise ValueError("prior_correction must be a positive finite number")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty score file") from None
        header = [h.strip() for h in header]
        if len(header) != 2 or header[0] != "id" or header[1] not in ("p_s1", "odds"):
            raise ValueError(f"{path}: header must be 'id,p_s1' or 'id,odds'")
        kind = header[1]
        ids, vals = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            try:
                ids.append(int(row[0]))
                vals.append(float(row[1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: parse failure: {exc}") from None
    if not ids:
        raise ValueError(f"{path}: no score rows")
    order = np.argsort(ids)
    ids_arr = np.asarray(ids, dtype=np.int64)[order]
    vals_arr = np.asarray(vals, dtype=np.float64)[order]
    if not np.array_equal(ids_arr, np.arange(len(ids_arr))):
        raise ValueError(f"{path}: ids must be exactly 0..{len(ids_arr) - 1} with no gaps")
    if kind == "p_s1":
        if np.any(vals_arr <= 0) or np.any(vals_arr >= 1):
            raise ValueError(f"{path}: p_s1 values must lie strictly inside (0, 1)")
        odds = (1.0 - vals_arr) / vals_arr
    else:
        odds = vals_arr
    if np.any(odds <= 0) or not np.all(np.isfinite(odds)):
        raise ValueError(f"{path}: odds must be strictly positive and finite")
    return OddsTable(odds * prior_correction, "external")


def save_model(model: LogisticModel, path) -> None:
    payload = {
        "schema_version": 1,
        "kind": "logistic-odds-model",
        "coefficients": [float(c) for c in model.coefficients],
        "intercept": model.intercept,
        "feature_mean": [float(v) for v in model.feature_mean],
        "feature_scale": [float(v) for v in model.feature_scale],
        "converged": model.report.converged if model.report else None,
        "iterations": model.report.iterations if model.report else None,
        "grad_max": model.report.grad_max if model.report else None,
    }
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def load_model(path) -> LogisticModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("kind") != "logistic-odds-model":
        raise ValueError(f"{path}: not a logistic odds model file")
    return LogisticModel(
        np.asarray(payload["coefficients"], dtype=np.float64),
        float(payload["intercept"]),
        np.asarray(payload["feature_mean"], dtype=np.float64),
        np.asarray(payload["feature_scale"], dtype=np.float64),
    )


@dataclasses.dataclass(frozen=True)
class ReliabilityBin:
    """One nominal-odds bin: interval, mean nominal odds, and the count-based
    observed odds (NaN when the bin holds no trial rows)."""

    lower: float
    upper: float
    mean_nominal: float
    observed: float
    n_target: int
    n_trial: int


def reliability_diagram(odds, labels, bins: int = 5) -> list[ReliabilityBin]:
    """Equal-count bins of nominal odds with count-based observed odds per bin.

    Quantile edges are deduplicated, so heavily tied odds collapse into fewer
    effective bins (a constant table yields a single bin).
    """
    values = np.asarray(getattr(odds, "values", odds), dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if values.shape != labels.shape:
        raise ValueError("odds and labels must align")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    if len(np.unique(labels)) < 2:
        raise ValueError("pool must contain both target and trial rows")
    edges = np.unique(np.quantile(values, np.linspace(0.0, 1.0, bins + 1)))
    if edges.shape[0] == 1:
        assign = np.zeros(values.shape[0], dtype=np.int64)
        edges = np.array([edges[0], edges[0]])
    else:
        assign = np.clip(
            np.searchsorted(edges, values, side="right") - 1, 0, edges.shape[0] - 2
        )
    out = []
    for b in range(edges.shape[0] - 1):
        mask = assign == b
        if not mask.any():
            continue
        n_trial = int(np.sum(labels[mask] == 1))
        n_target = int(np.sum(labels[mask] == 0))
        observed = n_target / n_trial if n_trial > 0 else math.nan
        out.append(
            ReliabilityBin(
                float(edges[b]),
                float(edges[b + 1]),
                float(values[mask].mean()),
                observed,
                n_target,
                n_trial,
            )
        )
    return out
