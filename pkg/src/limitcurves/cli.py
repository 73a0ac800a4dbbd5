"""Command-line front end: simulation, model fitting, limit curves, diagnostics.

Every subcommand is deterministic given its flags and seed. Outputs are
written atomically and JSON payloads embed the resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import fileio, simlab
from .conformal import CalibrationSet, WeightBoundSet, limit_curve
from .data import (
    PolicySpec,
    TrialDesign,
    matched_split,
    random_split,
    validate_dataset,
)
from .gamma_bench import benchmark_all
from .ipsw import ipsw_quantile, ipsw_value
from .propensity import (
    LabeledPool,
    LogisticConfig,
    fit_logistic,
    load_external_scores,
    load_model,
    predict_odds,
    reliability_diagram,
    save_model,
)
from .simlab import POPULATIONS, CertifiedMethod, IpswMethod, SimScenario, miscoverage_gap
from .weights import action_probability_ratios


def parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"bad number list {text!r}: {exc}") from None


def parse_alpha_grid(text: str) -> np.ndarray:
    """Grid spec ``start:stop:step`` with an inclusive stop."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"alpha grid must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"bad alpha grid {text!r}")
    count = int(round((stop - start) / step)) + 1
    grid = start + step * np.arange(count)
    grid = grid[(grid > 0) & (grid < 1)]
    if grid.size == 0:
        raise ValueError(f"alpha grid {text!r} has no points inside (0, 1)")
    return grid


def _read_policy_table(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        k = len(header)
        if header != [f"p{j}" for j in range(k)]:
            raise ValueError(f"{path}: expected header p0,...,p{k - 1}")
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array([[float(v) for v in row] for row in rows])


def parse_policy(text: str) -> PolicySpec:
    if text == "uniform":
        return PolicySpec.uniform()
    if text.startswith("constant:"):
        return PolicySpec.constant(int(text.split(":", 1)[1]))
    if text.startswith("table:"):
        return PolicySpec.from_table(_read_policy_table(text.split(":", 1)[1]))
    raise ValueError(f"bad policy {text!r}; use constant:<a>, uniform, or table:<path>")


def parse_design(text: str) -> TrialDesign:
    if text.startswith("uniform:"):
        return TrialDesign.uniform(int(text.split(":", 1)[1]))
    if text.startswith("probs:"):
        return TrialDesign(parse_floats(text.split(":", 1)[1]))
    raise ValueError(f"bad design {text!r}; use uniform:<K> or probs:<p0,...>")


def _config_ns(ns: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    return fileio.jsonable({k: v for k, v in vars(ns).items() if k not in skip})


def _fit_config(ns: argparse.Namespace) -> LogisticConfig:
    return LogisticConfig(l2=ns.l2, max_iter=ns.max_iter, tol=ns.tol)


def _add_fit_flags(sub) -> None:
    sub.add_argument("--l2", type=float, default=1e-4, help="L2 penalty on coefficients")
    sub.add_argument("--max-iter", type=int, default=1000)
    sub.add_argument("--tol", type=float, default=1e-6, help="gradient max-norm stop rule")


def _add_odds_source(sub) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", help="logistic odds model JSON")
    group.add_argument("--scores", help="external score CSV (id,p_s1 or id,odds)")
    sub.add_argument(
        "--prior-correction",
        type=float,
        default=1.0,
        help="multiplier applied to external odds (for class-balanced scores)",
    )


def _resolve_odds(ns, x_rows: np.ndarray) -> tuple[np.ndarray, str]:
    if ns.model:
        model = load_model(ns.model)
        return np.asarray(predict_odds(model, x_rows)), "model"
    table = load_external_scores(ns.scores, ns.prior_correction)
    return table.aligned(x_rows.shape[0]), "scores"


def _require_valid(trial, target, l_max=None) -> None:
    report = validate_dataset(trial, target, l_max)
    if not report.passed:
        details = "; ".join(f"{c.name} ({c.detail})" if c.detail else c.name for c in report.failures())
        raise ValueError(f"dataset validation failed: {details}")


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_simulate(ns) -> int:
    if ns.pop not in POPULATIONS or ns.pop == "trial":
        raise ValueError(f"unknown population {ns.pop!r}; choose from A, B, C, D")
    rng = np.random.default_rng(ns.seed)
    design = TrialDesign.uniform(2)
    target, _ = simlab.sample_target(POPULATIONS[ns.pop], ns.n, rng)
    trial, _ = simlab.sample_trial(POPULATIONS["trial"], ns.m, design, rng)
    fileio.write_target_csv(ns.target_out, target)
    fileio.write_trial_csv(ns.trial_out, trial)
    if ns.pool_out:
        train, _ = simlab.sample_target(POPULATIONS["trial"], ns.m_train, rng)
        pool = LabeledPool(
            np.vstack([target.x, train.x]),
            np.concatenate(
                [np.zeros(target.n, dtype=np.int64), np.ones(ns.m_train, dtype=np.int64)]
            ),
        )
        fileio.write_pool_csv(ns.pool_out, pool)
    return 0


def _cmd_fit(ns) -> int:
    pool = fileio.read_pool_csv(ns.pool)
    if not np.all(np.isfinite(pool.x)):
        raise ValueError("pool covariates must be finite")
    model = fit_logistic(pool, _fit_config(ns))
    save_model(model, ns.out)
    report = model.report
    print(
        f"fit: converged={report.converged} iterations={report.iterations} "
        f"grad_max={report.grad_max:.3e}"
    )
    if not report.converged:
        print("fit: non-converged (separated data needs --l2 > 0)", file=sys.stderr)
        return 1
    return 0


def _cmd_evaluate(ns) -> int:
    design = parse_design(ns.design)
    trial = fileio.read_trial_csv(ns.trial, k_actions=design.k_actions)
    target = fileio.read_target_csv(ns.target)
    _require_valid(trial, target, ns.l_max)
    policy = parse_policy(ns.policy)
    odds_values, _ = _resolve_odds(ns, trial.x)

    seed = ns.seed
    if ns.split == "matched":
        split = matched_split(trial, policy, design, seed=seed)
        base_prime = odds_values[split.idx_prime]
        base_double = odds_values[split.idx_double_prime]
    else:
        split = random_split(trial, frac=ns.frac, seed=seed)
        base = odds_values * action_probability_ratios(policy, design, trial)
        base_prime = base[split.idx_prime]
        base_double = base[split.idx_double_prime]

    cal = CalibrationSet.from_shift_weights(split.d_double_prime.losses, base_double)
    ws = WeightBoundSet(base_prime)
    curve = limit_curve(
        cal,
        ws,
        alpha_grid=parse_alpha_grid(ns.alpha_grid),
        gammas=parse_floats(ns.gammas),
        l_max=ns.l_max,
        beta_points=ns.beta_points,
    )
    payload = {
        "schema_version": fileio.SCHEMA_VERSION,
        "kind": "limit-curves",
        "config": _config_ns(ns),
        "l_max": curve.l_max,
        "gammas": list(curve.gammas),
        "split_sizes": {"d_prime": split.d_prime.m, "d_double_prime": split.d_double_prime.m},
        "informativeness": {repr(g): v for g, v in curve.informativeness.items()},
        "curves": [
            {"gamma": p.gamma, "alpha": p.alpha, "limit": p.limit, "trivial": p.trivial}
            for p in curve.points
        ],
    }
    fileio.write_json(ns.out_json, fileio.jsonable(payload))
    fileio.write_limit_curve_csv(ns.out_csv, curve)
    return 0


def _cmd_benchmark_gamma(ns) -> int:
    pool = fileio.read_pool_csv(ns.pool)
    if not np.all(np.isfinite(pool.x)):
        raise ValueError("pool covariates must be finite")
    reports = benchmark_all(pool, _fit_config(ns), rows=ns.rows)
    payload = {
        "schema_version": fileio.SCHEMA_VERSION,
        "kind": "gamma-benchmark",
        "config": _config_ns(ns),
        "reports": [
            {
                "feature": r.feature,
                "rows_used": r.rows_used,
                "suggested_gamma": {repr(q): v for q, v in r.suggested_gamma.items()},
                "ratio_quantiles": {repr(q): v for q, v in r.ratio_quantiles.items()},
            }
            for r in reports
        ],
    }
    fileio.write_json(ns.out, fileio.jsonable(payload))
    return 0


def _cmd_reliability(ns) -> int:
    pool = fileio.read_pool_csv(ns.pool)
    if not np.all(np.isfinite(pool.x)):
        raise ValueError("pool covariates must be finite")
    odds_values, _ = _resolve_odds(ns, pool.x)
    bins = reliability_diagram(odds_values, pool.labels, bins=ns.bins)
    fileio.write_reliability_csv(ns.out, bins)
    return 0


def _cmd_ipsw(ns) -> int:
    design = parse_design(ns.design)
    trial = fileio.read_trial_csv(ns.trial, k_actions=design.k_actions)
    target = fileio.read_target_csv(ns.target)
    _require_valid(trial, target)
    policy = parse_policy(ns.policy)
    odds_values, _ = _resolve_odds(ns, trial.x)
    alphas = parse_floats(ns.alphas)
    quantiles = []
    for a in alphas:
        q = ipsw_quantile(trial, odds_values, policy, design, target.n, a, ns.normalized)
        quantiles.append({"alpha": a, "limit": q, "trivial": q is None})
    payload = {
        "schema_version": fileio.SCHEMA_VERSION,
        "kind": "ipsw-baseline",
        "config": _config_ns(ns),
        "n": target.n,
        "m": trial.m,
        "value": ipsw_value(trial, odds_values, policy, design, target.n),
        "quantiles": quantiles,
    }
    fileio.write_json(ns.out, fileio.jsonable(payload))
    return 0


def _cmd_miscoverage(ns) -> int:
    if ns.pop not in POPULATIONS or ns.pop == "trial":
        raise ValueError(f"unknown population {ns.pop!r}; choose from A, B, C, D")
    scn = SimScenario(
        target=POPULATIONS[ns.pop],
        design=parse_design(ns.design),
        n=ns.n,
        m=ns.m,
        m_train=ns.m_train,
        seed=ns.seed,
    )
    if ns.method == "certified":
        method = CertifiedMethod(
            gamma=ns.gamma,
            split=ns.split,
            split_frac=ns.frac,
            odds_source=ns.odds,
            beta_points=ns.beta_points,
            fit=_fit_config(ns),
        )
    else:
        method = IpswMethod(odds_source=ns.odds, normalized=ns.normalized, fit=_fit_config(ns))
    report = miscoverage_gap(
        scn,
        method,
        parse_floats(ns.alphas),
        runs=ns.runs,
        per_run=ns.per_run,
        seed=ns.seed,
        policy=parse_policy(ns.policy),
    )
    payload = {
        "schema_version": fileio.SCHEMA_VERSION,
        "kind": "miscoverage",
        "config": _config_ns(ns),
        "runs": report.runs,
        "per_run": report.per_run,
        "method": report.method,
        "rows": [
            {"alpha": r.alpha, "exceed_rate": r.exceed_rate, "gap": r.gap, "se": r.se}
            for r in report.rows
        ],
    }
    fileio.write_json(ns.out, fileio.jsonable(payload))
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="limitcurves",
        description="Certified limit curves for out-of-sample policy losses",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def sub(name: str, help_text: str) -> argparse.ArgumentParser:
        s = subparsers.add_parser(name, help=help_text)
        s.add_argument("--config", help="key=value settings file; flags override it")
        registry[name] = s
        return s

    s = sub("simulate", "draw a synthetic target/trial study and write CSVs")
    s.add_argument("--pop", required=True, help="target population: A, B, C or D")
    s.add_argument("--n", type=int, default=2000, help="target covariate rows")
    s.add_argument("--m", type=int, default=500, help="trial rows")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--target-out", required=True)
    s.add_argument("--trial-out", required=True)
    s.add_argument("--pool-out", help="optional labeled pool CSV for model training")
    s.add_argument("--m-train", type=int, default=500, help="trial rows in the pool")
    s.set_defaults(func=_cmd_simulate)

    s = sub("fit", "fit the logistic selection-odds model on a labeled pool")
    s.add_argument("--pool", required=True)
    _add_fit_flags(s)
    s.add_argument("--out", required=True, help="model JSON path")
    s.set_defaults(func=_cmd_fit)

    s = sub("evaluate", "compute limit curves for a policy")
    s.add_argument("--trial", required=True)
    s.add_argument("--target", required=True)
    _add_odds_source(s)
    s.add_argument("--policy", required=True, help="constant:<a>, uniform, or table:<path>")
    s.add_argument("--design", default="uniform:2", help="uniform:<K> or probs:<p0,...>")
    s.add_argument("--gammas", default="1", help="comma-separated miscalibration factors")
    s.add_argument("--alpha-grid", default="0.01:0.99:0.01", help="start:stop:step")
    s.add_argument("--beta-points", type=int, default=49)
    s.add_argument("--split", choices=("random", "matched"), default="random")
    s.add_argument("--frac", type=float, default=0.5, help="random-split fraction for the weight-bound half")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--l-max", type=float, required=True, help="declared loss-support upper bound")
    s.add_argument("--out-json", required=True)
    s.add_argument("--out-csv", required=True)
    s.set_defaults(func=_cmd_evaluate)

    s = sub("benchmark-gamma", "suggest miscalibration factors by omitting covariates")
    s.add_argument("--pool", required=True)
    _add_fit_flags(s)
    s.add_argument("--rows", choices=("all", "trial", "target"), default="all")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_benchmark_gamma)

    s = sub("reliability", "reliability diagram of nominal vs observed odds")
    s.add_argument("--pool", required=True)
    _add_odds_source(s)
    s.add_argument("--bins", type=int, default=5)
    s.add_argument("--out", required=True, help="reliability CSV path")
    s.set_defaults(func=_cmd_reliability)

    s = sub("ipsw", "reweighting baseline: value and quantile limits")
    s.add_argument("--trial", required=True)
    s.add_argument("--target", required=True)
    _add_odds_source(s)
    s.add_argument("--policy", required=True)
    s.add_argument("--design", default="uniform:2")
    s.add_argument("--alphas", default="0.05,0.1,0.2")
    s.add_argument("--normalized", action="store_true", help="rescale weights to total mass 1")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_ipsw)

    s = sub("miscoverage", "Monte Carlo miscoverage gap on a synthetic scenario")
    s.add_argument("--pop", required=True)
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--m", type=int, default=500)
    s.add_argument("--m-train", type=int, default=500)
    s.add_argument("--method", choices=("certified", "ipsw"), required=True)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--split", choices=("matched", "random"), default="matched")
    s.add_argument("--frac", type=float, default=0.5)
    s.add_argument("--odds", choices=("fitted", "oracle"), default="fitted")
    s.add_argument("--normalized", action="store_true")
    s.add_argument("--policy", default="constant:1")
    s.add_argument("--design", default="uniform:2")
    s.add_argument("--alphas", default="0.05,0.1,0.2")
    s.add_argument("--beta-points", type=int, default=49)
    s.add_argument("--runs", type=int, default=200)
    s.add_argument("--per-run", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    _add_fit_flags(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_miscoverage)

    return parser, registry


def _bool_from_text(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def _apply_config_defaults(sub: argparse.ArgumentParser, path: str) -> None:
    entries = fileio.read_config_file(path)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in entries.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None or dest in ("help", "config"):
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = _bool_from_text(raw)
        elif action.type is not None:
            defaults[dest] = action.type(raw)
        else:
            defaults[dest] = raw
        action.required = False
    sub.set_defaults(**defaults)


def _config_path_from_argv(argv: list[str]) -> str | None:
    for i, token in enumerate(argv):
        if token == "--config":
            if i + 1 >= len(argv):
                raise ValueError("--config needs a path")
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        if argv and argv[0] in registry:
            config_path = _config_path_from_argv(argv[1:])
            if config_path:
                _apply_config_defaults(registry[argv[0]], config_path)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return ns.func(ns)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
