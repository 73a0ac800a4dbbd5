"""End-to-end tests of the command-line interface (run in-process)."""

import json

import numpy as np
import pytest

from limitcurves.cli import main, parse_alpha_grid, parse_design, parse_policy


def run(*argv):
    return main([str(a) for a in argv])


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


@pytest.fixture
def simulated(tmp_path):
    target = tmp_path / "target.csv"
    trial = tmp_path / "trial.csv"
    pool = tmp_path / "pool.csv"
    code = run(
        "simulate", "--pop", "A", "--n", 400, "--m", 200, "--seed", 7,
        "--target-out", target, "--trial-out", trial, "--pool-out", pool,
        "--m-train", 200,
    )
    assert code == 0
    return target, trial, pool


class TestParsing:
    def test_policy_flags(self):
        assert parse_policy("constant:1").kind == "constant"
        assert parse_policy("uniform").kind == "uniform"
        with pytest.raises(ValueError):
            parse_policy("bogus")

    def test_design_flags(self):
        assert parse_design("uniform:2").k_actions == 2
        assert np.allclose(parse_design("probs:0.3,0.7").probs, [0.3, 0.7])
        with pytest.raises(ValueError):
            parse_design("nope")

    def test_alpha_grid(self):
        grid = parse_alpha_grid("0.01:0.99:0.01")
        assert grid.shape == (99,)
        with pytest.raises(ValueError):
            parse_alpha_grid("0.5")


class TestSimulate:
    def test_row_counts_and_determinism(self, tmp_path):
        t1, d1 = tmp_path / "t1.csv", tmp_path / "d1.csv"
        t2, d2 = tmp_path / "t2.csv", tmp_path / "d2.csv"
        for t, d in ((t1, d1), (t2, d2)):
            assert run(
                "simulate", "--pop", "B", "--n", 50, "--m", 30, "--seed", 3,
                "--target-out", t, "--trial-out", d,
            ) == 0
        assert len(t1.read_text().splitlines()) == 51
        assert len(d1.read_text().splitlines()) == 31
        assert t1.read_bytes() == t2.read_bytes()
        assert d1.read_bytes() == d2.read_bytes()

    def test_unknown_population(self, tmp_path):
        assert run(
            "simulate", "--pop", "Z", "--n", 10, "--m", 10,
            "--target-out", tmp_path / "t.csv", "--trial-out", tmp_path / "d.csv",
        ) == 1


class TestFit:
    def test_noise_pool_gives_small_coefficients(self, tmp_path):
        rng = np.random.default_rng(0)
        n = 2000
        lines = ["x0,x1,s"]
        labels = np.r_[np.ones(n // 2, int), np.zeros(n // 2, int)]
        rng.shuffle(labels)
        for i in range(n):
            lines.append(f"{rng.normal()!r},{rng.normal()!r},{labels[i]}")
        pool = tmp_path / "pool.csv"
        pool.write_text("\n".join(lines) + "\n")
        out = tmp_path / "model.json"
        assert run("fit", "--pool", pool, "--l2", 1e-6, "--out", out) == 0
        payload = read_json(out)
        assert all(abs(c) < 0.15 for c in payload["coefficients"])
        assert payload["converged"] is True

    def test_separable_without_penalty_fails(self, tmp_path):
        lines = ["x0,s"]
        rng = np.random.default_rng(1)
        for _ in range(100):
            v = rng.uniform(0.05, 1.0)
            lines.append(f"{v!r},1")
            lines.append(f"{-v!r},0")
        pool = tmp_path / "pool.csv"
        pool.write_text("\n".join(lines) + "\n")
        assert run(
            "fit", "--pool", pool, "--l2", 0.0, "--max-iter", 400,
            "--out", tmp_path / "model.json",
        ) == 1

    def test_fit_then_score_round_trip(self, tmp_path, simulated):
        _, _, pool = simulated
        out = tmp_path / "model.json"
        assert run("fit", "--pool", pool, "--out", out) == 0
        from limitcurves.fileio import read_pool_csv
        from limitcurves.propensity import fit_logistic, load_model, predict_odds, LogisticConfig

        pool_data = read_pool_csv(pool)
        direct = fit_logistic(pool_data, LogisticConfig(l2=1e-4))
        loaded = load_model(out)
        x = pool_data.x[:10]
        assert np.array_equal(predict_odds(direct, x), predict_odds(loaded, x))


class TestEvaluate:
    def test_curves_and_informativeness(self, tmp_path, simulated):
        target, trial, pool = simulated
        model = tmp_path / "model.json"
        assert run("fit", "--pool", pool, "--out", model) == 0
        out_json = tmp_path / "curves.json"
        out_csv = tmp_path / "curves.csv"
        assert run(
            "evaluate", "--trial", trial, "--target", target, "--model", model,
            "--policy", "constant:1", "--design", "uniform:2",
            "--gammas", "1,2", "--split", "matched", "--seed", 5,
            "--l-max", 100.0, "--out-json", out_json, "--out-csv", out_csv,
        ) == 0
        payload = read_json(out_json)
        assert payload["kind"] == "limit-curves"
        assert set(payload["informativeness"]) == {"1.0", "2.0"}
        by_gamma = {}
        for entry in payload["curves"]:
            by_gamma.setdefault(entry["gamma"], []).append(entry)
        assert len(by_gamma[1.0]) == 99
        for one, two in zip(by_gamma[1.0], by_gamma[2.0]):
            assert two["limit"] >= one["limit"]
        assert out_csv.read_text().splitlines()[0] == "gamma,alpha,limit,trivial"

    def test_both_constant_policies_run(self, tmp_path, simulated):
        target, trial, pool = simulated
        model = tmp_path / "model.json"
        assert run("fit", "--pool", pool, "--out", model) == 0
        for a in (0, 1):
            assert run(
                "evaluate", "--trial", trial, "--target", target, "--model", model,
                "--policy", f"constant:{a}", "--gammas", "1",
                "--split", "matched", "--l-max", 100.0,
                "--out-json", tmp_path / f"c{a}.json", "--out-csv", tmp_path / f"c{a}.csv",
            ) == 0

    def test_dimension_mismatch_fails(self, tmp_path, simulated):
        _, trial, pool = simulated
        bad_target = tmp_path / "bad.csv"
        bad_target.write_text("x0,x1,x2\n0.0,0.0,0.0\n")
        model = tmp_path / "model.json"
        assert run("fit", "--pool", pool, "--out", model) == 0
        assert run(
            "evaluate", "--trial", trial, "--target", bad_target, "--model", model,
            "--policy", "constant:1", "--l-max", 100.0,
            "--out-json", tmp_path / "o.json", "--out-csv", tmp_path / "o.csv",
        ) == 1

    def test_scores_input(self, tmp_path, simulated):
        target, trial, _ = simulated
        m = len(trial.read_text().splitlines()) - 1
        scores = tmp_path / "scores.csv"
        scores.write_text("id,odds\n" + "\n".join(f"{i},1.0" for i in range(m)) + "\n")
        assert run(
            "evaluate", "--trial", trial, "--target", target, "--scores", scores,
            "--policy", "constant:1", "--gammas", "1", "--split", "matched",
            "--l-max", 100.0,
            "--out-json", tmp_path / "s.json", "--out-csv", tmp_path / "s.csv",
        ) == 0


class TestBenchmarkGamma:
    def test_reports_per_feature_deterministic(self, tmp_path, simulated):
        _, _, pool = simulated
        out1, out2 = tmp_path / "g1.json", tmp_path / "g2.json"
        for out in (out1, out2):
            assert run("benchmark-gamma", "--pool", pool, "--out", out) == 0
        p1, p2 = read_json(out1), read_json(out2)
        assert p1["reports"] == p2["reports"]
        assert [r["feature"] for r in p1["reports"]] == [0, 1]
        for report in p1["reports"]:
            g = report["suggested_gamma"]
            assert 1.0 <= g["0.9"] <= g["0.95"] <= g["1.0"]


class TestReliability:
    def test_bin_rows_and_counts(self, tmp_path, simulated):
        _, _, pool = simulated
        model = tmp_path / "model.json"
        assert run("fit", "--pool", pool, "--out", model) == 0
        out = tmp_path / "reliability.csv"
        assert run("reliability", "--pool", pool, "--model", model, "--bins", 5, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "bin_lower,bin_upper,mean_nominal,observed,n_target,n_trial"
        counts = sum(int(line.split(",")[4]) + int(line.split(",")[5]) for line in lines[1:])
        assert counts == 600  # 400 target + 200 trial-train rows


class TestIpsw:
    def test_hand_computable_case(self, tmp_path):
        trial = tmp_path / "trial.csv"
        trial.write_text(
            "x0,a,l\n0.0,1,1.0\n0.0,0,5.0\n0.0,1,3.0\n0.0,0,6.0\n"
        )
        target = tmp_path / "target.csv"
        target.write_text("x0\n0.0\n0.0\n0.0\n0.0\n")
        scores = tmp_path / "scores.csv"
        scores.write_text("id,odds\n0,1.0\n1,1.0\n2,1.0\n3,1.0\n")
        out = tmp_path / "ipsw.json"
        assert run(
            "ipsw", "--trial", trial, "--target", target, "--scores", scores,
            "--policy", "constant:1", "--design", "uniform:2",
            "--alphas", "0.25,0.6", "--out", out,
        ) == 0
        payload = read_json(out)
        assert payload["value"] == 2.0
        quantiles = {q["alpha"]: q for q in payload["quantiles"]}
        assert quantiles[0.25]["limit"] == 3.0
        assert quantiles[0.6]["limit"] == 1.0
        assert [q["alpha"] for q in payload["quantiles"]] == [0.25, 0.6]


class TestMiscoverage:
    def test_trivial_gamma_gap_equals_alpha(self, tmp_path):
        out = tmp_path / "mc.json"
        assert run(
            "miscoverage", "--pop", "A", "--n", 60, "--m", 40, "--m-train", 40,
            "--method", "certified", "--gamma", 1e12, "--odds", "oracle",
            "--alphas", "0.1,0.3", "--runs", 3, "--per-run", 25,
            "--seed", 1, "--out", out,
        ) == 0
        payload = read_json(out)
        for row in payload["rows"]:
            assert row["exceed_rate"] == 0.0
            assert row["gap"] == row["alpha"]
            assert "se" in row

    def test_deterministic_reports(self, tmp_path):
        args = [
            "miscoverage", "--pop", "B", "--n", 80, "--m", 50, "--m-train", 50,
            "--method", "ipsw", "--odds", "fitted", "--alphas", "0.2",
            "--runs", 3, "--per-run", 20, "--seed", 5,
        ]
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert run(*args, "--out", out1) == 0
        assert run(*args, "--out", out2) == 0
        p1, p2 = read_json(out1), read_json(out2)
        p1.pop("config")
        p2.pop("config")
        assert p1 == p2


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("pop=B\nn=40\nm=30\nseed=2\n")
        t1 = tmp_path / "t1.csv"
        d1 = tmp_path / "d1.csv"
        assert run(
            "simulate", "--config", cfg, "--target-out", t1, "--trial-out", d1
        ) == 0
        assert len(t1.read_text().splitlines()) == 41
        t2 = tmp_path / "t2.csv"
        d2 = tmp_path / "d2.csv"
        assert run(
            "simulate", "--config", cfg, "--n", 25,
            "--target-out", t2, "--trial-out", d2,
        ) == 0
        assert len(t2.read_text().splitlines()) == 26

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus=1\n")
        assert run(
            "simulate", "--config", cfg, "--pop", "A", "--n", 10, "--m", 10,
            "--target-out", tmp_path / "t.csv", "--trial-out", tmp_path / "d.csv",
        ) == 1


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        assert run(
            "fit", "--pool", tmp_path / "missing.csv", "--out", tmp_path / "m.json"
        ) == 1

    def test_usage_error(self):
        assert run("simulate") == 2


class TestTablePolicy:
    def test_evaluate_with_row_aligned_policy(self, tmp_path, simulated):
        target, trial, _ = simulated
        m = len(trial.read_text().splitlines()) - 1
        table = tmp_path / "policy.csv"
        table.write_text("p0,p1\n" + "\n".join("0.25,0.75" for _ in range(m)) + "\n")
        scores = tmp_path / "scores.csv"
        scores.write_text("id,odds\n" + "\n".join(f"{i},1.0" for i in range(m)) + "\n")
        assert run(
            "evaluate", "--trial", trial, "--target", target, "--scores", scores,
            "--policy", f"table:{table}", "--gammas", "1", "--split", "random",
            "--l-max", 100.0,
            "--out-json", tmp_path / "t.json", "--out-csv", tmp_path / "t.csv",
        ) == 0

    def test_wrong_table_length_fails(self, tmp_path, simulated):
        target, trial, _ = simulated
        m = len(trial.read_text().splitlines()) - 1
        table = tmp_path / "policy.csv"
        table.write_text("p0,p1\n0.5,0.5\n")
        scores = tmp_path / "scores.csv"
        scores.write_text("id,odds\n" + "\n".join(f"{i},1.0" for i in range(m)) + "\n")
        assert run(
            "evaluate", "--trial", trial, "--target", target, "--scores", scores,
            "--policy", f"table:{table}", "--gammas", "1", "--split", "random",
            "--l-max", 100.0,
            "--out-json", tmp_path / "t.json", "--out-csv", tmp_path / "t.csv",
        ) == 1
