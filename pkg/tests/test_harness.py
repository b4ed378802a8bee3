import json
import math

import numpy as np
import pytest

from oas_codebook import cli, harness, reference
from oas_codebook.engine import OASConfig, run_oas
from oas_codebook.errors import InvalidArgumentError, SingularMatrixError
from oas_codebook.estimators import SparseGaussianPrior
from oas_codebook.harness import (
    ExperimentSpec,
    Settings,
    SweepResult,
    SweepRow,
    aggregate,
    format_results,
    generate_signal,
    read_results,
    run_sweep,
)
from oas_codebook.linalg import generate_codebook
from oas_codebook.presets import PRESETS, preset

SMALL = Settings(N=20, K=10, L=4, M=6, S=30)


def small_spec(**kw):
    args = dict(base=SMALL, sweep_param="L", sweep_values=[2, 4], trials=3, seed=5)
    args.update(kw)
    return ExperimentSpec(**args)


def without_seconds(text):
    return [line.rsplit(",", 1)[0] for line in text.splitlines()]


class TestSignal:
    def test_deterministic(self):
        np.testing.assert_array_equal(generate_signal(50, 0.1, 3), generate_signal(50, 0.1, 3))

    def test_all_zero_and_all_active(self):
        assert np.all(generate_signal(30, 0.0, 1) == 0)
        assert np.all(generate_signal(30, 1.0, 1) != 0)

    def test_statistics(self):
        x = generate_signal(200_000, 0.1, 0)
        p = np.mean(x != 0)
        assert abs(p - 0.1) <= 4 * math.sqrt(0.09 / 200_000)
        assert np.var(x[x != 0]) == pytest.approx(1.0, abs=0.03)

    def test_bad_rho(self):
        with pytest.raises(InvalidArgumentError):
            generate_signal(5, -0.1, 0)


class TestSettings:
    def test_codebook_variance_modes(self):
        assert Settings(K=50).entry_variance == pytest.approx(1 / 50)
        assert Settings(K=50, codebook_variance="1/sqrtK").entry_variance == pytest.approx(1 / math.sqrt(50))
        assert Settings(codebook_variance=0.3).entry_variance == 0.3

    def test_rate_sets_k(self):
        assert Settings(N=200).with_param("R", 4).K == 50
        with pytest.raises(InvalidArgumentError):
            Settings(N=200).with_param("R", 3)

    @pytest.mark.parametrize("kw", [dict(L=11), dict(K=40, S=30), dict(N=8, L=4, K=10, S=30), dict(M=0)])
    def test_validation(self, kw):
        with pytest.raises(InvalidArgumentError):
            small_spec(base=Settings(**{**SMALL.__dict__, **kw}), sweep_param=None).validate()

    def test_exhaustive_budget_enforced_up_front(self):
        with pytest.raises(InvalidArgumentError, match="stepwise"):
            small_spec(strategies=["exhaustive"]).validate()

    def test_mmse_needs_small_n(self):
        with pytest.raises(InvalidArgumentError):
            small_spec(base=Settings(N=40, K=10, L=4, M=6, S=30), baselines=["mmse"]).validate()


class TestAggregate:
    def test_mean_then_db(self):
        db, se = aggregate([0.01, 0.02, 0.03])
        assert db == pytest.approx(10 * math.log10(0.02), abs=1e-12)
        assert se == pytest.approx(10 / math.log(10) * (0.01 / math.sqrt(3)) / 0.02, rel=1e-12)

    def test_single_trial(self):
        assert aggregate([0.1]) == (pytest.approx(-10.0), 0.0)

    def test_zero_error(self):
        assert aggregate([0.0, 0.0])[0] == -math.inf


class TestSeeding:
    def test_no_collisions(self):
        seeds = {harness.trial_seed(0, f"cell{c}", t) for c in range(20) for t in range(500)}
        assert len(seeds) == 10_000

    def test_master_seed_matters(self):
        assert harness.trial_seed(0, "c", 0) != harness.trial_seed(1, "c", 0)

    def test_row_reconstructs_by_hand(self):
        spec = ExperimentSpec(base=SMALL, trials=1, seed=9)
        row = run_sweep(spec).rows[0]
        seed = harness.trial_seed(9, harness.cell_key("oas-random", SMALL), 0)
        sig, cb, noise, sel0, *_ = harness._child_seeds(seed, 3 + harness.MAX_RETRIES + 1)
        x = generate_signal(20, 0.1, sig)
        codebook = generate_codebook(30, 20, 1 / 10, cb)
        cfg = OASConfig(20, 10, 4, 6, 0.01, SparseGaussianPrior(0.1), "random", sel0)
        assert row.mse_db == 10 * math.log10(run_oas(cfg, x, codebook, noise).mse)
        assert row.trials == 1 and row.method == "oas-random"


class TestSweep:
    def test_layout(self):
        res = run_sweep(small_spec(strategies=["random", "stepwise"], baselines=["lasso"]))
        assert [(r.value, r.method) for r in res.rows] == [
            (2, "oas-random"), (2, "oas-stepwise"), (2, "lasso"),
            (4, "oas-random"), (4, "oas-stepwise"), (4, "lasso")]
        # the baseline ignores L, so both rows come from the same trials
        assert res.rows[2].mse_db == res.rows[5].mse_db
        assert all(r.valid and r.trials == 3 for r in res.rows)

    def test_deterministic_across_workers(self):
        a = format_results(run_sweep(small_spec(workers=1)))
        b = format_results(run_sweep(small_spec(workers=2)))
        assert without_seconds(a) == without_seconds(b)

    def test_fixed_codebook_changes_results(self):
        a = run_sweep(small_spec()).rows[0].mse_db
        b = run_sweep(small_spec(fixed_codebook=True)).rows[0].mse_db
        assert a != b

    def test_reference_rows(self):
        spec = preset("fig1a")
        assert len(spec.points()) * 3 == 30
        st = spec.points()[0][1]
        assert reference.benchmark_db("lasso", st.N, st.K, st.rho, st.sigma2) == reference.LASSO_DB[1]
        assert reference.benchmark_db("lasso", 100, 50, 0.1, 0.01) is None

    def test_reference_rows_emitted_without_trials(self):
        spec = preset("fig1a", trials=1)
        spec.sweep_values = [73]
        rows = run_sweep(spec).rows
        assert [r.method for r in rows] == ["oas-random", "lasso-ref", "mmse-ref"]
        assert rows[1].mse_db == reference.LASSO_DB[1] and rows[1].trials == 0

    def test_failures_mark_cell_invalid(self, monkeypatch):
        def boom(*a, **k):
            raise SingularMatrixError("forced", condition=1e12)
        monkeypatch.setattr(harness, "run_oas", boom)
        res = run_sweep(small_spec(sweep_param=None, sweep_values=()))
        row = res.rows[0]
        assert row.failed == 3 and row.trials == 0 and not row.valid

    def test_progress_callback(self):
        seen = []
        run_sweep(small_spec(), lambda cell, t: seen.append(t))
        assert sorted(seen) == [0, 0, 1, 1, 2, 2]

    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.setenv("OAS_WORKERS", "3")
        assert harness.resolve_workers(None) == 3
        assert harness.resolve_workers(2) == 2
        monkeypatch.delenv("OAS_WORKERS")
        assert harness.resolve_workers(None) == 1


class TestOutput:
    def test_empty_is_header_only(self, tmp_path):
        text = format_results(SweepResult())
        assert text == ",".join(harness.CSV_FIELDS) + "\n"
        path = tmp_path / "e.csv"
        path.write_text(text)
        assert read_results(path) == []

    def test_negative_infinity_written_as_floor(self):
        res = SweepResult([SweepRow("L", 3, "oas-random", -math.inf, 0.0, 2, 0.1)])
        assert ",-400.0," in format_results(res)
        assert json.loads(format_results(res, "json"))["rows"][0]["mse_db"] == -400.0

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_round_trip(self, tmp_path, fmt):
        res = run_sweep(small_spec())
        path = harness.emit_results(res, fmt, tmp_path / f"out.{fmt}")
        back = read_results(path)
        assert len(back) == len(res.rows)
        for r, d in zip(res.rows, back):
            assert (d["value"], d["method"], d["trials"]) == (r.value, r.method, r.trials)
            assert d["mse_db"] == r.mse_db and d["stderr_db"] == r.stderr_db

    def test_unknown_format(self):
        with pytest.raises(InvalidArgumentError):
            format_results(SweepResult(), "xml")


class TestSpecFiles:
    def test_yaml(self, tmp_path):
        path = tmp_path / "spec.yaml"
        path.write_text("base: {N: 20, R: 2, L: 4, M: 6, S: 30}\n"
                        "sweep: {param: M, values: [4, 6]}\n"
                        "trials: 2\nstrategies: [stepwise]\nseed: 3\n")
        spec = harness.load_spec(path)
        assert spec.base.K == 10 and spec.sweep_param == "M" and spec.strategies == ["stepwise"]
        assert harness.spec_from_dict(harness.spec_to_dict(spec)) == spec

    def test_unknown_keys(self):
        with pytest.raises(InvalidArgumentError):
            harness.spec_from_dict({"base": {"Q": 1}})
        with pytest.raises(InvalidArgumentError):
            harness.spec_from_dict({"trails": 3})

    def test_presets_validate(self):
        for name in PRESETS:
            preset(name).validate()


SMALL_FLAGS = ["--N", "20", "--K", "10", "--L", "4", "--M", "6", "--S", "30", "--trials", "2"]


class TestCLI:
    def test_sweep_csv(self, capsys):
        assert cli.main(["sweep", *SMALL_FLAGS, "--strategy", "random", "--strategy", "stepwise"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(harness.CSV_FIELDS)
        assert [l.split(",")[2] for l in lines[1:]] == ["oas-random", "oas-stepwise"]

    def test_sweep_to_file_json(self, tmp_path):
        out = tmp_path / "r.json"
        assert cli.main(["sweep", *SMALL_FLAGS, "--format", "json", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["rows"][0]["trials"] == 2

    def test_single(self, capsys, tmp_path):
        cb = tmp_path / "cb.txt"
        assert cli.main(["single", "--N", "20", "--K", "10", "--L", "4", "--M", "6", "--S", "30",
                         "--save-codebook", str(cb)]) == 0
        first = capsys.readouterr().out
        assert len(first.splitlines()) == 7
        assert cli.main(["single", "--N", "20", "--K", "10", "--L", "4", "--M", "6", "--S", "30",
                         "--codebook", str(cb)]) == 0
        assert capsys.readouterr().out == first

    def test_baseline(self, capsys):
        assert cli.main(["baseline", "--N", "12", "--K", "6", "--L", "2", "--S", "40", "--trials", "3",
                         "--method", "lasso", "--method", "mmse"]) == 0
        methods = [l.split(",")[2] for l in capsys.readouterr().out.splitlines()[1:]]
        assert methods == ["lasso", "mmse"]

    def test_baseline_ignores_default_L(self, capsys):
        assert cli.main(["baseline", "--N", "12", "--K", "6", "--S", "40", "--trials", "2"]) == 0

    def test_invalid_cell_exit_code(self, monkeypatch, capsys):
        def boom(*a, **k):
            raise SingularMatrixError("forced", condition=1e12)
        monkeypatch.setattr(harness, "run_oas", boom)
        assert cli.main(["sweep", *SMALL_FLAGS]) == 1

    def test_bad_arguments_exit_code(self, capsys):
        assert cli.main(["sweep", *SMALL_FLAGS, "--L", "11"]) == 2
        assert cli.main(["sweep", "--config", "/nonexistent.yaml"]) == 2
