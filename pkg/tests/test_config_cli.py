"""Tests for experiment-config loading and the command-line interface."""

import math
import os

import pytest

from dcgeval.cli import (
    CORRELATION_HEADER,
    DAY_SERIES_HEADER,
    DISAGREEMENT_HEADER,
    LEMMA_HEADER,
    ONLINE_HEADER,
    SENSITIVITY_HEADER,
    TABLE1_HEADER,
    VALUE_HEADER,
    main,
)
from dcgeval.config import load_config, read_quality_table
from dcgeval.domain import ConfigurationError, read_dataset
from dcgeval.estimators import DEFAULT_M_GRID, ESTIMATE_HEADER
from dcgeval.stats import COMPARISON_HEADER

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")

QUALITY_CSV = """context,action,quality
x1,a1,0.2
x1,a2,0.6
x1,a3,0.1
x2,a1,0.5
x2,a2,0.1
x2,a3,0.4
"""

LOGGING_SCORES_CSV = """context,action,score
x1,a1,3
x1,a2,2
x1,a3,1
x2,a1,3
x2,a2,2
x2,a3,1
"""

TARGET_SCORES_CSV = """context,action,score
x1,a1,2
x1,a2,3
x1,a3,1
x2,a1,3
x2,a2,1
x2,a3,2
"""

BASE_TOML = """\
[experiment]
seed = 99
days = 3
trajectories_per_day = 60
alpha = 0.05
m_grid = [1, 2, "inf"]

[environment]
actions = ["a1", "a2", "a3"]
contexts = ["x1", "x2"]
quality = "quality.csv"

[logging_pbm]
kind = "exponential"
cutoff = 3
gamma = 0.5

[generator]
kind = "full_catalog"

[logging_ranker]
kind = "deterministic_sort"
scores = "logging_scores.csv"

[target_ranker]
kind = "deterministic_sort"
scores = "target_scores.csv"

[online]
mode = "mc"
trajectories = 200

[[estimator]]
name = "ips"
discount = "pbm"

[[estimator]]
name = "raw"
discount = "pbm"
labels = "raw"

[sensitivity]
n_per_arm = 80
"""


def write_config(tmp_path, toml_text=BASE_TOML):
    (tmp_path / "quality.csv").write_text(QUALITY_CSV, encoding="utf-8")
    (tmp_path / "logging_scores.csv").write_text(LOGGING_SCORES_CSV, encoding="utf-8")
    (tmp_path / "target_scores.csv").write_text(TARGET_SCORES_CSV, encoding="utf-8")
    path = tmp_path / "exp.toml"
    path.write_text(toml_text, encoding="utf-8")
    return str(path)


def read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


class TestLoadConfig:
    def test_small_config_round_trips(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        assert cfg.seed == 99
        assert cfg.days == 3
        assert cfg.trajectories_per_day == 60
        assert cfg.alpha == 0.05
        assert cfg.m_grid == (1.0, 2.0, math.inf)
        assert cfg.catalog.actions == ("a1", "a2", "a3")
        assert cfg.contexts == ("x1", "x2")
        assert cfg.context_probs == (0.5, 0.5)
        assert cfg.quality.quality("x1", "a2") == 0.6
        assert cfg.online_mode == "mc"
        assert cfg.online_trajectories == 200
        assert [spec.name for spec in cfg.estimators] == ["ips", "raw"]
        assert cfg.sensitivity_n_per_arm == 80
        assert cfg.reward_signals == ()
        assert cfg.drift is None

    def test_defaults_fill_in(self, tmp_path):
        text = BASE_TOML.replace('alpha = 0.05\n', "")
        text = text.replace('m_grid = [1, 2, "inf"]\n', "")
        text = text.replace('[online]\nmode = "mc"\ntrajectories = 200\n', "")
        cfg = load_config(write_config(tmp_path, text))
        assert cfg.alpha == 0.05
        assert cfg.m_grid == DEFAULT_M_GRID
        assert cfg.online_mode == "mc"
        assert cfg.online_trajectories is None
        assert cfg.target_pbm == cfg.logging_pbm
        assert cfg.target_generator == cfg.generator
        assert cfg.reward_mode == "binary"
        assert cfg.reward_noise_sigma == 0.25

    def test_drift_or_flat_defaults_to_identity(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        flat = cfg.drift_or_flat()
        assert flat.days == 3
        assert flat.factors == (1.0, 1.0, 1.0)
        assert flat.noise_amplitude == 0.0

    def test_drift_table_parses(self, tmp_path):
        text = BASE_TOML + "\n[drift]\nfactors = [1.0, 0.9, 1.1]\nnoise_amplitude = 0.05\n"
        cfg = load_config(write_config(tmp_path, text))
        assert cfg.drift.factors == (1.0, 0.9, 1.1)
        assert cfg.drift.noise_amplitude == 0.05

    def test_pbm_estimator_binds_the_target_attention_model(self, tmp_path):
        text = BASE_TOML + "\n[target_pbm]\nkind = \"table\"\nvalues = [1.0, 0.4, 0.2]\n"
        cfg = load_config(write_config(tmp_path, text))
        assert cfg.target_pbm.kind == "table"
        assert cfg.target_pbm.cutoff_n == 3  # inferred from the values array
        for spec in cfg.estimators:
            assert spec.config.pbm == cfg.target_pbm

    def test_signals_inherit_reward_defaults(self, tmp_path):
        text = BASE_TOML + (
            "\n[[sensitivity.signal]]\nname = \"clicks\"\nquality = \"quality.csv\"\n"
        )
        cfg = load_config(write_config(tmp_path, text))
        assert len(cfg.reward_signals) == 1
        signal = cfg.reward_signals[0]
        assert signal.name == "clicks"
        assert signal.reward_mode == "binary"
        assert signal.quality.quality("x2", "a1") == 0.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="cannot read config"):
            load_config(str(tmp_path / "absent.toml"))

    def test_invalid_toml(self, tmp_path):
        with pytest.raises(ConfigurationError, match="invalid TOML"):
            load_config(write_config(tmp_path, "[experiment\nseed = 1\n"))

    def test_unknown_top_level_table(self, tmp_path):
        with pytest.raises(ConfigurationError, match="unknown key 'extra'"):
            load_config(write_config(tmp_path, BASE_TOML + "\n[extra]\nx = 1\n"))

    def test_unknown_experiment_key(self, tmp_path):
        text = BASE_TOML.replace("alpha = 0.05", "alpha = 0.05\nburnin = 2")
        with pytest.raises(ConfigurationError, match="'burnin'"):
            load_config(write_config(tmp_path, text))

    def test_missing_required_key(self, tmp_path):
        text = BASE_TOML.replace("seed = 99\n", "")
        with pytest.raises(ConfigurationError, match="missing required key 'seed'"):
            load_config(write_config(tmp_path, text))

    @pytest.mark.parametrize(
        "old,new,message",
        [
            ("seed = 99", "seed = -1", "seed"),
            ("days = 3", "days = 0", "days"),
            ("trajectories_per_day = 60", "trajectories_per_day = -5", "trajectories_per_day"),
            ("alpha = 0.05", "alpha = 1.5", "alpha"),
            ('m_grid = [1, 2, "inf"]', 'm_grid = [2, 1]', "strictly increasing"),
            ('m_grid = [1, 2, "inf"]', 'm_grid = [0.5, 2]', ">= 1"),
            ('m_grid = [1, 2, "inf"]', 'm_grid = ["huge"]', '"inf"'),
            ('m_grid = [1, 2, "inf"]', "m_grid = []", "non-empty"),
            ('mode = "mc"', 'mode = "live"', "unknown mode"),
            ("trajectories = 200", "trajectories = 0", "at least|>= 1"),
            ("n_per_arm = 80", "n_per_arm = 1", ">= 2"),
        ],
    )
    def test_rejected_values(self, tmp_path, old, new, message):
        text = BASE_TOML.replace(old, new)
        assert text != BASE_TOML
        with pytest.raises(ConfigurationError, match=message):
            load_config(write_config(tmp_path, text))

    def test_zero_trajectories_allowed(self, tmp_path):
        text = BASE_TOML.replace("trajectories_per_day = 60", "trajectories_per_day = 0")
        cfg = load_config(write_config(tmp_path, text))
        assert cfg.trajectories_per_day == 0

    def test_estimator_clip_string_must_be_inf(self, tmp_path):
        text = BASE_TOML.replace('name = "ips"\ndiscount = "pbm"',
                                 'name = "ips"\ndiscount = "pbm"\nclip_m = "lots"')
        with pytest.raises(ConfigurationError, match='"inf"'):
            load_config(write_config(tmp_path, text))

    def test_duplicate_estimator_names(self, tmp_path):
        text = BASE_TOML.replace('name = "raw"', 'name = "ips"')
        with pytest.raises(ConfigurationError, match="unique"):
            load_config(write_config(tmp_path, text))

    def test_logarithmic_estimator_needs_cutoff(self, tmp_path):
        text = BASE_TOML.replace('name = "ips"\ndiscount = "pbm"',
                                 'name = "ips"\ndiscount = "logarithmic"')
        with pytest.raises(ConfigurationError, match="log_cutoff"):
            load_config(write_config(tmp_path, text))

    def test_drift_length_must_match_days(self, tmp_path):
        text = BASE_TOML + "\n[drift]\nfactors = [1.0, 0.9]\n"
        with pytest.raises(ConfigurationError, match="one per day"):
            load_config(write_config(tmp_path, text))

    def test_incomplete_quality_table_fails_eagerly(self, tmp_path):
        path = write_config(tmp_path)
        (tmp_path / "quality.csv").write_text(
            "context,action,quality\nx1,a1,0.2\n", encoding="utf-8"
        )
        with pytest.raises(ConfigurationError, match="no quality entry"):
            load_config(path)

    def test_context_probs_validated_eagerly(self, tmp_path):
        text = BASE_TOML.replace('contexts = ["x1", "x2"]',
                                 'contexts = ["x1", "x2"]\ncontext_probs = [0.9, 0.9]')
        with pytest.raises(ConfigurationError, match="sum to 1"):
            load_config(write_config(tmp_path, text))

    def test_committed_smoke_config_loads(self):
        cfg = load_config(os.path.join(CONFIG_DIR, "smoke.cfg"))
        assert cfg.seed == 20240601
        assert cfg.days == 3
        assert cfg.m_grid == (1.0, 2.0, 8.0, math.inf)
        assert len(cfg.estimators) == 5
        assert cfg.drift is not None

    def test_committed_study_configs_load(self):
        rq1 = load_config(os.path.join(CONFIG_DIR, "rq1_desk.cfg"))
        assert rq1.days == 14
        assert len(rq1.catalog) == 12
        rq4 = load_config(os.path.join(CONFIG_DIR, "rq4_desk.cfg"))
        assert rq4.sensitivity_n_per_arm == 32000
        assert [s.name for s in rq4.reward_signals] == [
            "clicks", "likes", "purchases", "saves",
        ]


class TestReadQualityTable:
    def _write(self, tmp_path, text):
        path = tmp_path / "q.csv"
        path.write_text(text, encoding="utf-8")
        return str(path)

    def test_reads_values(self, tmp_path):
        q = read_quality_table(self._write(tmp_path, "context,action,quality\nx,a,0.25\n"))
        assert q.quality("x", "a") == 0.25

    def test_wrong_header(self, tmp_path):
        with pytest.raises(ConfigurationError, match="header"):
            read_quality_table(self._write(tmp_path, "ctx,action,quality\nx,a,1\n"))

    def test_duplicate_reports_line(self, tmp_path):
        with pytest.raises(ConfigurationError, match=":3: duplicate"):
            read_quality_table(
                self._write(tmp_path, "context,action,quality\nx,a,1\nx,a,2\n")
            )

    def test_non_numeric_reports_line(self, tmp_path):
        with pytest.raises(ConfigurationError, match=":2:"):
            read_quality_table(self._write(tmp_path, "context,action,quality\nx,a,high\n"))

    def test_empty_and_header_only(self, tmp_path):
        with pytest.raises(ConfigurationError, match="empty"):
            read_quality_table(self._write(tmp_path, ""))
        with pytest.raises(ConfigurationError, match="no rows"):
            read_quality_table(self._write(tmp_path, "context,action,quality\n"))


class TestCliSimulate:
    def test_writes_datasets_and_online_series(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        for day in range(3):
            ds = read_dataset(str(out / f"dataset_day{day:02d}.jsonl"))
            assert len(ds.trajectories) == 60
        lines = read_lines(out / "online.csv")
        assert lines[0] == ONLINE_HEADER
        assert len(lines) == 4
        assert capsys.readouterr().out.count("day ") == 3

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", cfg, "--out", str(out_a)])
        main(["simulate", "--config", cfg, "--out", str(out_b)])
        for name in sorted(os.listdir(out_a)):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_seed_override_changes_the_data(self, tmp_path):
        cfg = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", cfg, "--out", str(out_a)])
        main(["simulate", "--config", cfg, "--seed", "1234", "--out", str(out_b)])
        assert (out_a / "dataset_day00.jsonl").read_bytes() != (
            out_b / "dataset_day00.jsonl"
        ).read_bytes()

    def test_zero_trajectories_warns_and_writes_empty_files(self, tmp_path, capsys):
        text = BASE_TOML.replace("trajectories_per_day = 60", "trajectories_per_day = 0")
        text = text.replace('mode = "mc"', 'mode = "exact"')
        cfg = write_config(tmp_path, text)
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        assert "warning" in capsys.readouterr().err
        ds = read_dataset(str(out / "dataset_day00.jsonl"))
        assert ds.trajectories == ()

    def test_missing_config_flag_fails_cleanly(self, tmp_path, capsys):
        assert main(["simulate", "--out", str(tmp_path / "out")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unreadable_config_fails_cleanly(self, tmp_path, capsys):
        rc = main(["simulate", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestCliValue:
    def test_reports_exact_and_monte_carlo_values(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["value", "--config", cfg, "--out", str(out)]) == 0
        lines = read_lines(out / "value.csv")
        assert lines[0] == VALUE_HEADER
        logging_row = lines[1].split(",")
        target_row = lines[2].split(",")
        assert logging_row[0] == "logging"
        assert target_row[0] == "target"
        # hand values: quality dotted with view probs 1, 1/2, 1/4 per context
        assert float(logging_row[1]) == pytest.approx(0.5 * 0.525 + 0.5 * 0.65, rel=1e-12)
        assert float(target_row[1]) == pytest.approx(0.5 * 0.725 + 0.5 * 0.725, rel=1e-12)
        # monte-carlo within 5 sigma of exact
        for row in (logging_row, target_row):
            assert abs(float(row[2]) - float(row[1])) <= 5 * float(row[3])

    def test_no_sessions_is_a_clean_error(self, tmp_path, capsys):
        text = BASE_TOML.replace("trajectories_per_day = 60", "trajectories_per_day = 0")
        text = text.replace('[online]\nmode = "mc"\ntrajectories = 200\n', "")
        cfg = write_config(tmp_path, text)
        assert main(["value", "--config", cfg, "--out", str(tmp_path / "out")]) == 1
        assert "error:" in capsys.readouterr().err


class TestCliEstimate:
    def _simulated(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        main(["simulate", "--config", cfg, "--out", str(out)])
        return cfg, out

    def test_writes_one_row_per_estimator(self, tmp_path):
        cfg, out = self._simulated(tmp_path)
        ds = str(out / "dataset_day00.jsonl")
        assert main(["estimate", "--config", cfg, "--dataset", ds, "--out", str(out)]) == 0
        lines = read_lines(out / "estimates.csv")
        assert lines[0] == ESTIMATE_HEADER
        assert len(lines) == 3
        ips = lines[1].split(",")
        assert ips[0] == "ips"
        assert ips[1:5] == ["pbm", "debiased", "inf", "none"]
        assert int(ips[7]) == 60
        assert float(ips[5]) > 0.0

    def test_estimates_are_deterministic(self, tmp_path):
        cfg, out = self._simulated(tmp_path)
        ds = str(out / "dataset_day00.jsonl")
        out_a, out_b = tmp_path / "ea", tmp_path / "eb"
        main(["estimate", "--config", cfg, "--dataset", ds, "--out", str(out_a)])
        main(["estimate", "--config", cfg, "--dataset", ds, "--out", str(out_b)])
        assert (out_a / "estimates.csv").read_bytes() == (out_b / "estimates.csv").read_bytes()

    def test_missing_dataset_file_fails_cleanly(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        rc = main(["estimate", "--config", cfg, "--dataset",
                   str(tmp_path / "no.jsonl"), "--out", str(tmp_path / "out")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_dataset_failing_validation_is_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        bad = tmp_path / "bad.jsonl"
        bad.write_text(
            '{"traj":"t0","day":0,"context":"x1","items":'
            '[{"action":"zz","rank":1,"logging_view_prob":1.0,"reward":0.0}]}\n',
            encoding="utf-8",
        )
        rc = main(["estimate", "--config", cfg, "--dataset", str(bad),
                   "--out", str(tmp_path / "out")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_dataset_flag_is_required(self, tmp_path):
        cfg = write_config(tmp_path)
        with pytest.raises(SystemExit):
            main(["estimate", "--config", cfg, "--out", str(tmp_path / "out")])


class TestCliCorrelate:
    def test_writes_correlation_and_day_series(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["correlate", "--config", cfg, "--out", str(out)]) == 0
        corr = read_lines(out / "correlation.csv")
        assert corr[0] == CORRELATION_HEADER
        assert len(corr) == 3
        for line in corr[1:]:
            name, r, p = line.split(",")
            assert name in ("ips", "raw")
            assert -1.0 <= float(r) <= 1.0
            assert 0.0 <= float(p) <= 1.0
        series = read_lines(out / "day_series.csv")
        assert series[0] == DAY_SERIES_HEADER
        assert len(series) == 1 + 3 * 2  # days x estimators

    def test_too_few_days_is_a_clean_error(self, tmp_path, capsys):
        text = BASE_TOML.replace("days = 3", "days = 2")
        cfg = write_config(tmp_path, text)
        assert main(["correlate", "--config", cfg, "--out", str(tmp_path / "out")]) == 1
        assert "at least 3 days" in capsys.readouterr().err

    def test_constant_offline_series_reports_na(self, tmp_path, capsys):
        # zero trajectories -> every offline estimate is 0.0; exact online mode
        # keeps the online series finite, so only the offline side degenerates
        text = BASE_TOML.replace("trajectories_per_day = 60", "trajectories_per_day = 0")
        text = text.replace('mode = "mc"', 'mode = "exact"')
        cfg = write_config(tmp_path, text)
        out = tmp_path / "out"
        assert main(["correlate", "--config", cfg, "--out", str(out)]) == 0
        corr = read_lines(out / "correlation.csv")
        assert corr[1].endswith(",NA,NA")
        assert "undefined" in capsys.readouterr().out

    def test_undefined_online_series_is_a_clean_error(self, tmp_path, capsys):
        text = BASE_TOML.replace("trajectories_per_day = 60", "trajectories_per_day = 0")
        text = text.replace('[online]\nmode = "mc"\ntrajectories = 200\n',
                            '[online]\nmode = "mc"\n')
        cfg = write_config(tmp_path, text)
        assert main(["correlate", "--config", cfg, "--out", str(tmp_path / "out")]) == 1
        assert "online" in capsys.readouterr().err


class TestCliSensitivity:
    def test_summary_covers_every_metric_and_threshold(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["sensitivity", "--config", cfg, "--out", str(out)]) == 0
        summary = read_lines(out / "sensitivity.csv")
        assert summary[0] == SENSITIVITY_HEADER
        assert len(summary) == 1 + 2 * 3  # metrics x m_grid
        for line in summary[1:]:
            metric, m, tpr, sign, mean_p = line.split(",")
            assert metric in ("dcg", "ndcg")
            assert m in ("1", "2", "inf")
            assert 0.0 <= float(tpr) <= 1.0
            assert 0.0 <= float(sign) <= 1.0
            assert 0.0 <= float(mean_p) <= 1.0
        comparisons = read_lines(out / "comparisons.csv")
        assert comparisons[0] == COMPARISON_HEADER
        assert len(comparisons) == 1 + 3 * 1 * 2 * 3  # days x signals x metrics x m
        assert "true positive" in capsys.readouterr().out

    def test_requires_a_sensitivity_table(self, tmp_path, capsys):
        text = BASE_TOML.replace("[sensitivity]\nn_per_arm = 80\n", "")
        cfg = write_config(tmp_path, text)
        assert main(["sensitivity", "--config", cfg, "--out", str(tmp_path / "out")]) == 1
        assert "no [sensitivity]" in capsys.readouterr().err

    def test_refuses_when_target_does_not_beat_logging(self, tmp_path, capsys):
        text = BASE_TOML.replace('scores = "target_scores.csv"',
                                 'scores = "logging_scores.csv"')
        cfg = write_config(tmp_path, text)
        assert main(["sensitivity", "--config", cfg, "--out", str(tmp_path / "out")]) == 1
        assert "does not beat" in capsys.readouterr().err


class TestCliCounterexample:
    def test_writes_pinned_instance_and_verified_witness(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["counterexample", "--out", str(out)]) == 0
        table1 = read_lines(out / "table1.csv")
        assert table1[0] == TABLE1_HEADER
        assert len(table1) == 1 + 2 * 3  # two policies x (two contexts + mean)
        assert "mean,policy_a,1.0,0.6428571428571428" in table1
        ce = read_lines(out / "counterexample.csv")
        assert ce[0] == "key,value"
        assert "found,true" in ce
        assert "verified,true" in ce
        assert "n_contexts,3" in ce
        assert "quality.x3.a2,1.0" in ce
        assert "independently verified: True" in capsys.readouterr().out

    def test_restricted_search_reports_no_witness(self, tmp_path):
        out = tmp_path / "out"
        assert main(["counterexample", "--max-contexts", "2", "--out", str(out)]) == 0
        assert read_lines(out / "counterexample.csv") == ["key,value", "found,false"]


class TestCliLemmaCheck:
    def test_default_run_has_zero_failures(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["lemma-check", "--out", str(out)]) == 0
        lines = read_lines(out / "lemma.csv")
        assert lines[0] == LEMMA_HEADER
        n_trials, n_consistent, n_skipped, n_failures = map(int, lines[1].split(","))
        assert n_trials == 1000
        assert n_failures == 0
        assert n_consistent + n_skipped == 1000
        assert "0 failures" in capsys.readouterr().out

    def test_trials_and_seed_flags(self, tmp_path):
        out = tmp_path / "out"
        assert main(["lemma-check", "--trials", "50", "--seed", "7", "--out", str(out)]) == 0
        assert read_lines(out / "lemma.csv")[1].startswith("50,")


class TestCliDisagree:
    def test_reports_table_disagreement(self, tmp_path):
        table = os.path.join(CONFIG_DIR, "example_models.csv")
        out = tmp_path / "out"
        assert main(["disagree", "--table", table, "--out", str(out)]) == 0
        lines = read_lines(out / "disagreement.csv")
        assert lines[0] == DISAGREEMENT_HEADER
        fields = lines[1].split(",")
        assert fields[0] == "5"
        assert -1.0 <= float(fields[1]) <= 1.0

    def test_missing_table_fails_cleanly(self, tmp_path, capsys):
        rc = main(["disagree", "--table", str(tmp_path / "no.csv"), "--out", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestCliParser:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "dcgeval" in capsys.readouterr().out

    def test_a_subcommand_is_required(self):
        with pytest.raises(SystemExit):
            main([])
