import csv
import json
import re

import numpy as np
import pytest

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from minstress.cli import main
from minstress.corpus import parse_timestamp
from minstress.models import Dataset, TrainConfig, save_model, train_model


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli-bundle")
    out = base / "out"
    rc = main(
        [
            "synth",
            "--out",
            str(out),
            "--n-users",
            "30",
            "--posts-min",
            "8",
            "--posts-max",
            "12",
            "--n-labeled-posts",
            "120",
            "--seed",
            "0",
        ]
    )
    assert rc == 0
    run_dir = next(out.glob("synth-*"))
    return {"run_dir": run_dir, "config": run_dir / "study.toml"}


def run_dir_for(out, command):
    dirs = list(out.glob(f"{command}-*"))
    assert len(dirs) == 1
    return dirs[0]


def dir_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


class TestParsing:
    def test_no_command(self, capsys):
        assert main([]) == 1
        assert "command is required" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_unknown_flag(self, capsys):
        assert main(["synth", "--frobnicate"]) == 1

    def test_missing_required_config(self, capsys):
        assert main(["train-eval"]) == 1
        assert "requires --config" in capsys.readouterr().err
        assert main(["causal"]) == 1
        assert main(["cohort"]) == 1

    def test_config_file_not_found(self, capsys):
        assert main(["train-eval", "--config", "/nonexistent/x.toml"]) == 1
        assert "not found" in capsys.readouterr().err

    def test_config_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[paths\n")
        assert main(["train-eval", "--config", str(bad)]) == 1
        assert "parse error" in capsys.readouterr().err

    def test_jobs_must_be_positive(self, capsys):
        assert main(["synth", "--jobs", "0"]) == 1

    def test_importance_delta_requires_models(self, capsys):
        assert main(["importance-delta"]) == 1


class TestSynth:
    def test_bundle_inventory(self, bundle):
        names = {p.name for p in bundle["run_dir"].iterdir()}
        for want in (
            "users.jsonl",
            "posts.jsonl",
            "labeled.jsonl",
            "lexicon.tsv",
            "embeddings.txt",
            "positive.txt",
            "negative.txt",
            "minority.txt",
            "control.txt",
            "groundtruth.json",
            "study.toml",
            "manifest.json",
        ):
            assert want in names, want
        assert re.fullmatch(r"synth-[0-9a-f]{12}", bundle["run_dir"].name)

    def test_study_toml_scales_stratification_to_bundle(self, bundle):
        with open(bundle["config"], "rb") as fh:
            cfg = tomllib.load(fh)
        assert cfg["causal"]["n_strata"] == 10
        assert cfg["causal"]["min_per_group"] == 2
        assert cfg["causal"]["top_unigrams"] == 10
        assert cfg["causal"]["lambda"] == 0.5
        assert cfg["train"]["folds"] == 10
        assert cfg["study"]["seed"] == 0
        for path in cfg["paths"].values():
            assert path.startswith("/")
        start = parse_timestamp(cfg["windows"]["study_start"])
        end = parse_timestamp(cfg["windows"]["study_end"])
        assert start < end

    def test_manifest_shape(self, bundle):
        manifest = json.loads((bundle["run_dir"] / "manifest.json").read_text())
        assert set(manifest) == {
            "command",
            "config_hash",
            "seed",
            "config",
            "inputs",
            "artifacts",
        }
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 0
        assert bundle["run_dir"].name.endswith(manifest["config_hash"])
        assert "posts.jsonl" in manifest["artifacts"]
        assert "manifest.json" not in manifest["artifacts"]

    def test_flag_overrides_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "synth.toml"
        cfg.write_text('[synth]\nn_users = 4\nposts_min = 2\nposts_max = 3\nn_labeled_posts = 10\n')
        rc = main(
            ["synth", "--config", str(cfg), "--out", str(tmp_path / "out"), "--n-users", "6"]
        )
        assert rc == 0
        run_dir = run_dir_for(tmp_path / "out", "synth")
        truth = json.loads((run_dir / "groundtruth.json").read_text())
        assert truth["n_users_per_group"] == 6

    def test_unknown_synth_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "synth.toml"
        cfg.write_text("[synth]\nwat = 3\n")
        assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 1
        assert "unknown [synth] keys" in capsys.readouterr().err

    def test_invalid_spec_rejected(self, tmp_path, capsys):
        rc = main(["synth", "--out", str(tmp_path / "out"), "--n-users", "-5"])
        assert rc == 1
        assert "invalid synth spec" in capsys.readouterr().err

    def test_global_flags_accepted_after_subcommand(self, tmp_path):
        rc = main(
            [
                "synth",
                "--n-users",
                "4",
                "--posts-min",
                "2",
                "--posts-max",
                "3",
                "--n-labeled-posts",
                "10",
                "--out",
                str(tmp_path / "out"),
                "--seed",
                "5",
            ]
        )
        assert rc == 0
        truth = json.loads(
            (run_dir_for(tmp_path / "out", "synth") / "groundtruth.json").read_text()
        )
        assert truth["seed"] == 5


class TestTrainEval:
    def test_happy_path_artifacts(self, bundle, tmp_path, capsys):
        out = tmp_path / "runs"
        rc = main(["train-eval", "--config", str(bundle["config"]), "--out", str(out)])
        assert rc == 0
        run_dir = run_dir_for(out, "train-eval")
        for name in (
            "metrics.csv",
            "metrics.json",
            "ablation.csv",
            "ablation.json",
            "roc.csv",
            "confusion.csv",
            "model_logistic.json",
            "importance.csv",
            "manifest.json",
        ):
            assert (run_dir / name).exists(), name
        stdout = capsys.readouterr().out
        assert "best by auc:" in stdout
        assert "logistic" in stdout

        with open(run_dir / "metrics.csv") as fh:
            rows = {r["model"]: r for r in csv.DictReader(fh)}
        assert set(rows) == {"dummy", "naive_bayes", "decision_tree", "logistic"}
        assert abs(float(rows["dummy"]["auc"]) - 0.5) < 0.05
        assert float(rows["logistic"]["auc"]) > float(rows["dummy"]["auc"]) + 0.3

        with open(run_dir / "ablation.csv") as fh:
            ab = {r["model"]: r for r in csv.DictReader(fh)}
        assert "full" in ab and "-ngrams" in ab

    def test_rerun_bitwise_identical(self, bundle, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["train-eval", "--config", str(bundle["config"]), "--out", str(out_a)]) == 0
        assert main(["train-eval", "--config", str(bundle["config"]), "--out", str(out_b)]) == 0
        dir_a = run_dir_for(out_a, "train-eval")
        dir_b = run_dir_for(out_b, "train-eval")
        assert dir_a.name == dir_b.name
        assert dir_bytes(dir_a) == dir_bytes(dir_b)

    def test_jobs_do_not_change_bytes(self, bundle, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["train-eval", "--config", str(bundle["config"]), "--out", str(out_a)]) == 0
        assert (
            main(
                ["train-eval", "--config", str(bundle["config"]), "--out", str(out_b), "--jobs", "3"]
            )
            == 0
        )
        assert dir_bytes(run_dir_for(out_a, "train-eval")) == dir_bytes(
            run_dir_for(out_b, "train-eval")
        )

    def test_seed_override_changes_run_dir(self, bundle, tmp_path):
        out = tmp_path / "runs"
        assert main(["train-eval", "--config", str(bundle["config"]), "--out", str(out)]) == 0
        assert (
            main(["train-eval", "--config", str(bundle["config"]), "--out", str(out), "--seed", "9"])
            == 0
        )
        assert len(list(out.glob("train-eval-*"))) == 2

    def test_single_class_labels_exit_2(self, bundle, tmp_path, capsys):
        labeled = tmp_path / "labeled.jsonl"
        with open(labeled, "w") as fh:
            for i in range(12):
                fh.write(json.dumps({"id": f"p{i}", "text": "all the same", "label": 1}) + "\n")
        cfg = _config_with(bundle, tmp_path, labeled=labeled)
        assert main(["train-eval", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 2
        assert "single class" in capsys.readouterr().err

    def test_too_few_rows_for_folds_exit_2(self, bundle, tmp_path, capsys):
        labeled = tmp_path / "labeled.jsonl"
        with open(labeled, "w") as fh:
            for i in range(4):
                fh.write(json.dumps({"id": f"p{i}", "text": "word salad", "label": i % 2}) + "\n")
        cfg = _config_with(bundle, tmp_path, labeled=labeled)
        assert main(["train-eval", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 2

    def test_malformed_labeled_line_exit_2(self, bundle, tmp_path, capsys):
        labeled = tmp_path / "labeled.jsonl"
        labeled.write_text('{"id": "p0", "text": "fine", "label": 1}\nnot json\n')
        cfg = _config_with(bundle, tmp_path, labeled=labeled)
        assert main(["train-eval", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 2
        assert "line 2" in capsys.readouterr().err


def _config_with(bundle, tmp_path, **overrides):
    """Copy of the bundle study config with [paths] entries swapped."""
    text = bundle["config"].read_text()
    for key, path in overrides.items():
        text = re.sub(rf'(?m)^{key} = ".*"$', f'{key} = "{path}"', text)
    out = tmp_path / "study.toml"
    out.write_text(text)
    return out


class TestCausal:
    def test_happy_path_artifacts(self, bundle, tmp_path, capsys):
        out = tmp_path / "runs"
        rc = main(["causal", "--config", str(bundle["config"]), "--out", str(out)])
        assert rc == 0
        run_dir = run_dir_for(out, "causal")
        for name in ("balance.csv", "balance.json", "audit.csv", "effects.csv", "effects.json", "manifest.json"):
            assert (run_dir / name).exists(), name
        stdout = capsys.readouterr().out
        assert "retained" in stdout
        assert "balance: max |SMD|" in stdout

        effects = json.loads((run_dir / "effects.json").read_text())
        assert set(effects) == {"stress", "social", "cognition", "body"}
        assert 0.15 < effects["stress"]["mean_te"] < 0.45
        assert effects["stress"]["p_bonferroni"] < 0.01
        for null in ("social", "cognition", "body"):
            assert abs(effects[null]["mean_te"]) < 0.1

    def test_rerun_bitwise_identical(self, bundle, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["causal", "--config", str(bundle["config"]), "--out", str(out_a)]) == 0
        assert (
            main(["causal", "--config", str(bundle["config"]), "--out", str(out_b), "--jobs", "2"])
            == 0
        )
        assert dir_bytes(run_dir_for(out_a, "causal")) == dir_bytes(run_dir_for(out_b, "causal"))

    def test_audit_covers_every_joined_user(self, bundle, tmp_path):
        out = tmp_path / "runs"
        assert main(["causal", "--config", str(bundle["config"]), "--out", str(out)]) == 0
        with open(run_dir_for(out, "causal") / "audit.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 60
        assert {r["group"] for r in rows} == {"MINORITY", "CONTROL"}
        assert {r["status"] for r in rows} <= {"retained", "trimmed", "dropped_stratum"}

    def test_unsatisfiable_group_minimum_exit_3(self, bundle, tmp_path, capsys):
        text = bundle["config"].read_text().replace("min_per_group = 2", "min_per_group = 50")
        cfg = tmp_path / "study.toml"
        cfg.write_text(text)
        rc = main(["causal", "--config", str(cfg), "--out", str(tmp_path / "out")])
        assert rc == 3
        err = capsys.readouterr().err
        assert "propensity score histogram" in err
        assert "no overlap" in err
        assert "m=" in err and "c=" in err

    def test_overlapping_cohorts_exit_2(self, bundle, tmp_path, capsys):
        cfg = _config_with(
            bundle, tmp_path, control_ids=bundle["run_dir"] / "minority.txt"
        )
        assert main(["causal", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 2
        assert "both cohorts" in capsys.readouterr().err

    def test_unknown_outcome_exit_1(self, bundle, tmp_path, capsys):
        text = bundle["config"].read_text().replace("[causal]", '[causal]\noutcomes = ["joy"]')
        cfg = tmp_path / "study.toml"
        cfg.write_text(text)
        assert main(["causal", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 1
        assert "joy" in capsys.readouterr().err

    def test_bad_window_exit_1(self, bundle, tmp_path, capsys):
        text = re.sub(
            r'(?m)^boundary = ".*"$', 'boundary = "the day it started"', bundle["config"].read_text()
        )
        cfg = tmp_path / "study.toml"
        cfg.write_text(text)
        assert main(["causal", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 1

    def test_missing_input_file_exit_2(self, bundle, tmp_path, capsys):
        cfg = _config_with(bundle, tmp_path, posts=tmp_path / "nope.jsonl")
        assert main(["causal", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 2
        assert "not found" in capsys.readouterr().err


@pytest.fixture(scope="module")
def trained_model(bundle, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "te"
    rc = main(["train-eval", "--config", str(bundle["config"]), "--out", str(out)])
    assert rc == 0
    return run_dir_for(out, "train-eval") / "model_logistic.json"


class TestImportanceDelta:
    def test_same_model_zero_deltas(self, trained_model, tmp_path, capsys):
        model = trained_model
        out = tmp_path / "runs"
        rc = main(
            ["importance-delta", "--model-a", str(model), "--model-b", str(model), "--out", str(out)]
        )
        assert rc == 0
        run_dir = run_dir_for(out, "importance-delta")
        with open(run_dir / "rank_delta.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows
        assert all(r["delta"] == "0" and r["direction"] == "-" for r in rows)
        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert manifest["config"]["model_a"] == manifest["config"]["model_b"]

    def test_top_limits_printed_rows(self, trained_model, tmp_path, capsys):
        model = trained_model
        rc = main(
            [
                "importance-delta",
                "--model-a",
                str(model),
                "--model-b",
                str(model),
                "--out",
                str(tmp_path / "runs"),
                "--top",
                "3",
            ]
        )
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        header = next(i for i, line in enumerate(lines) if line.startswith("feature"))
        artifacts = next(i for i, line in enumerate(lines) if line.startswith("artifacts"))
        assert artifacts - header - 1 == 3

    def test_missing_model_exit_2(self, tmp_path, capsys):
        rc = main(
            ["importance-delta", "--model-a", "/no/a.json", "--model-b", "/no/b.json", "--out", str(tmp_path)]
        )
        assert rc == 2

    def test_corrupt_model_exit_2(self, trained_model, tmp_path, capsys):
        model = trained_model
        broken = tmp_path / "broken.json"
        broken.write_text("{not json")
        rc = main(
            ["importance-delta", "--model-a", str(model), "--model-b", str(broken), "--out", str(tmp_path / "o")]
        )
        assert rc == 2

    def test_non_logistic_model_exit_2(self, trained_model, tmp_path, capsys):
        model = trained_model
        rng = np.random.default_rng(0)
        data = Dataset(rng.normal(size=(10, 2)), np.array([0, 1] * 5), ("a", "b"))
        dummy_path = tmp_path / "dummy.json"
        save_model(train_model("dummy", data, TrainConfig()), dummy_path)
        rc = main(
            ["importance-delta", "--model-a", str(model), "--model-b", str(dummy_path), "--out", str(tmp_path / "o")]
        )
        assert rc == 2
        assert "no coefficient ranking" in capsys.readouterr().err

    def test_schema_mismatch_exit_2(self, trained_model, tmp_path, capsys):
        model = trained_model
        rng = np.random.default_rng(1)
        data = Dataset(rng.normal(size=(20, 2)), np.array([0, 1] * 10), ("a", "b"))
        other_path = tmp_path / "other.json"
        save_model(train_model("logistic", data, TrainConfig()), other_path)
        rc = main(
            ["importance-delta", "--model-a", str(model), "--model-b", str(other_path), "--out", str(tmp_path / "o")]
        )
        assert rc == 2
        assert "schemas do not match" in capsys.readouterr().err


class TestCohort:
    def test_happy_path(self, bundle, tmp_path, capsys):
        out = tmp_path / "runs"
        rc = main(["cohort", "--config", str(bundle["config"]), "--out", str(out)])
        assert rc == 0
        run_dir = run_dir_for(out, "cohort")
        for name in ("minority.txt", "control.txt", "hashtags.csv", "audit.json", "manifest.json"):
            assert (run_dir / name).exists(), name
        stdout = capsys.readouterr().out
        assert re.search(r"cohort: \d+ minority, \d+ control users", stdout)

        minority = (run_dir / "minority.txt").read_text().split()
        control = (run_dir / "control.txt").read_text().split()
        assert len(minority) >= 20 and len(control) >= 20
        assert all(uid.startswith("m") for uid in minority)
        assert all(uid.startswith("c") for uid in control)

        audit = json.loads((run_dir / "audit.json").read_text())
        assert audit["users_read"] == 60
        assert audit["minority"] == len(minority)

        with open(run_dir / "hashtags.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows
        assert {"hashtag", "cooccurrence_count"} <= set(rows[0])

    def test_no_bio_keywords_empties_minority_exit_2(self, bundle, tmp_path, capsys):
        text = re.sub(r"(?m)^bio_keywords = .*$", "bio_keywords = []", bundle["config"].read_text())
        cfg = tmp_path / "study.toml"
        cfg.write_text(text)
        assert main(["cohort", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 2
        assert "empty cohort" in capsys.readouterr().err

    def test_missing_seed_hashtags_exit_1(self, bundle, tmp_path, capsys):
        text = re.sub(r"(?m)^seed_hashtags = .*$", "", bundle["config"].read_text())
        cfg = tmp_path / "study.toml"
        cfg.write_text(text)
        assert main(["cohort", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 1
        assert "seed_hashtags" in capsys.readouterr().err
