"""CLI tests: file outputs, exit codes, reproducibility."""

import json

import pytest

from flycl.cli import main
from flycl.data import load_features

RUN_DOC = {
    "model": "fly",
    "m": 200,
    "l": 20,
    "p": 2,
    "beta": 0.01,
    "classes_per_task": 2,
    "seeds": 2,
    "synthetic": {
        "n_prototypes": 4, "d": 10, "k": 4, "xi": 0.5, "sigma": 0.05,
        "train_per_prototype": 5, "test_per_prototype": 3,
    },
}


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestSynth:
    def test_writes_a_loadable_feature_file(self, tmp_path, capsys):
        out = tmp_path / "data.csv"
        rc = main(["synth", "--out", str(out), "--prototypes", "6", "--dim", "12",
                   "--classes", "3", "--per-prototype", "4", "--seed", "1"])
        assert rc == 0
        assert "wrote" in capsys.readouterr().out
        ds = load_features(out)
        assert ds.n_items == 24
        assert ds.input_dim == 12
        assert ds.n_classes == 3

    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["--prototypes", "4", "--dim", "8", "--classes", "2", "--per-prototype", "3", "--seed", "5"]
        assert main(["synth", "--out", str(a)] + args) == 0
        assert main(["synth", "--out", str(b)] + args) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_infeasible_request_exits_2(self, tmp_path, capsys, monkeypatch):
        import flycl.data

        monkeypatch.setattr(flycl.data, "_ATTEMPT_CAP", 1000)
        rc = main(["synth", "--out", str(tmp_path / "x.csv"), "--prototypes", "10",
                   "--dim", "2", "--classes", "2", "--xi", "0.01"])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")


class TestRun:
    def test_sequential_outputs(self, tmp_path, capsys):
        cfg = write_config(tmp_path, RUN_DOC)
        out = tmp_path / "results"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        csv_lines = (out / "metrics.csv").read_text().splitlines()
        assert csv_lines[0] == "seed,task_index,metric,value"
        assert len(csv_lines) == 1 + 2 * 2 * 4  # seeds x tasks x metrics
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"] == RUN_DOC
        assert summary["master_seed"] == 0
        assert len(summary["trial_seeds"]) == 2
        assert summary["tasks"] == [[0, 1], [2, 3]]
        assert set(summary["metrics"]) == {"acc_so_far", "acc_immediate", "acc_final", "memory_loss"}
        assert capsys.readouterr().out.count("wrote") == 2

    def test_defaults_resolve_without_explicit_dims(self, tmp_path):
        doc = {k: v for k, v in RUN_DOC.items() if k not in ("m", "l", "p")}
        cfg = write_config(tmp_path, doc)
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "r")]) == 0

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, RUN_DOC)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(a)]) == 0
        assert main(["run", "--config", cfg, "--out", str(b)]) == 0
        assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()

    def test_seed_flag_overrides_the_config(self, tmp_path):
        cfg = write_config(tmp_path, RUN_DOC)
        out = tmp_path / "r"
        assert main(["run", "--config", cfg, "--out", str(out), "--seed", "9"]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["master_seed"] == 9
        # master seed 0 would have produced this pair
        assert summary["trial_seeds"] != [2968811710, 3831201730]

    def test_offline_ordering_outputs(self, tmp_path):
        doc = dict(RUN_DOC, ordering="offline")
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "off"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        csv_lines = (out / "metrics.csv").read_text().splitlines()
        assert len(csv_lines) == 1 + 2 * 2  # seeds x tasks, acc_so_far only
        assert all(line.split(",")[2] == "acc_so_far" for line in csv_lines[1:])
        summary = json.loads((out / "summary.json").read_text())
        assert [p["classes"] for p in summary["offline"]] == [[0, 1], [0, 1, 2, 3]]

    def test_file_dataset_round_trip(self, tmp_path):
        train, test = tmp_path / "train.csv", tmp_path / "test.csv"
        common = ["--prototypes", "4", "--dim", "10", "--classes", "4", "--per-prototype", "5"]
        assert main(["synth", "--out", str(train), "--seed", "0"] + common) == 0
        assert main(["synth", "--out", str(test), "--seed", "1"] + common) == 0
        doc = {
            "model": "fly", "m": 200, "l": 20, "p": 2, "classes_per_task": 2, "seeds": 2,
            "dataset": {"train": str(train), "test": str(test), "shift_nonnegative": True},
        }
        cfg = write_config(tmp_path, doc)
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "r")]) == 0

    def test_invalid_geometry_exits_1(self, tmp_path, capsys):
        cfg = write_config(tmp_path, dict(RUN_DOC, l=500))
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "r")])
        assert rc == 1
        err = capsys.readouterr().err
        assert err.startswith("error:") and "l" in err

    def test_unknown_field_exits_1(self, tmp_path, capsys):
        cfg = write_config(tmp_path, dict(RUN_DOC, momentum=0.9))
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "r")]) == 1
        assert "momentum" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path, capsys):
        rc = main(["run", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "r")])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_bad_json_exits_1(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "r")]) == 1
        assert "JSON" in capsys.readouterr().err

    def test_missing_dataset_file_exits_2(self, tmp_path, capsys):
        doc = {
            "model": "fly", "classes_per_task": 2,
            "dataset": {"train": str(tmp_path / "no.csv"), "test": str(tmp_path / "no.csv")},
        }
        cfg = write_config(tmp_path, doc)
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "r")]) == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_bad_flags_exit_1(self, capsys):
        assert main(["run", "--config"]) == 1
        capsys.readouterr()


THEORY_DOC = {
    "synthetic": {"n_prototypes": 4, "d": 10, "k": 4, "xi": 0.5, "sigma": 0.05, "per_prototype": 5},
    "encoder": {"d": 10, "m": 200, "l": 20, "p": 2},
    "pair_count": 20,
    "prototypes": {"n_prototypes": 4, "d": 10, "k": 4, "xi": 0.5},
}


class TestTheory:
    def test_gamma_report(self, tmp_path):
        cfg = write_config(tmp_path, THEORY_DOC)
        out = tmp_path / "rep"
        assert main(["theory", "gamma", "--config", cfg, "--out", str(out)]) == 0
        doc = json.loads((out / "gamma.json").read_text())
        assert "gamma_hat" in doc and doc["seed"] == 0
        assert doc["config"] == THEORY_DOC

    def test_shrinkage_report(self, tmp_path):
        cfg = write_config(tmp_path, THEORY_DOC)
        out = tmp_path / "rep"
        assert main(["theory", "shrinkage", "--config", cfg, "--out", str(out)]) == 0
        doc = json.loads((out / "shrinkage.json").read_text())
        assert len(doc["mean_overlap"]) == 10
        assert len(doc["overlaps"][0]) == 20

    def test_theorem1_report(self, tmp_path):
        cfg = write_config(tmp_path, THEORY_DOC)
        out = tmp_path / "rep"
        assert main(["theory", "theorem1", "--config", cfg, "--out", str(out)]) == 0
        doc = json.loads((out / "theorem1.json").read_text())
        assert isinstance(doc["passed"], bool)
        assert doc["max_class_size"] == 1

    def test_convergence_report(self, tmp_path):
        cfg = write_config(tmp_path, THEORY_DOC)
        out = tmp_path / "rep"
        assert main(["theory", "convergence", "--config", cfg, "--out", str(out)]) == 0
        doc = json.loads((out / "convergence.json").read_text())
        assert doc["saturated"] is False
        assert doc["max_relative_deviation"] <= 1e-9

    def test_hijack_report_with_builtin_defaults(self, tmp_path):
        out = tmp_path / "rep"
        assert main(["theory", "hijack", "--out", str(out), "--seed", "3"]) == 0
        doc = json.loads((out / "hijack.json").read_text())
        assert doc["seed"] == 3
        assert doc["v1_hijacked_first"] is True
        assert doc["v4_stable"] is True

    def test_seed_override_lands_in_the_report(self, tmp_path):
        out = tmp_path / "rep"
        assert main(["theory", "hijack", "--out", str(out), "--seed", "12"]) == 0
        assert json.loads((out / "hijack.json").read_text())["seed"] == 12

    def test_unknown_check_exits_1(self, tmp_path, capsys):
        assert main(["theory", "entropy", "--out", str(tmp_path)]) == 1
        capsys.readouterr()
