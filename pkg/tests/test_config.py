"""Configuration tests: seed fan-out, defaults, JSON schema validation."""

import pytest

from flycl.config import (
    CODINGS,
    MODELS,
    ModelConfig,
    SyntheticSpec,
    data_stream_seed,
    derive_trial_seeds,
    experiment_from_dict,
)
from flycl.errors import ConfigError


class TestSeedFanOut:
    def test_trial_seeds_are_frozen_by_the_derivation_rule(self):
        assert derive_trial_seeds(0, 3) == [2968811710, 3831201730, 2926792190]
        assert derive_trial_seeds(7, 2) == [2083679832, 2028854884]

    def test_data_streams_are_frozen_and_disjoint_from_trials(self):
        streams = [data_stream_seed(0, j) for j in range(3)]
        assert streams == [3964924996, 901243215, 3884055042]
        assert not set(streams) & set(derive_trial_seeds(0, 3))

    def test_prefixes_are_stable(self):
        assert derive_trial_seeds(0, 5)[:3] == derive_trial_seeds(0, 3)

    def test_at_least_one_trial(self):
        with pytest.raises(ConfigError, match="seeds"):
            derive_trial_seeds(0, 0)


class TestModelConfig:
    def test_known_names(self):
        assert MODELS == ("fly", "perceptron-v1", "perceptron-v2", "perceptron-v3", "perceptron-v4", "logreg")
        assert CODINGS == ("sparse", "dense")

    def test_resolve_fills_data_dependent_defaults(self):
        cfg = ModelConfig().resolve(input_dim=50, n_classes=10)
        assert cfg.code_dim == 40 * 50
        assert cfg.n_active == 2000 // 10
        assert cfg.fan_in == 5  # one tenth of the input dimension

    def test_resolve_keeps_explicit_values(self):
        cfg = ModelConfig(code_dim=300, n_active=7, fan_in=3).resolve(50, 10)
        assert (cfg.code_dim, cfg.n_active, cfg.fan_in) == (300, 7, 3)

    def test_many_classes_still_leave_one_active_unit(self):
        cfg = ModelConfig(code_dim=10).resolve(input_dim=4, n_classes=64)
        assert cfg.n_active == 1

    def test_name_validation(self):
        with pytest.raises(ConfigError, match="model"):
            ModelConfig(model="svm")
        with pytest.raises(ConfigError, match="coding"):
            ModelConfig(coding="both")

    def test_hyperparameter_validation(self):
        with pytest.raises(ConfigError, match="alpha"):
            ModelConfig(decay=1.0)
        with pytest.raises(ConfigError, match="beta"):
            ModelConfig(rate=0.0)

    def test_resolve_validates_the_combination(self):
        with pytest.raises(ConfigError, match="l:"):
            ModelConfig(code_dim=10, n_active=11).resolve(4, 2)
        with pytest.raises(ConfigError, match="p:"):
            ModelConfig(fan_in=5).resolve(4, 2)
        with pytest.raises(ConfigError, match="m:"):
            ModelConfig(code_dim=0).resolve(4, 2)


def synth_doc(**extra):
    doc = {
        "classes_per_task": 2,
        "synthetic": {
            "n_prototypes": 4, "d": 10, "k": 4, "xi": 0.5, "sigma": 0.05,
            "train_per_prototype": 5, "test_per_prototype": 3,
        },
    }
    doc.update(extra)
    return doc


class TestExperimentFromDict:
    def test_synthetic_document(self):
        cfg = experiment_from_dict(synth_doc(seeds=3, seed=11, m=200, l=20, p=2))
        assert cfg.model.model == "fly"
        assert cfg.model.coding == "sparse"
        assert (cfg.model.code_dim, cfg.model.n_active, cfg.model.fan_in) == (200, 20, 2)
        assert cfg.n_seeds == 3 and cfg.master_seed == 11
        assert cfg.ordering == "sequential"
        assert cfg.synthetic == SyntheticSpec(4, 10, 4, 0.5, 0.05, 5, 3)
        assert cfg.raw["seeds"] == 3

    def test_file_document(self):
        doc = {
            "model": "perceptron-v3",
            "classes_per_task": 1,
            "dataset": {"train": "a.csv", "test": "b.csv", "shift_nonnegative": True},
        }
        cfg = experiment_from_dict(doc)
        assert cfg.train_path == "a.csv" and cfg.test_path == "b.csv"
        assert cfg.shift_nonnegative is True
        assert cfg.model.model == "perceptron-v3"

    def test_beta_feeds_the_associative_models_and_lr_the_softmax(self):
        assert experiment_from_dict(synth_doc(beta=0.02)).model.rate == 0.02
        cfg = experiment_from_dict(synth_doc(model="logreg", lr=0.1, beta=0.02))
        assert cfg.model.rate == 0.1
        # without lr, logreg falls back to beta
        assert experiment_from_dict(synth_doc(model="logreg", beta=0.02)).model.rate == 0.02

    def test_unknown_field_is_rejected(self):
        with pytest.raises(ConfigError, match="epochs"):
            experiment_from_dict(synth_doc(epochs=2))

    def test_exactly_one_data_source(self):
        doc = synth_doc()
        doc["dataset"] = {"train": "a.csv", "test": "b.csv"}
        with pytest.raises(ConfigError, match="exactly one"):
            experiment_from_dict(doc)
        with pytest.raises(ConfigError, match="exactly one"):
            experiment_from_dict({"classes_per_task": 2})

    def test_dataset_needs_both_paths(self):
        with pytest.raises(ConfigError, match="dataset.test"):
            experiment_from_dict({"classes_per_task": 2, "dataset": {"train": "a.csv"}})

    def test_class_order_must_be_integer_list(self):
        with pytest.raises(ConfigError, match="class_order"):
            experiment_from_dict(synth_doc(class_order=[0, "1"]))
        cfg = experiment_from_dict(synth_doc(class_order=[3, 2, 1, 0]))
        assert cfg.class_order == (3, 2, 1, 0)

    def test_type_errors(self):
        with pytest.raises(ConfigError, match="m:"):
            experiment_from_dict(synth_doc(m=2.5))
        with pytest.raises(ConfigError, match="seeds"):
            experiment_from_dict(synth_doc(seeds=True))
        with pytest.raises(ConfigError, match="classes_per_task"):
            experiment_from_dict({"synthetic": synth_doc()["synthetic"]})
        with pytest.raises(ConfigError, match="synthetic.xi"):
            experiment_from_dict(
                {"classes_per_task": 2, "synthetic": {"n_prototypes": 4, "d": 10, "k": 4,
                                                      "sigma": 0.05, "train_per_prototype": 5,
                                                      "test_per_prototype": 3}}
            )

    def test_ordering_validated(self):
        with pytest.raises(ConfigError, match="ordering"):
            experiment_from_dict(synth_doc(ordering="random"))
        assert experiment_from_dict(synth_doc(ordering="offline")).ordering == "offline"
