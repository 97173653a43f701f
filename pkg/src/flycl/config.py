"""Run configuration and deterministic seed fan-out.

A single master seed drives everything. Per-trial seeds are derived as

    trial_seed[i] = SeedSequence([master_seed, 0, i]).generate_state(1)[0]

and synthetic-data streams use SeedSequence([master_seed, 1, j]) with
j = 0 (prototypes), 1 (train noise), 2 (test noise). Within a trial the
projection matrix is seeded with the trial seed itself and the offline
shuffle with [trial_seed, 1]. Identical configs and master seeds
therefore reproduce byte-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .encoder import default_fan_in
from .errors import ConfigError

MODELS = ("fly", "perceptron-v1", "perceptron-v2", "perceptron-v3", "perceptron-v4", "logreg")
CODINGS = ("sparse", "dense")
ORDERINGS = ("sequential", "offline")


def derive_trial_seeds(master_seed: int, n_trials: int) -> list[int]:
    """Per-trial integer seeds from one master seed (documented rule above)."""
    if n_trials < 1:
        raise ConfigError(f"seeds: must be >= 1, got {n_trials}")
    return [
        int(np.random.SeedSequence([master_seed, 0, i]).generate_state(1)[0])
        for i in range(n_trials)
    ]


def data_stream_seed(master_seed: int, stream: int) -> int:
    """Seed for synthetic-data stream j (0 prototypes, 1 train noise, 2 test noise)."""
    return int(np.random.SeedSequence([master_seed, 1, stream]).generate_state(1)[0])


@dataclass(frozen=True)
class ModelConfig:
    """Learner and coding choice plus hyperparameters.

    code_dim, n_active and fan_in may be left as None and are then
    resolved from the data: code_dim = 40 * input_dim, n_active =
    code_dim // n_classes, fan_in per `default_fan_in`.
    """

    model: str = "fly"
    coding: str = "sparse"
    code_dim: int | None = None
    n_active: int | None = None
    fan_in: int | None = None
    decay: float = 0.0
    rate: float = 0.01  # additive step for fly/perceptron, SGD step for logreg

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model: must be one of {MODELS}, got {self.model!r}")
        if self.coding not in CODINGS:
            raise ConfigError(f"coding: must be one of {CODINGS}, got {self.coding!r}")
        if not 0.0 <= self.decay < 1.0:
            raise ConfigError(f"alpha: must be in [0, 1), got {self.decay}")
        if not self.rate > 0.0:
            raise ConfigError(f"beta: must be > 0, got {self.rate}")

    def resolve(self, input_dim: int, n_classes: int) -> "ModelConfig":
        """Fill in data-dependent defaults and validate the combination."""
        code_dim = 40 * input_dim if self.code_dim is None else self.code_dim
        if code_dim < 1:
            raise ConfigError(f"m: must be >= 1, got {code_dim}")
        n_active = max(1, code_dim // n_classes) if self.n_active is None else self.n_active
        if not 1 <= n_active <= code_dim:
            raise ConfigError(f"l: must be in [1, m={code_dim}], got {n_active}")
        fan_in = default_fan_in(input_dim) if self.fan_in is None else self.fan_in
        if not 1 <= fan_in <= input_dim:
            raise ConfigError(f"p: must be in [1, d={input_dim}], got {fan_in}")
        return replace(self, code_dim=code_dim, n_active=n_active, fan_in=fan_in)


@dataclass(frozen=True)
class SyntheticSpec:
    """Prototype-task data generated on the fly instead of loaded from disk."""

    n_prototypes: int
    input_dim: int
    n_classes: int
    separation: float
    sigma: float
    train_per_prototype: int
    test_per_prototype: int


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a class-incremental run needs besides the master seed."""

    model: ModelConfig
    classes_per_task: int
    n_seeds: int = 5
    master_seed: int = 0
    class_order: tuple[int, ...] | None = None
    ordering: str = "sequential"
    train_path: str | None = None
    test_path: str | None = None
    synthetic: SyntheticSpec | None = None
    shift_nonnegative: bool = False
    raw: dict[str, Any] | None = None  # config file contents, echoed into outputs

    def __post_init__(self):
        if self.classes_per_task < 1:
            raise ConfigError(f"classes_per_task: must be >= 1, got {self.classes_per_task}")
        if self.n_seeds < 1:
            raise ConfigError(f"seeds: must be >= 1, got {self.n_seeds}")
        if self.ordering not in ORDERINGS:
            raise ConfigError(f"ordering: must be one of {ORDERINGS}, got {self.ordering!r}")
        has_files = self.train_path is not None or self.test_path is not None
        if has_files and (self.train_path is None or self.test_path is None):
            raise ConfigError("dataset: need both 'train' and 'test' paths")
        if has_files == (self.synthetic is not None):
            raise ConfigError("dataset: exactly one of file paths or a 'synthetic' block is required")


def _expect(mapping: dict, key: str, kind, where: str):
    value = mapping.get(key)
    if value is None:
        raise ConfigError(f"{where}{key}: missing required field")
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{where}{key}: expected {kind.__name__}, got {value!r}")
    return value


def experiment_from_dict(doc: dict[str, Any]) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError(f"config root: expected an object, got {type(doc).__name__}")
    known = {
        "model", "coding", "m", "l", "p", "alpha", "beta", "lr",
        "classes_per_task", "class_order", "seeds", "seed", "ordering",
        "dataset", "synthetic",
    }
    for key in doc:
        if key not in known:
            raise ConfigError(f"{key}: unknown field")

    model_name = doc.get("model", "fly")
    rate_key = "lr" if model_name == "logreg" else "beta"
    rate = doc.get(rate_key, doc.get("beta", 0.01))
    if not isinstance(rate, (int, float)) or isinstance(rate, bool):
        raise ConfigError(f"{rate_key}: expected number, got {rate!r}")
    model = ModelConfig(
        model=model_name,
        coding=doc.get("coding", "sparse"),
        code_dim=doc.get("m"),
        n_active=doc.get("l"),
        fan_in=doc.get("p"),
        decay=float(doc.get("alpha", 0.0)),
        rate=float(rate),
    )
    for dim_key in ("m", "l", "p"):
        value = doc.get(dim_key)
        if value is not None and (not isinstance(value, int) or isinstance(value, bool)):
            raise ConfigError(f"{dim_key}: expected integer, got {value!r}")

    train_path = test_path = None
    synthetic = None
    shift = False
    dataset = doc.get("dataset")
    if dataset is not None:
        if not isinstance(dataset, dict):
            raise ConfigError(f"dataset: expected an object, got {dataset!r}")
        train_path = _expect(dataset, "train", str, "dataset.")
        test_path = _expect(dataset, "test", str, "dataset.")
        shift = dataset.get("shift_nonnegative", False)
        if not isinstance(shift, bool):
            raise ConfigError(f"dataset.shift_nonnegative: expected bool, got {shift!r}")
    synth = doc.get("synthetic")
    if synth is not None:
        if not isinstance(synth, dict):
            raise ConfigError(f"synthetic: expected an object, got {synth!r}")
        synthetic = SyntheticSpec(
            n_prototypes=_expect(synth, "n_prototypes", int, "synthetic."),
            input_dim=_expect(synth, "d", int, "synthetic."),
            n_classes=_expect(synth, "k", int, "synthetic."),
            separation=_expect(synth, "xi", float, "synthetic."),
            sigma=_expect(synth, "sigma", float, "synthetic."),
            train_per_prototype=_expect(synth, "train_per_prototype", int, "synthetic."),
            test_per_prototype=_expect(synth, "test_per_prototype", int, "synthetic."),
        )

    class_order = doc.get("class_order")
    if class_order is not None:
        if not isinstance(class_order, list) or not all(
            isinstance(c, int) and not isinstance(c, bool) for c in class_order
        ):
            raise ConfigError(f"class_order: expected a list of integers, got {class_order!r}")
        class_order = tuple(class_order)

    seeds = doc.get("seeds", 5)
    if not isinstance(seeds, int) or isinstance(seeds, bool):
        raise ConfigError(f"seeds: expected integer, got {seeds!r}")
    master = doc.get("seed", 0)
    if not isinstance(master, int) or isinstance(master, bool):
        raise ConfigError(f"seed: expected integer, got {master!r}")

    return ExperimentConfig(
        model=model,
        classes_per_task=_expect(doc, "classes_per_task", int, ""),
        n_seeds=seeds,
        master_seed=master,
        class_order=class_order,
        ordering=doc.get("ordering", "sequential"),
        train_path=train_path,
        test_path=test_path,
        synthetic=synthetic,
        shift_nonnegative=shift,
        raw=doc,
    )
