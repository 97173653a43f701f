"""Class-incremental training protocol and its two accuracy measures.

Classes are partitioned into tasks. Each task's training items are
presented once, class by class, in dataset order; there is no replay
and no second epoch. After each task the model is scored on the test
items of every class seen so far (accuracy-so-far) and on the current
task's classes alone (immediate accuracy). After the final task each
task is re-scored in isolation (final accuracy); memory loss is
immediate minus final, so a task the model never forgets scores 0.

Prediction is always an argmax over all class outputs. The model is
never told which task a test item came from.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .data import LabeledFeatureSet, atomic_write_text
from .encoder import ProjectionMatrix, build_projection, encode, encode_dense
from .errors import ConfigError, DatasetError
from .learner import init_weights, logreg_scores, predict, update_fly, update_logreg, update_perceptron

METRICS = ("acc_so_far", "acc_immediate", "acc_final", "memory_loss")


@dataclass(frozen=True)
class TaskSchedule:
    """Ordered partition of the class set into tasks. Single epoch."""

    tasks: tuple[tuple[int, ...], ...]
    epochs: int = 1

    def __post_init__(self):
        if self.epochs != 1:
            raise ConfigError(f"epochs: fixed at 1 by the protocol, got {self.epochs}")
        if not self.tasks:
            raise ConfigError("schedule has no tasks")
        flat = [c for task in self.tasks for c in task]
        if len(flat) != len(set(flat)):
            raise ConfigError("schedule assigns some class to more than one task")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(c for task in self.tasks for c in task)

    def seen_through(self, task_index: int) -> tuple[int, ...]:
        """Classes covered by tasks 0..task_index inclusive."""
        return tuple(c for task in self.tasks[: task_index + 1] for c in task)


def make_schedule(
    class_count: int,
    classes_per_task: int,
    class_order: tuple[int, ...] | None = None,
) -> TaskSchedule:
    """Split class_count classes into consecutive tasks of equal size.

    class_order, if given, must be a permutation of 0..class_count-1 and
    fixes the presentation order before splitting.
    """
    if class_count < 1:
        raise ConfigError(f"class_count: must be >= 1, got {class_count}")
    if not 1 <= classes_per_task <= class_count:
        raise ConfigError(
            f"classes_per_task: must be in [1, class_count={class_count}], got {classes_per_task}"
        )
    if class_count % classes_per_task != 0:
        raise ConfigError(
            f"classes_per_task: {classes_per_task} does not divide class_count={class_count}"
        )
    if class_order is None:
        order = tuple(range(class_count))
    else:
        order = tuple(int(c) for c in class_order)
        if sorted(order) != list(range(class_count)):
            raise ConfigError(f"class_order: must be a permutation of 0..{class_count - 1}")
    tasks = tuple(
        order[i : i + classes_per_task] for i in range(0, class_count, classes_per_task)
    )
    return TaskSchedule(tasks)


class _OnlineModel:
    """One learner plus its fixed projection, trained item by item."""

    def __init__(self, cfg: ModelConfig, n_classes: int, theta: ProjectionMatrix):
        self.cfg = cfg
        self.theta = theta
        self.weights = init_weights(cfg.code_dim, n_classes, decay=cfg.decay, rate=cfg.rate)
        self.bias = np.zeros(n_classes) if cfg.model == "logreg" else None

    def encode(self, x: np.ndarray) -> np.ndarray:
        if self.cfg.coding == "sparse":
            return encode(self.theta, x, self.cfg.n_active)
        return encode_dense(self.theta, x)

    def observe(self, code: np.ndarray, label: int) -> None:
        model = self.cfg.model
        if model == "fly":
            update_fly(self.weights, code, label)
        elif model == "logreg":
            update_logreg(self.weights, self.bias, code, label, lr=self.cfg.rate)
        else:
            guess = predict(self.weights, code).class_index
            update_perceptron(self.weights, code, label, guess, variant=model[-2:])

    def scores(self, code: np.ndarray) -> np.ndarray:
        if self.bias is not None:
            return logreg_scores(self.weights, self.bias, code)
        return predict(self.weights, code).scores

    def classify(self, code) -> int:
        """Accepts a dense code or a cached (indices, values) pair."""
        if isinstance(code, tuple):
            idx, val = code
            s = val @ self.weights.w[idx, :]
            if self.bias is not None:
                s = s + self.bias
            return int(np.argmax(s))
        return int(np.argmax(self.scores(code)))


def evaluate(model: _OnlineModel, codes, labels: np.ndarray, allowed_classes) -> float:
    """Fraction of the allowed classes' items the model labels correctly.

    codes may be dense vectors or cached (indices, values) pairs, one
    per item. Only items whose label is in allowed_classes are scored,
    but the model's argmax always runs over every class output.
    """
    labels = np.asarray(labels)
    allowed = set(int(c) for c in allowed_classes)
    picked = [i for i in range(len(labels)) if int(labels[i]) in allowed]
    if not picked:
        raise DatasetError(f"no test items for classes {sorted(allowed)}")
    hits = sum(1 for i in picked if model.classify(codes[i]) == int(labels[i]))
    return hits / len(picked)


def _cache_codes(model: _OnlineModel, features: np.ndarray) -> list:
    """Encode once, store sparse codes compactly as (indices, values)."""
    cached = []
    for x in features:
        code = model.encode(x)
        if model.cfg.coding == "sparse":
            idx = np.flatnonzero(code)
            cached.append((idx, code[idx]))
        else:
            cached.append(code)
    return cached


def _train_items(model: _OnlineModel, train: LabeledFeatureSet, class_sequence) -> None:
    """One pass over the given classes, class by class, in dataset order."""
    for cls in class_sequence:
        for i in train.class_indices(cls):
            model.observe(model.encode(train.features[i]), int(cls))


def _run_trial(
    cfg: ModelConfig,
    train: LabeledFeatureSet,
    test: LabeledFeatureSet,
    schedule: TaskSchedule,
    trial_seed: int,
) -> dict[str, np.ndarray]:
    theta = build_projection(train.input_dim, cfg.code_dim, cfg.fan_in, seed=trial_seed)
    model = _OnlineModel(cfg, train.n_classes, theta)
    test_codes = _cache_codes(model, test.features)

    n_tasks = schedule.n_tasks
    acc_so_far = np.zeros(n_tasks)
    acc_immediate = np.zeros(n_tasks)
    for t, task in enumerate(schedule.tasks):
        _train_items(model, train, task)
        acc_so_far[t] = evaluate(model, test_codes, test.labels, schedule.seen_through(t))
        acc_immediate[t] = evaluate(model, test_codes, test.labels, task)
    acc_final = np.zeros(n_tasks)
    for t, task in enumerate(schedule.tasks):
        acc_final[t] = evaluate(model, test_codes, test.labels, task)
    return {
        "acc_so_far": acc_so_far,
        "acc_immediate": acc_immediate,
        "acc_final": acc_final,
        "memory_loss": acc_immediate - acc_final,
    }


def _trial_worker(args):
    cfg, train, test, schedule, seed = args
    return _run_trial(cfg, train, test, schedule, seed)


def _offline_worker(args):
    cfg, train, test, classes, seed = args
    theta = build_projection(train.input_dim, cfg.code_dim, cfg.fan_in, seed=seed)
    model = _OnlineModel(cfg, train.n_classes, theta)
    pool = np.concatenate([train.class_indices(c) for c in classes])
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    pool = pool[rng.permutation(pool.size)]
    for i in pool:
        model.observe(model.encode(train.features[i]), int(train.labels[i]))
    test_codes = _cache_codes(model, test.features)
    return evaluate(model, test_codes, test.labels, classes)


@dataclass
class MetricsReport:
    """Per-seed, per-task metrics from a class-incremental run."""

    seeds: list[int]
    tasks: tuple[tuple[int, ...], ...]
    acc_so_far: np.ndarray  # (n_seeds, n_tasks)
    acc_immediate: np.ndarray
    acc_final: np.ndarray
    memory_loss: np.ndarray

    def metric(self, name: str) -> np.ndarray:
        if name not in METRICS:
            raise ValueError(f"unknown metric {name!r}, expected one of {METRICS}")
        return getattr(self, name)

    def mean(self, name: str) -> np.ndarray:
        return self.metric(name).mean(axis=0)

    def std(self, name: str) -> np.ndarray:
        return self.metric(name).std(axis=0)

    def rows(self):
        """(seed, task_index, metric, value) rows in a fixed order."""
        for s, seed in enumerate(self.seeds):
            for t in range(len(self.tasks)):
                for name in METRICS:
                    yield seed, t, name, float(self.metric(name)[s, t])

    def to_csv(self) -> str:
        lines = ["seed,task_index,metric,value"]
        lines += [f"{seed},{t},{name},{value!r}" for seed, t, name, value in self.rows()]
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        atomic_write_text(path, self.to_csv())

    def summary(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "tasks": [list(task) for task in self.tasks],
            "metrics": {
                name: {
                    "mean": self.mean(name).tolist(),
                    "std": self.std(name).tolist(),
                    "per_seed": self.metric(name).tolist(),
                }
                for name in METRICS
            },
        }


@dataclass
class OfflineReport:
    """Accuracies of from-scratch shuffled single-pass training, one per seed."""

    seeds: list[int]
    classes: tuple[int, ...]
    accuracy: np.ndarray  # (n_seeds,)

    def mean(self) -> float:
        return float(self.accuracy.mean())

    def std(self) -> float:
        return float(self.accuracy.std())


def _check_datasets(train: LabeledFeatureSet, test: LabeledFeatureSet, classes) -> None:
    if train.input_dim != test.input_dim:
        raise DatasetError(
            f"train dimension {train.input_dim} does not match test dimension {test.input_dim}"
        )
    if train.n_classes != test.n_classes:
        raise DatasetError(
            f"train has {train.n_classes} classes but test has {test.n_classes}"
        )
    bad = [c for c in classes if not 0 <= int(c) < train.n_classes]
    if bad:
        raise DatasetError(f"scheduled classes {bad} not present in the dataset (k={train.n_classes})")


def run_class_incremental(
    model_config: ModelConfig,
    train_set: LabeledFeatureSet,
    test_set: LabeledFeatureSet,
    schedule: TaskSchedule,
    seeds: list[int],
    jobs: int = 1,
) -> MetricsReport:
    """Run the protocol once per seed and collect all four metrics.

    Each seed gets its own projection matrix; everything else about the
    run is shared. jobs > 1 fans trials out to worker processes, with
    results always assembled in seed order.
    """
    _check_datasets(train_set, test_set, schedule.classes)
    cfg = model_config.resolve(train_set.input_dim, train_set.n_classes)
    work = [(cfg, train_set, test_set, schedule, int(seed)) for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_worker, work))
    else:
        results = [_trial_worker(item) for item in work]
    stack = {name: np.stack([r[name] for r in results]) for name in METRICS}
    return MetricsReport(
        seeds=[int(s) for s in seeds],
        tasks=schedule.tasks,
        acc_so_far=stack["acc_so_far"],
        acc_immediate=stack["acc_immediate"],
        acc_final=stack["acc_final"],
        memory_loss=stack["memory_loss"],
    )


def run_offline(
    model_config: ModelConfig,
    train_set: LabeledFeatureSet,
    test_set: LabeledFeatureSet,
    classes,
    seeds: list[int],
    jobs: int = 1,
) -> OfflineReport:
    """Baseline: same pipeline, but the classes' items are shuffled together.

    The model is trained from scratch on a seeded uniform shuffle of all
    the given classes' training items (still a single pass) and scored
    on those classes' test items.
    """
    classes = tuple(int(c) for c in classes)
    if not classes:
        raise ConfigError("classes: must not be empty")
    _check_datasets(train_set, test_set, classes)
    cfg = model_config.resolve(train_set.input_dim, train_set.n_classes)
    work = [(cfg, train_set, test_set, classes, int(seed)) for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            accs = list(pool.map(_offline_worker, work))
    else:
        accs = [_offline_worker(item) for item in work]
    return OfflineReport(seeds=[int(s) for s in seeds], classes=classes, accuracy=np.array(accs))
