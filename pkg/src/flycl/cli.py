"""Command line entry points.

    flycl run    --config cfg.json --out DIR [--seed N] [--jobs N]
    flycl synth  --out FILE [--prototypes N --dim D --classes K ...]
    flycl theory {gamma,shrinkage,theorem1,convergence,hijack}
                 [--config cfg.json] [--out DIR] [--seed N]

Configs are JSON. Exit codes: 0 success, 1 invalid configuration,
2 data or I/O failure. All outputs are written atomically and are
byte-identical across reruns with the same config and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (
    ExperimentConfig,
    data_stream_seed,
    derive_trial_seeds,
    experiment_from_dict,
)
from .data import (
    LabeledFeatureSet,
    atomic_write_text,
    generate_prototypes,
    load_features,
    sample_noisy,
    save_features,
    shift_to_nonnegative,
)
from .encoder import build_projection, default_fan_in, encode
from .errors import ConfigError, DatasetError
from .harness import make_schedule, run_class_incremental, run_offline
from .theory import (
    EncoderConfig,
    check_theorem1,
    empirical_gamma,
    hijack_scenario,
    mean_convergence_check,
    shrinkage_profile,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad flags; route that through ConfigError."""

    def error(self, message):
        raise ConfigError(message)


def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DatasetError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    return doc


def _write_json(path: Path, doc: dict) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
    print(f"wrote {path}")


def _resolve_datasets(cfg: ExperimentConfig) -> tuple[LabeledFeatureSet, LabeledFeatureSet]:
    if cfg.synthetic is not None:
        spec = cfg.synthetic
        protos = generate_prototypes(
            spec.n_prototypes, spec.input_dim, spec.n_classes, spec.separation,
            seed=data_stream_seed(cfg.master_seed, 0),
        )
        train = sample_noisy(protos, spec.sigma, spec.train_per_prototype, seed=data_stream_seed(cfg.master_seed, 1))
        test = sample_noisy(protos, spec.sigma, spec.test_per_prototype, seed=data_stream_seed(cfg.master_seed, 2))
        return train, test
    train = load_features(cfg.train_path)
    test = load_features(cfg.test_path)
    if cfg.shift_nonnegative:
        train, test = shift_to_nonnegative(train, test)
    return train, test


def cmd_run(args) -> int:
    cfg = experiment_from_dict(_read_json(args.config))
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    train, test = _resolve_datasets(cfg)
    schedule = make_schedule(train.n_classes, cfg.classes_per_task, cfg.class_order)
    seeds = derive_trial_seeds(cfg.master_seed, cfg.n_seeds)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    base = {"config": cfg.raw, "master_seed": cfg.master_seed, "trial_seeds": seeds}

    if cfg.ordering == "sequential":
        report = run_class_incremental(cfg.model, train, test, schedule, seeds, jobs=args.jobs)
        atomic_write_text(outdir / "metrics.csv", report.to_csv())
        print(f"wrote {outdir / 'metrics.csv'}")
        _write_json(outdir / "summary.json", base | report.summary())
        return 0

    # Offline curve: retrain from scratch on everything seen through each task.
    per_task = [
        run_offline(cfg.model, train, test, schedule.seen_through(t), seeds, jobs=args.jobs)
        for t in range(schedule.n_tasks)
    ]
    lines = ["seed,task_index,metric,value"]
    for s, seed in enumerate(seeds):
        for t, rep in enumerate(per_task):
            lines.append(f"{seed},{t},acc_so_far,{float(rep.accuracy[s])!r}")
    atomic_write_text(outdir / "metrics.csv", "\n".join(lines) + "\n")
    print(f"wrote {outdir / 'metrics.csv'}")
    points = [
        {
            "task_index": t,
            "classes": list(rep.classes),
            "mean": rep.mean(),
            "std": rep.std(),
            "per_seed": rep.accuracy.tolist(),
        }
        for t, rep in enumerate(per_task)
    ]
    _write_json(outdir / "summary.json", base | {"tasks": [list(t) for t in schedule.tasks], "offline": points})
    return 0


def cmd_synth(args) -> int:
    protos = generate_prototypes(
        args.prototypes, args.dim, args.classes, args.xi, seed=data_stream_seed(args.seed, 0)
    )
    dataset = sample_noisy(protos, args.sigma, args.per_prototype, seed=data_stream_seed(args.seed, 1))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_features(dataset, out)
    print(f"wrote {out} ({dataset.n_items} rows, d={dataset.input_dim}, k={dataset.n_classes})")
    return 0


def _encoder_from(doc: dict | None) -> EncoderConfig:
    doc = doc or {}
    input_dim = doc.get("d", 50)
    code_dim = doc.get("m", 40 * input_dim)
    return EncoderConfig(
        input_dim=input_dim,
        code_dim=code_dim,
        n_active=doc.get("l", max(1, code_dim // 20)),
        fan_in=doc.get("p"),
        projection=doc.get("projection", "sparse-binary"),
    )


_DEMO_SYNTH = {"n_prototypes": 20, "d": 50, "k": 10, "xi": 0.3, "sigma": 0.05, "per_prototype": 20}


def _features_from(doc: dict, seed: int) -> LabeledFeatureSet:
    """Dataset for the theory commands: a file or a synthetic block."""
    if "dataset" in doc:
        block = doc["dataset"]
        if not isinstance(block, dict) or "train" not in block:
            raise ConfigError("dataset: expected an object with a 'train' path")
        return load_features(block["train"], shift_nonnegative=block.get("shift_nonnegative", False))
    synth = doc.get("synthetic", _DEMO_SYNTH)
    protos = generate_prototypes(
        synth.get("n_prototypes", 20), synth.get("d", 50), synth.get("k", 10),
        synth.get("xi", 0.3), seed=data_stream_seed(seed, 0),
    )
    return sample_noisy(protos, synth.get("sigma", 0.05), synth.get("per_prototype", 20),
                        seed=data_stream_seed(seed, 1))


def cmd_theory(args) -> int:
    doc = _read_json(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed: expected integer, got {seed!r}")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    check = args.check

    if check == "gamma":
        dataset = _features_from(doc, seed)
        report = empirical_gamma(dataset, anchor_in_population=doc.get("anchor_in_population", False))
        _write_json(outdir / "gamma.json", {"config": doc, "seed": seed} | report.to_dict())
    elif check == "shrinkage":
        profile = shrinkage_profile(
            _encoder_from(doc.get("encoder")), pair_count=doc.get("pair_count", 200), seed=seed
        )
        _write_json(outdir / "shrinkage.json", {"config": doc, "seed": seed} | profile.to_dict())
    elif check == "theorem1":
        block = doc.get("prototypes", {})
        protos = generate_prototypes(
            block.get("n_prototypes", 20), block.get("d", 50), block.get("k", 10),
            block.get("xi", 0.3), seed=data_stream_seed(seed, 0),
        )
        enc = dict(doc.get("encoder", {}))
        enc.setdefault("d", protos.input_dim)
        report = check_theorem1(
            protos, _encoder_from(enc), seed=seed,
            tolerance=doc.get("tolerance", 0.05), pair_count=doc.get("pair_count", 200),
        )
        _write_json(outdir / "theorem1.json", {"config": doc, "seed": seed} | report)
    elif check == "convergence":
        dataset = _features_from(doc, seed)
        enc = dict(doc.get("encoder", {}))
        enc.setdefault("d", dataset.input_dim)
        cfg = _encoder_from(enc)
        if cfg.projection != "sparse-binary":
            raise ConfigError("projection: convergence uses the sparse-binary encoder")
        fan_in = cfg.fan_in if cfg.fan_in is not None else default_fan_in(cfg.input_dim)
        theta = build_projection(cfg.input_dim, cfg.code_dim, fan_in, seed)
        codes = np.stack([encode(theta, x, cfg.n_active) for x in dataset.features])
        report = mean_convergence_check(codes, dataset.labels, rate=doc.get("beta", 0.01))
        _write_json(outdir / "convergence.json", {"config": doc, "seed": seed} | report.to_dict())
    else:  # hijack
        report = hijack_scenario(
            seed=seed,
            code_dim=doc.get("m", 16),
            support_size=doc.get("support_size", 4),
            overlap=doc.get("overlap", 3),
            blocks=tuple(doc.get("blocks", (50, 50))),
            rate=doc.get("beta", 0.01),
        )
        _write_json(outdir / "hijack.json", {"config": doc, "seed": seed} | report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flycl", description="Sparse-coding continual learning runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="class-incremental benchmark from a JSON config")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.add_argument("--out", required=True, help="output directory for metrics.csv and summary.json")
    p_run.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel trials (default 1)")
    p_run.set_defaults(func=cmd_run)

    p_synth = sub.add_parser("synth", help="write a synthetic prototype feature file")
    p_synth.add_argument("--out", required=True, help="output feature file path")
    p_synth.add_argument("--prototypes", type=int, default=20, help="number of prototypes")
    p_synth.add_argument("--dim", type=int, default=50, help="feature dimension")
    p_synth.add_argument("--classes", type=int, default=10, help="number of classes")
    p_synth.add_argument("--xi", type=float, default=0.3, help="max pairwise prototype cosine")
    p_synth.add_argument("--sigma", type=float, default=0.05, help="noise scale")
    p_synth.add_argument("--per-prototype", type=int, default=100, dest="per_prototype",
                         help="items per prototype")
    p_synth.add_argument("--seed", type=int, default=0, help="master seed")
    p_synth.set_defaults(func=cmd_synth)

    p_theory = sub.add_parser("theory", help="empirical checks of the separation theory")
    p_theory.add_argument("check", choices=("gamma", "shrinkage", "theorem1", "convergence", "hijack"))
    p_theory.add_argument("--config", default=None, help="JSON config (defaults are built in)")
    p_theory.add_argument("--out", default="reports", help="output directory (default: reports)")
    p_theory.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_theory.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DatasetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
