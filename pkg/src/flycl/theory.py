"""Empirical checks of the separation story behind the sparse coder.

The claims under test, in order:

 -  a labeled set is gamma-separated when every item's mean dot product
    with its own class beats its mean dot product with every other
    class by at least gamma (`empirical_gamma` measures the best such
    margin);
 -  sparse coding shrinks cross-input overlap: the fraction of shared
    active units decays with input cosine roughly like
    (n_active / code_dim) ** (1 - s)  (`shrinkage_profile`);
 -  codes of near-orthogonal prototypes are separated with margin at
    least 1 / max_class_size - f(separation)  (`check_theorem1`);
 -  pre-saturation, each class column of the zero-decay associative
    learner equals rate times the sum of that class's codes
    (`mean_convergence_check`);
 -  mistake-driven rules can be hijacked by overlapping codes while the
    always-reinforce rule cannot (`hijack_scenario`).

Reports are plain data, ready for JSON serialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledFeatureSet, PrototypeSet
from .encoder import build_projection, default_fan_in, project, winner_take_all
from .errors import ConfigError, DatasetError
from .learner import init_weights, predict, update_fly, update_perceptron

PROJECTIONS = ("sparse-binary", "dense-gaussian")


@dataclass(frozen=True)
class EncoderConfig:
    """Coding stage used by the checks.

    projection selects the expansion: the package's sparse binary
    matrix, or a dense Gaussian comparison matrix with the same
    winner-take-all readout.
    """

    input_dim: int
    code_dim: int
    n_active: int
    fan_in: int | None = None
    projection: str = "sparse-binary"

    def __post_init__(self):
        if self.projection not in PROJECTIONS:
            raise ConfigError(f"projection: must be one of {PROJECTIONS}, got {self.projection!r}")
        if not 1 <= self.n_active <= self.code_dim:
            raise ConfigError(f"l: must be in [1, m={self.code_dim}], got {self.n_active}")


def _support_fn(cfg: EncoderConfig, seed: int):
    """Build the encoder once; return x -> sorted active-unit indices."""
    if cfg.projection == "sparse-binary":
        fan_in = cfg.fan_in if cfg.fan_in is not None else default_fan_in(cfg.input_dim)
        theta = build_projection(cfg.input_dim, cfg.code_dim, fan_in, seed)

        def support(x: np.ndarray) -> np.ndarray:
            return np.flatnonzero(winner_take_all(project(theta, x), cfg.n_active))

    else:
        gauss = np.random.default_rng(seed).standard_normal((cfg.code_dim, cfg.input_dim))

        def support(x: np.ndarray) -> np.ndarray:
            return np.flatnonzero(winner_take_all(gauss @ np.asarray(x, dtype=np.float64), cfg.n_active))

    return support


@dataclass
class SeparationReport:
    """Worst-case class-mean margins of a labeled set.

    pair_margins[j, jp] is the worst margin over anchors of class j
    against class jp (NaN on the diagonal); gamma_hat is the global
    minimum and worst_pair its argmin.
    """

    gamma_hat: float
    pair_margins: np.ndarray  # (k, k), NaN diagonal
    worst_pair: tuple[int, int]
    anchor_in_population: bool

    def to_dict(self) -> dict:
        margins = [
            [None if i == j else float(self.pair_margins[i, j]) for j in range(self.pair_margins.shape[1])]
            for i in range(self.pair_margins.shape[0])
        ]
        return {
            "gamma_hat": self.gamma_hat,
            "pair_margins": margins,
            "worst_pair": list(self.worst_pair),
            "anchor_in_population": self.anchor_in_population,
        }


def empirical_gamma(dataset: LabeledFeatureSet, anchor_in_population: bool = False) -> SeparationReport:
    """Measure the separation margin of a labeled set.

    For each anchor item the within-class mean dot product is compared
    with the mean dot product against every other class. By default the
    anchor is excluded from its own class mean, which is the unbiased
    choice when rows are samples from a distribution. Pass
    anchor_in_population=True when the rows ARE the population (for
    example prototype codes), so the anchor is a legitimate draw from
    its own class.

    Dot products accumulate coordinate by coordinate, so on small
    inputs the result is bit-identical to a naive double loop.
    """
    feats = dataset.features
    labels = dataset.labels
    n, dim = feats.shape
    k = dataset.n_classes
    if k < 2:
        raise DatasetError("separation needs at least 2 classes")
    counts = np.bincount(labels, minlength=k)
    if not anchor_in_population and counts.min() < 2:
        short = int(np.argmin(counts))
        raise DatasetError(
            f"insufficient data: class {short} has {int(counts[short])} item(s); "
            "need >= 2 to exclude the anchor from its class mean"
        )

    dots = np.zeros((n, n))
    for c in range(dim):
        col = feats[:, c]
        dots += np.multiply.outer(col, col)
    masks = [labels == j for j in range(k)]
    class_sums = np.empty((n, k))
    for j in range(k):
        class_sums[:, j] = dots[:, masks[j]].sum(axis=1)

    pair_margins = np.full((k, k), np.inf)
    for i in range(n):
        j = int(labels[i])
        if anchor_in_population:
            within = class_sums[i, j] / counts[j]
        else:
            own = masks[j].copy()
            own[i] = False
            within = dots[i, own].sum() / (counts[j] - 1)
        cross = class_sums[i] / counts
        for jp in range(k):
            if jp == j:
                continue
            margin = within - cross[jp]
            if margin < pair_margins[j, jp]:
                pair_margins[j, jp] = margin
    np.fill_diagonal(pair_margins, np.nan)

    flat = np.where(np.isnan(pair_margins), np.inf, pair_margins)
    worst = int(np.argmin(flat))
    worst_pair = (worst // k, worst % k)
    return SeparationReport(
        gamma_hat=float(pair_margins[worst_pair]),
        pair_margins=pair_margins,
        worst_pair=worst_pair,
        anchor_in_population=anchor_in_population,
    )


@dataclass
class ShrinkageProfile:
    """Measured code overlap against input cosine, with the reference curve.

    overlaps[g, p] is |active(x) & active(x')| / n_active for pair p at
    grid cosine grid[g]. The reference curve is
    (n_active / code_dim) ** (1 - s).
    """

    grid: np.ndarray
    overlaps: np.ndarray  # (n_grid, pair_count)
    code_dim: int
    n_active: int
    projection: str

    @property
    def mean_overlap(self) -> np.ndarray:
        return self.overlaps.mean(axis=1)

    @property
    def reference(self) -> np.ndarray:
        return (self.n_active / self.code_dim) ** (1.0 - self.grid)

    def f_hat(self, cosine: float) -> float:
        """Measured mean overlap, linearly interpolated on the grid."""
        return float(np.interp(cosine, self.grid, self.mean_overlap))

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "mean_overlap": self.mean_overlap.tolist(),
            "reference": self.reference.tolist(),
            "overlaps": self.overlaps.tolist(),
            "code_dim": self.code_dim,
            "n_active": self.n_active,
            "projection": self.projection,
        }


def controlled_cosine_pair(rng: np.random.Generator, input_dim: int, cosine: float) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors with the given cosine (up to rounding)."""
    if input_dim < 2:
        raise ValueError("need input_dim >= 2 to control the angle")
    x = rng.standard_normal(input_dim)
    x /= np.linalg.norm(x)
    g = rng.standard_normal(input_dim)
    g -= (g @ x) * x
    g /= np.linalg.norm(g)
    return x, cosine * x + np.sqrt(1.0 - cosine**2) * g


def pair_overlap(support_a: np.ndarray, support_b: np.ndarray, n_active: int) -> float:
    """Shared active units relative to the nominal code size."""
    return np.intersect1d(support_a, support_b).size / n_active


def shrinkage_profile(
    encoder_config: EncoderConfig,
    pair_count: int = 200,
    seed: int = 0,
    grid: np.ndarray | None = None,
) -> ShrinkageProfile:
    """Measure code overlap for input pairs at controlled cosines.

    One encoder (seeded with `seed`) serves the whole profile; input
    pairs come from an independent stream. The default grid is
    0.0, 0.1, ..., 0.9.
    """
    if pair_count < 1:
        raise ConfigError(f"pair_count: must be >= 1, got {pair_count}")
    grid = np.arange(10) / 10.0 if grid is None else np.asarray(grid, dtype=np.float64)
    support = _support_fn(encoder_config, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    overlaps = np.zeros((grid.size, pair_count))
    for gi, s in enumerate(grid):
        for pi in range(pair_count):
            x, x2 = controlled_cosine_pair(rng, encoder_config.input_dim, float(s))
            overlaps[gi, pi] = pair_overlap(support(x), support(x2), encoder_config.n_active)
    return ShrinkageProfile(
        grid=grid,
        overlaps=overlaps,
        code_dim=encoder_config.code_dim,
        n_active=encoder_config.n_active,
        projection=encoder_config.projection,
    )


def check_theorem1(
    prototypes: PrototypeSet,
    encoder_config: EncoderConfig,
    seed: int = 0,
    tolerance: float = 0.05,
    profile: ShrinkageProfile | None = None,
    pair_count: int = 200,
) -> dict:
    """Monte-Carlo check of the separation guarantee for prototype codes.

    Encodes the prototypes, binarizes the codes (scaled by 1/sqrt(l) so
    dot products count shared units relative to l), and verifies that
    the measured margin reaches 1/N_o - f_hat(separation) - tolerance,
    where N_o is the largest class size and f_hat reads the measured
    shrinkage profile at the prototype separation. When the theoretical
    bound is not positive the report flags no_guarantee.
    """
    support = _support_fn(encoder_config, seed)
    l = encoder_config.n_active
    scale = 1.0 / np.sqrt(l)
    codes = np.zeros((prototypes.n_prototypes, encoder_config.code_dim))
    for i, proto in enumerate(prototypes.prototypes):
        codes[i, support(proto)] = scale
    report = empirical_gamma(
        LabeledFeatureSet(codes, prototypes.labels.copy()), anchor_in_population=True
    )
    if profile is None:
        profile = shrinkage_profile(encoder_config, pair_count=pair_count, seed=seed)
    f_hat = profile.f_hat(prototypes.separation)
    n_o = int(np.bincount(prototypes.labels).max())
    bound = 1.0 / n_o - f_hat
    return {
        "gamma_hat": report.gamma_hat,
        "bound": bound,
        "tolerance": tolerance,
        "passed": bool(report.gamma_hat >= bound - tolerance),
        "no_guarantee": bool(bound <= 0.0),
        "f_hat": f_hat,
        "separation": prototypes.separation,
        "max_class_size": n_o,
        "n_prototypes": prototypes.n_prototypes,
        "code_dim": encoder_config.code_dim,
        "n_active": l,
        "projection": encoder_config.projection,
        "separation_report": report.to_dict(),
    }


@dataclass
class ConvergenceReport:
    """How far trained columns sit from rate * (sum of class codes)."""

    max_relative_deviation: float
    saturated: bool
    per_class: np.ndarray

    def to_dict(self) -> dict:
        return {
            "max_relative_deviation": self.max_relative_deviation,
            "saturated": self.saturated,
            "per_class": self.per_class.tolist(),
        }


def mean_convergence_check(
    codes: np.ndarray,
    labels: np.ndarray,
    rate: float = 0.01,
    n_classes: int | None = None,
) -> ConvergenceReport:
    """Train the zero-decay rule and compare columns with the class sums.

    Pre-saturation the trained column equals rate times the sum of its
    class's codes up to accumulation rounding. If any expected entry
    exceeds the weight cap the run saturated and the report says so;
    the deviation is still measured but carries no guarantee.
    """
    codes = np.asarray(codes, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if codes.ndim != 2 or labels.shape != (codes.shape[0],):
        raise ValueError(f"need (n, code_dim) codes with n labels, got {codes.shape} and {labels.shape}")
    k = int(labels.max()) + 1 if n_classes is None else n_classes
    weights = init_weights(codes.shape[1], k, decay=0.0, rate=rate)
    for code, label in zip(codes, labels):
        update_fly(weights, code, int(label))
    expected = np.zeros((codes.shape[1], k))
    for j in range(k):
        expected[:, j] = rate * codes[labels == j].sum(axis=0)
    per_class = np.zeros(k)
    for j in range(k):
        top = expected[:, j].max()
        if top > 0.0:
            per_class[j] = np.abs(weights.w[:, j] - expected[:, j]).max() / top
    return ConvergenceReport(
        max_relative_deviation=float(per_class.max()) if k else 0.0,
        saturated=bool((expected > 1.0).any()),
        per_class=per_class,
    )


def hijack_scenario(
    seed: int = 0,
    code_dim: int = 16,
    support_size: int = 4,
    overlap: int = 3,
    blocks: tuple[int, int] = (50, 50),
    rate: float = 0.01,
    codes: tuple[np.ndarray, np.ndarray] | None = None,
    class_order: tuple[int, int] | None = None,
) -> dict:
    """Train v1 and v4 on two overlapping patterns, one block each.

    Two binary codes share `overlap` active units (at least one unit
    private to each); the first pattern's block is trained first, then
    the second's. With overlap at least half the support, the
    mistake-driven v1 rule always ends up misclassifying the first
    pattern, while the always-reinforce v4 rule keeps both correct
    (keep blocks * rate <= 1 to stay below the weight cap). Explicit
    `codes` override the generated patterns; `class_order` fixes which
    class label each pattern gets (default: seeded coin flip).
    """
    rng = np.random.default_rng(seed)
    if codes is None:
        if not 0 <= overlap < support_size:
            raise ConfigError(f"overlap: must be in [0, support_size={support_size}), got {overlap}")
        need = 2 * support_size - overlap
        if need > code_dim:
            raise ConfigError(f"m: two codes need {need} units, only {code_dim} available")
        units = rng.choice(code_dim, size=need, replace=False)
        shared = units[:overlap]
        first = np.zeros(code_dim)
        second = np.zeros(code_dim)
        first[np.concatenate([shared, units[overlap : support_size]])] = 1.0
        second[np.concatenate([shared, units[support_size:]])] = 1.0
    else:
        first = np.asarray(codes[0], dtype=np.float64)
        second = np.asarray(codes[1], dtype=np.float64)
        code_dim = first.shape[0]
    if class_order is None:
        flip = bool(rng.integers(2))
        class_order = (1, 0) if flip else (0, 1)
    label_first, label_second = int(class_order[0]), int(class_order[1])

    def train(variant: str):
        weights = init_weights(code_dim, 2, decay=0.0, rate=rate)
        for code, label, steps in ((first, label_first, blocks[0]), (second, label_second, blocks[1])):
            for _ in range(steps):
                if variant == "v4":
                    update_fly(weights, code, label)
                else:
                    guess = predict(weights, code).class_index
                    update_perceptron(weights, code, label, guess, variant=variant)
        out = {}
        for name, code, label in (("first", first, label_first), ("second", second, label_second)):
            pred = predict(weights, code)
            out[name] = {
                "predicted": pred.class_index,
                "correct": pred.class_index == label,
                "scores": pred.scores.tolist(),
            }
        return out

    v1 = train("v1")
    v4 = train("v4")
    return {
        "code_dim": code_dim,
        "blocks": list(blocks),
        "rate": rate,
        "classes": {"first": label_first, "second": label_second},
        "shared_units": int(np.sum((first > 0) & (second > 0))),
        "v1": v1,
        "v4": v4,
        "v1_hijacked_first": not v1["first"]["correct"],
        "v4_stable": v4["first"]["correct"] and v4["second"]["correct"],
    }
