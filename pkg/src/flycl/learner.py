"""Associative readout layer and its update rules.

One weight column per class sits on top of the code layer. The headline
rule (`update_fly`) touches only the target class's column, and with
zero decay only the rows that are active in the current code, so
training one class can never overwrite another. Four perceptron
variants and an online softmax regression head are provided as
controls; all variants share the same [0, 1] weight clamp so their
trajectories are directly comparable, except the softmax head which is
deliberately left unclamped.

Update functions mutate the passed-in state and also return it. The
state is owned by a single training loop; nothing here is re-entrant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

PERCEPTRON_VARIANTS = ("v1", "v2", "v3", "v4")


@dataclass
class WeightMatrix:
    """Readout weights, one column per class, entries in [0, 1].

    decay is the per-step leak applied to every entry (0 disables it);
    rate scales each additive update.
    """

    w: np.ndarray  # (code_dim, n_classes) float64
    decay: float = 0.0
    rate: float = 0.01

    @property
    def code_dim(self) -> int:
        return self.w.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w.shape[1]


class Prediction(NamedTuple):
    class_index: int
    scores: np.ndarray


def init_weights(code_dim: int, n_classes: int, decay: float = 0.0, rate: float = 0.01) -> WeightMatrix:
    """All-zero weights with validated hyperparameters."""
    if code_dim < 1:
        raise ValueError(f"code_dim must be >= 1, got {code_dim}")
    if n_classes < 1:
        raise ValueError(f"n_classes must be >= 1, got {n_classes}")
    if not 0.0 <= decay < 1.0:
        raise ValueError(f"decay must be in [0, 1), got {decay}")
    if not rate > 0.0:
        raise ValueError(f"rate must be > 0, got {rate}")
    return WeightMatrix(np.zeros((code_dim, n_classes)), decay=decay, rate=rate)


def _check_code(weights: WeightMatrix, code: np.ndarray) -> np.ndarray:
    code = np.asarray(code, dtype=np.float64)
    if code.shape != (weights.code_dim,):
        raise ValueError(f"code has shape {code.shape}, expected ({weights.code_dim},)")
    return code


def _check_class(weights: WeightMatrix, label: int, name: str) -> None:
    if not 0 <= label < weights.n_classes:
        raise ValueError(f"{name} must be in [0, {weights.n_classes}), got {label}")


def predict(weights: WeightMatrix, code: np.ndarray) -> Prediction:
    """Score every class as its column's dot product with the code.

    The predicted class is the argmax over all columns; ties resolve to
    the lowest class index.
    """
    code = _check_code(weights, code)
    scores = code @ weights.w
    return Prediction(int(np.argmax(scores)), scores)


def update_fly(weights: WeightMatrix, code: np.ndarray, target: int) -> WeightMatrix:
    """Partial-freezing associative update.

    Adds rate * code to the target column and clamps it to [0, 1]. With
    decay == 0 entries outside the target column, and rows where the
    code is zero, are left bit-for-bit untouched. With decay > 0 every
    entry is first scaled by (1 - decay).
    """
    code = _check_code(weights, code)
    _check_class(weights, target, "target")
    if weights.decay == 0.0:
        active = code > 0.0
        col = weights.w[:, target]
        col[active] = np.minimum(col[active] + weights.rate * code[active], 1.0)
    else:
        weights.w *= 1.0 - weights.decay
        np.clip(weights.w[:, target] + weights.rate * code, 0.0, 1.0, out=weights.w[:, target])
    return weights


def update_perceptron(
    weights: WeightMatrix,
    code: np.ndarray,
    target: int,
    predicted: int,
    variant: str,
) -> WeightMatrix:
    """One step of a clamped perceptron variant.

    v1: on a mistake, reinforce the target column and punish the
        predicted one.
    v2: on a mistake, reinforce the target column only.
    v3: always reinforce the target column; additionally punish the
        predicted one on a mistake.
    v4: always reinforce the target column only (the fly rule with zero
        decay).

    Reinforce means add rate * code, punish means subtract it; both
    clamp the touched column back to [0, 1].
    """
    code = _check_code(weights, code)
    _check_class(weights, target, "target")
    _check_class(weights, predicted, "predicted")
    if variant not in PERCEPTRON_VARIANTS:
        raise ValueError(f"variant must be one of {PERCEPTRON_VARIANTS}, got {variant!r}")
    mistake = predicted != target
    step = weights.rate * code
    if variant in ("v1", "v2"):
        if mistake:
            np.clip(weights.w[:, target] + step, 0.0, 1.0, out=weights.w[:, target])
            if variant == "v1":
                np.clip(weights.w[:, predicted] - step, 0.0, 1.0, out=weights.w[:, predicted])
    else:
        np.clip(weights.w[:, target] + step, 0.0, 1.0, out=weights.w[:, target])
        if variant == "v3" and mistake:
            np.clip(weights.w[:, predicted] - step, 0.0, 1.0, out=weights.w[:, predicted])
    return weights


def logreg_scores(weights: WeightMatrix, bias: np.ndarray, code: np.ndarray) -> np.ndarray:
    """Affine class scores for the softmax head."""
    code = _check_code(weights, code)
    return code @ weights.w + bias


def update_logreg(
    weights: WeightMatrix,
    bias: np.ndarray,
    code: np.ndarray,
    target: int,
    lr: float,
) -> tuple[WeightMatrix, np.ndarray]:
    """One SGD step on the multinomial cross-entropy.

    Softmax is computed after subtracting the max score, so it cannot
    overflow on finite inputs; non-finite scores raise instead of
    propagating. Weights are not clamped.
    """
    _check_class(weights, target, "target")
    if not lr > 0.0:
        raise ValueError(f"lr must be > 0, got {lr}")
    scores = logreg_scores(weights, bias, code)
    if not np.all(np.isfinite(scores)):
        raise FloatingPointError("non-finite class scores in softmax update")
    shifted = scores - scores.max()
    expd = np.exp(shifted)
    probs = expd / expd.sum()
    grad = probs.copy()
    grad[target] -= 1.0
    code = np.asarray(code, dtype=np.float64)
    weights.w -= lr * np.outer(code, grad)
    bias -= lr * grad
    return weights, bias
