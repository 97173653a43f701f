"""Sparse expansion coding.

Input vectors are projected through a fixed sparse binary random matrix
into a much higher-dimensional space (the fly's projection-neuron to
Kenyon-cell expansion), then a winner-take-all step keeps only the
largest strictly positive responses and rescales them to [0, 1]. The
result is a sparse nonnegative code whose active set is stable for
nearby inputs and nearly disjoint for dissimilar ones.

All randomness is owned by `build_projection`; every other operation is
deterministic in its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def default_fan_in(input_dim: int) -> int:
    """Default number of inputs each code unit samples.

    10 for 84-dimensional inputs, 64 for 512-dimensional inputs, and
    roughly a tenth of the input dimension otherwise (at least 1).
    """
    if input_dim == 84:
        return 10
    if input_dim == 512:
        return 64
    return max(1, round(0.1 * input_dim))


@dataclass(frozen=True)
class ProjectionMatrix:
    """Fixed sparse binary projection, stored as per-row column indices.

    Each of the `code_dim` rows samples exactly `fan_in` distinct input
    coordinates; `columns[i]` holds row i's coordinates in ascending
    order. Immutable after construction.
    """

    input_dim: int
    code_dim: int
    fan_in: int
    seed: int
    columns: np.ndarray  # (code_dim, fan_in) int64, ascending within each row

    def __post_init__(self):
        self.columns.setflags(write=False)

    def toarray(self) -> np.ndarray:
        """Densify to a (code_dim, input_dim) float array of 0.0/1.0."""
        dense = np.zeros((self.code_dim, self.input_dim))
        rows = np.repeat(np.arange(self.code_dim), self.fan_in)
        dense[rows, self.columns.ravel()] = 1.0
        return dense


def build_projection(input_dim: int, code_dim: int, fan_in: int, seed: int) -> ProjectionMatrix:
    """Sample a sparse binary projection matrix.

    Args:
        input_dim: dimensionality of the input vectors.
        code_dim: number of code units (rows), typically ~40x input_dim.
        fan_in: distinct input coordinates sampled per row, 1 <= fan_in <= input_dim.
        seed: integer seed; the same seed always yields the same matrix.

    Returns:
        A ProjectionMatrix with exactly `fan_in` ones per row.
    """
    if input_dim < 1:
        raise ValueError(f"input_dim must be >= 1, got {input_dim}")
    if code_dim < 1:
        raise ValueError(f"code_dim must be >= 1, got {code_dim}")
    if not 1 <= fan_in <= input_dim:
        raise ValueError(f"fan_in must be in [1, input_dim={input_dim}], got {fan_in}")
    rng = np.random.default_rng(seed)
    # Uniform random fan_in-subset per row: take the fan_in smallest of
    # input_dim iid uniforms. argpartition is O(code_dim * input_dim).
    keys = rng.random((code_dim, input_dim))
    cols = np.argpartition(keys, fan_in - 1, axis=1)[:, :fan_in]
    cols = np.sort(cols, axis=1).astype(np.int64)
    return ProjectionMatrix(input_dim, code_dim, fan_in, seed, cols)


def project(theta: ProjectionMatrix, x: np.ndarray) -> np.ndarray:
    """Raw expansion response: each row sums its sampled input coordinates.

    Accumulates one sampled coordinate at a time, in ascending column
    order, so the result is bit-identical to a naive per-row loop.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (theta.input_dim,):
        raise ValueError(f"input has shape {x.shape}, expected ({theta.input_dim},)")
    raw = np.zeros(theta.code_dim)
    for slot in range(theta.fan_in):
        raw += x[theta.columns[:, slot]]
    return raw


def winner_take_all(raw: np.ndarray, n_active: int) -> np.ndarray:
    """Keep the n_active largest strictly positive responses, zero the rest.

    Args:
        raw: response vector from `project`.
        n_active: number of winners to retain, 1 <= n_active <= len(raw).

    Returns:
        A vector of the same length with at most n_active nonzeros. Kept
        entries retain their raw values. If fewer than n_active entries
        are positive, only the positive ones survive. Ties at the cutoff
        are resolved toward the lowest index.
    """
    raw = np.asarray(raw, dtype=np.float64)
    m = raw.shape[0]
    if not 1 <= n_active <= m:
        raise ValueError(f"n_active must be in [1, {m}], got {n_active}")
    # Stable sort on the negated values: descending by value, ascending
    # by index among equals, which is exactly the tie rule we want.
    order = np.argsort(-raw, kind="stable")[:n_active]
    winners = order[raw[order] > 0.0]
    out = np.zeros_like(raw)
    out[winners] = raw[winners]
    return out


def normalize(code: np.ndarray) -> np.ndarray:
    """Rescale a nonnegative sparse code so its maximum is exactly 1.

    Every value is divided by the vector's maximum. An all-zero code is
    returned unchanged; with a single nonzero survivor the result is an
    indicator vector.
    """
    code = np.asarray(code, dtype=np.float64)
    top = code.max() if code.size else 0.0
    if top <= 0.0:
        return code.copy()
    return code / top


def encode(theta: ProjectionMatrix, x: np.ndarray, n_active: int) -> np.ndarray:
    """Full sparse coding pipeline: project, winner-take-all, normalize."""
    return normalize(winner_take_all(project(theta, x), n_active))


def encode_dense(theta: ProjectionMatrix, x: np.ndarray) -> np.ndarray:
    """Dense control code: the raw responses min-max rescaled to [0, 1].

    A constant response vector (no spread to rescale) maps to all zeros.
    """
    raw = project(theta, x)
    lo = raw.min()
    hi = raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)
