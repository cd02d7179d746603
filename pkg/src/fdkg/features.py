"""Real-valued channel features and min-max normalization.

A complex frequency response of length L becomes the length-2L real vector
(Re, Im) concatenated in that order.  Normalization statistics are fitted on
training data only and reused for adaptation and test data; out-of-range
values at test time are deliberately left unclamped so prediction errors are
not silently distorted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_GUARD = 1e-12


def complex_to_features(h: np.ndarray) -> np.ndarray:
    """Concatenate real and imaginary parts along the last axis."""
    h = np.asarray(h)
    if not np.all(np.isfinite(h.view(float))):
        raise ValueError("input must be finite")
    return np.concatenate([h.real, h.imag], axis=-1)


def features_to_complex(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`complex_to_features`."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    if d % 2 != 0:
        raise ValueError(f"feature dimension must be even, got {d}")
    half = d // 2
    return x[..., :half] + 1j * x[..., half:]


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension min/max statistics of a training feature set."""

    col_min: np.ndarray
    col_max: np.ndarray
    eps_guard: float = EPS_GUARD

    def __post_init__(self) -> None:
        if self.col_min.shape != self.col_max.shape:
            raise ValueError("col_min and col_max must have equal shape")
        if np.any(self.col_max < self.col_min):
            raise ValueError("col_max must be >= col_min element-wise")

    @property
    def degenerate(self) -> np.ndarray:
        """Boolean mask of dimensions with (numerically) zero range."""
        return (self.col_max - self.col_min) < self.eps_guard


def fit_normalizer(train: np.ndarray) -> Normalizer:
    """Per-dimension min and max over the training set (rows are samples)."""
    train = np.atleast_2d(np.asarray(train, dtype=float))
    if train.shape[0] == 0:
        raise ValueError("cannot fit a normalizer on an empty training set")
    return Normalizer(col_min=train.min(axis=0), col_max=train.max(axis=0))


def normalize(norm: Normalizer, x_raw: np.ndarray) -> np.ndarray:
    """Map x to (x - min) / (max - min) per dimension, without clamping.

    Dimensions whose training range is below the epsilon guard map to 0.
    """
    x_raw = np.asarray(x_raw, dtype=float)
    if x_raw.shape[-1] != norm.col_min.shape[0]:
        raise ValueError(
            f"dimension mismatch: x has {x_raw.shape[-1]}, normalizer has {norm.col_min.shape[0]}"
        )
    span = norm.col_max - norm.col_min
    degenerate = span < norm.eps_guard
    safe_span = np.where(degenerate, 1.0, span)
    out = (x_raw - norm.col_min) / safe_span
    return np.where(degenerate, 0.0, out)
