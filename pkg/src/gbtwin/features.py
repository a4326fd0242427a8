"""Frozen random hidden layer and the feature spaces it induces.

A layer drawn once from a seed maps rows through ``phi(X W + bias)``; the
enhanced space appends the original columns after the hidden block. The same
layer instance must map training rows and prediction rows.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

ACTIVATION_NAMES = {
    1: "selu",
    2: "relu",
    3: "sigmoid",
    4: "sine",
    5: "hardlim",
    6: "tribas",
    7: "radbas",
    8: "sign",
    9: "leaky_relu",
}

SPACES = ("original", "hidden", "enhanced")


def activate(kind: int, x):
    """Apply activation ``kind`` (1-9) elementwise.

    Conventions pinned here: hardlim(0) = 1, sign(0) = 0, leaky slope 0.01.
    """
    if kind not in ACTIVATION_NAMES:
        raise ValueError(f"activation index must be 1..9, got {kind}")
    arr = np.asarray(x, dtype=np.float64)
    if kind == 1:
        neg = SELU_ALPHA * np.expm1(np.minimum(arr, 0.0))
        out = SELU_LAMBDA * np.where(arr > 0.0, arr, neg)
    elif kind == 2:
        out = np.maximum(arr, 0.0)
    elif kind == 3:
        out = expit(arr)
    elif kind == 4:
        out = np.sin(arr)
    elif kind == 5:
        out = np.where(arr >= 0.0, 1.0, 0.0)
    elif kind == 6:
        out = np.maximum(0.0, 1.0 - np.abs(arr))
    elif kind == 7:
        out = np.exp(-(arr**2))
    elif kind == 8:
        out = np.sign(arr)
    else:
        out = np.where(arr > 0.0, arr, 0.01 * arr)
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class RandomLayer:
    """Immutable input-to-hidden map: weights, bias, and activation index."""

    weights: np.ndarray  # m x h, i.i.d. uniform on [-1, 1]
    bias: np.ndarray  # length h
    activation: int
    seed: int

    def __post_init__(self):
        self.weights.setflags(write=False)
        self.bias.setflags(write=False)

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def h(self) -> int:
        return self.weights.shape[1]

    def checksum(self) -> str:
        hsh = hashlib.sha256()
        hsh.update(self.weights.tobytes())
        hsh.update(self.bias.tobytes())
        return hsh.hexdigest()[:16]


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    space: str

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValueError(f"unknown feature space {self.space!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains non-finite entries")


def init_random_layer(m: int, h: int, activation: int, seed: int) -> RandomLayer:
    if m < 1 or h < 1:
        raise ValueError(f"need m >= 1 and h >= 1, got m={m}, h={h}")
    if activation not in ACTIVATION_NAMES:
        raise ValueError(f"activation index must be 1..9, got {activation}")
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, size=(m, h))
    bias = rng.uniform(-1.0, 1.0, size=h)
    return RandomLayer(weights=weights, bias=bias, activation=activation, seed=seed)


def hidden_features(layer: RandomLayer, X) -> FeatureMatrix:
    """Map rows to the hidden space: phi(X W + bias)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != layer.m:
        raise ValueError(f"expected {layer.m} feature columns, got {X.shape[1]}")
    Z = activate(layer.activation, X @ layer.weights + layer.bias)
    return FeatureMatrix(Z, "hidden")


def enhanced_features(layer: RandomLayer, X) -> FeatureMatrix:
    """Concatenate hidden block and original columns: [Z | X]."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Z = hidden_features(layer, X).values
    return FeatureMatrix(np.hstack([Z, X]), "enhanced")


def layer_meta(layer: RandomLayer) -> dict:
    """Persistable description; weights are regenerable from the seed."""
    return {
        "seed": layer.seed,
        "m": layer.m,
        "h": layer.h,
        "activation": layer.activation,
        "checksum": layer.checksum(),
    }


def layer_from_meta(meta: dict) -> RandomLayer:
    layer = init_random_layer(
        int(meta["m"]), int(meta["h"]), int(meta["activation"]), int(meta["seed"])
    )
    if layer.checksum() != meta["checksum"]:
        raise ValueError(
            "random layer checksum mismatch: stored weights do not match the seed"
        )
    return layer
