"""Forward pass and per-weight contribution bookkeeping.

A dense layer computes v = X @ W and x_out = activation(v). The contribution
of input feature i of sample b to output o is the product c[b, i, o] =
x[b, i] * w[i, o]; summing c over i recovers v. Contribution tensors are
B x d_in x d_out and are only ever materialized at test scale — training-time
consumers work from sign factorizations instead (see flips.accumulate_beta).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import require_finite
from .errors import CapacityError, ValidationError
from .layers import Layer, QuantizedWeightMatrix

# Largest B * d_in * d_out a caller may materialize; oracles only.
DEFAULT_MATERIALIZATION_BUDGET = 10_000_000


def _weight_values(w) -> np.ndarray:
    if isinstance(w, QuantizedWeightMatrix):
        return w.values()
    return np.asarray(w, dtype=np.float64)


def linear_forward(x: np.ndarray, w) -> np.ndarray:
    """Pre-activation v = x @ w for a float or quantized weight matrix."""
    x = np.asarray(x, dtype=np.float64)
    wv = _weight_values(w)
    if x.ndim != 2 or wv.ndim != 2 or x.shape[1] != wv.shape[0]:
        raise ValidationError(f"linear_forward shape mismatch: {x.shape} @ {wv.shape}")
    require_finite(x, "activations")
    return x @ wv


def materialize_contributions(
    x: np.ndarray, w, budget: int = DEFAULT_MATERIALIZATION_BUDGET
) -> np.ndarray:
    """Full contribution tensor c[b, i, o] = x[b, i] * w[i, o].

    Refuses inputs whose tensor would exceed `budget` elements; callers at
    training scale must use the streaming sign-factorized path instead.
    """
    x = np.asarray(x, dtype=np.float64)
    wv = _weight_values(w)
    if x.ndim != 2 or x.shape[1] != wv.shape[0]:
        raise ValidationError(f"contribution shape mismatch: {x.shape} vs {wv.shape}")
    n_elements = x.shape[0] * wv.shape[0] * wv.shape[1]
    if n_elements > budget:
        raise CapacityError(
            f"contribution tensor of {n_elements} elements exceeds budget {budget}"
        )
    return x[:, :, None] * wv[None, :, :]


def activation(v: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(v, 0.0)
    if kind == "identity":
        return v
    raise ValidationError(f"unknown activation {kind!r}")


def activation_derivative(v: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (v > 0).astype(np.float64)
    if kind == "identity":
        return np.ones_like(v)
    raise ValidationError(f"unknown activation {kind!r}")


@dataclass
class LayerActivationRecord:
    """Per-layer forward snapshot: input, pre-activation, output."""

    layer_index: int  # 1-based
    inputs: np.ndarray  # X^(l-1), B x d_{l-1}
    preactivation: np.ndarray  # v^(l) = inputs @ W^(l)
    outputs: np.ndarray  # activation(v^(l))


def modified_forward(batch: np.ndarray, network: Sequence[Layer]) -> list[LayerActivationRecord]:
    """Forward the batch through every layer, recording what the update rules need.

    Contribution tensors are derivable from each record (inputs x weights)
    rather than stored; the final record's `outputs` is the network output.
    """
    x = np.asarray(batch, dtype=np.float64)
    records = []
    for idx, layer in enumerate(network, start=1):
        v = linear_forward(x, layer.weights)
        out = activation(v, layer.activation)
        records.append(LayerActivationRecord(idx, x, v, out))
        x = out
    return records
