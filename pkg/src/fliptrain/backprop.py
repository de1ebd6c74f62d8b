"""Standard backpropagation and AdamW for the full-precision layers of a hybrid.

Weight gradients are averaged over the batch (1/B) so the learning-rate
defaults transfer across batch sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .forward import LayerActivationRecord, activation_derivative


def fp_backward(
    delta_out: np.ndarray,
    record: LayerActivationRecord,
    weights: np.ndarray,
    prev_preactivation: np.ndarray | None = None,
    prev_activation: str = "identity",
) -> tuple[np.ndarray, np.ndarray]:
    """One backprop step through a dense layer.

    `delta_out` is the pre-activation gradient at this layer. Returns the
    batch-averaged weight gradient and the pre-activation gradient for the
    layer below: sigma'(v_prev) * (delta_out @ W.T) elementwise. With no
    previous pre-activation (input layer, or a caller applying the
    derivative itself) the Hadamard factor is skipped.
    """
    delta_out = np.asarray(delta_out, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    x = np.asarray(record.inputs, dtype=np.float64)
    if x.shape[0] != delta_out.shape[0] or x.shape[1] != weights.shape[0]:
        raise ValidationError(
            f"fp_backward shape mismatch: x {x.shape}, delta {delta_out.shape}, w {weights.shape}"
        )
    if delta_out.shape[1] != weights.shape[1]:
        raise ValidationError("delta width mismatches weight columns")
    batch = x.shape[0]
    grad_w = x.T @ delta_out / batch
    delta_in = delta_out @ weights.T
    if prev_preactivation is not None:
        delta_in = activation_derivative(prev_preactivation, prev_activation) * delta_in
    return grad_w, delta_in


@dataclass
class AdamWState:
    """Per-parameter moments and step count for decoupled weight decay Adam."""

    lr: float = 6e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.1
    t: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)


def adamw_step(param: np.ndarray, grad: np.ndarray, state: AdamWState) -> np.ndarray:
    """One AdamW update; mutates the state and returns the new parameters.

    Decay is decoupled: param *= (1 - lr * wd) before the moment-driven step.
    """
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if param.shape != grad.shape:
        raise ValidationError(f"grad shape {grad.shape} mismatches param {param.shape}")
    if state.m is None:
        state.m = np.zeros_like(param)
        state.v = np.zeros_like(param)
    state.t += 1
    param = param * (1.0 - state.lr * state.weight_decay)
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad**2
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    return param - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
