"""The sign-flip update for quantized layers.

Per layer and step: tally per-weight error evidence into an integer matrix
beta, pick the top-k entries by |beta|, turn their magnitudes into flip
probabilities by min-max normalization, then flip each chosen weight by
-sign(beta) with its probability and clip back into range. The error signal
propagates to the layer below as delta @ W.T, with no activation-derivative
factor.

Error-filter modes (how a batch sample qualifies to vote on weight (i, o),
with c = x[b,i] * w[i,o]):

  paper_lt  sample counts iff delta[b,o] * c < 0
  paper_gt  sample counts iff delta[b,o] * c > 0
  none      every sample counts (unfiltered majority vote)

Under paper_lt, weights at 0 can never be voted on (c == 0 fails the strict
inequality) and nonzero weights only ever receive votes pushing them away
from zero, so `none` is the default training mode; paper_lt/paper_gt exist
for fidelity experiments and are always recorded in metric output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DeterministicRng, max_int, require_finite, sign_matrix
from .errors import ValidationError
from .layers import QuantizedWeightMatrix

ERROR_FILTER_MODES = ("paper_lt", "paper_gt", "none")

LOSS_KINDS = ("softmax_xent", "mse")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    out = np.zeros((labels.shape[0], n_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def output_delta(logits: np.ndarray, labels: np.ndarray, loss: str) -> np.ndarray:
    """Loss gradient at the network output, the starting error signal.

    softmax_xent: softmax(logits) - one_hot(labels); rows sum to zero.
    mse:          logits - one_hot(labels)  (gradient of 0.5 * ||.||^2).
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    require_finite(logits, "logits")
    if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
        raise ValidationError("labels must be one class index per batch row")
    if labels.min(initial=0) < 0 or (labels.size and labels.max() >= logits.shape[1]):
        raise ValidationError(f"label index out of range for {logits.shape[1]} outputs")
    if loss == "softmax_xent":
        return softmax(logits) - one_hot(labels, logits.shape[1])
    if loss == "mse":
        return logits - one_hot(labels, logits.shape[1])
    raise ValidationError(f"unknown loss {loss!r}")


def batch_loss(logits: np.ndarray, labels: np.ndarray, loss: str) -> float:
    """Mean loss over the batch, consistent with output_delta's gradient."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if loss == "softmax_xent":
        z = logits - logits.max(axis=1, keepdims=True)
        log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return float(-log_probs[np.arange(labels.shape[0]), labels].mean())
    if loss == "mse":
        diff = logits - one_hot(labels, logits.shape[1])
        return float(0.5 * (diff**2).sum(axis=1).mean())
    raise ValidationError(f"unknown loss {loss!r}")


def accumulate_beta(
    x: np.ndarray, delta: np.ndarray, weights: QuantizedWeightMatrix, mode: str
) -> np.ndarray:
    """Integer evidence tally beta[i, o] = sum_b sign(delta[b,o] * x[b,i]) over counted samples.

    Streams via the sign factorization sign(delta * c) = sign(delta) * sign(x)
    * sign(w): the filter and the vote both depend only on signs, so the whole
    tally reduces to four 0/1 count matmuls and never materializes the
    contribution tensor. Exact integers, independent of evaluation order.
    """
    if mode not in ERROR_FILTER_MODES:
        raise ValidationError(f"unknown error-filter mode {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    d_in, d_out = weights.shape
    if x.ndim != 2 or delta.ndim != 2 or x.shape[0] != delta.shape[0]:
        raise ValidationError("x and delta must share the batch dimension")
    if x.shape[1] != d_in or delta.shape[1] != d_out:
        raise ValidationError(
            f"beta shape mismatch: x {x.shape}, delta {delta.shape}, w {weights.shape}"
        )

    sx = sign_matrix(x).astype(np.float64)
    sd = sign_matrix(delta).astype(np.float64)
    xp, xn = (sx > 0).astype(np.float64), (sx < 0).astype(np.float64)
    dp, dn = (sd > 0).astype(np.float64), (sd < 0).astype(np.float64)
    # counts of samples with sign(x)*sign(delta) = +1 / -1 per weight
    n_pos = xp.T @ dp + xn.T @ dn
    n_neg = xp.T @ dn + xn.T @ dp

    if mode == "none":
        beta = n_pos - n_neg
    else:
        sw = np.sign(weights.entries).astype(np.float64)
        if mode == "paper_lt":
            # counted iff sign(x)*sign(delta)*sign(w) == -1
            beta = np.where(sw > 0, -n_neg, np.where(sw < 0, n_pos, 0.0))
        else:  # paper_gt: counted iff sign(x)*sign(delta)*sign(w) == +1
            beta = np.where(sw > 0, n_pos, np.where(sw < 0, -n_neg, 0.0))
    return np.rint(beta).astype(np.int64)


def top_k_select(beta: np.ndarray, k_frac: float) -> np.ndarray:
    """Boolean mask of the floor(k_frac * size) largest-|beta| entries.

    Zero-beta entries are never selected, even when that leaves the mask
    short of its quota. Ties in |beta| go to the smallest flat index with o
    as the major axis (column-major order), so selection is deterministic.
    """
    if not 0.0 <= k_frac <= 1.0:
        raise ValidationError(f"k fraction must be in [0, 1], got {k_frac}")
    beta = np.asarray(beta)
    m = int(np.floor(k_frac * beta.size))
    mask_flat = np.zeros(beta.size, dtype=bool)
    if m > 0:
        mag = np.abs(beta).flatten(order="F").astype(np.float64)
        order = np.argsort(-mag, kind="stable")  # stable: ties keep ascending flat index
        order = order[mag[order] > 0]
        mask_flat[order[:m]] = True
    return mask_flat.reshape(beta.shape, order="F")


def dynamic_probability(beta: np.ndarray, mask: np.ndarray, p_min: float) -> np.ndarray:
    """Min-max normalize |beta| over the selected set into flip probabilities.

    Selected entries get clip((|b| - lo) / (hi - lo), p_min, 1); unselected
    entries get 0. When every selected |beta| is equal the normalization is
    degenerate and all selected probabilities are 1.
    """
    if not 0.0 < p_min <= 1.0:
        raise ValidationError(f"p_min must be in (0, 1], got {p_min}")
    beta = np.asarray(beta)
    probs = np.zeros(beta.shape, dtype=np.float64)
    if not mask.any():
        return probs
    mag = np.abs(beta).astype(np.float64)
    selected = mag[mask]
    hi, lo = selected.max(), selected.min()
    if hi == lo:
        probs[mask] = 1.0
    else:
        probs[mask] = np.clip((selected - lo) / (hi - lo), p_min, 1.0)
    return probs


def apply_flips(
    weights: QuantizedWeightMatrix,
    beta: np.ndarray,
    probs: np.ndarray,
    rng: DeterministicRng,
    t: int,
    layer_index: int,
) -> int:
    """Flip selected weights by -sign(beta) with their probabilities, in place.

    The uniform for weight (i, o) is drawn at coordinates (t, layer_index,
    i, o). Returns the number of weights whose stored value actually changed;
    a flip that clips back to its original value does not count.
    """
    if beta.shape != weights.shape or probs.shape != weights.shape:
        raise ValidationError("beta/probability shape mismatch with weights")
    old = weights.entries
    r = rng.uniform_matrix(t, layer_index, weights.shape)
    do_flip = (probs > 0.0) & (r < probs)
    bound = max_int(weights.bits)
    candidate = old.astype(np.int64) - np.sign(beta).astype(np.int64)
    np.clip(candidate, -bound, bound, out=candidate)
    new = np.where(do_flip, candidate, old.astype(np.int64)).astype(np.int8)
    flip_count = int(np.count_nonzero(new != old))
    weights.entries = new
    return flip_count


def propagate_delta(delta: np.ndarray, weights: QuantizedWeightMatrix) -> np.ndarray:
    """Error signal for the layer below: delta @ W.T, no activation derivative.

    If delta is integer-valued the result is integer-valued too, since the
    weights are integers.
    """
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim != 2 or delta.shape[1] != weights.shape[1]:
        raise ValidationError(f"delta shape {delta.shape} mismatches weights {weights.shape}")
    return delta @ weights.values().T


@dataclass(frozen=True)
class KSchedule:
    """Linear decay of the selected fraction: k(t) = k0 * (1 - t / total)."""

    k0: float = 0.75
    total_iterations: int = 1

    def __post_init__(self):
        if not 0.0 <= self.k0 <= 1.0:
            raise ValidationError(f"k0 must be in [0, 1], got {self.k0}")
        if self.total_iterations < 1:
            raise ValidationError("schedule needs at least one iteration")


def k_at(schedule: KSchedule, t: int) -> float:
    if not 0 <= t <= schedule.total_iterations:
        raise ValidationError(
            f"iteration {t} outside [0, {schedule.total_iterations}]"
        )
    return schedule.k0 * (1.0 - t / schedule.total_iterations)
