"""Integer ranges, sign conventions and coordinate-addressed randomness.

Quantized weights live in the symmetric integer range [-I, I] with
I = 2**(bits-1) - 1, so 2-bit weights are ternary {-1, 0, 1}. Range
enforcement is always by clipping; storage is int8 regardless of the
configured bit width.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

MIN_BITS = 2
MAX_BITS = 8


def max_int(bits: int) -> int:
    """Largest representable weight magnitude for a bit width: 2**(b-1) - 1."""
    if not MIN_BITS <= bits <= MAX_BITS:
        raise ValidationError(f"bit width must be in [{MIN_BITS}, {MAX_BITS}], got {bits}")
    return 2 ** (bits - 1) - 1


def clip_weight(w: int, bits: int) -> int:
    """Saturate an integer weight into [-max_int(bits), max_int(bits)]."""
    bound = max_int(bits)
    return min(max(int(w), -bound), bound)


def sign(x: float) -> int:
    """Three-valued sign; sign(0) = 0 so zero values carry no vote."""
    if np.isnan(x):
        raise ValidationError("sign is undefined for NaN")
    if x < 0:
        return -1
    if x > 0:
        return 1
    return 0


def sign_matrix(a: np.ndarray) -> np.ndarray:
    """Elementwise three-valued sign as an int8 array."""
    if np.isnan(a).any():
        raise ValidationError("sign is undefined for NaN entries")
    return np.sign(a).astype(np.int8)


def require_finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(a).all():
        raise ValidationError(f"{what} contains non-finite entries")
    return a


# SplitMix64 finalizer constants plus one odd multiplier per draw coordinate.
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SEED_TWEAK = np.uint64(0xA0761D6478BD642F)
_C_STEP = np.uint64(0x8EBC6AF09C88C6E3)
_C_LAYER = np.uint64(0x589965CC75374CC3)
_C_ROW = np.uint64(0x1D8E4E27C47D124F)
_C_COL = np.uint64(0xEB44ACCAB455D165)

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def _mix(h: np.ndarray | np.uint64):
    h = (h ^ (h >> _U64(30))) * _M1
    h = (h ^ (h >> _U64(27))) * _M2
    return h ^ (h >> _U64(31))


class DeterministicRng:
    """Counter-based uniform generator addressed by (step, layer, row, col).

    Each draw is a pure function of (seed, t, l, i, o): there is no stream
    state, so flip decisions are reproducible under any evaluation order or
    parallel schedule.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._base = _mix(_U64(self.seed) ^ _SEED_TWEAK)

    def _step_layer_key(self, t: int, l: int) -> np.uint64:
        if t < 0 or l < 0:
            raise ValidationError("draw coordinates must be non-negative")
        h = _mix(self._base + _GOLDEN + _C_STEP * _U64(t))
        return _mix(h + _GOLDEN + _C_LAYER * _U64(l))

    def draw(self, t: int, l: int, i: int, o: int) -> float:
        """Single uniform in [0, 1) at one coordinate."""
        if i < 0 or o < 0:
            raise ValidationError("draw coordinates must be non-negative")
        h = _mix(self._step_layer_key(t, l) + _GOLDEN + _C_ROW * _U64(i))
        h = _mix(h + _GOLDEN + _C_COL * _U64(o))
        return float(h >> _U64(11)) * 2.0**-53

    def uniform_matrix(self, t: int, l: int, shape: tuple[int, int]) -> np.ndarray:
        """Uniforms for a full (rows, cols) grid; entry (i, o) equals draw(t, l, i, o)."""
        rows, cols = shape
        key = self._step_layer_key(t, l)
        hi = _mix(key + _GOLDEN + _C_ROW * np.arange(rows, dtype=np.uint64))
        h = _mix(hi[:, None] + _GOLDEN + _C_COL * np.arange(cols, dtype=np.uint64))
        return (h >> _U64(11)).astype(np.float64) * 2.0**-53
