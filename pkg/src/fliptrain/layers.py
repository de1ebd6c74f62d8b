"""Layer containers: quantized integer weight planes and full-precision planes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import max_int, require_finite
from .errors import ValidationError

ACTIVATIONS = ("relu", "identity")


@dataclass
class LayerSpec:
    """Shape and kind of one dense layer: quantized(bits) or full-precision."""

    d_in: int
    d_out: int
    kind: str  # "quantized" | "full_precision"
    bits: int | None = None
    activation: str = "relu"

    def __post_init__(self):
        if self.d_in < 1 or self.d_out < 1:
            raise ValidationError(f"layer dimensions must be positive, got {self.d_in}x{self.d_out}")
        if self.kind not in ("quantized", "full_precision"):
            raise ValidationError(f"unknown layer kind {self.kind!r}")
        if self.kind == "quantized":
            if self.bits is None:
                raise ValidationError("quantized layer requires a bit width")
            max_int(self.bits)  # range-checks bits
        elif self.bits is not None:
            raise ValidationError("full-precision layer must not set bits")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")

    @property
    def param_count(self) -> int:
        return self.d_in * self.d_out


@dataclass
class QuantizedWeightMatrix:
    """Integer weight plane with entries clipped to [-max_int(bits), max_int(bits)].

    Entries are stored as int8 (wide enough for any supported bit width);
    the range bound comes from `bits`, not from the storage type.
    """

    entries: np.ndarray
    bits: int

    def __post_init__(self):
        bound = max_int(self.bits)
        e = np.asarray(self.entries)
        if not np.issubdtype(e.dtype, np.integer):
            raise ValidationError("quantized weights must have an integer dtype")
        if e.ndim != 2:
            raise ValidationError("quantized weights must be a 2-d matrix")
        if e.min(initial=0) < -bound or e.max(initial=0) > bound:
            raise ValidationError(f"quantized weights outside [-{bound}, {bound}]")
        self.entries = e.astype(np.int8)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def values(self) -> np.ndarray:
        """Weights as float64, for mixed integer/real matmuls."""
        return self.entries.astype(np.float64)


@dataclass
class QuantizedLayer:
    weights: QuantizedWeightMatrix
    activation: str = "relu"
    kind: str = field(default="quantized", init=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def weight_values(self) -> np.ndarray:
        return self.weights.values()


@dataclass
class FullPrecisionLayer:
    weights: np.ndarray  # float64 (d_in, d_out)
    activation: str = "relu"
    kind: str = field(default="full_precision", init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValidationError("full-precision weights must be a 2-d matrix")
        require_finite(w, "full-precision weights")
        self.weights = w

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def weight_values(self) -> np.ndarray:
        return self.weights


Layer = QuantizedLayer | FullPrecisionLayer


def validate_chain(specs: list[LayerSpec]) -> None:
    """Consecutive layer dimensions must match."""
    if not specs:
        raise ValidationError("network needs at least one layer")
    for a, b in zip(specs, specs[1:]):
        if a.d_out != b.d_in:
            raise ValidationError(f"layer chain mismatch: {a.d_out} -> {b.d_in}")


def spec_of(layer: Layer) -> LayerSpec:
    d_in, d_out = layer.shape
    bits = layer.weights.bits if isinstance(layer, QuantizedLayer) else None
    return LayerSpec(d_in, d_out, layer.kind, bits, layer.activation)
