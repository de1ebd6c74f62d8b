"""Update, bit, and energy counters for training runs.

The energy model charges a fixed per-parameter cost for each optimizer step,
on 7nm-technology operation estimates:

  AdamW             14.62 pJ per FP32 parameter per step
  sign-flip, 2-bit   4.80 pJ per quantized parameter per step
  sign-flip, 3/4-bit 5.18 pJ per quantized parameter per step

The per-parameter totals are the primary constants (overridable via config);
they fold together the underlying operation counts — a top-k pass, an
elementwise probability compare, and the expected number of +-1 weight
updates at p_change = 0.5 * (p_max + p_min) — so energy is charged for every
parameter of the relevant kind each step, independent of how many flips were
realized. Forward/backward-pass energy is out of scope; only the optimizer
step is modeled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .layers import LayerSpec

FP32_BITS = 32


@dataclass(frozen=True)
class EnergyConstants:
    adamw_pj_per_param: float = 14.62
    gft_ternary_pj_per_param: float = 4.8
    gft_multibit_pj_per_param: float = 5.18

    def __post_init__(self):
        for name in (
            "adamw_pj_per_param",
            "gft_ternary_pj_per_param",
            "gft_multibit_pj_per_param",
        ):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")


def adamw_step_energy(p_fp: int, constants: EnergyConstants = EnergyConstants()) -> float:
    """Energy in pJ for one AdamW step over p_fp full-precision parameters."""
    if p_fp < 0:
        raise ValidationError("parameter count must be non-negative")
    return constants.adamw_pj_per_param * p_fp


def gft_step_energy(
    p_q: int, bits: int, constants: EnergyConstants = EnergyConstants()
) -> float:
    """Energy in pJ for one sign-flip step over p_q quantized parameters."""
    if p_q < 0:
        raise ValidationError("parameter count must be non-negative")
    if bits == 2:
        return constants.gft_ternary_pj_per_param * p_q
    if bits in (3, 4):
        return constants.gft_multibit_pj_per_param * p_q
    raise ValidationError(f"no energy constant for bit width {bits}")


def model_bits(specs: list[LayerSpec]) -> int:
    """Storage bits: 32 per full-precision weight, b per b-bit quantized weight."""
    total = 0
    for spec in specs:
        width = FP32_BITS if spec.kind == "full_precision" else spec.bits
        total += spec.param_count * width
    return total


@dataclass
class CostLedger:
    """Cumulative counters for one run; all fields are non-decreasing."""

    cumulative_updates: int = 0
    cumulative_expected_updates: float = 0.0
    cumulative_energy_pj: float = 0.0
    model_bits: int = 0
    constants: EnergyConstants = field(default_factory=EnergyConstants)


def record_step(
    ledger: CostLedger,
    realized_flips: int,
    expected_flips: float,
    p_fp: int,
    p_q_by_bits: dict[int, int],
) -> CostLedger:
    """Charge one optimizer step to the ledger (in place; returned for chaining).

    Updates count AdamW-touched parameters plus realized flips; the expected
    variant swaps in the probabilistic flip expectation. Energy is the
    closed-form per-step charge for the configuration, flip counts aside.
    """
    if realized_flips < 0 or expected_flips < 0 or p_fp < 0:
        raise ValidationError("step counts must be non-negative")
    ledger.cumulative_updates += p_fp + realized_flips
    ledger.cumulative_expected_updates += p_fp + expected_flips
    energy = adamw_step_energy(p_fp, ledger.constants)
    for bits, p_q in p_q_by_bits.items():
        energy += gft_step_energy(p_q, bits, ledger.constants)
    ledger.cumulative_energy_pj += energy
    return ledger


def step_energy_pj(
    p_fp: int, p_q_by_bits: dict[int, int], constants: EnergyConstants = EnergyConstants()
) -> float:
    """Per-step energy for a configuration, without running it."""
    energy = adamw_step_energy(p_fp, constants)
    for bits, p_q in p_q_by_bits.items():
        energy += gft_step_energy(p_q, bits, constants)
    return energy


def pj_to_joules(pj: float) -> float:
    return pj * 1e-12
