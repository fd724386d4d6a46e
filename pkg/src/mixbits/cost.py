"""Analytical quantization-benefit model.

Each layer costs (memory traffic + compute): weight count scaled by the
memory-access/MAcc energy ratio, plus MAcc count. Both scale linearly
with the layer's bitwidth on bit-serial style hardware, which gives the
normalized network-wide quantization state and the speedup/energy
estimates.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError, DimensionError
from .nn.network import LayerSpec, NetworkSpec


@dataclass
class CostParams:
    energy_ratio: float = 120.0  # memory access energy / MAcc energy
    max_bits: int = 8
    baseline_bits: int = 8

    def __post_init__(self):
        if self.energy_ratio <= 0:
            raise ConfigError("energy_ratio must be > 0")
        if self.max_bits < 1 or self.baseline_bits < 1:
            raise ConfigError("bit parameters must be >= 1")


@dataclass(frozen=True)
class QuantAssignment:
    """Ordered per-layer bitwidths; the search-space element."""

    bits: tuple[int, ...]

    def __init__(self, bits: Iterable[int]):
        object.__setattr__(self, "bits", tuple(int(b) for b in bits))

    def __iter__(self):
        return iter(self.bits)

    def __len__(self):
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def average(self) -> float:
        return sum(self.bits) / len(self.bits)

    def validate(self, n_layers: int, bitwidth_set: Sequence[int]) -> None:
        if len(self.bits) != n_layers:
            raise DimensionError(f"assignment has {len(self.bits)} entries for {n_layers} layers")
        allowed = set(bitwidth_set)
        bad = [b for b in self.bits if b not in allowed]
        if bad:
            raise ConfigError(f"bitwidths {bad} outside the configured set {sorted(allowed)}")


def layer_cost(layer: LayerSpec, p: CostParams) -> float:
    """Combined memory+compute cost: n_weights * energy_ratio + n_macc."""
    return layer.n_weights * p.energy_ratio + layer.n_macc


def state_of_quantization(spec: NetworkSpec, a: QuantAssignment | Sequence[int], p: CostParams) -> float:
    """Cost-weighted mean bitwidth normalized by the maximum bitwidth, in (0, 1].

    Equals 1.0 exactly when every layer sits at max_bits; scaling all
    layer costs by a positive constant leaves it unchanged.
    """
    bits = list(a)
    if len(bits) != spec.n_layers:
        raise DimensionError(f"assignment has {len(bits)} entries for {spec.n_layers} layers")
    num = 0.0
    den = 0.0
    for layer, b in zip(spec.layers, bits):
        cost = layer_cost(layer, p)
        num += cost * b
        den += cost
    return num / (den * p.max_bits)


def speedup_estimate(
    spec: NetworkSpec,
    a: QuantAssignment | Sequence[int],
    p: CostParams,
    mode: str = "compute_only",
) -> float:
    """Bit-serial speedup over a uniform baseline_bits run.

    compute_only weighs layers by MAcc count; full_cost by layer_cost.
    A uniform assignment at bits b gives exactly baseline_bits / b.
    """
    bits = list(a)
    if len(bits) != spec.n_layers:
        raise DimensionError(f"assignment has {len(bits)} entries for {spec.n_layers} layers")
    if mode == "compute_only":
        weigh = lambda layer: float(layer.n_macc)
    elif mode == "full_cost":
        weigh = lambda layer: layer_cost(layer, p)
    else:
        raise ConfigError(f"unknown speedup mode {mode!r}")
    base = sum(weigh(layer) * p.baseline_bits for layer in spec.layers)
    quant = sum(weigh(layer) * b for layer, b in zip(spec.layers, bits))
    return base / quant


def energy_estimate(spec: NetworkSpec, a: QuantAssignment | Sequence[int], p: CostParams) -> float:
    """Energy reduction over the baseline; shares the full-cost speedup formula."""
    return speedup_estimate(spec, a, p, mode="full_cost")
