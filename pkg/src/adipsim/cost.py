"""Relative latency, energy and memory-traffic models for attention stages.

Three architectures share one pass structure: a pass pins one stationary
weight tile and streams every input row tile through the array.

* WS   -- conventional weight-stationary baseline; pays an extra skew of
          n - 1 fill cycles per pass for input/output synchronization.
* DiP  -- diagonal-input baseline, 8-bit only: one weight matrix per pass.
* ADiP -- adaptive precision: projection stages pack r = 8 / weight_bits
          same-shape weight matrices per stationary tile, dividing their
          pass count (and weight plus input traffic) by r. Stages between
          two activation tensors cannot be packed and match DiP exactly.

Energy is modeled relatively as cycles times a per-architecture power
factor (DiP = 1.0); absolute joules are out of scope. Memory traffic
counts 1-byte activation reads per streamed element and one stationary
word per array cell per pass; output writes are excluded by default and
can be counted at 1 byte (requantized) or 4 bytes (raw accumulator) per
element.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Optional

from .preprocess import Precision
from .workload import MhaConfig, StageSpec, stages

STAGE_CSV_COLUMNS = ("stage", "arch", "cycles", "energy_rel", "bytes_in", "bytes_w", "bytes_out")

# Measured power of the adaptive array relative to the 8-bit baseline,
# by array size.
ADIP_POWER_BY_SIZE = {4: 1.63, 8: 1.59, 16: 1.57, 32: 1.63, 64: 1.69}


class Arch(Enum):
    WS = "WS"
    DIP = "DiP"
    ADIP = "ADiP"

    @property
    def label(self) -> str:
        return self.value


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass
class CostParams:
    """Cost-model knobs; defaults match the evaluated 32 x 32 configuration."""

    n: int = 32
    clock_hz: float = 1e9
    mac_stages: int = 1
    dip_power: float = 1.0
    ws_power: float = 1.25
    adip_power_by_size: dict = field(default_factory=lambda: dict(ADIP_POWER_BY_SIZE))
    ws_skew_cycles: Optional[int] = None  # None -> n - 1 per pass
    overlap_weights: bool = True
    count_output_writes: bool = False
    output_bytes: int = 1  # 1 = requantized activations, 4 = raw psum spill

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("array size must be positive")
        if self.output_bytes not in (1, 4):
            raise ValueError("output_bytes must be 1 or 4")
        if any(v <= 0 for v in self.adip_power_by_size.values()):
            raise ValueError("power factors must be positive")

    def power(self, arch: Arch) -> float:
        if arch is Arch.WS:
            return self.ws_power
        if arch is Arch.DIP:
            return self.dip_power
        if self.n not in self.adip_power_by_size:
            raise ValueError(f"no adaptive-array power factor for size {self.n}")
        return self.adip_power_by_size[self.n]

    @property
    def skew(self) -> int:
        return self.n - 1 if self.ws_skew_cycles is None else self.ws_skew_cycles


@dataclass(frozen=True)
class StageCost:
    """Additive cost of one stage on one architecture."""

    stage: str
    arch: Arch
    cycles: int
    energy_rel: float
    bytes_in: int
    bytes_w: int
    bytes_out: int

    @property
    def mem_bytes(self) -> int:
        return self.bytes_in + self.bytes_w + self.bytes_out


def _stage_precision(spec: StageSpec, arch: Arch) -> Precision:
    if arch is Arch.ADIP and spec.is_projection:
        return Precision.from_bits(spec.weight_bits)
    return Precision.W8


def _stage_passes(spec: StageSpec, arch: Arch, params: CostParams) -> int:
    tk = _ceil_div(spec.k, params.n)
    tp = _ceil_div(spec.p, params.n)
    base = spec.count * tk * tp
    if arch is Arch.ADIP and spec.is_projection:
        return _ceil_div(base, _stage_precision(spec, arch).r)
    return base


def stage_latency(spec: StageSpec, arch: Arch, params: CostParams) -> int:
    """Total cycles of one stage: pass count times per-pass latency."""
    tm = _ceil_div(spec.m, params.n)
    per_pass = tm * params.n + params.n + params.mac_stages
    per_pass += _stage_precision(spec, arch).reducer_stages - 2
    if arch is Arch.WS:
        per_pass += params.skew
    if not params.overlap_weights:
        per_pass += params.n
    return _stage_passes(spec, arch, params) * per_pass


def stage_cost(spec: StageSpec, arch: Arch, params: CostParams) -> StageCost:
    passes = _stage_passes(spec, arch, params)
    tm = _ceil_div(spec.m, params.n)
    tp = _ceil_div(spec.p, params.n)
    cycles = stage_latency(spec, arch, params)
    bytes_out = 0
    if params.count_output_writes:
        bytes_out = spec.count * tm * tp * params.n**2 * params.output_bytes
    return StageCost(
        stage=spec.stage.label,
        arch=arch,
        cycles=cycles,
        energy_rel=cycles * params.power(arch),
        bytes_in=passes * tm * params.n**2,
        bytes_w=passes * params.n**2,
        bytes_out=bytes_out,
    )


def evaluate(cfg: MhaConfig, arch: Arch, params: CostParams) -> list[StageCost]:
    return [stage_cost(spec, arch, params) for spec in stages(cfg)]


def total_latency(cfg: MhaConfig, arch: Arch, params: CostParams) -> int:
    return sum(c.cycles for c in evaluate(cfg, arch, params))


def total_energy(cfg: MhaConfig, arch: Arch, params: CostParams) -> float:
    return sum(c.energy_rel for c in evaluate(cfg, arch, params))


def memory_accesses(cfg: MhaConfig, arch: Arch, params: CostParams) -> int:
    return sum(c.mem_bytes for c in evaluate(cfg, arch, params))


def _pct_change(new: float, ref: float) -> float:
    """Percent improvement of `new` over `ref`; negative means overhead."""
    return 100.0 * (1.0 - new / ref)


def projection_latency_improvement(cfg: MhaConfig, params: CostParams) -> float:
    """Percent cycle reduction of the packed architecture on projections."""
    dip = sum(
        stage_latency(s, Arch.DIP, params) for s in stages(cfg) if s.is_projection
    )
    adip = sum(
        stage_latency(s, Arch.ADIP, params) for s in stages(cfg) if s.is_projection
    )
    return _pct_change(adip, dip)


def summary(cfg: MhaConfig, params: CostParams) -> dict:
    """All totals plus the improvement percentages of ADiP relative to DiP."""
    per_arch = {arch: evaluate(cfg, arch, params) for arch in Arch}
    totals = {
        arch.label: {
            "cycles": sum(c.cycles for c in costs),
            "seconds": sum(c.cycles for c in costs) / params.clock_hz,
            "energy_rel": sum(c.energy_rel for c in costs),
            "mem_bytes": sum(c.mem_bytes for c in costs),
        }
        for arch, costs in per_arch.items()
    }
    dip = totals[Arch.DIP.label]
    adip = totals[Arch.ADIP.label]
    return {
        "model": cfg.name,
        "array_size": params.n,
        "weight_bits": cfg.weight_bits,
        "totals": totals,
        "vs_dip": {
            "latency_improvement_pct": _pct_change(adip["cycles"], dip["cycles"]),
            "energy_improvement_pct": _pct_change(adip["energy_rel"], dip["energy_rel"]),
            "memory_savings_pct": _pct_change(adip["mem_bytes"], dip["mem_bytes"]),
            "projection_latency_improvement_pct": projection_latency_improvement(cfg, params),
        },
    }


def write_stage_csv(costs: Iterable[StageCost], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(STAGE_CSV_COLUMNS)
    for c in costs:
        writer.writerow(
            [c.stage, c.arch.label, c.cycles, f"{c.energy_rel:.3f}", c.bytes_in, c.bytes_w, c.bytes_out]
        )
