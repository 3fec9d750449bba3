"""Adaptive-precision diagonal-input systolic array: bit-exact cycle
simulator, analytic latency/throughput models, and attention-workload
cost comparisons."""

from .analytic import AnalyticParams, dmul_latency, peak_throughput, sweep, throughput, tile_latency
from .array import ArraySim, CollectedRow
from .cost import Arch, CostParams, StageCost, stage_latency, summary
from .numerics import mul2, recompose, split_subwords
from .pe import PE, PhaseError, combine_groups, group_multiply, weight_slots
from .preprocess import (
    PackedWeightTile,
    Precision,
    PrecisionMode,
    WeightTile,
    deinterleave,
    interleave,
    inverse_permute,
    permute,
    prepare_weights,
)
from .tiling import MatMulJob, TiledPlan, TiledResult, oracle_matmul, plan, run_tiled
from .workload import MhaConfig, Stage, StageSpec, breakdown, builtin_models, get_model, stages, total_ops

__version__ = "0.1.0"

__all__ = [
    "AnalyticParams",
    "Arch",
    "ArraySim",
    "CollectedRow",
    "CostParams",
    "MatMulJob",
    "MhaConfig",
    "PE",
    "PackedWeightTile",
    "PhaseError",
    "Precision",
    "PrecisionMode",
    "Stage",
    "StageCost",
    "StageSpec",
    "TiledPlan",
    "TiledResult",
    "WeightTile",
    "breakdown",
    "builtin_models",
    "combine_groups",
    "deinterleave",
    "dmul_latency",
    "get_model",
    "group_multiply",
    "interleave",
    "inverse_permute",
    "mul2",
    "oracle_matmul",
    "peak_throughput",
    "permute",
    "plan",
    "prepare_weights",
    "recompose",
    "run_tiled",
    "split_subwords",
    "stage_latency",
    "stages",
    "summary",
    "sweep",
    "throughput",
    "tile_latency",
    "total_ops",
    "weight_slots",
]
