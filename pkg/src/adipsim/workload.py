"""Multi-head-attention matmul workloads and their operation counts.

Each layer contributes six matmul stages. Query/key/value projections are
counted as fused d_model x d_model products (all heads at once), score and
attention-output products per head, and the output projection once:

    QProj/KProj/VProj: (s x d_model) . (d_model x d_model)   per layer
    Scores:            (s x d_k)     . (d_k x s)             per layer, per head
    Attn:              (s x s)       . (s x d_k)             per layer, per head
    OutProj:           (s x d_model) . (d_model x d_model)   per layer

Projections multiply activations by weights and inherit the model's weight
precision; score/attention products are activation-activation and always
run 8-bit by 8-bit. Softmax and scaling are not matmuls and are not
counted. One multiply plus one add counts as two operations.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Union


class Stage(Enum):
    Q_PROJ = "QProj"
    K_PROJ = "KProj"
    V_PROJ = "VProj"
    SCORES = "Scores"
    ATTN = "Attn"
    OUT_PROJ = "OutProj"

    @property
    def label(self) -> str:
        return self.value


PROJECTION_STAGES = (Stage.Q_PROJ, Stage.K_PROJ, Stage.V_PROJ, Stage.OUT_PROJ)
ACT_ACT_STAGES = (Stage.SCORES, Stage.ATTN)


@dataclass(frozen=True)
class MhaConfig:
    """Transformer attention geometry plus the deployed weight precision."""

    name: str
    layers: int
    d_model: int
    heads: int
    d_k: int
    seq_len: int
    weight_bits: int

    def __post_init__(self) -> None:
        for field_name in ("layers", "d_model", "heads", "d_k", "seq_len"):
            if getattr(self, field_name) < 1:
                raise ValueError(f"{field_name} must be positive")
        if self.weight_bits not in (2, 4, 8):
            raise ValueError(f"weight_bits must be 2, 4 or 8, got {self.weight_bits}")


@dataclass(frozen=True)
class StageSpec:
    """One matmul stage: dims, how often it runs, and operand widths."""

    stage: Stage
    m: int
    k: int
    p: int
    count: int
    weight_bits: int
    act_bits: int = 8

    @property
    def ops(self) -> int:
        return 2 * self.m * self.k * self.p * self.count

    @property
    def is_projection(self) -> bool:
        return self.stage in PROJECTION_STAGES


GPT2_MEDIUM = MhaConfig("gpt2-medium", layers=24, d_model=1024, heads=16, d_k=64, seq_len=1024, weight_bits=8)
BERT_LARGE = MhaConfig("bert-large", layers=24, d_model=1024, heads=16, d_k=64, seq_len=512, weight_bits=4)
BITNET_158B = MhaConfig("bitnet-1.58b", layers=30, d_model=2560, heads=20, d_k=128, seq_len=2048, weight_bits=2)

_ALIASES = {
    "gpt2-medium": GPT2_MEDIUM,
    "gpt2": GPT2_MEDIUM,
    "bert-large": BERT_LARGE,
    "bert": BERT_LARGE,
    "bitnet-1.58b": BITNET_158B,
    "bitnet": BITNET_158B,
}


def builtin_models() -> tuple[MhaConfig, MhaConfig, MhaConfig]:
    return GPT2_MEDIUM, BERT_LARGE, BITNET_158B


def get_model(name: str) -> MhaConfig:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        known = ", ".join(m.name for m in builtin_models())
        raise ValueError(f"unknown model {name!r}; builtin models: {known}") from None


def stages(cfg: MhaConfig) -> list[StageSpec]:
    s, d = cfg.seq_len, cfg.d_model
    per_head = cfg.layers * cfg.heads
    proj = dict(m=s, k=d, p=d, count=cfg.layers, weight_bits=cfg.weight_bits)
    return [
        StageSpec(Stage.Q_PROJ, **proj),
        StageSpec(Stage.K_PROJ, **proj),
        StageSpec(Stage.V_PROJ, **proj),
        StageSpec(Stage.SCORES, m=s, k=cfg.d_k, p=s, count=per_head, weight_bits=8),
        StageSpec(Stage.ATTN, m=s, k=s, p=cfg.d_k, count=per_head, weight_bits=8),
        StageSpec(Stage.OUT_PROJ, **proj),
    ]


def total_ops(cfg: MhaConfig) -> int:
    return sum(spec.ops for spec in stages(cfg))


def breakdown(cfg: MhaConfig) -> dict[Stage, float]:
    """Per-stage share of the total operation count; shares sum to 1."""
    total = total_ops(cfg)
    return {spec.stage: spec.ops / total for spec in stages(cfg)}


def projection_fraction(cfg: MhaConfig) -> float:
    return sum(share for stage, share in breakdown(cfg).items() if stage in PROJECTION_STAGES)


def config_from_dict(doc: dict) -> MhaConfig:
    required = {"name", "layers", "d_model", "heads", "d_k", "seq_len", "weight_bits"}
    missing = required - doc.keys()
    if missing:
        raise ValueError(f"model document missing fields: {sorted(missing)}")
    extra = doc.keys() - required
    if extra:
        raise ValueError(f"model document has unknown fields: {sorted(extra)}")
    return MhaConfig(**doc)


def load_config(source: Union[str, os.PathLike]) -> MhaConfig:
    """Read a model geometry document from a JSON file."""
    with open(source, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def config_to_dict(cfg: MhaConfig) -> dict:
    return asdict(cfg)
