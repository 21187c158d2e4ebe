from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

from ..errors import ShapeError


class Preset(str, enum.Enum):
    PAPER = "paper"
    DESK = "desk"


class Condition(str, enum.Enum):
    NONE = "none"
    BOUNDARY = "boundary"    # exterior rectangles, (type, x, y, w, h) tuples
    ELEMENTS = "elements"    # room list, (type, w, h) tuples


COND_ARITY = {Condition.NONE: 0, Condition.BOUNDARY: 5, Condition.ELEMENTS: 3}


@dataclass(frozen=True)
class ModelConfig:
    """Transformer sizes for the element and edge models.

    ``n_layers_decoder`` is the autoregressive stack (element decoder or
    pointer decoder). ``n_layers_encoder`` is the element-embedding network
    of the edge model and is 0 for the element model.
    ``n_layers_condition_encoder`` is 0 for unconditional models.
    """
    kind: str = "element"            # "element" | "edge"
    embed_dim: int = 64
    n_heads: int = 4
    n_layers_decoder: int = 3
    n_layers_encoder: int = 0
    n_layers_condition_encoder: int = 0
    max_seq_len: int = 256
    max_elem_len: int = 256
    max_cond_len: int = 256
    vocab_size: int = 75
    n_types: int = 7
    arity: int = 3
    condition: str = Condition.NONE.value
    edge_kind: str | None = None
    dropout_p: float = 0.1
    preset: str = Preset.DESK.value
    mode: str = "floorplan"

    def __post_init__(self):
        if self.embed_dim % self.n_heads:
            raise ShapeError(f"embed_dim {self.embed_dim} not divisible by {self.n_heads} heads")
        if (self.condition != Condition.NONE.value) != (self.n_layers_condition_encoder > 0):
            raise ValueError("condition encoder layers must be >0 exactly when conditioned")

    @property
    def cond_arity(self):
        return COND_ARITY[Condition(self.condition)]

    @property
    def conditional(self):
        return self.condition != Condition.NONE.value

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def make_config(kind, preset="desk", condition="none", n_types=7, arity=3, mode="floorplan",
                edge_kind=None, **overrides):
    """Build a config from a scale preset.

    Paper scale: 384-d embeddings, 12 heads, dropout 0.2; element model with
    12 decoder blocks (8-block condition encoder); edge model with a 16-block
    element encoder and 12-block pointer decoder (3-block condition encoder).
    Desk scale: 64-d, 4 heads, 2-3 blocks per stack.
    """
    preset = Preset(preset)
    condition = Condition(condition)
    cond = condition is not Condition.NONE
    from ..codec import Vocab
    vocab = Vocab(n_types).size
    if preset is Preset.PAPER:
        base = dict(embed_dim=384, n_heads=12, dropout_p=0.2)
        if kind == "element":
            base.update(n_layers_decoder=12, n_layers_encoder=0, n_layers_condition_encoder=8 if cond else 0)
        else:
            base.update(n_layers_decoder=12, n_layers_encoder=16, n_layers_condition_encoder=3 if cond else 0)
    else:
        base = dict(embed_dim=64, n_heads=4, dropout_p=0.1)
        if kind == "element":
            base.update(n_layers_decoder=3, n_layers_encoder=0, n_layers_condition_encoder=2 if cond else 0)
        else:
            base.update(n_layers_decoder=2, n_layers_encoder=2, n_layers_condition_encoder=2 if cond else 0)
    if kind == "edge":
        base.update(max_seq_len=512)
    base.update(kind=kind, preset=preset.value, condition=condition.value, n_types=n_types, arity=arity,
                vocab_size=vocab, mode=mode, edge_kind=edge_kind)
    base.update(overrides)
    return ModelConfig(**base)
