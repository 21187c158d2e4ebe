"""Transformer models for element constraints and edges."""
from .config import COND_ARITY, Condition, ModelConfig, Preset, make_config
from .data import EdgeExample, ElementExample, edge_example, element_example, make_edge_batch, make_element_batch
from .edge import EdgeModel, edge_forward
from .element import ElementModel, element_forward
from .sampling import GREEDY, Sample, Strategy, sample, sample_edges, sample_elements
from .train import batch_nll, load_model, save_model, train

__all__ = [
    "COND_ARITY", "Condition", "EdgeExample", "EdgeModel", "ElementExample", "ElementModel", "GREEDY",
    "ModelConfig", "Preset", "Sample", "Strategy", "batch_nll", "edge_example", "edge_forward",
    "element_example", "element_forward", "load_model", "make_config", "make_edge_batch", "make_element_batch",
    "sample", "sample_edges", "sample_elements", "save_model", "train",
]
