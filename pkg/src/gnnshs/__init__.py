"""Discover top-k structural hole spanners in dynamic graphs with a two-layer GNN."""

from .graph import Graph, connected_components, induced_subgraph_without
from .model import ModelParams, TrainConfig, load_model, predict, save_model, train
from .oracle import greedy_top_k, label_top_k, score_all_nodes, total_pairwise_connectivity

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "ModelParams",
    "TrainConfig",
    "connected_components",
    "greedy_top_k",
    "induced_subgraph_without",
    "label_top_k",
    "load_model",
    "predict",
    "save_model",
    "score_all_nodes",
    "total_pairwise_connectivity",
    "train",
]
