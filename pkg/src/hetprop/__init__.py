"""Vertex-centric heterogeneous label propagation for drug/disease/target networks."""
from .bsp import Engine, EngineConfig
from .graph import EngineGraph, schedule_order
from .labelprop import AlgoParams, rank_candidates, run_all_seeds, symmetrize_outputs
from .network import Concept, HeterogeneousNetwork, concept_of, index_of, vertex_id

__version__ = "0.1.0"
