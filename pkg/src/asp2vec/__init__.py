"""Multi-aspect node embeddings with aspect selection and aspect regularization."""
from .config import ConfigError, TrainerConfig
from .graph import Graph, GraphFormatError, from_edges, load_edge_list, load_node_types
from .store import EmbeddingStore, read_word2vec, write_word2vec
from .trainer import TrainingDivergedError, train, train_deepwalk
from .walks import WalkCorpus, generate_walks, metapath_walks

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "TrainerConfig", "Graph", "GraphFormatError", "from_edges", "load_edge_list",
    "load_node_types", "EmbeddingStore", "read_word2vec", "write_word2vec",
    "TrainingDivergedError", "train", "train_deepwalk", "WalkCorpus", "generate_walks",
    "metapath_walks",
]
