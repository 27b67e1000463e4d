"""Heterogeneous-graph link prediction toolkit.

Builds labelled graph views of tabular trial/adverse-event data and
compares four link-prediction routes on the same edge splits: metapath
skip-gram embeddings, a relational mean-aggregation GNN, graph kernels
over per-trial subgraphs, and a one-hot array baseline, all evaluated
by ROC-AUC.
"""

from .hetgraph import HeteroGraph
from .ingest import (
    SyntheticConfig,
    TrialRecord,
    build_binodal_graph,
    build_constituent_graphs,
    build_knowledge_graph,
    generate_synthetic,
    parse_trials_csv,
)
from .pipeline import PipelineConfig, compare_report, reproduce, split_edges

__version__ = "0.1.0"

__all__ = [
    "HeteroGraph",
    "PipelineConfig",
    "SyntheticConfig",
    "TrialRecord",
    "build_binodal_graph",
    "build_constituent_graphs",
    "build_knowledge_graph",
    "compare_report",
    "generate_synthetic",
    "parse_trials_csv",
    "reproduce",
    "split_edges",
    "__version__",
]
