"""Population graphs over dataset rows."""

from .population import (
    MetaFeature,
    PopulationGraph,
    build_graph,
    build_graphs,
    export_graph,
    graph_summary,
    normalized_laplacian,
    rescale_laplacian,
)

__all__ = [
    "MetaFeature",
    "PopulationGraph",
    "build_graph",
    "build_graphs",
    "export_graph",
    "graph_summary",
    "normalized_laplacian",
    "rescale_laplacian",
]
