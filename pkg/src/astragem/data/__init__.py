"""Datasets, graph containers and file formats."""

from astragem.data.citation import (
    CitationGraph,
    extract_ego_small,
    ingest_edge_list,
    synthetic_citation_graph,
    write_edge_list,
)
from astragem.data.community import gen_community_small
from astragem.data.graphs import Dataset, GraphSample, load_graphs, save_graphs, split

__all__ = [
    "CitationGraph",
    "Dataset",
    "GraphSample",
    "extract_ego_small",
    "gen_community_small",
    "ingest_edge_list",
    "load_graphs",
    "save_graphs",
    "split",
    "synthetic_citation_graph",
    "write_edge_list",
]
