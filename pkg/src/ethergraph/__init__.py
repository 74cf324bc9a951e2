"""Temporal graph analytics for Ethereum-style transaction data.

Ingests transaction dumps (or fetches them from explorer-style endpoints),
builds directed graph snapshots per day/week/block window, and derives
volume series, account-activity series, degree distributions, and
week-over-week degree-growth rankings for the full network and its
Flashbots subset.
"""

__version__ = "0.1.0"

from .model import Tag, Transaction, normalize_address, normalize_tx_hash, shorten_address
from .dataset import Dataset, FlashbotsManifest, load_dataset
from .temporal import (
    ActivitySeries,
    DegreeRecord,
    WindowGraph,
    WindowSpec,
    activity_series,
    build_window_graph,
    degree_table,
    partition_windows,
)
from .analytics import (
    CcdfPoint,
    GrowthRecord,
    TagMap,
    VolumeSeries,
    degree_ccdf,
    degree_growth,
    load_tag_map,
    top_k_growth,
    volume_series,
)
from .pipeline import AnalysisOptions, PRESETS, build_bundle, run_analysis

__all__ = [
    "__version__",
    "Tag",
    "Transaction",
    "normalize_address",
    "normalize_tx_hash",
    "shorten_address",
    "Dataset",
    "FlashbotsManifest",
    "load_dataset",
    "ActivitySeries",
    "DegreeRecord",
    "WindowGraph",
    "WindowSpec",
    "activity_series",
    "build_window_graph",
    "degree_table",
    "partition_windows",
    "CcdfPoint",
    "GrowthRecord",
    "TagMap",
    "VolumeSeries",
    "degree_ccdf",
    "degree_growth",
    "load_tag_map",
    "top_k_growth",
    "volume_series",
    "AnalysisOptions",
    "PRESETS",
    "build_bundle",
    "run_analysis",
]
