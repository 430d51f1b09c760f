"""Forman-Ricci curvature, discrete Ricci flow and change detection on graphs."""

from .change import (
    AlignedPair,
    ChangeDetector,
    ChangeReport,
    align,
    detect,
    evolve_pair,
    export_heatmap,
    similarity_scores,
)
from .curvature import (
    CurvatureField,
    FormanCurvature,
    curvature_histogram,
    curvature_map_export,
    forman_ricci_all,
    forman_ricci_edge,
)
from .exceptions import (
    BudgetError,
    ConfigError,
    ContractError,
    EmptyGraphError,
    FlowOverflowError,
    FormanFlowError,
    InputError,
    ParseError,
)
from .flow import (
    FlowConfig,
    FlowTrace,
    RicciFlow,
    ricci_flow,
    ricci_flow_step,
    scalar_flow_step,
)
from .graph import (
    Graph,
    WeightScheme,
    build_graph,
    degree_distribution,
    incident_edges,
    unit_weights,
)
from .ingest import (
    Snapshot,
    WeightingConfig,
    export_edgelist,
    load_snapshot,
    normalize_scheme,
    parse_konect,
    parse_snap_edgelist,
)
from .weighting import (
    EdgeWeighter,
    bfs_capped,
    edge_weights_augmented,
    edge_weights_detour,
    node_weights,
)

__version__ = "0.1.0"
