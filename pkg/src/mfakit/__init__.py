"""Mobility functional areas from daily origin-destination matrices."""
from .community import (
    Dendrogram,
    MobilityFunctionalAreas,
    MobilityGraph,
    WalktrapCommunities,
    build_graph,
    collapse_singletons,
    cut_at_max_modularity,
    daily_mfas,
    mfa_for_day,
    modularity,
    walktrap,
)
from .consensus import CoAssociationConsensus, CoMatrix, binarize, co_association, persistent_mfas
from .odm import (
    AdjacencyMatrix,
    AreaUniverse,
    DailyOdm,
    NormalizedOdm,
    OdmFormatError,
    ProximityMatrix,
    load_odm,
    normalize,
    read_holidays,
    symmetrize,
    threshold,
    weekday_filter,
)
from .partition import RESIDUAL, Partition, read_admin_mapping, read_partition_csv, write_partition_csv
from .similarity import sim_directed, sim_symmetric, similarity_matrix
from .stats import (
    GelmanScaler,
    MfaIndicatorOLS,
    RandomInterceptModel,
    eta_squared,
    gelman_standardize,
    redistribute_cases,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMatrix",
    "AreaUniverse",
    "binarize",
    "build_graph",
    "co_association",
    "CoAssociationConsensus",
    "collapse_singletons",
    "CoMatrix",
    "cut_at_max_modularity",
    "daily_mfas",
    "DailyOdm",
    "Dendrogram",
    "eta_squared",
    "gelman_standardize",
    "GelmanScaler",
    "load_odm",
    "mfa_for_day",
    "MfaIndicatorOLS",
    "MobilityFunctionalAreas",
    "MobilityGraph",
    "modularity",
    "normalize",
    "NormalizedOdm",
    "OdmFormatError",
    "Partition",
    "persistent_mfas",
    "ProximityMatrix",
    "RandomInterceptModel",
    "read_admin_mapping",
    "read_holidays",
    "read_partition_csv",
    "redistribute_cases",
    "RESIDUAL",
    "sim_directed",
    "sim_symmetric",
    "similarity_matrix",
    "symmetrize",
    "threshold",
    "walktrap",
    "WalktrapCommunities",
    "weekday_filter",
    "write_partition_csv",
]
