"""Projective-mapping consensus analysis.

Gabriel-graph and distance-based similarity graphs, Kamada-Kawai consensus
layouts, average-linkage dendrograms, Multiple Factor Analysis, and
bootstrap stability curves (RV and Mantel coefficients).
"""

from ._backend import BACKEND
from .consensus import (
    Configuration,
    Dendrogram,
    LayoutSettings,
    consensus_layout,
    hierarchical_cluster,
    kamada_kawai,
    reorder_matrix,
    stress,
    target_distances,
)
from .errors import (
    DegenerateBlockError,
    DomainError,
    ParseError,
    SchemaError,
    SensographError,
    UndefinedCoefficientError,
)
from .geometry import gabriel_graph, pairwise_distances
from .mfa import MfaResult, group_weight, mfa_consensus
from .panel import (
    Panel,
    Tablecloth,
    ValidationReport,
    generate_panel,
    jitter_duplicates,
    parse_panel,
    read_panel,
    serialize_panel,
    validate_panel,
)
from .similarity import (
    GlobalSimilarity,
    aggregate,
    distance_similarity,
    filter_deciles,
    gabriel_similarity,
    global_similarity,
    normalize_strengths,
    raw_distance_similarity,
    tune_similarity,
)
from .stability import (
    Method,
    StabilityCurve,
    bootstrap_stability,
    make_grid,
    mantel_coefficient,
    rv_coefficient,
)

__version__ = "0.1.0"
