"""Usage-pattern analytics for collaborative tagging communities."""

__version__ = "0.1.0"

from .activity import (
    FitReport,
    HoerlParams,
    Metric,
    RankDistribution,
    correlation_r2,
    eval_hoerl,
    fit_hoerl,
    rank_distribution,
)
from .graph import (
    ComponentSummary,
    InterestGraph,
    SimilarityKind,
    build_graph,
    component_summary,
    similarity,
    threshold_sweep,
)
from .ingest import CleaningConfig, CleaningReport, RawRecord, clean, parse_trace
from .model import Community, EntityId, EntityKind, TagAssignment, build_community, summary_stats, user_view
from .navigability import (
    EntropyPoint,
    HitRatioReport,
    NeighborhoodEntropyReport,
    PopularityDistribution,
    average_neighborhood_entropy,
    entropy,
    entropy_timeline,
    hit_ratio,
    item_popularity,
    neighborhood_entropy,
)
from .urn import SyntheticTraceConfig, UrnState, UrnTrajectory, generate_trace, urn_converged_fraction, urn_run
