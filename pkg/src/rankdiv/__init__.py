"""rankdiv: agreement and divergence metrics for multi-agent ranked lists."""

__version__ = "0.1.0"

from .core import BenchmarkRun, MetricValue, RankedList, canonicalize_item, rank_of
from .ingest import (
    ParseError,
    RawRecord,
    ValidationError,
    ValidationReport,
    parse_raw,
    summarize,
    validate,
)
from .pairwise import (
    average_overlap,
    ao_profile,
    jaccard,
    kendall_tau,
    pair_scores,
    pairwise_matrix,
    rbo_extrapolated,
    rbo_truncated,
)
from .group import cronbach_alpha, group_reliability, kendall_w, rank_table, score_vector
from .consensus import (
    arv,
    consensus_order_borda,
    consensus_report,
    kemeny_distance_literal,
    kemeny_distance_tau,
    kemeny_exact,
    kemeny_objective,
    volatility,
)
from .stats import anova_oneway, kruskal_wallis, levene, permutation_test
from .synth import SynthConfig, noisy_ranking, synth_records, synth_run
from .report import (
    ReportParams,
    build_manifest,
    build_report,
    domain_composites,
    reliability_tiers,
    tier_classify,
    write_bundle,
)

__all__ = [
    "BenchmarkRun",
    "MetricValue",
    "ParseError",
    "RankedList",
    "RawRecord",
    "ReportParams",
    "SynthConfig",
    "ValidationError",
    "ValidationReport",
    "anova_oneway",
    "ao_profile",
    "arv",
    "average_overlap",
    "build_manifest",
    "build_report",
    "canonicalize_item",
    "consensus_order_borda",
    "consensus_report",
    "cronbach_alpha",
    "domain_composites",
    "group_reliability",
    "jaccard",
    "kemeny_distance_literal",
    "kemeny_distance_tau",
    "kemeny_exact",
    "kemeny_objective",
    "kendall_tau",
    "kendall_w",
    "kruskal_wallis",
    "levene",
    "noisy_ranking",
    "pair_scores",
    "pairwise_matrix",
    "parse_raw",
    "permutation_test",
    "rank_of",
    "rank_table",
    "rbo_extrapolated",
    "rbo_truncated",
    "reliability_tiers",
    "score_vector",
    "summarize",
    "synth_records",
    "synth_run",
    "tier_classify",
    "validate",
    "volatility",
    "write_bundle",
]
