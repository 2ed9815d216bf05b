"""Benchmarking toolkit for genomic privacy metrics.

Quantifies how reliably each privacy metric tracks adversary strength:
synthetic SNP cohorts are attacked by graded adversary models, two dozen
metrics are computed per individual, and every metric earns a monotonicity
score with heat-map, radar, and violin artifacts.
"""

from .adversary import (
    EPSILON,
    MODEL_NAMES,
    AdversaryLevel,
    build_estimate_set,
    cell_rng,
    estimate_block,
    floor_simplex,
    ladder,
)
from .errors import (
    DataError,
    EncodingError,
    NumericError,
    PrivmeterError,
    UsageError,
)
from .genome import (
    ALZHEIMER_RSIDS,
    Cohort,
    Genome,
    ScenarioDataset,
    detect_kin,
    load_cohort,
    save_cohort,
    select_scenario,
    synthesize_cohort,
    synthesize_pedigree,
)
from .metrics import (
    EVALUATED_METRICS,
    METRIC_NAMES,
    PERMITTED_HEALTH_BASES,
    REGISTRY,
    MetricParams,
    compute_individual_metrics,
)
from .pipeline import (
    MetricTable,
    ScenarioData,
    build_scenario,
    ci_report,
    compute_level_metrics,
    compute_model_tables,
    evaluate_all_strengths,
)
from .report import heatmap_svg, radar_svg, violin_export
from .stats import mean_ci, rank_sum_test, welch_t_test
from .strength import (
    StrengthConfig,
    StrengthHeatMap,
    evaluate_strength,
    monotonicity_score,
    sensitivity_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ALZHEIMER_RSIDS",
    "AdversaryLevel",
    "Cohort",
    "DataError",
    "EPSILON",
    "EVALUATED_METRICS",
    "EncodingError",
    "Genome",
    "METRIC_NAMES",
    "MODEL_NAMES",
    "MetricParams",
    "MetricTable",
    "NumericError",
    "PERMITTED_HEALTH_BASES",
    "PrivmeterError",
    "REGISTRY",
    "ScenarioData",
    "ScenarioDataset",
    "StrengthConfig",
    "StrengthHeatMap",
    "UsageError",
    "build_estimate_set",
    "build_scenario",
    "cell_rng",
    "ci_report",
    "compute_individual_metrics",
    "compute_level_metrics",
    "compute_model_tables",
    "detect_kin",
    "estimate_block",
    "evaluate_all_strengths",
    "evaluate_strength",
    "floor_simplex",
    "heatmap_svg",
    "ladder",
    "load_cohort",
    "mean_ci",
    "monotonicity_score",
    "radar_svg",
    "rank_sum_test",
    "sensitivity_sweep",
    "save_cohort",
    "select_scenario",
    "synthesize_cohort",
    "synthesize_pedigree",
    "violin_export",
    "welch_t_test",
]
