"""Open Access policy analytics: registry, encoding, metrics, statistics."""

from .registry import (
    PartialDate,
    PolicyRecord,
    RegistryParseError,
    RegistrySnapshot,
    Violation,
    is_mandate,
    mandate_age,
    parse_registry,
    serialize_registry,
    validate_policy,
)
from .encoding import (
    ConditionId,
    DesignMatrix,
    OptionWeightTable,
    UncoveredOptionError,
    WeightScheme,
    build_design_matrix,
    builtin_weight_tables,
    encode_policy,
)
from .corpus import (
    AccessState,
    ArticleRecord,
    CorpusParseError,
    DepositCorpus,
    LatencyPeriod,
    SyntheticConfig,
    SyntheticInstitution,
    apply_exclusions,
    deposit_latency_months,
    estimated_publication_date,
    generate_synthetic,
    latency_period,
    parse_corpus,
    serialize_corpus,
)
from .metrics import (
    DepositRates,
    LatencySummary,
    RegistrySummary,
    Y1Score,
    deposit_rates,
    first_year_latency_score,
    latency_summary,
    period_distribution,
    rank_institutions,
    summarize_registry,
)
from .nbr import NbrFit, RankDeficientError, fit_nbr
from .stats import (
    AnalysisConfig,
    AnalysisReport,
    CorrelationResult,
    InfeasibleAnalysisError,
    ScreeningResult,
    ZeroVarianceError,
    pearson,
    report_to_dict,
    report_to_json,
    run_effectiveness_analysis,
    screen_conditions,
    t_two_tailed_p,
)

__version__ = "0.1.0"
