from ._core import (
    Categorical,
    CoverageRate,
    GibbsTrace,
    HvcmError,
    HvcmParams,
    InteractionLog,
    NetStats,
    ParseError,
    PitmanYor,
    PpcReport,
    PriorPreset,
    StatInterval,
    TraceRecord,
    __version__,
    compute_stats,
    coverage_report,
    fit,
    generate_replicates,
    interval,
    local_stats,
    log_likelihood,
    marginal_likelihood,
    node_sharing_histogram,
    parse_log,
    powerlaw_slope,
    read_log,
    run_cli,
    simulate,
    simulate_conditional,
    sparsity_slope,
    yule_reference,
)

__all__ = [name for name in dir() if not name.startswith("_")]
