from ._egats import (
    ConfigError,
    EngagementReport,
    Environment,
    EnvironmentError,
    Error,
    GatewayError,
    Mode,
    NotFoundError,
    ParseError,
    PlannerConfig,
    SearchMetrics,
    SweepTable,
    TdiVector,
    Trace,
    ValidationError,
    compute_tdi,
    parameter_sweep,
    run_engagement,
    select_mode,
)

__all__ = [
    "ConfigError",
    "EngagementReport",
    "Environment",
    "EnvironmentError",
    "Error",
    "GatewayError",
    "Mode",
    "NotFoundError",
    "ParseError",
    "PlannerConfig",
    "SearchMetrics",
    "SweepTable",
    "TdiVector",
    "Trace",
    "ValidationError",
    "compute_tdi",
    "parameter_sweep",
    "run_engagement",
    "select_mode",
]
