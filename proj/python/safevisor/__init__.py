"""Safety advisor and runtime supervisor for two-player stochastic games."""

from ._safevisor import (
    CapacityError,
    Config,
    ConfigError,
    Dfa,
    DomainError,
    Error,
    FiniteInstance,
    FormatError,
    Game,
    GateResult,
    HorizonExceeded,
    IndexError,
    InfeasibleBudget,
    InterfaceInfeasible,
    OracleReport,
    Pipeline,
    RelationInfeasible,
    Specification,
    build_pipeline,
    load_config,
    load_dfa,
    load_finite_instance,
    oracle_check,
    parse_dfa,
)

__all__ = [
    "CapacityError",
    "Config",
    "ConfigError",
    "Dfa",
    "DomainError",
    "Error",
    "FiniteInstance",
    "FormatError",
    "Game",
    "GateResult",
    "HorizonExceeded",
    "IndexError",
    "InfeasibleBudget",
    "InterfaceInfeasible",
    "OracleReport",
    "Pipeline",
    "RelationInfeasible",
    "Specification",
    "build_pipeline",
    "load_config",
    "load_dfa",
    "load_finite_instance",
    "oracle_check",
    "parse_dfa",
]
