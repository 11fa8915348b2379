"""Measure political-salience bias in search-engine and LLM outputs."""

__version__ = "0.1.0"

from .errors import InputError, SalienceAuditError, StatsError
from .model import (
    AuditConfig,
    Benchmark,
    BenchmarkKind,
    Election,
    LocationSpec,
    Mention,
    Platform,
    QueryKind,
    QuerySpec,
    ResultRecord,
    Scheme,
    Section,
    TestKind,
    TestOutcome,
    validate_config,
)

__all__ = [
    "AuditConfig",
    "Benchmark",
    "BenchmarkKind",
    "Election",
    "InputError",
    "LocationSpec",
    "Mention",
    "Platform",
    "QueryKind",
    "QuerySpec",
    "ResultRecord",
    "SalienceAuditError",
    "Scheme",
    "Section",
    "StatsError",
    "TestKind",
    "TestOutcome",
    "validate_config",
    "__version__",
]
