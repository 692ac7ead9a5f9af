"""Unified evidence graph: ingest heterogeneous exports, cross-match
attributes with a rule set, let an examiner refine the result, and run
timeline / link / correlation analytics over the curated graph.
"""

from .graph import CaseGraph, build_graph
from .harmonise import (
    EnrichmentKind,
    EnrichmentRecord,
    MatchRule,
    default_rules,
    refine1,
)
from .ingest import parse_source
from .store import Case
from .types import (
    Attribute,
    AttributeKind,
    EntityKind,
    EvidenceRecord,
    EvigraphError,
    MappingConfig,
    Role,
    SourceDescriptor,
    SourceKind,
)

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "AttributeKind",
    "Case",
    "CaseGraph",
    "EnrichmentKind",
    "EnrichmentRecord",
    "EntityKind",
    "EvidenceRecord",
    "EvigraphError",
    "MappingConfig",
    "MatchRule",
    "Role",
    "SourceDescriptor",
    "SourceKind",
    "build_graph",
    "default_rules",
    "parse_source",
    "refine1",
]
