"""Bundled end-to-end demonstration case.

Seven evidence exports about one incident (an exfiltrated model file) are
ingested, auto-matched, enriched with an identity directory, and then
curated the way an examiner would: confirming the load-bearing matches and
excluding timestamps that only add noise. The resulting timeline is frozen
in data/fixtures/golden_timeline.csv and used as a regression baseline.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Optional, Tuple

from . import harmonise
from .graph import CaseGraph
from .ingest import mapping_config_from_dict
from .store import Case
from .types import AttributeKind, SourceKind

# Investigation window: first suspicious event through the exfiltration.
GOLDEN_WINDOW: Tuple[int, int] = (1650460822, 1652871312)

CASE_TITLE = "Model exfiltration demo"

# (fixture file, source kind, display name, mapping fixture or None)
_SOURCES = [
    ("memory.csv", SourceKind.MEMORY_ARTIFACT, "Memory capture", None),
    ("network.csv", SourceKind.NETWORK_LOG, "Network logs", None),
    ("cloud.csv", SourceKind.CLOUD_AUDIT, "File system", None),
    ("syslog.csv", SourceKind.SYSLOG, "Syslog server", None),
    ("cloud_alerts.csv", SourceKind.CLOUD_AUDIT, "Cloud monitoring",
     "cloud_alerts.mapping.json"),
    ("memory_sessions.csv", SourceKind.MEMORY_ARTIFACT, "Memory",
     "memory_sessions.mapping.json"),
    ("external.csv", SourceKind.GENERIC_TABULAR, "External provider",
     "external.mapping.json"),
]

# Matches the examiner signs off on: (source, line, column, kind) endpoints
# plus the rule that proposed the edge.
_CONFIRMATIONS = [
    (("Memory capture", 2, "local_address", "ipv4"),
     ("Network logs", 2, "source_ip", "ipv4"), "ip_equal"),
    (("Network logs", 4, "destination_ip", "ipv4"),
     ("External provider", 2, "ip_address", "ipv4"), "ip_equal"),
    (("Network logs", 4, "source_ip", "ipv4"),
     ("Cloud monitoring", 3, "ip_address", "ipv4"), "ip_equal"),
    (("Network logs", 4, "timestamp", "timestamp"),
     ("Cloud monitoring", 3, "accessed_timestamp", "timestamp"),
     "timestamp_equal"),
    (("Network logs", 4, "size", "file_size"),
     ("File system", 2, "file_size", "file_size"), "size_equal"),
    (("Memory", 2, "accessed_by", "username"),
     ("File system", 2, "derived:identity_directory:accessed_by", "username"),
     "username_equal"),
    (("Memory", 2, "ip_address", "ipv4"),
     ("Syslog server", 3, "ip_address", "ipv4"), "ip_equal"),
    (("Memory", 2, "accessed_by", "username"),
     ("Syslog server", 3, "accessed_by", "username"), "username_equal"),
]

# Timestamps that duplicate already-confirmed events; excluded so the
# curated timeline carries one row per incident step.
_EXCLUSIONS = [
    ("File system", 2, "accessed_timestamp", "timestamp"),
    ("Network logs", 2, "timestamp", "timestamp"),
    ("Network logs", 3, "timestamp", "timestamp"),
    ("Cloud monitoring", 3, "accessed_timestamp", "timestamp"),
    ("Syslog server", 2, "created_timestamp", "timestamp"),
    ("Syslog server", 2, "accessed_timestamp", "timestamp"),
]


def fixture_bytes(name: str) -> bytes:
    return (resources.files("evigraph") / "data" / "fixtures" / name).read_bytes()


def fixture_text(name: str) -> str:
    return fixture_bytes(name).decode("utf-8")


def identity_directory() -> dict:
    return json.loads(fixture_text("identity_directory.json"))


def expected_timeline_csv() -> str:
    return fixture_text("golden_timeline.csv")


def find_attribute(graph: CaseGraph, display_name: str, line_number: int,
                   column: str, kind: str) -> str:
    """Attribute node id addressed by provenance rather than opaque hash."""
    wanted = AttributeKind(kind)
    for attr in graph.attributes.values():
        if attr.column != column or attr.kind != wanted:
            continue
        entity = graph.entities[attr.owner]
        if graph.records[entity.record_id].line_number != line_number:
            continue
        if graph.sources[entity.source_id].display_name == display_name:
            return attr.node_id
    raise LookupError(
        f"no {kind} attribute at {display_name!r} line {line_number} "
        f"column {column!r}")


def find_entity(graph: CaseGraph, display_name: str, line_number: int) -> str:
    for entity in graph.entities.values():
        if graph.sources[entity.source_id].display_name != display_name:
            continue
        if graph.records[entity.record_id].line_number == line_number:
            return entity.node_id
    raise LookupError(f"no entity at {display_name!r} line {line_number}")


def ingest_all(case: Case) -> None:
    for name, kind, display, mapping in _SOURCES:
        config = None
        if mapping is not None:
            config = mapping_config_from_dict(json.loads(fixture_text(mapping)))
        case.ingest_source(fixture_bytes(name), kind, display_name=display,
                           config=config)


def build_case(data_dir, case_id: str = "model-exfiltration-demo",
               curate: bool = True) -> Case:
    """Create and populate the demonstration case under data_dir.

    With curate=False the case stops after ingest + auto-matching, which is
    the state an examiner would first see.
    """
    case = Case.create(data_dir, CASE_TITLE, case_id=case_id)
    ingest_all(case)
    case.run_harmonise()
    if not curate:
        return case

    case.apply_enrichment(harmonise.EnrichmentRecord(
        kind=harmonise.EnrichmentKind.IDENTITY_DIRECTORY,
        entries=identity_directory(),
        provenance="corporate identity directory"))

    for a_sel, b_sel, rule_id in _CONFIRMATIONS:
        a = find_attribute(case.graph, *a_sel)
        b = find_attribute(case.graph, *b_sel)
        edge = case.graph.edge_for_key(a, b, rule_id)
        if edge is None:
            raise LookupError(f"no {rule_id} edge between {a_sel} and {b_sel}")
        case.confirm_edge(edge.edge_id)

    for sel in _EXCLUSIONS:
        case.exclude_node(find_attribute(case.graph, *sel))
    return case
