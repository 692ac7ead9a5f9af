"""Core domain types shared across the ingestion, graph, and analytics layers.

Everything here is an immutable value object. Mutation happens only inside
CaseGraph (see graph.py), which is the single owner of case state.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple


class SourceKind(str, Enum):
    NETWORK_LOG = "network_log"
    MEMORY_ARTIFACT = "memory_artifact"
    CLOUD_AUDIT = "cloud_audit"
    SYSLOG = "syslog"
    FIREWALL_LOG = "firewall_log"
    GENERIC_TABULAR = "generic_tabular"


class EntityKind(str, Enum):
    NL = "nl"          # network log row
    M = "m"            # memory artifact
    WA = "wa"          # web application
    SLOG = "slog"      # syslog event
    DC = "dc"          # deleted cloud
    EC = "ec"          # external cloud
    AI = "ai"          # ai model / cloud file
    S1 = "s1"          # system entity
    GENERIC = "generic"


class AttributeKind(str, Enum):
    TIMESTAMP = "timestamp"
    IPV4 = "ipv4"
    MAC = "mac"
    PORT = "port"
    PROTOCOL = "protocol"
    USERNAME = "username"
    APPLICATION_NAME = "application_name"
    PROCESS_NAME = "process_name"
    URL = "url"
    FILE_NAME = "file_name"
    FILE_SIZE = "file_size"
    EMAIL = "email"
    EVENT_TYPE = "event_type"
    DEVICE_NAME = "device_name"
    HOST = "host"
    GEOLOCATION = "geolocation"
    CONNECTION_STATE = "connection_state"
    FREE_TEXT = "free_text"


class Role(str, Enum):
    NONE = "none"
    SOURCE = "source"
    DESTINATION = "destination"
    LOCAL = "local"
    FOREIGN = "foreign"
    CREATED = "created"
    ACCESSED = "accessed"
    CREATED_BY = "created_by"
    ACCESSED_BY = "accessed_by"


# Attribute kinds whose canonical value is an integer (used by tolerance rules).
NUMERIC_KINDS = {AttributeKind.TIMESTAMP, AttributeKind.PORT, AttributeKind.FILE_SIZE}


@dataclass(frozen=True)
class NormalizedValue:
    kind: AttributeKind
    value: object  # int for numeric kinds, str otherwise
    role: Role = Role.NONE


@dataclass(frozen=True)
class Attribute:
    """One normalized attribute of an evidence record, with provenance."""

    kind: AttributeKind
    role: Role
    value: object
    raw_text: str
    column: str  # source column (or derivation tag) this cell came from


@dataclass(frozen=True)
class SourceDescriptor:
    source_id: str
    source_kind: SourceKind
    display_name: str
    ingested_at: int  # UTC epoch seconds
    original_uri: str
    utc_offset_minutes: int = 0  # applied to source-local timestamps


@dataclass(frozen=True)
class EvidenceRecord:
    record_id: str
    source_id: str
    entity_kind: EntityKind
    attributes: Tuple[Attribute, ...]
    raw_line: str
    line_number: int  # 1-based, counted over the whole input file


@dataclass(frozen=True)
class ColumnMapping:
    column: str
    kind: AttributeKind
    role: Role = Role.NONE


@dataclass(frozen=True)
class MappingConfig:
    """Escape hatch for tabular sources without a built-in schema."""

    column_map: Tuple[ColumnMapping, ...]
    entity_kind: EntityKind = EntityKind.GENERIC
    timestamp_format: str = "%d/%m/%Y %H:%M:%S"

    def __post_init__(self):
        names = [m.column for m in self.column_map]
        if len(names) != len(set(names)):
            raise ValueError("mapped column names must be unique")


@dataclass(frozen=True)
class IngestWarning:
    line_number: int
    message: str


# --------------------------------------------------------------------------
# Errors


class EvigraphError(Exception):
    """Base class for all structured errors raised by this package."""


class UnknownFormat(EvigraphError):
    pass


class MalformedRow(EvigraphError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class BadTimestamp(EvigraphError):
    pass


class BadSize(EvigraphError):
    pass


class BadIdentity(EvigraphError):
    pass


class DuplicateRecord(EvigraphError):
    pass


class UnknownNode(EvigraphError):
    pass


class UnknownEdge(EvigraphError):
    pass


class IllegalTransition(EvigraphError):
    pass


class SelfMatch(EvigraphError):
    pass


class DuplicateEdge(EvigraphError):
    pass


class BadEnrichment(EvigraphError):
    pass


class BadWindow(EvigraphError):
    pass


class BadProbe(EvigraphError):
    pass


class StorageError(EvigraphError):
    pass


class VersionConflict(EvigraphError):
    pass


# --------------------------------------------------------------------------
# Stable content-derived ids (re-ingesting the same bytes yields the same ids)


def _digest(*parts: str) -> str:
    h = hashlib.sha1()
    for p in parts:
        h.update(p.encode("utf-8", "surrogateescape"))
        h.update(b"\x00")
    return h.hexdigest()


def make_source_id(kind: SourceKind, content: bytes) -> str:
    h = hashlib.sha1()
    h.update(kind.value.encode())
    h.update(b"\x00")
    h.update(content)
    return h.hexdigest()[:12]


def make_record_id(source_id: str, line_number: int, raw_line: str) -> str:
    return _digest(source_id, str(line_number), raw_line)[:16]


def make_entity_node_id(record_id: str) -> str:
    return "e:" + record_id


def make_attribute_node_id(record_id: str, column: str, kind: AttributeKind, role: Role) -> str:
    return "a:" + _digest(record_id, column, kind.value, role.value)[:16]


def make_edge_id(endpoint_a: str, endpoint_b: str, rule_id: Optional[str]) -> str:
    lo, hi = sorted((endpoint_a, endpoint_b))
    return "x:" + _digest(lo, hi, rule_id or "manual")[:16]
