"""Parsers for heterogeneous evidence exports.

Built-in tabular schemas (CSV, header row required) cover the five known
source kinds; a line-per-record JSON variant is accepted for all of them.
Anything else goes through a MappingConfig.

Parsing is total: bad rows are skipped and reported as warnings, bad files
raise structured errors, and nothing here ever mutates shared state.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Dict, List, Optional, Sequence, Tuple

from . import normalize as nz
from .types import (
    Attribute,
    AttributeKind,
    ColumnMapping,
    EntityKind,
    EvidenceRecord,
    IngestWarning,
    MappingConfig,
    Role,
    SourceDescriptor,
    SourceKind,
    UnknownFormat,
    make_record_id,
)

# Cells a source exported but had no value for ("---" in packet-log exports).
_MISSING_MARKERS = {"-", "--", "---", "----", "n/a", "N/A"}

# Pseudo-kinds handled specially by the row builder.
_ADDR = "addr"  # "ip:port" or "ip:service" endpoint cell


class _Schema:
    def __init__(self, name: str, entity_kind: EntityKind,
                 columns: Sequence[Tuple[str, object, Role]],
                 required: Sequence[str]):
        self.name = name
        self.entity_kind = entity_kind
        self.columns: Dict[str, Tuple[object, Role]] = {
            c: (k, r) for c, k, r in columns
        }
        self.required = list(required)


_SCHEMAS: Dict[SourceKind, _Schema] = {
    SourceKind.MEMORY_ARTIFACT: _Schema(
        "memory", EntityKind.M,
        [
            ("process_name", AttributeKind.PROCESS_NAME, Role.NONE),
            ("protocol", AttributeKind.PROTOCOL, Role.NONE),
            ("local_address", _ADDR, Role.LOCAL),
            ("foreign_address", _ADDR, Role.FOREIGN),
            ("state", AttributeKind.CONNECTION_STATE, Role.NONE),
        ],
        required=["local_address"],
    ),
    SourceKind.NETWORK_LOG: _Schema(
        "network", EntityKind.NL,
        [
            ("timestamp", AttributeKind.TIMESTAMP, Role.CREATED),
            ("source_mac", AttributeKind.MAC, Role.SOURCE),
            ("destination_mac", AttributeKind.MAC, Role.DESTINATION),
            ("source_ip", AttributeKind.IPV4, Role.SOURCE),
            ("destination_ip", AttributeKind.IPV4, Role.DESTINATION),
            ("source_port", AttributeKind.PORT, Role.SOURCE),
            ("destination_port", AttributeKind.PORT, Role.DESTINATION),
            ("protocol", AttributeKind.PROTOCOL, Role.NONE),
            ("host", AttributeKind.HOST, Role.NONE),
            # Optional payload size; absent from plain packet-log exports.
            ("size", AttributeKind.FILE_SIZE, Role.NONE),
        ],
        required=["timestamp"],
    ),
    SourceKind.CLOUD_AUDIT: _Schema(
        "cloud", EntityKind.AI,
        [
            ("file_name", AttributeKind.FILE_NAME, Role.NONE),
            ("file_size", AttributeKind.FILE_SIZE, Role.NONE),
            ("created_by", "identity", Role.CREATED_BY),
            ("created_timestamp", AttributeKind.TIMESTAMP, Role.CREATED),
            ("accessed_by", "identity", Role.ACCESSED_BY),
            ("accessed_timestamp", AttributeKind.TIMESTAMP, Role.ACCESSED),
        ],
        required=["file_name"],
    ),
    SourceKind.SYSLOG: _Schema(
        "syslog", EntityKind.SLOG,
        [
            ("device_name", AttributeKind.DEVICE_NAME, Role.NONE),
            ("ip_address", AttributeKind.IPV4, Role.NONE),
            ("event_type", AttributeKind.EVENT_TYPE, Role.NONE),
            ("created_timestamp", AttributeKind.TIMESTAMP, Role.CREATED),
            ("accessed_by", "identity", Role.ACCESSED_BY),
            ("accessed_timestamp", AttributeKind.TIMESTAMP, Role.ACCESSED),
        ],
        required=["device_name"],
    ),
    SourceKind.FIREWALL_LOG: _Schema(
        "firewall", EntityKind.SLOG,
        [
            ("device_name", AttributeKind.DEVICE_NAME, Role.NONE),
            ("ip_address", AttributeKind.IPV4, Role.NONE),
            ("event_type", AttributeKind.EVENT_TYPE, Role.NONE),
            ("created_timestamp", AttributeKind.TIMESTAMP, Role.CREATED),
            ("accessed_by", "identity", Role.ACCESSED_BY),
            ("accessed_timestamp", AttributeKind.TIMESTAMP, Role.ACCESSED),
            ("action", AttributeKind.FREE_TEXT, Role.NONE),
        ],
        required=["device_name"],
    ),
}


def _schema_for(descriptor: SourceDescriptor,
                config: Optional[MappingConfig]) -> Tuple[_Schema, str]:
    """Pick the column schema and timestamp format for a source."""
    if config is not None:
        cols = [(m.column.strip().lower(), m.kind, m.role) for m in config.column_map]
        schema = _Schema("mapped", config.entity_kind, cols, required=[])
        return schema, config.timestamp_format
    if descriptor.source_kind == SourceKind.GENERIC_TABULAR:
        raise UnknownFormat(
            "generic_tabular sources need a MappingConfig; no built-in schema")
    return _SCHEMAS[descriptor.source_kind], nz.DEFAULT_TIMESTAMP_FORMAT


def _is_missing(cell: str) -> Optional[bool]:
    """None cell or empty -> silently absent; dash markers -> flagged absent."""
    if cell is None or cell.strip() == "":
        return None
    if cell.strip() in _MISSING_MARKERS:
        return True
    return False


def _build_attributes(cells: Dict[str, str], schema: _Schema, ts_format: str,
                      utc_offset: int):
    """Normalize one row's cells; returns (attributes, flagged_missing, soft_errors).

    Raises MalformedRow-style ValueError messages via the caller for required
    columns; soft failures on optional columns are reported, not fatal.
    """
    attrs: List[Attribute] = []
    flagged: List[str] = []
    soft: List[str] = []

    def push(kind: AttributeKind, role: Role, value, raw: str, column: str):
        attrs.append(Attribute(kind=kind, role=role, value=value,
                               raw_text=raw, column=column))

    for column, (kind, role) in schema.columns.items():
        raw = cells.get(column)
        missing = _is_missing(raw if raw is not None else None)
        if missing is None:
            if column in schema.required:
                raise ValueError(f"required column {column!r} is empty")
            continue
        if missing:
            flagged.append(column)
            if column in schema.required:
                raise ValueError(f"required column {column!r} is missing")
            continue
        raw = raw.strip()
        try:
            if kind == _ADDR:
                ip_text, _, svc_text = raw.partition(":")
                ip = nz.normalize_ipv4(ip_text)
                if ip is None:
                    raise ValueError(f"bad endpoint address {raw!r}")
                push(AttributeKind.IPV4, role, ip, raw, column)
                if svc_text:
                    port = nz.normalize_port(svc_text)
                    if port is None:
                        soft.append(f"unresolvable service name {svc_text!r} in {column}")
                    else:
                        push(AttributeKind.PORT, role, port, raw, column)
                        if not svc_text.strip().isdigit():
                            # Service-name endpoints also tell us the protocol.
                            push(AttributeKind.PROTOCOL, role,
                                 nz.normalize_protocol(svc_text), raw,
                                 column + "#service")
            elif kind == "identity":
                if "@" in raw:
                    push(AttributeKind.EMAIL, role, raw.lower(), raw, column)
                else:
                    push(AttributeKind.USERNAME, role, nz.normalize_identity(raw),
                         raw, column)
            else:
                value = nz.normalize_cell(kind, raw, ts_format, utc_offset)
                push(kind, role, value, raw, column)
        except Exception as exc:
            if column in schema.required:
                raise ValueError(str(exc)) from exc
            soft.append(f"column {column!r}: {exc}")
    return attrs, flagged, soft


def _split_lines(text: str) -> List[str]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def _csv_cells(line: str, header: List[str]) -> Dict[str, str]:
    row = next(csv.reader(io.StringIO(line)), [])
    return {header[i]: row[i] for i in range(min(len(header), len(row)))}


def parse_source(content: bytes, descriptor: SourceDescriptor,
                 config: Optional[MappingConfig] = None,
                 ) -> Tuple[List[EvidenceRecord], List[IngestWarning]]:
    """Parse a raw evidence export into normalized records plus warnings.

    Accepts CSV (header row) or line-per-record JSON. Rows that cannot be
    parsed are skipped with a warning carrying the 1-based line number;
    empty input yields an empty record list.
    """
    schema, ts_format = _schema_for(descriptor, config)
    text = content.decode("utf-8", errors="replace")
    lines = _split_lines(text)
    if not any(ln.strip() for ln in lines):
        return [], []

    first_data = next(ln for ln in lines if ln.strip())
    jsonl = first_data.lstrip().startswith("{")

    records: List[EvidenceRecord] = []
    warnings: List[IngestWarning] = []
    header: Optional[List[str]] = None

    for idx, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if not jsonl and header is None:
            try:
                header = [h.strip().lower() for h in
                          next(csv.reader(io.StringIO(line)), [])]
            except csv.Error as exc:
                raise UnknownFormat(f"unreadable header row: {exc}") from exc
            known = [h for h in header if h in schema.columns]
            if not known:
                raise UnknownFormat(
                    f"header {header!r} shares no columns with the "
                    f"{schema.name} schema")
            continue

        if jsonl:
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("record line is not a JSON object")
                cells = {str(k).strip().lower(): ("" if v is None else str(v))
                         for k, v in obj.items()}
            except Exception as exc:
                warnings.append(IngestWarning(idx, f"malformed row: {exc}"))
                continue
        else:
            try:
                cells = _csv_cells(line, header)
            except csv.Error as exc:
                warnings.append(IngestWarning(idx, f"malformed row: {exc}"))
                continue

        try:
            attrs, flagged, soft = _build_attributes(
                cells, schema, ts_format, descriptor.utc_offset_minutes)
        except ValueError as exc:
            warnings.append(IngestWarning(idx, f"malformed row: {exc}"))
            continue
        if not attrs:
            warnings.append(IngestWarning(idx, "malformed row: no usable cells"))
            continue
        if flagged or soft:
            bits = []
            if flagged:
                bits.append("missing " + ", ".join(flagged))
            bits.extend(soft)
            warnings.append(IngestWarning(idx, "; ".join(bits)))
        records.append(EvidenceRecord(
            record_id=make_record_id(descriptor.source_id, idx, line),
            source_id=descriptor.source_id,
            entity_kind=schema.entity_kind,
            attributes=tuple(attrs),
            raw_line=line,
            line_number=idx,
        ))
    return records, warnings


def mapping_config_from_dict(doc: dict) -> MappingConfig:
    """Load a MappingConfig from its JSON document form."""
    cols = tuple(
        ColumnMapping(column=c["column"],
                      kind=AttributeKind(c["kind"]),
                      role=Role(c.get("role", "none")))
        for c in doc["column_map"]
    )
    return MappingConfig(
        column_map=cols,
        entity_kind=EntityKind(doc.get("entity_kind", "generic")),
        timestamp_format=doc.get("timestamp_format", nz.DEFAULT_TIMESTAMP_FORMAT),
    )
