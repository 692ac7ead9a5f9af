"""The unified property graph for one case.

Entity nodes carry one ingested evidence record each; attribute nodes are
first-class (cross-match edges connect attributes of different entities).
Nothing is ever deleted: exclusion is a soft flag, rejected edges stay.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .normalize import render_value
from .types import (
    Attribute,
    AttributeKind,
    DuplicateRecord,
    EntityKind,
    EvidenceRecord,
    Role,
    SourceDescriptor,
    SourceKind,
    UnknownEdge,
    UnknownNode,
    make_attribute_node_id,
    make_edge_id,
    make_entity_node_id,
)

EDGE_STAGE_AUTO = "refine1_auto"
EDGE_STAGE_MANUAL = "refine2_manual"

EDGE_PROPOSED = "proposed"
EDGE_CONFIRMED = "confirmed"
EDGE_REJECTED = "rejected"


@dataclass
class EntityNode:
    node_id: str
    entity_kind: EntityKind
    record_id: str
    source_id: str
    excluded: bool = False
    annotations: List[str] = field(default_factory=list)


@dataclass
class AttributeNode:
    node_id: str
    owner: str  # entity node id
    kind: AttributeKind
    role: Role
    value: object
    raw_text: str
    column: str
    excluded: bool = False


@dataclass
class CrossMatchEdge:
    edge_id: str
    endpoints: Tuple[str, str]  # attribute node ids, stored sorted
    rule_id: Optional[str]
    stage: str
    status: str
    created_by: str = "system"
    note: str = ""

    def key(self) -> Tuple[str, str, Optional[str]]:
        return (self.endpoints[0], self.endpoints[1], self.rule_id)


class CaseGraph:
    """Mutable per-case graph; every mutation bumps `version` by one."""

    def __init__(self, case_id: str):
        self.case_id = case_id
        self.version = 0
        self.sources: Dict[str, SourceDescriptor] = {}
        self.records: Dict[str, EvidenceRecord] = {}
        self.entities: Dict[str, EntityNode] = {}
        self.attributes: Dict[str, AttributeNode] = {}
        self.edges: Dict[str, CrossMatchEdge] = {}
        # (endpoints, rule_id) -> edge_id; enforces at-most-one edge per key
        self._edge_keys: Dict[Tuple[str, str, Optional[str]], str] = {}
        # (kind, value) -> attribute node ids; the exact-match probe index
        self._value_index: Dict[Tuple[AttributeKind, object], Set[str]] = {}

    # -- construction ------------------------------------------------------

    def register_source(self, descriptor: SourceDescriptor) -> None:
        self.sources[descriptor.source_id] = descriptor
        self.version += 1

    def add_records(self, records: Iterable[EvidenceRecord],
                    skip_duplicates: bool = False) -> Tuple[int, int]:
        """Materialize entity + attribute nodes for parsed records.

        Returns (added, duplicates). Raises DuplicateRecord unless the
        caller opted into idempotent re-ingestion.
        """
        added = dupes = 0
        for rec in records:
            if rec.source_id not in self.sources:
                raise UnknownNode(f"record references unknown source {rec.source_id}")
            if rec.record_id in self.records:
                if not skip_duplicates:
                    raise DuplicateRecord(rec.record_id)
                dupes += 1
                continue
            self.records[rec.record_id] = rec
            eid = make_entity_node_id(rec.record_id)
            self.entities[eid] = EntityNode(
                node_id=eid, entity_kind=rec.entity_kind,
                record_id=rec.record_id, source_id=rec.source_id)
            for attr in rec.attributes:
                self._add_attribute_node(eid, rec.record_id, attr)
            added += 1
        self.version += 1
        return added, dupes

    def _add_attribute_node(self, entity_id: str, record_id: str,
                            attr: Attribute) -> AttributeNode:
        aid = make_attribute_node_id(record_id, attr.column, attr.kind, attr.role)
        node = AttributeNode(
            node_id=aid, owner=entity_id, kind=attr.kind, role=attr.role,
            value=attr.value, raw_text=attr.raw_text, column=attr.column)
        self.attributes[aid] = node
        self._value_index.setdefault((attr.kind, attr.value), set()).add(aid)
        return node

    def add_derived_attribute(self, entity_id: str, attr: Attribute) -> AttributeNode:
        """Attach an enrichment-derived attribute to an existing entity."""
        entity = self.entity(entity_id)
        node = self._add_attribute_node(entity.node_id, entity.record_id, attr)
        self.version += 1
        return node

    # -- lookup ------------------------------------------------------------

    def entity(self, node_id: str) -> EntityNode:
        try:
            return self.entities[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def attribute(self, node_id: str) -> AttributeNode:
        try:
            return self.attributes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def node_excluded(self, attr: AttributeNode) -> bool:
        return attr.excluded or self.entities[attr.owner].excluded

    def attributes_of(self, entity_id: str) -> List[AttributeNode]:
        self.entity(entity_id)
        return [a for a in self.attributes.values() if a.owner == entity_id]

    def attribute_index_lookup(self, kind: AttributeKind, value,
                               role: Optional[Role] = None) -> Set[str]:
        """Attribute nodes whose normalized value equals the probe.

        For timestamps the probe may be a closed [lo, hi] range.
        """
        if kind == AttributeKind.TIMESTAMP and isinstance(value, (tuple, list)):
            lo, hi = value
            hits = {
                aid for (k, v), ids in self._value_index.items()
                if k == kind and lo <= v <= hi for aid in ids
            }
        else:
            hits = set(self._value_index.get((kind, value), ()))
        if role is not None:
            hits = {aid for aid in hits if self.attributes[aid].role == role}
        return hits

    # -- exclusion ---------------------------------------------------------

    def _any_node(self, node_id: str):
        node = self.entities.get(node_id) or self.attributes.get(node_id)
        if node is None:
            raise UnknownNode(node_id)
        return node

    def exclude_node(self, node_id: str) -> None:
        self._any_node(node_id).excluded = True
        self.version += 1

    def include_node(self, node_id: str) -> None:
        self._any_node(node_id).excluded = False
        self.version += 1

    def annotate(self, node_id: str, note: str) -> None:
        node = self._any_node(node_id)
        if isinstance(node, EntityNode):
            node.annotations.append(note)
        else:
            self.entities[node.owner].annotations.append(f"[{node_id}] {note}")
        self.version += 1

    # -- edges -------------------------------------------------------------

    def edge(self, edge_id: str) -> CrossMatchEdge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownEdge(edge_id) from None

    def edge_for_key(self, a: str, b: str,
                     rule_id: Optional[str]) -> Optional[CrossMatchEdge]:
        lo, hi = sorted((a, b))
        eid = self._edge_keys.get((lo, hi, rule_id))
        return self.edges.get(eid) if eid else None

    def put_edge(self, edge: CrossMatchEdge) -> None:
        lo, hi = edge.endpoints
        assert lo <= hi, "edge endpoints must be stored sorted"
        self.edges[edge.edge_id] = edge
        self._edge_keys[edge.key()] = edge.edge_id
        self.version += 1

    def visible_edges(self, statuses: Iterable[str]) -> List[CrossMatchEdge]:
        """Edges in the given statuses whose endpoints are not excluded."""
        wanted = set(statuses)
        out = []
        for e in self.edges.values():
            if e.status not in wanted:
                continue
            a, b = (self.attributes[x] for x in e.endpoints)
            if self.node_excluded(a) or self.node_excluded(b):
                continue
            out.append(e)
        return out

    # -- export ------------------------------------------------------------

    def export_document(self) -> dict:
        """The graph document consumed by the workbench UI and the CLI."""
        nodes = []
        for ent in self.entities.values():
            rec = self.records[ent.record_id]
            nodes.append({
                "id": ent.node_id,
                "node_type": "entity",
                "label": ent.entity_kind.value,
                "kind": ent.entity_kind.value,
                "role": None,
                "value": None,
                "excluded": ent.excluded,
                "source_id": ent.source_id,
                "record_id": ent.record_id,
                "line_number": rec.line_number,
                "annotations": list(ent.annotations),
            })
        for attr in self.attributes.values():
            nodes.append({
                "id": attr.node_id,
                "node_type": "attribute",
                "label": render_value(attr.kind, attr.value),
                "kind": attr.kind.value,
                "role": attr.role.value,
                "value": attr.value,
                "raw_text": attr.raw_text,
                "excluded": attr.excluded,
                "owner": attr.owner,
            })
        edges = [{
            "id": e.edge_id,
            "endpoints": list(e.endpoints),
            "rule_id": e.rule_id,
            "stage": e.stage,
            "status": e.status,
            "created_by": e.created_by,
            "note": e.note,
        } for e in self.edges.values()]
        nodes.sort(key=lambda n: n["id"])
        edges.sort(key=lambda e: e["id"])
        return {
            "case_id": self.case_id,
            "version": self.version,
            "nodes": nodes,
            "edges": edges,
        }

    # -- full state (snapshots) -------------------------------------------

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "version": self.version,
            "sources": [_source_to_dict(s) for s in self.sources.values()],
            "records": [_record_to_dict(r) for r in self.records.values()],
            "entities": [
                {"node_id": e.node_id, "entity_kind": e.entity_kind.value,
                 "record_id": e.record_id, "source_id": e.source_id,
                 "excluded": e.excluded, "annotations": e.annotations}
                for e in self.entities.values()
            ],
            "attributes": [
                {"node_id": a.node_id, "owner": a.owner, "kind": a.kind.value,
                 "role": a.role.value, "value": a.value, "raw_text": a.raw_text,
                 "column": a.column, "excluded": a.excluded}
                for a in self.attributes.values()
            ],
            "edges": [
                {"edge_id": e.edge_id, "endpoints": list(e.endpoints),
                 "rule_id": e.rule_id, "stage": e.stage, "status": e.status,
                 "created_by": e.created_by, "note": e.note}
                for e in self.edges.values()
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CaseGraph":
        g = cls(doc["case_id"])
        for s in doc["sources"]:
            g.sources[s["source_id"]] = _source_from_dict(s)
        for r in doc["records"]:
            rec = _record_from_dict(r)
            g.records[rec.record_id] = rec
        for e in doc["entities"]:
            g.entities[e["node_id"]] = EntityNode(
                node_id=e["node_id"], entity_kind=EntityKind(e["entity_kind"]),
                record_id=e["record_id"], source_id=e["source_id"],
                excluded=e["excluded"], annotations=list(e["annotations"]))
        for a in doc["attributes"]:
            node = AttributeNode(
                node_id=a["node_id"], owner=a["owner"],
                kind=AttributeKind(a["kind"]), role=Role(a["role"]),
                value=a["value"], raw_text=a["raw_text"], column=a["column"],
                excluded=a["excluded"])
            g.attributes[node.node_id] = node
            g._value_index.setdefault((node.kind, node.value), set()).add(node.node_id)
        for e in doc["edges"]:
            edge = CrossMatchEdge(
                edge_id=e["edge_id"], endpoints=tuple(e["endpoints"]),
                rule_id=e["rule_id"], stage=e["stage"], status=e["status"],
                created_by=e["created_by"], note=e["note"])
            g.edges[edge.edge_id] = edge
            g._edge_keys[edge.key()] = edge.edge_id
        g.version = doc["version"]
        return g


def build_graph(case_id: str, sources: Iterable[SourceDescriptor],
                records: Iterable[EvidenceRecord]) -> CaseGraph:
    """Fresh graph from parsed records: entities + attributes, no matches yet."""
    g = CaseGraph(case_id)
    for s in sources:
        g.register_source(s)
    g.add_records(records)
    return g


def _source_to_dict(s: SourceDescriptor) -> dict:
    return {
        "source_id": s.source_id, "source_kind": s.source_kind.value,
        "display_name": s.display_name, "ingested_at": s.ingested_at,
        "original_uri": s.original_uri,
        "utc_offset_minutes": s.utc_offset_minutes,
    }


def _source_from_dict(d: dict) -> SourceDescriptor:
    return SourceDescriptor(
        source_id=d["source_id"], source_kind=SourceKind(d["source_kind"]),
        display_name=d["display_name"], ingested_at=d["ingested_at"],
        original_uri=d["original_uri"],
        utc_offset_minutes=d.get("utc_offset_minutes", 0))


def _record_to_dict(r: EvidenceRecord) -> dict:
    return {
        "record_id": r.record_id, "source_id": r.source_id,
        "entity_kind": r.entity_kind.value,
        "attributes": [
            {"kind": a.kind.value, "role": a.role.value, "value": a.value,
             "raw_text": a.raw_text, "column": a.column}
            for a in r.attributes
        ],
        "raw_line": r.raw_line, "line_number": r.line_number,
    }


def _record_from_dict(d: dict) -> EvidenceRecord:
    return EvidenceRecord(
        record_id=d["record_id"], source_id=d["source_id"],
        entity_kind=EntityKind(d["entity_kind"]),
        attributes=tuple(
            Attribute(kind=AttributeKind(a["kind"]), role=Role(a["role"]),
                      value=a["value"], raw_text=a["raw_text"],
                      column=a["column"])
            for a in d["attributes"]
        ),
        raw_line=d["raw_line"], line_number=d["line_number"])
