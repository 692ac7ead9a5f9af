"""Cross-evidence analytics over a harmonised case graph.

All functions here are read-only over a graph snapshot. Excluded nodes and
rejected edges never contribute; proposed edges are opt-in for link analysis.
"""

from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .graph import EDGE_CONFIRMED, EDGE_PROPOSED, AttributeNode, CaseGraph
from .normalize import (
    format_date,
    format_time,
    normalize_identity,
    normalize_ipv4,
)
from .types import (
    AttributeKind,
    BadProbe,
    BadWindow,
    Role,
    SourceKind,
    UnknownNode,
)

TIMELINE_CSV_HEADER = "date,time,timestamp_attribute,category,type,attribute,value,metadata_source"


@dataclass(frozen=True)
class TimelineEvent:
    epoch: int
    date: str
    time: str
    timestamp_attribute: str  # Created / Accessed
    category: str
    type: str
    attribute: str
    value: str
    metadata_source: str
    entity_id: str = ""
    attribute_node_id: str = ""

    def row(self) -> List[str]:
        return [self.date, self.time, self.timestamp_attribute, self.category,
                self.type, self.attribute, self.value, self.metadata_source]


@dataclass(frozen=True)
class ClassificationEntry:
    source_kind: SourceKind
    event_type: Optional[str]  # normalized; None = rows without an event type
    category: str
    type: str
    attribute_kind: AttributeKind
    attribute_label: str
    source_label: str
    attribute_role: Optional[Role] = None


class ClassificationMap:
    """Maps (source kind, event type) to timeline category/type/salient attribute."""

    def __init__(self, entries: Sequence[ClassificationEntry]):
        self._entries = {(e.source_kind, e.event_type): e for e in entries}

    def lookup(self, source_kind: SourceKind,
               event_type: Optional[str]) -> Optional[ClassificationEntry]:
        return (self._entries.get((source_kind, event_type))
                or self._entries.get((source_kind, None)))

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassificationMap":
        entries = []
        for e in doc["entries"]:
            entries.append(ClassificationEntry(
                source_kind=SourceKind(e["source_kind"]),
                event_type=e.get("event_type"),
                category=e["category"],
                type=e["type"],
                attribute_kind=AttributeKind(e["attribute_kind"]),
                attribute_label=e["attribute_label"],
                source_label=e["source_label"],
                attribute_role=Role(e["attribute_role"]) if e.get("attribute_role") else None,
            ))
        return cls(entries)

    @classmethod
    def load(cls, path) -> "ClassificationMap":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def default_classification_map() -> ClassificationMap:
    with resources.files("evigraph.data").joinpath("classification_map.json").open("r") as fh:
        return ClassificationMap.from_dict(json.load(fh))


# --------------------------------------------------------------------------
# Timeline analysis


def _role_label(role: Role) -> str:
    if role in (Role.ACCESSED, Role.ACCESSED_BY):
        return "Accessed"
    return "Created"


def build_timeline(graph: CaseGraph,
                   window: Optional[Tuple[int, int]] = None,
                   classification: Optional[ClassificationMap] = None,
                   ) -> List[TimelineEvent]:
    """One chronological event per non-excluded timestamp attribute.

    Ties are broken by (source_id, record_id) so the output is deterministic.
    """
    if window is not None and window[0] > window[1]:
        raise BadWindow(f"window lo {window[0]} > hi {window[1]}")
    cmap = classification or default_classification_map()

    events: List[Tuple[int, str, str, TimelineEvent]] = []
    for attr in graph.attributes.values():
        if attr.kind != AttributeKind.TIMESTAMP or graph.node_excluded(attr):
            continue
        epoch = int(attr.value)
        if window is not None and not (window[0] <= epoch <= window[1]):
            continue
        entity = graph.entities[attr.owner]
        source = graph.sources[entity.source_id]
        siblings = [a for a in graph.attributes.values() if a.owner == entity.node_id]
        event_type = next(
            (str(a.value) for a in siblings if a.kind == AttributeKind.EVENT_TYPE),
            None)
        entry = cmap.lookup(source.source_kind, event_type)
        if entry is not None:
            salient = next(
                (a for a in siblings
                 if a.kind == entry.attribute_kind
                 and (entry.attribute_role is None or a.role == entry.attribute_role)),
                None)
            category, etype = entry.category, entry.type
            attribute_label = entry.attribute_label
            source_label = entry.source_label
        else:
            salient = next((a for a in siblings if a.kind != AttributeKind.TIMESTAMP),
                           None)
            category = source.source_kind.value
            etype = event_type or "Event"
            attribute_label = salient.kind.value if salient else ""
            source_label = source.display_name
        events.append((
            epoch, entity.source_id, entity.record_id,
            TimelineEvent(
                epoch=epoch,
                date=format_date(epoch),
                time=format_time(epoch),
                timestamp_attribute=_role_label(attr.role),
                category=category,
                type=etype,
                attribute=attribute_label,
                value=salient.raw_text if salient else "",
                metadata_source=source_label,
                entity_id=entity.node_id,
                attribute_node_id=attr.node_id,
            )))
    events.sort(key=lambda t: (t[0], t[1], t[2]))
    return [e for _, _, _, e in events]


def timeline_csv(events: Iterable[TimelineEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TIMELINE_CSV_HEADER.split(","))
    for ev in events:
        writer.writerow(ev.row())
    return buf.getvalue()


# --------------------------------------------------------------------------
# Link analysis


@dataclass(frozen=True)
class LinkPath:
    """Alternating node/edge id sequence between two entities."""

    elements: Tuple[str, ...]  # node ids (entities + attributes), in order
    edge_ids: Tuple[str, ...]  # cross-match edges used, in order
    hop_count: int             # number of cross-match hops


def _adjacency(graph: CaseGraph, include_proposed: bool):
    """entity -> [(neighbor entity, via-attr, via-attr, edge_id)]"""
    statuses = [EDGE_CONFIRMED] + ([EDGE_PROPOSED] if include_proposed else [])
    adj: Dict[str, List[Tuple[str, str, str, str]]] = {}
    for edge in graph.visible_edges(statuses):
        a, b = (graph.attributes[x] for x in edge.endpoints)
        adj.setdefault(a.owner, []).append((b.owner, a.node_id, b.node_id, edge.edge_id))
        adj.setdefault(b.owner, []).append((a.owner, b.node_id, a.node_id, edge.edge_id))
    return adj


def find_links(graph: CaseGraph, from_entity: str, to_entity: str,
               max_hops: int = 6, include_proposed: bool = False,
               max_paths: int = 1000) -> List[LinkPath]:
    """All simple entity paths (by cross-match hops), shortest first."""
    src = graph.entity(from_entity)
    dst = graph.entity(to_entity)
    if src.excluded or dst.excluded:
        raise UnknownNode("endpoint entity is excluded")
    if from_entity == to_entity:
        return [LinkPath(elements=(from_entity,), edge_ids=(), hop_count=0)]

    adj = _adjacency(graph, include_proposed)
    results: List[LinkPath] = []

    def dfs(current: str, visited: Set[str], elements: List[str],
            edge_ids: List[str], hops: int):
        if len(results) >= max_paths or hops >= max_hops:
            return
        for (nbr, attr_here, attr_there, edge_id) in adj.get(current, ()):  # noqa: B020
            if nbr in visited:
                continue
            path_elements = elements + [attr_here, attr_there, nbr]
            path_edges = edge_ids + [edge_id]
            if nbr == to_entity:
                results.append(LinkPath(tuple(path_elements), tuple(path_edges),
                                        hops + 1))
                if len(results) >= max_paths:
                    return
            else:
                dfs(nbr, visited | {nbr}, path_elements, path_edges, hops + 1)

    dfs(from_entity, {from_entity}, [from_entity], [], 0)
    results.sort(key=lambda p: (p.hop_count, p.elements))
    return results


def connected_components(graph: CaseGraph,
                         include_proposed: bool = False) -> Dict[str, int]:
    """Entity -> component id over non-excluded cross-match connectivity."""
    adj = _adjacency(graph, include_proposed)
    comp: Dict[str, int] = {}
    next_id = 0
    for ent in sorted(graph.entities):
        if ent in comp or graph.entities[ent].excluded:
            continue
        queue = deque([ent])
        comp[ent] = next_id
        while queue:
            cur = queue.popleft()
            for (nbr, *_rest) in adj.get(cur, ()):
                if nbr not in comp:
                    comp[nbr] = next_id
                    queue.append(nbr)
        next_id += 1
    return comp


# --------------------------------------------------------------------------
# Correlation analysis


@dataclass
class CorrelationMatrix:
    """Cross-source edge counts, keyed by unordered source pairs."""

    counts: Dict[Tuple[str, str], Dict[str, int]] = field(default_factory=dict)

    def count(self, source_a: str, source_b: str, status: str = EDGE_CONFIRMED) -> int:
        key = tuple(sorted((source_a, source_b)))
        return self.counts.get(key, {}).get(status, 0)

    def to_dict(self) -> dict:
        return {
            f"{a}|{b}": dict(c) for (a, b), c in sorted(self.counts.items())
        }


def correlate_sources(graph: CaseGraph) -> CorrelationMatrix:
    matrix = CorrelationMatrix()
    for edge in graph.visible_edges([EDGE_CONFIRMED, EDGE_PROPOSED]):
        a, b = (graph.attributes[x] for x in edge.endpoints)
        sa = graph.entities[a.owner].source_id
        sb = graph.entities[b.owner].source_id
        if sa == sb:
            continue  # diagonal stays zero
        key = tuple(sorted((sa, sb)))
        matrix.counts.setdefault(key, {EDGE_CONFIRMED: 0, EDGE_PROPOSED: 0})
        matrix.counts[key][edge.status] += 1
    return matrix


# --------------------------------------------------------------------------
# Built-in queries


@dataclass(frozen=True)
class QueryHit:
    entity_id: str
    entity_kind: str
    matched_attributes: Tuple[str, ...]  # attribute node ids


_PROBE_KINDS = {"username", "ip", "email", "keyword", "time_window", "geolocation"}


def query(graph: CaseGraph, probe_kind: str, value) -> List[QueryHit]:
    """Built-in searches; results carry matched attributes for highlighting."""
    if probe_kind not in _PROBE_KINDS:
        raise BadProbe(f"unknown probe kind {probe_kind!r}")

    hits: Dict[str, Set[str]] = {}

    def add(attr: AttributeNode):
        if graph.node_excluded(attr):
            return
        hits.setdefault(attr.owner, set()).add(attr.node_id)

    if probe_kind == "username":
        try:
            needle = normalize_identity(str(value))
        except Exception as exc:
            raise BadProbe(str(exc)) from exc
        for aid in graph.attribute_index_lookup(AttributeKind.USERNAME, needle):
            add(graph.attributes[aid])
    elif probe_kind == "ip":
        needle = normalize_ipv4(str(value))
        if needle is None:
            raise BadProbe(f"bad ip probe {value!r}")
        for aid in graph.attribute_index_lookup(AttributeKind.IPV4, needle):
            add(graph.attributes[aid])
    elif probe_kind == "email":
        needle = str(value).strip().lower()
        if "@" not in needle:
            raise BadProbe(f"bad email probe {value!r}")
        for aid in graph.attribute_index_lookup(AttributeKind.EMAIL, needle):
            add(graph.attributes[aid])
    elif probe_kind == "keyword":
        needle = str(value).strip().lower()
        if not needle:
            raise BadProbe("empty keyword")
        for attr in graph.attributes.values():
            if needle in attr.raw_text.lower():
                add(attr)
    elif probe_kind == "time_window":
        try:
            lo, hi = int(value[0]), int(value[1])
        except Exception as exc:
            raise BadProbe(f"bad time window {value!r}") from exc
        if lo > hi:
            raise BadProbe(f"window lo {lo} > hi {hi}")
        for aid in graph.attribute_index_lookup(AttributeKind.TIMESTAMP, (lo, hi)):
            add(graph.attributes[aid])
    else:  # geolocation
        needle = str(value).strip()
        if not needle:
            raise BadProbe("empty geolocation probe")
        for aid in graph.attribute_index_lookup(AttributeKind.GEOLOCATION, needle):
            add(graph.attributes[aid])

    out = []
    for entity_id in sorted(hits):
        ent = graph.entities[entity_id]
        if ent.excluded:
            continue
        out.append(QueryHit(entity_id=entity_id,
                            entity_kind=ent.entity_kind.value,
                            matched_attributes=tuple(sorted(hits[entity_id]))))
    return out


def group_by_geolocation(graph: CaseGraph) -> Dict[str, List[str]]:
    """Entities bucketed by exact geolocation value; the rest are "unlocated"."""
    buckets: Dict[str, Set[str]] = {}
    located: Set[str] = set()
    for attr in graph.attributes.values():
        if attr.kind != AttributeKind.GEOLOCATION or graph.node_excluded(attr):
            continue
        buckets.setdefault(str(attr.value), set()).add(attr.owner)
        located.add(attr.owner)
    unlocated = {
        eid for eid, ent in graph.entities.items()
        if not ent.excluded and eid not in located
    }
    out = {k: sorted(v) for k, v in sorted(buckets.items())}
    if unlocated:
        out["unlocated"] = sorted(unlocated)
    return out
