"""Knowledge-warehouse rule engine: automatic cross-matching (Refine 1),
investigator actions (Refine 2), enrichment, and advisory validation.

The matcher is index-backed (hash buckets for equality rules, sorted window
scan for tolerance rules) but its contract is exactly the all-pairs
evaluation; the test suite holds it to that oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .graph import (
    EDGE_CONFIRMED,
    EDGE_PROPOSED,
    EDGE_REJECTED,
    EDGE_STAGE_AUTO,
    EDGE_STAGE_MANUAL,
    AttributeNode,
    CaseGraph,
    CrossMatchEdge,
)
from .types import (
    Attribute,
    AttributeKind,
    BadEnrichment,
    DuplicateEdge,
    IllegalTransition,
    NUMERIC_KINDS,
    Role,
    SelfMatch,
    make_edge_id,
)


class Comparator(str, Enum):
    EXACT_EQUAL = "exact_equal"
    WITHIN_TOLERANCE = "within_tolerance"
    ALIAS_EQUAL = "alias_equal"


@dataclass(frozen=True)
class MatchRule:
    rule_id: str
    name: str
    kind_pair: Tuple[AttributeKind, AttributeKind]
    comparator: Comparator
    tolerance: Optional[float] = None
    alias_table: Optional[Dict[str, str]] = None
    role_pair: Optional[Tuple[Role, Role]] = None  # None = any roles
    enabled: bool = True

    def __post_init__(self):
        if self.tolerance is not None and self.tolerance < 0:
            raise ValueError(f"rule {self.rule_id}: tolerance must be >= 0")
        if self.comparator == Comparator.WITHIN_TOLERANCE:
            if not set(self.kind_pair) <= NUMERIC_KINDS:
                raise ValueError(
                    f"rule {self.rule_id}: tolerance comparison needs numeric kinds")
            if self.tolerance is None:
                raise ValueError(f"rule {self.rule_id}: tolerance missing")
        if self.comparator == Comparator.ALIAS_EQUAL and self.alias_table is None:
            raise ValueError(f"rule {self.rule_id}: alias_equal needs an alias_table")

    def canonical(self, value):
        if self.comparator == Comparator.ALIAS_EQUAL:
            return self.alias_table.get(value, value)
        return value

    def values_match(self, a, b) -> bool:
        if self.comparator == Comparator.EXACT_EQUAL:
            return a == b
        if self.comparator == Comparator.WITHIN_TOLERANCE:
            return abs(int(a) - int(b)) <= self.tolerance
        return self.canonical(a) == self.canonical(b)


def rule_from_dict(doc: dict) -> MatchRule:
    return MatchRule(
        rule_id=doc["rule_id"],
        name=doc.get("name", doc["rule_id"]),
        kind_pair=(AttributeKind(doc["kind_pair"][0]),
                   AttributeKind(doc["kind_pair"][1])),
        comparator=Comparator(doc["comparator"]),
        tolerance=doc.get("tolerance"),
        alias_table=doc.get("alias_table"),
        role_pair=tuple(Role(r) for r in doc["role_pair"]) if doc.get("role_pair") else None,
        enabled=doc.get("enabled", True),
    )


def load_rules(path) -> List[MatchRule]:
    with open(path, "r", encoding="utf-8") as fh:
        return [rule_from_dict(d) for d in json.load(fh)]


def default_rules() -> List[MatchRule]:
    """The bundled knowledge-warehouse rule set (port matching ships disabled)."""
    with resources.files("evigraph.data").joinpath("default_rules.json").open("r") as fh:
        return [rule_from_dict(d) for d in json.load(fh)]


# --------------------------------------------------------------------------
# Refine 1: automatic proposals


def _rule_candidates(graph: CaseGraph, rule: MatchRule) -> List[Tuple[str, str]]:
    """Matching attribute-node pairs for one rule (sorted id pairs)."""
    ka, kb = rule.kind_pair

    def eligible(kind: AttributeKind) -> List[AttributeNode]:
        return [
            a for a in graph.attributes.values()
            if a.kind == kind and not graph.node_excluded(a)
        ]

    def roles_ok(a: AttributeNode, b: AttributeNode) -> bool:
        if rule.role_pair is None:
            return True
        return {a.role, b.role} == set(rule.role_pair) or \
            (a.role, b.role) == rule.role_pair or (b.role, a.role) == rule.role_pair

    pairs = set()

    def emit(a: AttributeNode, b: AttributeNode):
        if a.owner == b.owner:
            return
        if not roles_ok(a, b):
            return
        pairs.add(tuple(sorted((a.node_id, b.node_id))))

    if rule.comparator == Comparator.WITHIN_TOLERANCE:
        nodes = eligible(ka) + (eligible(kb) if kb != ka else [])
        nodes.sort(key=lambda n: (int(n.value), n.node_id))
        tol = rule.tolerance
        for i, a in enumerate(nodes):
            for b in nodes[i + 1:]:
                if int(b.value) - int(a.value) > tol:
                    break
                if {a.kind, b.kind} == {ka, kb} or (ka == kb and a.kind == ka == b.kind):
                    emit(a, b)
    else:
        buckets: Dict[object, Tuple[List[AttributeNode], List[AttributeNode]]] = {}
        for node in eligible(ka):
            buckets.setdefault(rule.canonical(node.value), ([], []))[0].append(node)
        if kb == ka:
            for left, _ in buckets.values():
                for i, a in enumerate(left):
                    for b in left[i + 1:]:
                        emit(a, b)
        else:
            for node in eligible(kb):
                if rule.canonical(node.value) in buckets:
                    buckets[rule.canonical(node.value)][1].append(node)
            for left, right in buckets.values():
                for a in left:
                    for b in right:
                        emit(a, b)
    return sorted(pairs)


def propose_matches(graph: CaseGraph,
                    rules: Sequence[MatchRule]) -> List[CrossMatchEdge]:
    """Pure: the proposed edges refine1 would add to this graph snapshot.

    Pairs that already hold an edge for the same rule (whatever its status)
    are untouched, so recomputation is idempotent and never re-argues a
    rejection with the examiner.
    """
    proposals: List[CrossMatchEdge] = []
    for rule in rules:
        if not rule.enabled:
            continue
        for a_id, b_id in _rule_candidates(graph, rule):
            if graph.edge_for_key(a_id, b_id, rule.rule_id) is not None:
                continue
            proposals.append(CrossMatchEdge(
                edge_id=make_edge_id(a_id, b_id, rule.rule_id),
                endpoints=tuple(sorted((a_id, b_id))),
                rule_id=rule.rule_id,
                stage=EDGE_STAGE_AUTO,
                status=EDGE_PROPOSED,
                created_by="system",
            ))
    return proposals


def refine1(graph: CaseGraph, rules: Sequence[MatchRule]) -> List[CrossMatchEdge]:
    """Apply automatic cross-matching; returns the newly proposed edges."""
    proposals = propose_matches(graph, rules)
    for edge in proposals:
        graph.put_edge(edge)
    return proposals


def brute_force_matches(graph: CaseGraph,
                        rules: Sequence[MatchRule]) -> set:
    """All-pairs oracle: the full (endpoint-pair, rule) match set.

    Deliberately quadratic and index-free; the reference the indexed
    matcher is tested against. Includes pairs that already hold edges.
    """
    out = set()
    attrs = [a for a in graph.attributes.values() if not graph.node_excluded(a)]
    for rule in rules:
        if not rule.enabled:
            continue
        ka, kb = rule.kind_pair
        for i, a in enumerate(attrs):
            for b in attrs[i + 1:]:
                if a.owner == b.owner:
                    continue
                if {a.kind, b.kind} != {ka, kb}:
                    continue
                if rule.role_pair is not None:
                    ra, rb = rule.role_pair
                    if not ((a.role, b.role) == (ra, rb) or (b.role, a.role) == (ra, rb)):
                        continue
                if rule.values_match(a.value, b.value):
                    lo, hi = sorted((a.node_id, b.node_id))
                    out.add((lo, hi, rule.rule_id))
    return out


# --------------------------------------------------------------------------
# Refine 2: investigator actions


def confirm_edge(graph: CaseGraph, edge_id: str) -> CrossMatchEdge:
    edge = graph.edge(edge_id)
    if edge.status != EDGE_PROPOSED:
        raise IllegalTransition(f"cannot confirm edge in status {edge.status}")
    edge.status = EDGE_CONFIRMED
    graph.version += 1
    return edge


def reject_edge(graph: CaseGraph, edge_id: str) -> CrossMatchEdge:
    edge = graph.edge(edge_id)
    if edge.status != EDGE_PROPOSED:
        raise IllegalTransition(f"cannot reject edge in status {edge.status}")
    edge.status = EDGE_REJECTED
    graph.version += 1
    return edge


def reset_edge(graph: CaseGraph, edge_id: str) -> CrossMatchEdge:
    """Explicit investigator reset; the only path out of `rejected`."""
    edge = graph.edge(edge_id)
    if edge.status not in (EDGE_REJECTED, EDGE_CONFIRMED):
        raise IllegalTransition(f"cannot reset edge in status {edge.status}")
    edge.status = EDGE_PROPOSED
    graph.version += 1
    return edge


def add_manual_edge(graph: CaseGraph, attr_a: str, attr_b: str,
                    note: str = "", actor: str = "investigator") -> CrossMatchEdge:
    """Investigator-authored edge; born confirmed."""
    a = graph.attribute(attr_a)
    b = graph.attribute(attr_b)
    if a.owner == b.owner:
        raise SelfMatch("both attributes belong to the same entity")
    if graph.edge_for_key(attr_a, attr_b, None) is not None:
        raise DuplicateEdge(f"manual edge {attr_a}--{attr_b} already exists")
    edge = CrossMatchEdge(
        edge_id=make_edge_id(attr_a, attr_b, None),
        endpoints=tuple(sorted((attr_a, attr_b))),
        rule_id=None,
        stage=EDGE_STAGE_MANUAL,
        status=EDGE_CONFIRMED,
        created_by=actor,
        note=note,
    )
    graph.put_edge(edge)
    return edge


# --------------------------------------------------------------------------
# Enrichment


class EnrichmentKind(str, Enum):
    IDENTITY_DIRECTORY = "identity_directory"
    IP_ASSET_INVENTORY = "ip_asset_inventory"
    PROTOCOL_ALIAS = "protocol_alias"


@dataclass(frozen=True)
class EnrichmentRecord:
    kind: EnrichmentKind
    entries: Dict[str, str]
    provenance: str = ""


_ENRICH_SOURCE_KINDS = {
    EnrichmentKind.IDENTITY_DIRECTORY: (
        (AttributeKind.EMAIL, AttributeKind.USERNAME), AttributeKind.USERNAME),
    EnrichmentKind.IP_ASSET_INVENTORY: ((AttributeKind.IPV4,), AttributeKind.HOST),
    EnrichmentKind.PROTOCOL_ALIAS: ((AttributeKind.PROTOCOL,), AttributeKind.PROTOCOL),
}


def apply_enrichment(graph: CaseGraph, enrichment: EnrichmentRecord,
                     rules: Sequence[MatchRule]) -> List[CrossMatchEdge]:
    """Inject contextual mappings as derived attributes, then re-match.

    Derived values make previously incomparable attributes matchable
    (e.g. an email local part becomes a username). Previously rejected
    pairs stay rejected; confirmed edges are never downgraded.
    """
    if not isinstance(enrichment.entries, dict):
        raise BadEnrichment("entries must be a mapping")
    for k, v in enrichment.entries.items():
        if not isinstance(k, str) or not isinstance(v, str) or not v.strip():
            raise BadEnrichment(f"bad entry {k!r} -> {v!r}")
    try:
        source_kinds, target_kind = _ENRICH_SOURCE_KINDS[enrichment.kind]
    except KeyError:
        raise BadEnrichment(f"unknown enrichment kind {enrichment.kind!r}") from None

    prefix = f"derived:{enrichment.kind.value}"
    for attr in list(graph.attributes.values()):
        if attr.kind not in source_kinds or attr.column.startswith("derived:"):
            continue
        column = f"{prefix}:{attr.column}"
        mapped = enrichment.entries.get(str(attr.value))
        if mapped is None:
            continue
        owner = graph.entities[attr.owner]
        already = any(
            a.kind == target_kind and a.value == mapped
            for a in graph.attributes.values() if a.owner == owner.node_id
        )
        if already:
            continue
        graph.add_derived_attribute(owner.node_id, Attribute(
            kind=target_kind, role=attr.role, value=mapped,
            raw_text=str(attr.value), column=column))
    return refine1(graph, rules)


# --------------------------------------------------------------------------
# Validation (advisory; never mutates)


@dataclass(frozen=True)
class ValidationFinding:
    kind: str  # orphan_entity | duplicate_row | contradiction
    message: str
    subject_ids: Tuple[str, ...] = ()


def validate_graph(graph: CaseGraph,
                   rules: Sequence[MatchRule] = ()) -> List[ValidationFinding]:
    findings: List[ValidationFinding] = []
    by_rule = {r.rule_id: r for r in rules}

    linked = set()
    for edge in graph.edges.values():
        if edge.status == EDGE_CONFIRMED:
            for aid in edge.endpoints:
                linked.add(graph.attributes[aid].owner)
    for ent in graph.entities.values():
        if ent.excluded:
            continue
        if ent.node_id not in linked:
            findings.append(ValidationFinding(
                "orphan_entity",
                f"entity {ent.node_id} ({ent.entity_kind.value}) has no confirmed edges",
                (ent.node_id,)))

    seen: Dict[str, str] = {}
    for rec in graph.records.values():
        prev = seen.get(rec.raw_line)
        if prev is not None and graph.records[prev].source_id != rec.source_id:
            findings.append(ValidationFinding(
                "duplicate_row",
                f"records {prev} and {rec.record_id} carry identical raw rows "
                "from different sources",
                (prev, rec.record_id)))
        else:
            seen.setdefault(rec.raw_line, rec.record_id)

    for edge in graph.edges.values():
        if edge.status != EDGE_CONFIRMED or edge.rule_id is None:
            continue
        rule = by_rule.get(edge.rule_id)
        if rule is None:
            continue
        a, b = (graph.attributes[x] for x in edge.endpoints)
        if not rule.values_match(a.value, b.value):
            findings.append(ValidationFinding(
                "contradiction",
                f"confirmed edge {edge.edge_id} no longer satisfies rule "
                f"{rule.rule_id} ({a.value!r} vs {b.value!r})",
                (edge.edge_id,)))
    return findings
