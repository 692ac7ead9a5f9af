"""Shared fixtures: the bundled demo case plus random graph generators."""

from __future__ import annotations

import random
import string

import pytest

from evigraph import casestudy
from evigraph.graph import CaseGraph
from evigraph.harmonise import Comparator, MatchRule
from evigraph.types import (
    Attribute,
    AttributeKind,
    EntityKind,
    EvidenceRecord,
    Role,
    SourceDescriptor,
    SourceKind,
    make_record_id,
    make_source_id,
)


@pytest.fixture(scope="session")
def golden_case(tmp_path_factory):
    """The fully curated demo case (ingest + match + enrich + examiner work)."""
    return casestudy.build_case(tmp_path_factory.mktemp("golden"))


@pytest.fixture(scope="session")
def uncurated_case(tmp_path_factory):
    """The demo case right after automatic matching, before any examiner work."""
    return casestudy.build_case(tmp_path_factory.mktemp("uncurated"),
                               curate=False)


def build_demo_graph() -> CaseGraph:
    """In-memory graph over the bundled fixtures, no persistence involved."""
    import json

    from evigraph.graph import build_graph
    from evigraph.ingest import mapping_config_from_dict, parse_source

    sources, records = [], []
    for name, kind, display, mapping in casestudy._SOURCES:
        content = casestudy.fixture_bytes(name)
        src = SourceDescriptor(
            source_id=make_source_id(kind, content), source_kind=kind,
            display_name=display, ingested_at=0, original_uri="")
        config = None
        if mapping is not None:
            config = mapping_config_from_dict(
                json.loads(casestudy.fixture_text(mapping)))
        recs, _ = parse_source(content, src, config)
        sources.append(src)
        records.extend(recs)
    return build_graph("demo", sources, records)


@pytest.fixture
def demo_graph():
    return build_demo_graph()


# --------------------------------------------------------------------------
# Random graph construction for oracle-equivalence tests


_VALUE_POOLS = {
    AttributeKind.IPV4: lambda rng: f"10.0.{rng.randint(0, 3)}.{rng.randint(1, 30)}",
    AttributeKind.USERNAME: lambda rng: rng.choice(
        ["alex", "blake", "casey", "drew", "emery", "finley"]),
    AttributeKind.TIMESTAMP: lambda rng: 1650000000 + rng.randint(0, 2000),
    AttributeKind.PORT: lambda rng: rng.choice([22, 80, 443, 8080, 52814]),
    AttributeKind.FILE_SIZE: lambda rng: rng.choice(
        [1000, 1001, 4200, 4200000000, 4200000001, 9000000]),
    AttributeKind.MAC: lambda rng: rng.choice(
        ["aa:bb:cc:dd:ee:01", "aa:bb:cc:dd:ee:02", "aa:bb:cc:dd:ee:03"]),
    AttributeKind.PROTOCOL: lambda rng: rng.choice(
        ["ssh", "sshv2", "https", "tlsv1.2", "http", "dns"]),
    AttributeKind.GEOLOCATION: lambda rng: rng.choice(
        ["Reykjavik", "Oslo", "Tallinn"]),
    AttributeKind.EMAIL: lambda rng: rng.choice(
        ["alex@example.test", "blake@example.test"]),
}

_ROLES = [Role.NONE, Role.SOURCE, Role.DESTINATION, Role.CREATED, Role.ACCESSED]


def make_random_graph(rng: random.Random, n_attributes: int) -> CaseGraph:
    """A graph with value collisions engineered in, so rules have work to do."""
    graph = CaseGraph("random")
    n_sources = rng.randint(1, 4)
    sources = []
    for i in range(n_sources):
        content = f"source-{i}-{rng.random()}".encode()
        src = SourceDescriptor(
            source_id=make_source_id(SourceKind.GENERIC_TABULAR, content),
            source_kind=SourceKind.GENERIC_TABULAR,
            display_name=f"source {i}", ingested_at=0, original_uri="")
        graph.register_source(src)
        sources.append(src)

    kinds = list(_VALUE_POOLS)
    records = []
    remaining = n_attributes
    line = 2
    while remaining > 0:
        per_record = min(remaining, rng.randint(1, 6))
        remaining -= per_record
        attrs = []
        for j in range(per_record):
            kind = rng.choice(kinds)
            value = _VALUE_POOLS[kind](rng)
            attrs.append(Attribute(
                kind=kind, role=rng.choice(_ROLES), value=value,
                raw_text=str(value), column=f"c{j}"))
        src = rng.choice(sources)
        raw = ",".join(a.raw_text for a in attrs)
        records.append(EvidenceRecord(
            record_id=make_record_id(src.source_id, line, raw),
            source_id=src.source_id, entity_kind=EntityKind.GENERIC,
            attributes=tuple(attrs), raw_line=raw, line_number=line))
        line += 1
    graph.add_records(records)
    return graph


def make_random_rules(rng: random.Random) -> list:
    rules = [
        MatchRule("r_ip", "ip", (AttributeKind.IPV4, AttributeKind.IPV4),
                  Comparator.EXACT_EQUAL),
        MatchRule("r_user", "user",
                  (AttributeKind.USERNAME, AttributeKind.USERNAME),
                  Comparator.EXACT_EQUAL),
        MatchRule("r_mac", "mac", (AttributeKind.MAC, AttributeKind.MAC),
                  Comparator.EXACT_EQUAL, enabled=rng.random() < 0.8),
        MatchRule("r_ts", "ts",
                  (AttributeKind.TIMESTAMP, AttributeKind.TIMESTAMP),
                  Comparator.WITHIN_TOLERANCE,
                  tolerance=rng.choice([0, 1, 5, 300])),
        MatchRule("r_size", "size",
                  (AttributeKind.FILE_SIZE, AttributeKind.FILE_SIZE),
                  Comparator.WITHIN_TOLERANCE, tolerance=rng.choice([0, 1])),
        MatchRule("r_proto", "proto",
                  (AttributeKind.PROTOCOL, AttributeKind.PROTOCOL),
                  Comparator.ALIAS_EQUAL,
                  alias_table={"sshv2": "ssh", "tlsv1.2": "https"}),
        MatchRule("r_port", "port", (AttributeKind.PORT, AttributeKind.PORT),
                  Comparator.EXACT_EQUAL, enabled=rng.random() < 0.5),
    ]
    if rng.random() < 0.3:
        rules.append(MatchRule(
            "r_ts_role", "ts role-restricted",
            (AttributeKind.TIMESTAMP, AttributeKind.TIMESTAMP),
            Comparator.WITHIN_TOLERANCE, tolerance=5,
            role_pair=(Role.CREATED, Role.ACCESSED)))
    rng.shuffle(rules)
    return rules


@pytest.fixture
def random_graph_factory():
    return make_random_graph


@pytest.fixture
def random_rules_factory():
    return make_random_rules


def random_text(rng: random.Random, length: int) -> str:
    alphabet = string.ascii_letters + string.digits + ",;:@. \t-"
    return "".join(rng.choice(alphabet) for _ in range(length))
