"""Case lifecycle and durable persistence.

A case directory is a self-contained evidence artifact:

    <data_dir>/<case_id>/
        manifest.json    case metadata, rule set, classification map, version
        actions.jsonl    append-only action log (fsynced before ack)
        snapshot.json    full graph state at the manifest version
        sources/<id>     original uploaded bytes (provenance)

The graph is always reconstructible by replaying the action log from an
empty graph; the snapshot is just a fast path. All actions are deterministic,
so replay reproduces the live graph exactly.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from importlib import resources
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import analytics, harmonise
from .graph import CaseGraph
from .ingest import mapping_config_from_dict, parse_source
from .types import (
    IngestWarning,
    MappingConfig,
    SourceDescriptor,
    SourceKind,
    StorageError,
    VersionConflict,
    make_source_id,
)


def _slug(text: str) -> str:
    out = re.sub(r"[^a-z0-9]+", "-", text.strip().lower()).strip("-")
    return out or "case"


def _mapping_to_dict(config: MappingConfig) -> dict:
    return {
        "column_map": [
            {"column": m.column, "kind": m.kind.value, "role": m.role.value}
            for m in config.column_map
        ],
        "entity_kind": config.entity_kind.value,
        "timestamp_format": config.timestamp_format,
    }


@dataclass
class IngestReport:
    source_id: str
    records: int
    duplicates: int
    warnings: List[IngestWarning]
    version: int


@dataclass
class HarmoniseReport:
    proposed: int
    per_rule: Dict[str, int]
    version: int


class Case:
    """One investigation case: graph + rule set + durable action log."""

    def __init__(self, data_dir: Path, case_id: str, manifest: dict,
                 graph: CaseGraph):
        self.data_dir = Path(data_dir)
        self.case_id = case_id
        self.manifest = manifest
        self.graph = graph
        self.rules = [harmonise.rule_from_dict(d) for d in manifest["rules"]]
        self.classification = analytics.ClassificationMap.from_dict(
            manifest["classification_map"])
        self._lock = threading.RLock()

    # -- paths -------------------------------------------------------------

    @property
    def case_dir(self) -> Path:
        return self.data_dir / self.case_id

    @property
    def _log_path(self) -> Path:
        return self.case_dir / "actions.jsonl"

    @property
    def _manifest_path(self) -> Path:
        return self.case_dir / "manifest.json"

    @property
    def _snapshot_path(self) -> Path:
        return self.case_dir / "snapshot.json"

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def create(cls, data_dir, title: str,
               rules: Optional[Sequence[harmonise.MatchRule]] = None,
               classification: Optional[dict] = None,
               case_id: Optional[str] = None) -> "Case":
        data_dir = Path(data_dir)
        case_id = case_id or _slug(title)
        case_dir = data_dir / case_id
        if case_dir.exists():
            raise StorageError(f"case {case_id!r} already exists in {data_dir}")
        try:
            (case_dir / "sources").mkdir(parents=True)
        except OSError as exc:
            raise StorageError(str(exc)) from exc
        rules = list(rules) if rules is not None else harmonise.default_rules()
        if classification is None:
            classification = json.loads(
                resources.files("evigraph.data")
                .joinpath("classification_map.json").read_text())
        manifest = {
            "case_id": case_id,
            "title": title,
            "created_at": int(time.time()),
            "rules": [_rule_to_dict(r) for r in rules],
            "classification_map": classification,
            "sources": [],
            "version": 0,
        }
        case = cls(data_dir, case_id, manifest, CaseGraph(case_id))
        case._write_manifest()
        case._log_path.touch()
        case._write_snapshot()
        return case

    @classmethod
    def open(cls, data_dir, case_id: str) -> "Case":
        data_dir = Path(data_dir)
        manifest_path = data_dir / case_id / "manifest.json"
        if not manifest_path.exists():
            raise StorageError(f"no case {case_id!r} in {data_dir}")
        manifest = json.loads(manifest_path.read_text())
        case = cls(data_dir, case_id, manifest, CaseGraph(case_id))
        case._recover()
        return case

    @staticmethod
    def list_cases(data_dir) -> List[str]:
        data_dir = Path(data_dir)
        if not data_dir.exists():
            return []
        return sorted(p.parent.name for p in data_dir.glob("*/manifest.json"))

    def _recover(self) -> None:
        actions = self._read_log()
        snapshot_version = None
        if self._snapshot_path.exists():
            try:
                doc = json.loads(self._snapshot_path.read_text())
                snapshot_version = doc.get("version")
            except Exception:
                doc = None
            expected = actions[-1]["version_after"] if actions else 0
            if doc is not None and snapshot_version == expected:
                self.graph = CaseGraph.from_dict(doc)
                self.manifest["version"] = self.graph.version
                return
        # Snapshot missing or stale (e.g. crash between log append and
        # snapshot write): rebuild from the log.
        self.graph = CaseGraph(self.case_id)
        for action in actions:
            self._apply(action)
        self.manifest["version"] = self.graph.version

    def _read_log(self) -> List[dict]:
        if not self._log_path.exists():
            return []
        actions = []
        for line in self._log_path.read_text().splitlines():
            if not line.strip():
                continue
            try:
                actions.append(json.loads(line))
            except json.JSONDecodeError:
                break  # torn tail write from a crash; ignore the partial line
        return actions

    # -- durable mutation --------------------------------------------------

    def _write_manifest(self) -> None:
        self._atomic_write(self._manifest_path,
                           json.dumps(self.manifest, indent=2, sort_keys=True))

    def _write_snapshot(self) -> None:
        self._atomic_write(self._snapshot_path,
                           json.dumps(self.graph.to_dict(), sort_keys=True))

    def _atomic_write(self, path: Path, text: str) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)

    def _append_action(self, verb: str, payload: dict, actor: str) -> dict:
        seq = self.manifest.get("next_seq", 1)
        action = {
            "seq": seq,
            "verb": verb,
            "payload": payload,
            "actor": actor,
            "at": int(time.time()),
            "version_before": self.graph.version,
        }
        return action

    def _commit(self, action: dict) -> None:
        action["version_after"] = self.graph.version
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(action, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.manifest["version"] = self.graph.version
        self.manifest["next_seq"] = action["seq"] + 1
        self._write_snapshot()
        self._write_manifest()

    def _check_version(self, expected: Optional[int]) -> None:
        if expected is not None and expected != self.graph.version:
            raise VersionConflict(
                f"expected version {expected}, case is at {self.graph.version}")

    def _apply(self, action: dict):
        """Deterministically apply one logged action to the in-memory graph."""
        verb = action["verb"]
        payload = action["payload"]
        if verb == "ingest_source":
            descriptor = SourceDescriptor(
                source_id=payload["source_id"],
                source_kind=SourceKind(payload["source_kind"]),
                display_name=payload["display_name"],
                ingested_at=payload["ingested_at"],
                original_uri=payload["original_uri"],
                utc_offset_minutes=payload.get("utc_offset_minutes", 0),
            )
            content = (self.case_dir / "sources" / payload["source_id"]).read_bytes()
            config = (mapping_config_from_dict(payload["mapping"])
                      if payload.get("mapping") else None)
            records, warnings = parse_source(content, descriptor, config)
            if descriptor.source_id not in self.graph.sources:
                self.graph.register_source(descriptor)
            else:
                self.graph.version += 1  # re-ingest still bumps (checkpoint)
            added, dupes = self.graph.add_records(records, skip_duplicates=True)
            return added, dupes, warnings
        if verb == "harmonise":
            return harmonise.refine1(self.graph, self.rules)
        if verb == "enrich":
            record = harmonise.EnrichmentRecord(
                kind=harmonise.EnrichmentKind(payload["kind"]),
                entries=dict(payload["entries"]),
                provenance=payload.get("provenance", ""))
            return harmonise.apply_enrichment(self.graph, record, self.rules)
        if verb == "confirm_edge":
            return harmonise.confirm_edge(self.graph, payload["edge_id"])
        if verb == "reject_edge":
            return harmonise.reject_edge(self.graph, payload["edge_id"])
        if verb == "reset_edge":
            return harmonise.reset_edge(self.graph, payload["edge_id"])
        if verb == "add_manual_edge":
            return harmonise.add_manual_edge(
                self.graph, payload["attr_a"], payload["attr_b"],
                note=payload.get("note", ""),
                actor=action.get("actor", "investigator"))
        if verb == "exclude_node":
            return self.graph.exclude_node(payload["node_id"])
        if verb == "include_node":
            return self.graph.include_node(payload["node_id"])
        if verb == "annotate":
            return self.graph.annotate(payload["node_id"], payload["note"])
        raise StorageError(f"unknown action verb {verb!r}")

    def _run(self, verb: str, payload: dict, actor: str = "system",
             expected_version: Optional[int] = None):
        with self._lock:
            self._check_version(expected_version)
            action = self._append_action(verb, payload, actor)
            result = self._apply(action)
            self._commit(action)
            return result

    # -- public operations -------------------------------------------------

    def ingest_source(self, content: bytes, kind: SourceKind,
                      display_name: str = "", original_uri: str = "",
                      config: Optional[MappingConfig] = None,
                      utc_offset_minutes: int = 0,
                      expected_version: Optional[int] = None) -> IngestReport:
        source_id = make_source_id(kind, content)
        with self._lock:
            self._check_version(expected_version)
            # Store original bytes first so replay can always re-parse them.
            (self.case_dir / "sources" / source_id).write_bytes(content)
            payload = {
                "source_id": source_id,
                "source_kind": kind.value,
                "display_name": display_name or source_id,
                "ingested_at": int(time.time()),
                "original_uri": original_uri,
                "utc_offset_minutes": utc_offset_minutes,
                "mapping": _mapping_to_dict(config) if config else None,
            }
            if source_id not in {s["source_id"] for s in self.manifest["sources"]}:
                self.manifest["sources"].append({
                    k: payload[k] for k in
                    ("source_id", "source_kind", "display_name", "ingested_at",
                     "original_uri")})
            action = self._append_action("ingest_source", payload, "system")
            added, dupes, warnings = self._apply(action)
            self._commit(action)
            return IngestReport(source_id=source_id, records=added,
                                duplicates=dupes, warnings=warnings,
                                version=self.graph.version)

    def run_harmonise(self, expected_version: Optional[int] = None) -> HarmoniseReport:
        if not self.graph.sources:
            raise StorageError("case has no ingested sources")
        proposals = self._run("harmonise", {}, expected_version=expected_version)
        per_rule: Dict[str, int] = {}
        for edge in proposals:
            per_rule[edge.rule_id] = per_rule.get(edge.rule_id, 0) + 1
        return HarmoniseReport(proposed=len(proposals), per_rule=per_rule,
                               version=self.graph.version)

    def apply_enrichment(self, record: harmonise.EnrichmentRecord,
                         expected_version: Optional[int] = None):
        return self._run("enrich", {
            "kind": record.kind.value,
            "entries": dict(record.entries),
            "provenance": record.provenance,
        }, expected_version=expected_version)

    def confirm_edge(self, edge_id: str, actor: str = "investigator",
                     expected_version: Optional[int] = None):
        return self._run("confirm_edge", {"edge_id": edge_id}, actor,
                         expected_version)

    def reject_edge(self, edge_id: str, actor: str = "investigator",
                    expected_version: Optional[int] = None):
        return self._run("reject_edge", {"edge_id": edge_id}, actor,
                         expected_version)

    def reset_edge(self, edge_id: str, actor: str = "investigator",
                   expected_version: Optional[int] = None):
        return self._run("reset_edge", {"edge_id": edge_id}, actor,
                         expected_version)

    def add_manual_edge(self, attr_a: str, attr_b: str, note: str = "",
                        actor: str = "investigator",
                        expected_version: Optional[int] = None):
        return self._run("add_manual_edge",
                         {"attr_a": attr_a, "attr_b": attr_b, "note": note},
                         actor, expected_version)

    def exclude_node(self, node_id: str, actor: str = "investigator",
                     expected_version: Optional[int] = None):
        return self._run("exclude_node", {"node_id": node_id}, actor,
                         expected_version)

    def include_node(self, node_id: str, actor: str = "investigator",
                     expected_version: Optional[int] = None):
        return self._run("include_node", {"node_id": node_id}, actor,
                         expected_version)

    def annotate(self, node_id: str, note: str, actor: str = "investigator",
                 expected_version: Optional[int] = None):
        return self._run("annotate", {"node_id": node_id, "note": note},
                         actor, expected_version)

    # -- read-only views ---------------------------------------------------

    def export_document(self) -> dict:
        return self.graph.export_document()

    def timeline(self, window=None):
        return analytics.build_timeline(self.graph, window=window,
                                        classification=self.classification)

    def validation(self):
        return harmonise.validate_graph(self.graph, self.rules)


def _rule_to_dict(rule: harmonise.MatchRule) -> dict:
    return {
        "rule_id": rule.rule_id,
        "name": rule.name,
        "kind_pair": [rule.kind_pair[0].value, rule.kind_pair[1].value],
        "comparator": rule.comparator.value,
        "tolerance": rule.tolerance,
        "alias_table": rule.alias_table,
        "role_pair": [r.value for r in rule.role_pair] if rule.role_pair else None,
        "enabled": rule.enabled,
    }
