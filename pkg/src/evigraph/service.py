"""HTTP facade over the case store.

Thin by design: every endpoint delegates to Case and serializes the result.
Mutating endpoints honour an X-Expected-Version precondition header and
answer 409 when the case has moved on, so concurrent UIs stay consistent.
"""

from __future__ import annotations

import base64
import binascii
from pathlib import Path
from typing import Dict, Optional

from fastapi import FastAPI, Header, HTTPException, Query, Request
from pydantic import BaseModel

from . import analytics, harmonise
from .ingest import mapping_config_from_dict
from .store import Case
from .types import (
    BadEnrichment,
    BadProbe,
    BadWindow,
    DuplicateEdge,
    EvigraphError,
    IllegalTransition,
    SelfMatch,
    SourceKind,
    StorageError,
    UnknownEdge,
    UnknownFormat,
    UnknownNode,
    VersionConflict,
)

_BAD_REQUEST = (BadEnrichment, BadProbe, BadWindow, SelfMatch, UnknownFormat,
                ValueError)
_CONFLICT = (IllegalTransition, DuplicateEdge)
_NOT_FOUND = (UnknownNode, UnknownEdge)


class CreateCaseBody(BaseModel):
    title: str
    case_id: Optional[str] = None


class SourceBody(BaseModel):
    kind: str
    display_name: str = ""
    content: Optional[str] = None
    content_b64: Optional[str] = None
    mapping: Optional[dict] = None
    utc_offset_minutes: int = 0


class EnrichBody(BaseModel):
    kind: str
    entries: Dict[str, str]
    provenance: str = ""


class ManualEdgeBody(BaseModel):
    attr_a: str
    attr_b: str
    note: str = ""


class AnnotateBody(BaseModel):
    note: str


def _case_summary(case: Case) -> dict:
    return {
        "case_id": case.case_id,
        "title": case.manifest["title"],
        "version": case.graph.version,
        "sources": case.manifest["sources"],
    }


def create_app(data_dir) -> FastAPI:
    data_dir = Path(data_dir)
    app = FastAPI(title="evigraph", version="0.1.0")
    cases: Dict[str, Case] = {}

    def get_case(case_id: str) -> Case:
        if case_id not in cases:
            try:
                cases[case_id] = Case.open(data_dir, case_id)
            except StorageError as exc:
                raise HTTPException(404, str(exc)) from exc
        return cases[case_id]

    @app.exception_handler(EvigraphError)
    async def _evigraph_error(request: Request, exc: EvigraphError):
        from fastapi.responses import JSONResponse
        if isinstance(exc, VersionConflict):
            status = 409
        elif isinstance(exc, _CONFLICT):
            status = 409
        elif isinstance(exc, _NOT_FOUND):
            status = 404
        else:
            status = 400
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__,
                                     "detail": str(exc)})

    @app.get("/cases")
    def list_cases():
        return {"cases": Case.list_cases(data_dir)}

    @app.post("/cases", status_code=201)
    def create_case(body: CreateCaseBody):
        case = Case.create(data_dir, body.title, case_id=body.case_id)
        cases[case.case_id] = case
        return _case_summary(case)

    @app.get("/cases/{case_id}")
    def show_case(case_id: str):
        return _case_summary(get_case(case_id))

    @app.post("/cases/{case_id}/sources", status_code=201)
    def add_source(case_id: str, body: SourceBody,
                   x_expected_version: Optional[int] = Header(default=None)):
        case = get_case(case_id)
        if body.content_b64 is not None:
            try:
                content = base64.b64decode(body.content_b64, validate=True)
            except (binascii.Error, ValueError) as exc:
                raise HTTPException(400, f"bad content_b64: {exc}") from exc
        elif body.content is not None:
            content = body.content.encode("utf-8")
        else:
            raise HTTPException(400, "content or content_b64 is required")
        try:
            kind = SourceKind(body.kind)
        except ValueError as exc:
            raise HTTPException(400, f"unknown source kind {body.kind!r}") from exc
        config = mapping_config_from_dict(body.mapping) if body.mapping else None
        report = case.ingest_source(
            content, kind, display_name=body.display_name, config=config,
            utc_offset_minutes=body.utc_offset_minutes,
            expected_version=x_expected_version)
        return {
            "source_id": report.source_id,
            "records": report.records,
            "duplicates": report.duplicates,
            "warnings": [{"line_number": w.line_number, "message": w.message}
                         for w in report.warnings],
            "version": report.version,
        }

    @app.post("/cases/{case_id}/harmonise")
    def run_harmonise(case_id: str,
                      x_expected_version: Optional[int] = Header(default=None)):
        report = get_case(case_id).run_harmonise(
            expected_version=x_expected_version)
        return {"proposed": report.proposed, "per_rule": report.per_rule,
                "version": report.version}

    @app.post("/cases/{case_id}/enrich")
    def enrich(case_id: str, body: EnrichBody,
               x_expected_version: Optional[int] = Header(default=None)):
        case = get_case(case_id)
        record = harmonise.EnrichmentRecord(
            kind=harmonise.EnrichmentKind(body.kind),
            entries=body.entries, provenance=body.provenance)
        edges = case.apply_enrichment(record,
                                      expected_version=x_expected_version)
        return {"proposed": len(edges), "version": case.graph.version}

    @app.get("/cases/{case_id}/graph")
    def graph(case_id: str):
        return get_case(case_id).export_document()

    @app.post("/cases/{case_id}/edges", status_code=201)
    def add_manual_edge(case_id: str, body: ManualEdgeBody,
                        x_expected_version: Optional[int] = Header(default=None)):
        case = get_case(case_id)
        edge = case.add_manual_edge(body.attr_a, body.attr_b, note=body.note,
                                    expected_version=x_expected_version)
        return {"edge_id": edge.edge_id, "status": edge.status,
                "version": case.graph.version}

    def _edge_action(case_id, edge_id, fn, expected):
        case = get_case(case_id)
        edge = fn(case, edge_id, expected)
        return {"edge_id": edge.edge_id, "status": edge.status,
                "version": case.graph.version}

    @app.post("/cases/{case_id}/edges/{edge_id}:confirm")
    def confirm_edge(case_id: str, edge_id: str,
                     x_expected_version: Optional[int] = Header(default=None)):
        return _edge_action(
            case_id, edge_id,
            lambda c, e, v: c.confirm_edge(e, expected_version=v),
            x_expected_version)

    @app.post("/cases/{case_id}/edges/{edge_id}:reject")
    def reject_edge(case_id: str, edge_id: str,
                    x_expected_version: Optional[int] = Header(default=None)):
        return _edge_action(
            case_id, edge_id,
            lambda c, e, v: c.reject_edge(e, expected_version=v),
            x_expected_version)

    @app.post("/cases/{case_id}/edges/{edge_id}:reset")
    def reset_edge(case_id: str, edge_id: str,
                   x_expected_version: Optional[int] = Header(default=None)):
        return _edge_action(
            case_id, edge_id,
            lambda c, e, v: c.reset_edge(e, expected_version=v),
            x_expected_version)

    @app.post("/cases/{case_id}/nodes/{node_id}:exclude")
    def exclude_node(case_id: str, node_id: str,
                     x_expected_version: Optional[int] = Header(default=None)):
        case = get_case(case_id)
        case.exclude_node(node_id, expected_version=x_expected_version)
        return {"node_id": node_id, "excluded": True,
                "version": case.graph.version}

    @app.post("/cases/{case_id}/nodes/{node_id}:include")
    def include_node(case_id: str, node_id: str,
                     x_expected_version: Optional[int] = Header(default=None)):
        case = get_case(case_id)
        case.include_node(node_id, expected_version=x_expected_version)
        return {"node_id": node_id, "excluded": False,
                "version": case.graph.version}

    @app.post("/cases/{case_id}/nodes/{node_id}:annotate")
    def annotate_node(case_id: str, node_id: str, body: AnnotateBody,
                      x_expected_version: Optional[int] = Header(default=None)):
        case = get_case(case_id)
        case.annotate(node_id, body.note, expected_version=x_expected_version)
        return {"node_id": node_id, "version": case.graph.version}

    @app.get("/cases/{case_id}/timeline")
    def timeline(case_id: str,
                 window_from: Optional[int] = Query(default=None, alias="from"),
                 window_to: Optional[int] = Query(default=None, alias="to"),
                 format: str = "json"):
        case = get_case(case_id)
        window = None
        if window_from is not None or window_to is not None:
            if window_from is None or window_to is None:
                raise HTTPException(400, "from and to must be given together")
            window = (window_from, window_to)
        events = case.timeline(window=window)
        if format == "csv":
            from fastapi.responses import PlainTextResponse
            return PlainTextResponse(analytics.timeline_csv(events),
                                     media_type="text/csv")
        return {"events": [
            {"epoch": e.epoch, "date": e.date, "time": e.time,
             "timestamp_attribute": e.timestamp_attribute,
             "category": e.category, "type": e.type, "attribute": e.attribute,
             "value": e.value, "metadata_source": e.metadata_source,
             "entity_id": e.entity_id,
             "attribute_node_id": e.attribute_node_id}
            for e in events
        ]}

    @app.get("/cases/{case_id}/links")
    def links(case_id: str, from_entity: str = Query(alias="from"),
              to_entity: str = Query(alias="to"), max_hops: int = 6,
              include_proposed: bool = False):
        case = get_case(case_id)
        paths = analytics.find_links(case.graph, from_entity, to_entity,
                                     max_hops=max_hops,
                                     include_proposed=include_proposed)
        return {"paths": [
            {"elements": list(p.elements), "edge_ids": list(p.edge_ids),
             "hop_count": p.hop_count}
            for p in paths
        ]}

    @app.get("/cases/{case_id}/query")
    def run_query(case_id: str, kind: str, value: str):
        case = get_case(case_id)
        probe: object = value
        if kind == "time_window":
            parts = value.split(",")
            if len(parts) != 2:
                raise HTTPException(400, "time_window value must be 'lo,hi'")
            probe = parts
        hits = analytics.query(case.graph, kind, probe)
        return {"hits": [
            {"entity_id": h.entity_id, "entity_kind": h.entity_kind,
             "matched_attributes": list(h.matched_attributes)}
            for h in hits
        ]}

    @app.get("/cases/{case_id}/correlation")
    def correlation(case_id: str):
        case = get_case(case_id)
        return {"matrix": analytics.correlate_sources(case.graph).to_dict()}

    @app.get("/cases/{case_id}/validation")
    def validation(case_id: str):
        findings = get_case(case_id).validation()
        return {"findings": [
            {"kind": f.kind, "message": f.message,
             "subject_ids": list(f.subject_ids)}
            for f in findings
        ]}

    return app
