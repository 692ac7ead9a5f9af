"""Command line front end.

Every command operates on a case directory under --data-dir (or the
EVIGRAPH_DATA_DIR environment variable), so the CLI, the HTTP service, and
library code all share the same on-disk state.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import analytics, casestudy, harmonise
from .ingest import mapping_config_from_dict
from .store import Case
from .types import EvigraphError, SourceKind


def _open(ctx, case_id: str) -> Case:
    return Case.open(ctx.obj["data_dir"], case_id)


def _echo_json(doc) -> None:
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


@click.group()
@click.option("--data-dir", envvar="EVIGRAPH_DATA_DIR",
              default="./evigraph_data", show_default=True,
              type=click.Path(file_okay=False),
              help="Directory holding case state.")
@click.pass_context
def main(ctx, data_dir):
    """Evidence graph toolkit: ingest, cross-match, curate, analyse."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = Path(data_dir)


@main.command()
@click.argument("title")
@click.option("--case", "case_id", default=None, help="Explicit case id.")
@click.option("--rules", "rules_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON rule set replacing the bundled defaults.")
@click.pass_context
def new(ctx, title, case_id, rules_path):
    """Create a case."""
    rules = harmonise.load_rules(rules_path) if rules_path else None
    case = Case.create(ctx.obj["data_dir"], title, rules=rules,
                       case_id=case_id)
    click.echo(f"created case {case.case_id} (version {case.graph.version})")


@main.command()
@click.pass_context
def cases(ctx):
    """List case ids."""
    for case_id in Case.list_cases(ctx.obj["data_dir"]):
        click.echo(case_id)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--case", "case_id", required=True)
@click.option("--kind", required=True,
              type=click.Choice([k.value for k in SourceKind]))
@click.option("--display-name", default="", help="Label shown in exports.")
@click.option("--mapping", "mapping_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Column mapping JSON for sources without a built-in schema.")
@click.option("--utc-offset-minutes", default=0, show_default=True)
@click.pass_context
def ingest(ctx, path, case_id, kind, display_name, mapping_path,
           utc_offset_minutes):
    """Ingest one evidence export into a case."""
    case = _open(ctx, case_id)
    config = None
    if mapping_path:
        config = mapping_config_from_dict(
            json.loads(Path(mapping_path).read_text()))
    report = case.ingest_source(
        Path(path).read_bytes(), SourceKind(kind),
        display_name=display_name or Path(path).name,
        original_uri=str(Path(path).resolve()), config=config,
        utc_offset_minutes=utc_offset_minutes)
    click.echo(f"source {report.source_id}: {report.records} records, "
               f"{report.duplicates} duplicates, "
               f"{len(report.warnings)} warnings")
    for w in report.warnings:
        click.echo(f"  line {w.line_number}: {w.message}", err=True)


@main.command("harmonise")
@click.option("--case", "case_id", required=True)
@click.pass_context
def harmonise_cmd(ctx, case_id):
    """Run automatic cross-matching over the case graph."""
    report = _open(ctx, case_id).run_harmonise()
    click.echo(f"proposed {report.proposed} edges")
    for rule_id, count in sorted(report.per_rule.items()):
        click.echo(f"  {rule_id}: {count}")


@main.command()
@click.option("--case", "case_id", required=True)
@click.option("--kind", required=True,
              type=click.Choice([k.value for k in harmonise.EnrichmentKind]))
@click.option("--entries", "entries_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON object mapping source values to derived values.")
@click.pass_context
def enrich(ctx, case_id, kind, entries_path):
    """Inject contextual mappings and re-run matching."""
    case = _open(ctx, case_id)
    record = harmonise.EnrichmentRecord(
        kind=harmonise.EnrichmentKind(kind),
        entries=json.loads(Path(entries_path).read_text()),
        provenance=str(Path(entries_path).resolve()))
    edges = case.apply_enrichment(record)
    click.echo(f"proposed {len(edges)} new edges")


@main.command()
@click.argument("edge_id")
@click.option("--case", "case_id", required=True)
@click.pass_context
def confirm(ctx, edge_id, case_id):
    """Confirm a proposed cross-match edge."""
    edge = _open(ctx, case_id).confirm_edge(edge_id)
    click.echo(f"edge {edge.edge_id} is now {edge.status}")


@main.command()
@click.argument("edge_id")
@click.option("--case", "case_id", required=True)
@click.pass_context
def reject(ctx, edge_id, case_id):
    """Reject a proposed cross-match edge."""
    edge = _open(ctx, case_id).reject_edge(edge_id)
    click.echo(f"edge {edge.edge_id} is now {edge.status}")


@main.command()
@click.argument("edge_id")
@click.option("--case", "case_id", required=True)
@click.pass_context
def reset(ctx, edge_id, case_id):
    """Return a confirmed or rejected edge to proposed."""
    edge = _open(ctx, case_id).reset_edge(edge_id)
    click.echo(f"edge {edge.edge_id} is now {edge.status}")


@main.command()
@click.argument("node_id")
@click.option("--case", "case_id", required=True)
@click.pass_context
def exclude(ctx, node_id, case_id):
    """Soft-exclude a node from matching and analytics."""
    _open(ctx, case_id).exclude_node(node_id)
    click.echo(f"excluded {node_id}")


@main.command()
@click.argument("node_id")
@click.option("--case", "case_id", required=True)
@click.pass_context
def include(ctx, node_id, case_id):
    """Undo a node exclusion."""
    _open(ctx, case_id).include_node(node_id)
    click.echo(f"included {node_id}")


@main.command()
@click.option("--case", "case_id", required=True)
@click.option("--from", "from_entity", required=True)
@click.option("--to", "to_entity", required=True)
@click.option("--max-hops", default=6, show_default=True)
@click.option("--include-proposed", is_flag=True)
@click.pass_context
def link(ctx, case_id, from_entity, to_entity, max_hops, include_proposed):
    """List entity paths along confirmed cross-match edges."""
    case = _open(ctx, case_id)
    paths = analytics.find_links(case.graph, from_entity, to_entity,
                                 max_hops=max_hops,
                                 include_proposed=include_proposed)
    if not paths:
        click.echo("no paths")
        return
    for p in paths:
        click.echo(f"[{p.hop_count} hops] " + " -> ".join(p.elements))


@main.command()
@click.option("--case", "case_id", required=True)
@click.option("--from", "window_from", type=int, default=None,
              help="Window start, UTC epoch seconds.")
@click.option("--to", "window_to", type=int, default=None,
              help="Window end, UTC epoch seconds.")
@click.option("--format", "fmt", default="csv", show_default=True,
              type=click.Choice(["csv", "json"]))
@click.pass_context
def timeline(ctx, case_id, window_from, window_to, fmt):
    """Chronological event listing from the curated graph."""
    case = _open(ctx, case_id)
    window = None
    if window_from is not None or window_to is not None:
        if window_from is None or window_to is None:
            raise click.UsageError("--from and --to must be given together")
        window = (window_from, window_to)
    events = case.timeline(window=window)
    if fmt == "csv":
        click.echo(analytics.timeline_csv(events), nl=False)
    else:
        _echo_json([
            {"epoch": e.epoch, "date": e.date, "time": e.time,
             "timestamp_attribute": e.timestamp_attribute,
             "category": e.category, "type": e.type, "attribute": e.attribute,
             "value": e.value, "metadata_source": e.metadata_source}
            for e in events
        ])


@main.command()
@click.option("--case", "case_id", required=True)
@click.option("--kind", required=True,
              type=click.Choice(sorted(analytics._PROBE_KINDS)))
@click.option("--value", required=True,
              help="Probe value; time_window takes 'lo,hi' epochs.")
@click.pass_context
def query(ctx, case_id, kind, value):
    """Search the graph with a built-in probe."""
    case = _open(ctx, case_id)
    probe = value.split(",") if kind == "time_window" else value
    for hit in analytics.query(case.graph, kind, probe):
        click.echo(f"{hit.entity_id} ({hit.entity_kind}): "
                   + ", ".join(hit.matched_attributes))


@main.command()
@click.option("--case", "case_id", required=True)
@click.option("--format", "fmt", default="doc", show_default=True,
              type=click.Choice(["doc", "csv"]),
              help="doc = full graph JSON; csv = timeline rows.")
@click.pass_context
def export(ctx, case_id, fmt):
    """Write the case to stdout for downstream tooling."""
    case = _open(ctx, case_id)
    if fmt == "doc":
        _echo_json(case.export_document())
    else:
        click.echo(analytics.timeline_csv(case.timeline()), nl=False)


@main.command()
@click.option("--case", "case_id", required=True)
@click.pass_context
def validate(ctx, case_id):
    """Report advisory consistency findings."""
    findings = _open(ctx, case_id).validation()
    if not findings:
        click.echo("no findings")
        return
    for f in findings:
        click.echo(f"{f.kind}: {f.message}")


@main.command()
@click.option("--case", "case_id", default="model-exfiltration-demo",
              show_default=True)
@click.pass_context
def demo(ctx, case_id):
    """Build the bundled demonstration case."""
    case = casestudy.build_case(ctx.obj["data_dir"], case_id=case_id)
    click.echo(f"built case {case.case_id} at version {case.graph.version}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8713, show_default=True)
@click.pass_context
def serve(ctx, host, port):
    """Run the HTTP service over the same data directory."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(ctx.obj["data_dir"]), host=host, port=port)


def run():
    try:
        main(standalone_mode=True)
    except EvigraphError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
