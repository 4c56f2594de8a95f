"""Admin command line: serve, seed-demo, replay, generate, analyze, verify."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from . import analytics
from .config import ServiceConfig
from .errors import PlatformError, StoreCorruptError
from .generate import TraceSpec, event_shape_spec, generate_trace
from .store import Store
from .trace import replay_trace, write_trace


@click.group()
def main():
    """Collaborative CTF platform for crowd investigation of misinformation."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML config file; env vars CROWDCTF_* override it.")
@click.option("--store", "store_path", default=None, help="Store file path override.")
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
def serve(config_path, store_path, port, host):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    config = ServiceConfig.load(config_path)
    if store_path:
        config.store_path = store_path
    if port:
        config.port = port
    if host:
        config.host = host
    store = Store.open_or_create(config.store_path, fsync=config.fsync)
    click.echo(f"serving on {config.host}:{config.port} with store {config.store_path}")
    uvicorn.run(create_app(store, config), host=config.host, port=config.port,
                log_level="warning")


@main.command("seed-demo")
@click.option("--store", "store_path", default="crowdctf.store", show_default=True)
@click.option("--password", default="demo", show_default=True,
              help="Password for every seeded account.")
def seed_demo(store_path, password):
    """Create a demo store: an open event with teams, flags, pending judging work."""
    spec = TraceSpec(
        name="demo event", team_names=["SL", "KP", "MH", "OT"],
        team_sizes=[4, 4, 4, 4], threads=4,
        evidence=30, archival=20, verification=12, reporting=4,
        approved=54, refuting=8, cross_team_fraction=0.15,
        tasks=2, judges=3, judge_delay_seconds=120,
        finalize=False, leave_pending=6, seed=42, demo_password=password,
    )
    store = Store.create(store_path)
    for action in generate_trace(spec):
        store.apply(action.action, action.actor, action.params, action.at)
    engine = store.engine
    event_id = next(iter(engine.events))
    # one fresh evidence piece whose reporting flag has an unmet approval gate
    thread_id = engine._threads_by_event[event_id][0]
    team_id = engine._teams_by_event[event_id][0]
    author = engine.teams[team_id].member_ids[0]
    at = max(e.at for e in engine.feeds[event_id]) + 10
    piece, _ = store.apply("new_evidence", author, {
        "thread_id": thread_id, "name": "gated evidence",
        "source_url": "https://example.com/demo/gated",
        "discovery_body": {"subtype": "image", "method_description": "reverse image search"},
        "self_assessment": {},
    }, at)
    store.apply("add_flag", author, {
        "evidence_id": piece.id, "kind": "reporting",
        "body": {"report_text": "early report, gate not yet satisfied"},
        "self_assessment": {},
    }, at + 1)
    store.close()
    users = sorted(engine.users.values(), key=lambda u: u.id)
    click.echo(f"seeded demo event {event_id} into {store_path}")
    click.echo(f"accounts (password {password!r}): "
               + ", ".join(u.display_name for u in users))


@main.command()
@click.argument("trace_file", type=click.Path(exists=True))
@click.option("--export-dir", type=click.Path(), default=None,
              help="Write analytics exports for every event in the trace.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def replay(trace_file, export_dir, fmt):
    """Replay a recorded trace and print its event metrics."""
    try:
        engine = replay_trace(trace_file)
    except PlatformError as exc:
        raise click.ClickException(json.dumps(exc.to_dict()))
    for event_id in engine.events:
        metrics = analytics.event_metrics(engine, event_id).to_dict()
        click.echo(json.dumps(metrics, sort_keys=True))
        if export_dir:
            out = Path(export_dir)
            out.mkdir(parents=True, exist_ok=True)
            for name, content in sorted(analytics.export_tables(engine, event_id, fmt).items()):
                (out / f"{event_id}-{name}").write_bytes(content)


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None,
              help="YAML file of TraceSpec fields.")
@click.option("--event-shape", type=int, default=None,
              help="Use the bundled shape for deployed event 1-5.")
@click.option("--seed", type=int, default=None, help="Override the spec seed.")
@click.option("-o", "--output", required=True, type=click.Path())
def generate(spec_path, event_shape, seed, output):
    """Generate a synthetic legal trace from a spec."""
    if (spec_path is None) == (event_shape is None):
        raise click.UsageError("provide exactly one of --spec or --event-shape")
    if event_shape is not None:
        spec = event_shape_spec(event_shape)
    else:
        doc = yaml.safe_load(Path(spec_path).read_text()) or {}
        spec = TraceSpec(**doc)
    if seed is not None:
        spec.seed = seed
    try:
        actions = generate_trace(spec)
    except PlatformError as exc:
        raise click.ClickException(exc.message)
    write_trace(actions, output)
    click.echo(f"wrote {len(actions)} actions to {output}")


@main.command()
@click.option("--store", "store_path", type=click.Path(exists=True), required=True)
@click.option("--event", "event_id", default=None,
              help="Event to export (default: every event).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def analyze(store_path, event_id, fmt, out_dir):
    """Export analytics tables from a store, deterministically."""
    try:
        store = Store.open(store_path)
    except StoreCorruptError as exc:
        raise click.ClickException(exc.message)
    engine = store.engine
    event_ids = [event_id] if event_id else list(engine.events)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for eid in event_ids:
        for name, content in sorted(analytics.export_tables(engine, eid, fmt).items()):
            path = out / f"{eid}-{name}"
            path.write_bytes(content)
            click.echo(str(path))


@main.command()
@click.option("--store", "store_path", type=click.Path(exists=True), required=True)
def verify(store_path):
    """Integrity-check a store and run the full invariant scan."""
    try:
        store = Store.open(store_path)
    except StoreCorruptError as exc:
        click.echo(f"store integrity check failed: {exc.message}", err=True)
        sys.exit(1)
    problems = store.engine.check_invariants()
    if problems:
        for p in problems:
            click.echo(f"violation: {p}", err=True)
        sys.exit(1)
    click.echo("store verified: all invariants hold")


if __name__ == "__main__":
    main()
