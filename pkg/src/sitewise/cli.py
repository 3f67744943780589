"""Command line front end.

`agent run|bench|adapt|serve` drive the loop; `akb import|export|stats|freeze`
maintain the knowledge base. Everything here is a thin shell over the library
and the HTTP service; no behavior lives in this module.
"""

from __future__ import annotations

import json
import os
import socket
import sys
from pathlib import Path

import click
import uvicorn

from . import __version__
from .akb.store import KnowledgeBase, load_tips_file
from .akb.tips import DuplicateId, Frozen, InvalidTip
from .env.mock import MockSite
from .env.sitespec import load_site_spec
from .llm.cassette import CassetteBackend
from .llm.gateway import ENV_URL, gateway_from_env
from .llm.stub import stub_from_file
from .model import Goal, RunConfig, SUCCESS, atomic_write_json
from .orchestrator import ProtocolViolation, adaptation_loop, bench as bench_suite, format_report, load_suite, run_task
from .queue import FailureQueue
from .service import BindFailure, ServiceConfig, create_app

MODE_CHOICE = click.Choice(RunConfig.MODES)


def _make_client(stub_path, cassette_path=None, cassette_record=False, fallback_dir=None):
    if stub_path:
        return stub_from_file(stub_path)
    if cassette_path:
        if cassette_record:
            return CassetteBackend(cassette_path, "record", inner=gateway_from_env())
        return CassetteBackend(cassette_path)
    if os.environ.get(ENV_URL):
        return gateway_from_env()
    if fallback_dir is not None:
        rules = Path(fallback_dir) / "stub_rules.json"
        if rules.exists():
            return stub_from_file(rules)
    raise click.ClickException("no model configured: pass --stub/--cassette or set " + ENV_URL)


@click.group(help="Knowledge-evolving browser-agent runtime.")
@click.version_option(__version__)
def main():
    pass


@main.command(help="Run one task against one site.")
@click.option("--goal", "goal_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Goal document (JSON).")
@click.option("--site", "site_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Site spec (JSON).")
@click.option("--akb", "akb_path", type=click.Path(dir_okay=False), default=None, help="Knowledge base file; omitted means empty.")
@click.option("--mode", type=MODE_CHOICE, default="full", show_default=True)
@click.option("--max-steps", type=click.IntRange(1, 200), default=30, show_default=True)
@click.option("--record", "record_dir", type=click.Path(file_okay=False), default=None, help="Write trajectory + meta here.")
@click.option("--stub", "stub_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Scripted model replies (JSON rules file).")
@click.option("--cassette", "cassette_path", type=click.Path(dir_okay=False), default=None, help="Replay recorded model calls from this file.")
@click.option("--cassette-record", is_flag=True, help="Record live calls into --cassette instead of replaying.")
@click.option("--run-id", default=None)
def run(goal_path, site_path, akb_path, mode, max_steps, record_dir, stub_path, cassette_path, cassette_record, run_id):
    goal = Goal.from_dict(json.loads(Path(goal_path).read_text(encoding="utf-8")))
    site = MockSite(load_site_spec(site_path))
    kb = KnowledgeBase.load(akb_path) if akb_path else KnowledgeBase()
    cfg = RunConfig(max_steps=max_steps, ablation_mode=mode, akb_path=akb_path)
    client = _make_client(stub_path, cassette_path, cassette_record)

    result = run_task(goal, site, kb, cfg, client, record_dir=record_dir, run_id=run_id)

    click.echo(f"run {result.run_id}: {result.status} in {result.steps} steps")
    if result.answer is not None:
        click.echo(f"answer: {result.answer}")
    if result.verdict is not None:
        click.echo(f"trigger fired: {result.verdict.source} ({result.verdict.detail})")
    if result.error is not None:
        click.echo(f"error: {result.error['kind']}: {result.error['detail']}")
    if record_dir:
        click.echo(f"recorded to {record_dir}")
    sys.exit(0 if result.status == SUCCESS else 1)


@main.command(help="Run a task suite and print the report.")
@click.option("--suite", "suite_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--protocol/--no-protocol", default=False, help="Require the knowledge base to be frozen.")
@click.option("--mode", type=MODE_CHOICE, default="full", show_default=True)
@click.option("--akb", "akb_path", type=click.Path(dir_okay=False), default=None, help="Override the suite's knowledge base.")
@click.option("--stub", "stub_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Record runs and report.json here.")
def bench(suite_dir, protocol, mode, akb_path, stub_path, out_dir):
    cfg = RunConfig(ablation_mode=mode, akb_path=akb_path)

    def factory():
        return _make_client(stub_path, fallback_dir=suite_dir)

    try:
        report = bench_suite(suite_dir, cfg, factory, protocol=protocol, out_dir=out_dir)
    except ProtocolViolation as exc:
        raise click.ClickException(str(exc))
    click.echo(format_report(report))
    if out_dir:
        path = Path(out_dir) / "report.json"
        atomic_write_json(path, report)
        click.echo(f"report written to {path}")


@main.command(help="Run tasks against a live knowledge base, queueing failures for review.")
@click.option("--suite", "suite_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--queue", "queue_path", required=True, type=click.Path(dir_okay=False))
@click.option("--akb", "akb_path", required=True, type=click.Path(dir_okay=False), help="Unfrozen knowledge base to grow.")
@click.option("--mode", type=MODE_CHOICE, default="full", show_default=True)
@click.option("--stub", "stub_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--record", "record_root", type=click.Path(file_okay=False), default=None)
def adapt(suite_dir, queue_path, akb_path, mode, stub_path, record_root):
    kb = KnowledgeBase.load(akb_path)
    suite = load_suite(suite_dir)
    tasks = [(t["goal"], MockSite(t["spec"])) for t in suite["tasks"]]
    queue = FailureQueue(queue_path)
    cfg = RunConfig(ablation_mode=mode, akb_path=akb_path)

    def factory():
        return _make_client(stub_path, fallback_dir=suite_dir)

    try:
        report = adaptation_loop(tasks, kb, queue, cfg, factory, record_root=record_root)
    except Frozen as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(report, indent=2))


@main.command(help="Serve the HTTP API.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8101, show_default=True)
@click.option("--akb", "akb_path", default="akb.json", show_default=True, type=click.Path(dir_okay=False))
@click.option("--queue", "queue_path", default="queue.json", show_default=True, type=click.Path(dir_okay=False))
@click.option("--runs-root", default="runs", show_default=True, type=click.Path(file_okay=False))
@click.option("--suite", "suite_dir", type=click.Path(exists=True, file_okay=False), default=None, help="Task source for launched runs (defaults to the packaged demo suite).")
@click.option("--token", envvar="SITEWISE_TOKEN", default=None, help="Shared auth token; unset serves unauthenticated.")
@click.option("--stub", "stub_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Scripted model replies for launched runs.")
def serve(host, port, akb_path, queue_path, runs_root, suite_dir, token, stub_path):
    cfg = ServiceConfig(
        akb_path=akb_path,
        queue_path=queue_path,
        runs_root=runs_root,
        suite_dir=suite_dir,
        token=token,
        stub_rules=stub_path,
    )
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            probe.bind((host, port))
        finally:
            probe.close()
    except OSError as exc:
        raise click.ClickException(str(BindFailure(f"cannot bind {host}:{port}: {exc}")))
    app = create_app(cfg)
    uvicorn.run(app, host=host, port=port, log_level="info")


@click.group(name="akb", help="Knowledge base maintenance.")
def akb():
    pass


main.add_command(akb)


@akb.command("import", help="Add tips from one or more files.")
@click.option("--akb", "akb_path", required=True, type=click.Path(dir_okay=False))
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
def akb_import(akb_path, files):
    kb = KnowledgeBase.load(akb_path)
    total = 0
    try:
        for f in files:
            total += kb.import_tips(load_tips_file(f))
    except (Frozen, DuplicateId, InvalidTip) as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    click.echo(f"imported {total} tips into {akb_path} ({len(kb)} total)")


@akb.command("export", help="Write the knowledge base document to a file or stdout.")
@click.option("--akb", "akb_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def akb_export(akb_path, out_path):
    doc = KnowledgeBase.load(akb_path).to_doc()
    if out_path:
        atomic_write_json(out_path, doc)
        click.echo(f"exported {len(doc['tips'])} tips to {out_path}")
    else:
        click.echo(json.dumps(doc, ensure_ascii=False, indent=2))


@akb.command("stats", help="Tip counts by domain, plus freeze state.")
@click.option("--akb", "akb_path", required=True, type=click.Path(exists=True, dir_okay=False))
def akb_stats(akb_path):
    kb = KnowledgeBase.load(akb_path)
    click.echo(json.dumps({"frozen": kb.frozen, "tips": len(kb), "domains": kb.domain_counts()}, indent=2))


@akb.command("freeze", help="Permanently reject further mutations (idempotent).")
@click.option("--akb", "akb_path", required=True, type=click.Path(exists=True, dir_okay=False))
def akb_freeze(akb_path):
    kb = KnowledgeBase.load(akb_path)
    kb.freeze()
    click.echo(f"froze {akb_path} ({len(kb)} tips)")


if __name__ == "__main__":
    main()
