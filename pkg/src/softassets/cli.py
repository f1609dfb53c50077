"""Command line entry points.

`demo` runs the whole workflow against the bundled fixture repository:
harvest, extraction, clustering, scripted manager approval and author
confirmation through the HTTP API, mock archival, and a final OAI-PMH /
Signposting check.
"""

from __future__ import annotations

import json
import re
import sys
import tempfile
import time
from importlib import resources
from pathlib import Path

import click

from .api import app_from_config
from .expose import METADATA_PREFIX, OaiPmhProvider
from .extract import Gazetteer, evaluate, extract_mentions, load_gold_jsonl
from .pipeline import (
    ConfigError,
    PipelineConfig,
    PipelineError,
    extract_stage,
    harvest_stage,
    resolve_stage,
    run_pipeline,
    write_stage_outputs,
)
from .weblink import LinkSyntaxError, parse_link_value


def bundled_fixture_dir() -> Path:
    return Path(str(resources.files("softassets") / "fixtures"))


def _load_config(config_path: str | None, threshold, min_confidence, mock_archival) -> PipelineConfig:
    if config_path:
        config = PipelineConfig.from_toml(config_path)
    else:
        config = demo_config(Path(tempfile.mkdtemp(prefix="softassets-")))
    if threshold is not None:
        config.threshold = threshold
    if min_confidence is not None:
        config.min_confidence = min_confidence
    if mock_archival:
        config.archival_mode = "mock"
    return config


def demo_config(storage_dir: Path) -> PipelineConfig:
    fixtures = bundled_fixture_dir()
    return PipelineConfig(
        base_url="http://fixture.invalid/oai",
        gazetteer_path=fixtures / "gazetteer.tsv",
        catalog_path=fixtures / "catalog.tsv",
        storage_dir=storage_dir,
        fixture_dir=fixtures,
    )


def write_config_toml(config: PipelineConfig, path: Path):
    lines = [
        "[harvest]",
        f'base_url = "{config.base_url}"',
        f'metadata_prefix = "{config.metadata_prefix}"',
    ]
    if config.fixture_dir:
        lines.append(f'fixture_dir = "{config.fixture_dir}"')
    lines += [
        "",
        "[paths]",
        f'gazetteer = "{config.gazetteer_path}"',
        f'storage = "{config.storage_dir}"',
    ]
    if config.catalog_path:
        lines.append(f'catalog = "{config.catalog_path}"')
    if config.dashboard_dist:
        lines.append(f'dashboard_dist = "{config.dashboard_dist}"')
    lines += [
        "",
        "[extract]",
        f"min_confidence = {config.min_confidence}",
        "",
        "[resolve]",
        f"threshold = {config.threshold}",
        "",
        "[archival]",
        f'mode = "{config.archival_mode}"',
        "",
        "[serve]",
        f'listen = "{config.listen}"',
        f'public_base = "{config.public_base}"',
        f'resolver_base = "{config.resolver_base}"',
        "",
    ]
    path.write_text("\n".join(lines), encoding="utf-8")


common_options = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="TOML configuration file (defaults to the bundled demo fixtures)."),
    click.option("--threshold", type=float, default=None, help="Clustering threshold override."),
    click.option("--min-confidence", type=float, default=None, help="Extraction confidence floor."),
    click.option("--mock-archival", is_flag=True, help="Force the mock archival client."),
]


def with_common_options(fn):
    for option in reversed(common_options):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Research-software asset pipeline."""


@main.command()
@with_common_options
def harvest(config_path, threshold, min_confidence, mock_archival):
    """Harvest records and full texts; print per-document status."""
    config = _load_config(config_path, threshold, min_confidence, mock_archival)
    config.validate()
    papers, documents, _, skipped = harvest_stage(config)
    for paper in papers:
        click.echo(f"{paper.paper_id}\t{paper.title}")
    click.echo(f"harvested {len(papers)} records, parsed {len(documents)} documents, skipped {skipped}")


@main.command()
@with_common_options
def extract(config_path, threshold, min_confidence, mock_archival):
    """Extract software mentions; write mentions.jsonl and groups.jsonl."""
    config = _load_config(config_path, threshold, min_confidence, mock_archival)
    config.validate()
    _, documents, _, _ = harvest_stage(config)
    mentions_by_doc, groups = extract_stage(config, documents)
    write_stage_outputs(config, mentions_by_doc, groups)
    total = sum(len(m) for m in mentions_by_doc.values())
    click.echo(f"{total} mentions in {len(documents)} documents -> {len(groups)} groups")
    click.echo(f"wrote {config.storage_dir}/mentions.jsonl and groups.jsonl")


@main.command()
@with_common_options
def resolve(config_path, threshold, min_confidence, mock_archival):
    """Cluster mention groups into asset candidates; write candidates.jsonl."""
    config = _load_config(config_path, threshold, min_confidence, mock_archival)
    config.validate()
    _, documents, _, _ = harvest_stage(config)
    _, groups = extract_stage(config, documents)
    candidates = resolve_stage(config, groups)
    store = config.open_store()
    store.save_candidates(candidates)
    for c in candidates:
        match = f" catalog={c.catalog_match[0].url}" if c.catalog_match else ""
        click.echo(f"{c.candidate_id}\t{c.canonical_name}\tgroups={len(c.member_groups)}{match}")
    click.echo(f"{len(candidates)} candidates -> {store.candidates_path}")


@main.command("run-pipeline")
@with_common_options
def run_pipeline_cmd(config_path, threshold, min_confidence, mock_archival):
    """Run harvest -> extract -> resolve and seed the manager queue."""
    config = _load_config(config_path, threshold, min_confidence, mock_archival)
    try:
        report = run_pipeline(config)
    except (ConfigError, PipelineError) as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(report.to_dict(), indent=2))
    click.echo(f"storage: {config.storage_dir}")


@main.command("eval")
@with_common_options
@click.option("--gold", "gold_path", type=click.Path(), default=None,
              help="Gold mentions JSONL (defaults to the bundled corpus).")
def eval_cmd(config_path, threshold, min_confidence, mock_archival, gold_path):
    """Score the extractor against gold annotations on the fixture corpus."""
    config = _load_config(config_path, threshold, min_confidence, mock_archival)
    config.validate()
    fixtures = bundled_fixture_dir()
    gold = load_gold_jsonl(Path(gold_path) if gold_path else fixtures / "gold.jsonl")
    manifest = json.loads((fixtures / "gold_manifest.json").read_text(encoding="utf-8"))
    _, documents, _, _ = harvest_stage(config)
    gazetteer = Gazetteer.from_tsv(config.gazetteer_path)
    predicted = []
    for doc_id in manifest["doc_ids"]:
        if doc_id in documents:
            predicted.extend(extract_mentions(documents[doc_id], gazetteer))
    report = evaluate(predicted, gold, doc_ids=manifest["doc_ids"])
    click.echo(f"{'component':<14}{'tp':>5}{'fp':>5}{'fn':>5}{'P':>8}{'R':>8}{'F1':>8}")
    for component, s in sorted(report.per_component.items()):
        click.echo(
            f"{component:<14}{s.tp:>5}{s.fp:>5}{s.fn:>5}{s.precision:>8.3f}{s.recall:>8.3f}{s.f1:>8.3f}"
        )
    m = report.micro
    click.echo(f"{'micro':<14}{m.tp:>5}{m.fp:>5}{m.fn:>5}{m.precision:>8.3f}{m.recall:>8.3f}{m.f1:>8.3f}")
    click.echo(f"documents: {report.docs_total} ({report.docs_zero_mention} zero-mention)")


@main.command()
@with_common_options
def serve(config_path, threshold, min_confidence, mock_archival):
    """Serve the HTTP API, the OAI-PMH provider and the dashboard."""
    import uvicorn

    config = _load_config(config_path, threshold, min_confidence, mock_archival)
    config.validate()
    app = app_from_config(config)
    host, _, port = config.listen.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765), log_level="warning")


@main.command()
@click.option("--storage", "storage_path", type=click.Path(), default=None,
              help="Storage directory (default: a fresh temp dir).")
@click.option("--init-only", is_flag=True,
              help="Run the pipeline, write config.toml into the storage dir and stop.")
def demo(storage_path, init_only):
    """End-to-end demonstration on the bundled fixture repository."""
    started = time.monotonic()
    storage = (
        Path(storage_path).resolve()
        if storage_path
        else Path(tempfile.mkdtemp(prefix="softassets-demo-"))
    )
    config = demo_config(storage)
    checks: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str = ""):
        checks.append((name, ok, detail))
        click.echo(f"[{'ok' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))

    report = run_pipeline(config)
    check(
        "pipeline: 25 documents harvested",
        report.documents == 25,
        f"documents={report.documents}, candidates={report.candidates}, records={report.records_created}",
    )
    check("pipeline: candidates and records created",
          report.candidates >= 1 and report.records_created >= 1)

    write_config_toml(config, storage / "config.toml")
    if init_only:
        click.echo(f"storage initialized at {storage}")
        return

    from fastapi.testclient import TestClient

    store = config.open_store()
    app = app_from_config(config, store=store)
    provider = OaiPmhProvider(store, base_url=f"{config.public_base}/oai")
    client = TestClient(app)

    pending = client.get("/api/pending").json()
    check("manager queue is populated", len(pending) >= 1, f"{len(pending)} pending records")
    record_id = pending[0]["record_id"]
    paper_id = pending[0]["paper_id"]

    approved = client.post(f"/api/records/{record_id}/manager-approve")
    check("manager approval via API", approved.status_code == 200
          and approved.json()["state"] == "PendingAuthorValidation")

    messages = store.outbox_messages()
    check("author notification in outbox", len(messages) >= 1)
    token_match = re.search(r"token=([A-Za-z0-9_\-]+)", messages[-1].body)
    token = token_match.group(1) if token_match else ""
    view = client.get(f"/api/validate/{token}")
    check("validation link shows context", view.status_code == 200
          and bool(view.json().get("sentence")))

    confirmed = client.post(f"/api/validate/{token}", json={"decision": "confirm"})
    check("author confirmation via API", confirmed.status_code == 200
          and confirmed.json()["state"] == "Validated")

    replay = client.post(f"/api/validate/{token}", json={"decision": "confirm"})
    check("validation token is single-use", replay.status_code == 410)

    archival_client = config.archival_client()
    record = store.register_and_archive(record_id, archival_client)
    check("mock archival minted a SWHID", record.state.value == "Archived"
          and record.swhid is not None, record.swhid or "")
    store.expose_record(record_id)

    oai_response = client.get(
        "/oai",
        params={"verb": "GetRecord", "identifier": paper_id, "metadataPrefix": METADATA_PREFIX},
    )
    check(
        "OAI-PMH GetRecord carries the SWHID verbatim",
        oai_response.status_code == 200 and record.swhid in oai_response.text,
    )

    links = client.get(f"/api/papers/{paper_id}/links")
    header_values = links.headers.get_list("Link") if hasattr(links.headers, "get_list") else [
        v for k, v in links.headers.items() if k.lower() == "link"
    ]
    grammar_ok = bool(header_values)
    for value in header_values:
        try:
            parse_link_value(value)
        except LinkSyntaxError:
            grammar_ok = False
    check(
        "Signposting headers parse under the web-linking grammar",
        links.status_code == 200 and grammar_ok,
        f"{len(header_values)} Link headers",
    )

    elapsed = time.monotonic() - started
    click.echo(f"demo finished in {elapsed:.1f}s, storage at {storage}")
    if not all(ok for _, ok, _ in checks):
        raise click.ClickException("demo checks failed")


if __name__ == "__main__":
    main()
