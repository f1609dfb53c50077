"""Pipeline orchestration: harvest, parse, extract, resolve, and seed the
lifecycle store, driven by a TOML configuration file."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .archival import HttpArchivalClient, MockArchivalClient
from .docmodel import Document, DocumentError, from_plaintext, from_tei
from .extract import (
    ExtractConfig,
    Gazetteer,
    MentionGroup,
    attach_attributes,
    extract_mentions,
    with_style,
)
from .harvest import (
    FixtureFetcher,
    HarvestError,
    NoFulltext,
    RepositoryEndpoint,
    UnsupportedFormat,
    UrllibFetcher,
    fetch_fulltext,
    harvest_all,
)
from .resolve import AssetCandidate, align_to_catalog, cluster, load_catalog_tsv
from .store import LifecycleStore, PaperMeta


class ConfigError(Exception):
    pass


class PipelineError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    base_url: str
    gazetteer_path: Path
    storage_dir: Path
    metadata_prefix: str = "oai_dc"
    set_spec: str | None = None
    fixture_dir: Path | None = None
    catalog_path: Path | None = None
    dashboard_dist: Path | None = None
    threshold: float = 0.75
    min_confidence: float = 0.5
    archival_mode: str = "mock"
    archival_base_url: str = ""
    listen: str = "127.0.0.1:8765"
    public_base: str = "http://127.0.0.1:8765"
    resolver_base: str = "https://archive.softwareheritage.org/"

    def validate(self):
        if not self.gazetteer_path.exists():
            raise ConfigError(f"gazetteer not found: {self.gazetteer_path}")
        if self.catalog_path is not None and not self.catalog_path.exists():
            raise ConfigError(f"catalog not found: {self.catalog_path}")
        if self.fixture_dir is not None and not self.fixture_dir.exists():
            raise ConfigError(f"fixture dir not found: {self.fixture_dir}")
        for name, value in (("threshold", self.threshold), ("min_confidence", self.min_confidence)):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.archival_mode not in ("mock", "http"):
            raise ConfigError(f"archival mode must be mock or http, got {self.archival_mode!r}")
        if self.archival_mode == "http" and not self.archival_base_url:
            raise ConfigError("archival mode http needs archival.base_url")

    @classmethod
    def from_toml(cls, path: "str | Path") -> "PipelineConfig":
        path = Path(path)
        try:
            with path.open("rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

        def resolve(value):
            p = Path(value)
            return p if p.is_absolute() else (path.parent / p).resolve()

        harvest = raw.get("harvest", {})
        paths = raw.get("paths", {})
        extract = raw.get("extract", {})
        resolve_cfg = raw.get("resolve", {})
        archival = raw.get("archival", {})
        serve = raw.get("serve", {})
        if "base_url" not in harvest:
            raise ConfigError("harvest.base_url is required")
        if "gazetteer" not in paths or "storage" not in paths:
            raise ConfigError("paths.gazetteer and paths.storage are required")
        return cls(
            base_url=harvest["base_url"],
            metadata_prefix=harvest.get("metadata_prefix", "oai_dc"),
            set_spec=harvest.get("set"),
            fixture_dir=resolve(harvest["fixture_dir"]) if harvest.get("fixture_dir") else None,
            gazetteer_path=resolve(paths["gazetteer"]),
            catalog_path=resolve(paths["catalog"]) if paths.get("catalog") else None,
            storage_dir=resolve(paths["storage"]),
            dashboard_dist=resolve(paths["dashboard_dist"]) if paths.get("dashboard_dist") else None,
            min_confidence=float(extract.get("min_confidence", 0.5)),
            threshold=float(resolve_cfg.get("threshold", 0.75)),
            archival_mode=archival.get("mode", "mock"),
            archival_base_url=archival.get("base_url", ""),
            listen=serve.get("listen", "127.0.0.1:8765"),
            public_base=serve.get("public_base", "http://127.0.0.1:8765"),
            resolver_base=serve.get("resolver_base", "https://archive.softwareheritage.org/"),
        )

    def fetcher(self):
        if self.fixture_dir is not None:
            return FixtureFetcher(self.fixture_dir)
        return UrllibFetcher()

    def archival_client(self):
        if self.archival_mode == "http":
            return HttpArchivalClient(self.archival_base_url)
        return MockArchivalClient()

    def open_store(self) -> LifecycleStore:
        return LifecycleStore(self.storage_dir, public_base=self.public_base)


@dataclass
class PipelineReport:
    harvested_records: int = 0
    documents: int = 0
    skipped_documents: int = 0
    mentions: int = 0
    groups: int = 0
    candidates: int = 0
    records_created: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def doc_id_of(oai_identifier: str) -> str:
    return oai_identifier.rsplit(":", 1)[-1]


def _parse_document(body: bytes, media_type: str, doc_id: str) -> Document:
    if media_type in ("application/tei+xml", "text/xml"):
        return from_tei(body, doc_id)
    return from_plaintext(body.decode("utf-8"), doc_id)


def harvest_stage(config: PipelineConfig, fetcher=None):
    """Fetch every record and its full text; returns (papers, documents)."""
    fetcher = fetcher or config.fetcher()
    endpoint = RepositoryEndpoint(
        base_url=config.base_url,
        metadata_prefix=config.metadata_prefix,
        set_spec=config.set_spec,
    )
    papers: list[PaperMeta] = []
    documents: dict[str, Document] = {}
    paper_of_doc: dict[str, str] = {}
    skipped = 0
    for record in harvest_all(endpoint, fetcher):
        papers.append(
            PaperMeta(
                paper_id=record.oai_identifier,
                title=record.title,
                creators=record.creators,
                datestamp=str(record.datestamp),
            )
        )
        doc_id = doc_id_of(record.oai_identifier)
        try:
            body, media_type = fetch_fulltext(record, fetcher)
            documents[doc_id] = _parse_document(body, media_type, doc_id)
            paper_of_doc[doc_id] = record.oai_identifier
        except (NoFulltext, UnsupportedFormat, HarvestError, DocumentError):
            skipped += 1
    return papers, documents, paper_of_doc, skipped


def extract_stage(config: PipelineConfig, documents: dict[str, Document]):
    gazetteer = Gazetteer.from_tsv(config.gazetteer_path)
    cfg = ExtractConfig(min_confidence=config.min_confidence)
    mentions_by_doc = {}
    groups: list[MentionGroup] = []
    for doc_id in sorted(documents):
        doc = documents[doc_id]
        mentions = extract_mentions(doc, gazetteer, cfg)
        mentions_by_doc[doc_id] = mentions
        for group in attach_attributes(mentions, doc):
            groups.append(with_style(group, doc.references))
    return mentions_by_doc, groups


def resolve_stage(config: PipelineConfig, groups: list[MentionGroup]) -> list[AssetCandidate]:
    candidates = cluster(groups, threshold=config.threshold)
    if config.catalog_path is not None:
        catalog = load_catalog_tsv(config.catalog_path)
        candidates = [
            AssetCandidate(**{**c.__dict__, "catalog_match": align_to_catalog(c, catalog)})
            for c in candidates
        ]
    return candidates


def _evidence_for(group: MentionGroup, documents: dict[str, Document]) -> dict:
    doc_id = group.group_id.split(":", 1)[0]
    doc = documents[doc_id]
    sent_span = doc.sentences[group.name.sentence_index]
    mentions = []
    for m in (group.name, group.version, group.publisher, group.url):
        if m is None:
            continue
        mentions.append(
            {
                "component": m.component.value,
                "start_byte": m.span.start_byte - sent_span.start_byte,
                "end_byte": m.span.end_byte - sent_span.start_byte,
                "surface": m.surface,
            }
        )
    return {"sentence": group.sentence_text, "mentions": mentions, "style": group.style.value}


def run_pipeline(config: PipelineConfig, fetcher=None, store: LifecycleStore | None = None) -> PipelineReport:
    """Run harvest -> parse -> extract -> resolve and create lifecycle
    records (Extracted, then routed to the manager queue)."""
    config.validate()
    report = PipelineReport()

    try:
        papers, documents, paper_of_doc, skipped = harvest_stage(config, fetcher)
    except Exception as exc:
        raise PipelineError("harvest", exc) from exc
    report.harvested_records = len(papers)
    report.documents = len(documents)
    report.skipped_documents = skipped

    try:
        mentions_by_doc, groups = extract_stage(config, documents)
    except Exception as exc:
        raise PipelineError("extract", exc) from exc
    report.mentions = sum(len(m) for m in mentions_by_doc.values())
    report.groups = len(groups)

    try:
        candidates = resolve_stage(config, groups)
    except Exception as exc:
        raise PipelineError("resolve", exc) from exc
    report.candidates = len(candidates)

    try:
        store = store or config.open_store()
        store.save_papers(papers)
        store.save_candidates(candidates)
        group_by_id = {g.group_id: g for g in groups}
        for candidate in candidates:
            papers_of_candidate: dict[str, str] = {}
            for group_id in sorted(candidate.member_groups):
                doc_id = group_id.split(":", 1)[0]
                paper_id = paper_of_doc.get(doc_id)
                if paper_id is not None and paper_id not in papers_of_candidate:
                    papers_of_candidate[paper_id] = group_id
            for paper_id, group_id in sorted(papers_of_candidate.items()):
                record = store.create_record(
                    paper_id,
                    candidate.candidate_id,
                    evidence=_evidence_for(group_by_id[group_id], documents),
                )
                if record.last_seq == 1:  # freshly created, not a re-run
                    store.route_to_manager(record.record_id)
                report.records_created += 1
    except Exception as exc:
        raise PipelineError("lifecycle", exc) from exc

    return report


def write_stage_outputs(config: PipelineConfig, mentions_by_doc, groups):
    """Persist extraction artifacts next to the event log."""
    from .extract import dump_mentions_jsonl

    storage = Path(config.storage_dir)
    storage.mkdir(parents=True, exist_ok=True)
    all_mentions = [m for doc_id in sorted(mentions_by_doc) for m in mentions_by_doc[doc_id]]
    (storage / "mentions.jsonl").write_text(dump_mentions_jsonl(all_mentions), encoding="utf-8")
    lines = []
    for g in sorted(groups, key=lambda g: g.group_id):
        lines.append(
            json.dumps(
                {
                    "group_id": g.group_id,
                    "name": g.name.surface,
                    "version": g.version.surface if g.version else None,
                    "publisher": g.publisher.surface if g.publisher else None,
                    "url": g.url.surface if g.url else None,
                    "style": g.style.value,
                },
                ensure_ascii=False,
            )
        )
    (storage / "groups.jsonl").write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
    )
