"""CodeMeta descriptions of validated asset candidates.

Records serialize to JSON-LD with the codemeta 2.0 context and a fixed key
order (@context, @type, then alphabetical) so fixtures are byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import yaml

from .resolve import AssetCandidate
from .swhid import SwhidError, parse_swhid

CODEMETA_CONTEXT = "https://doi.org/10.5063/schema/codemeta-2.0"


class CodeMetaError(Exception):
    pass


class SchemaError(CodeMetaError):
    pass


class EnrichmentSkipped(CodeMetaError):
    """Repository metadata could not be interpreted; record left unchanged."""


@dataclass(frozen=True)
class CodeMetaRecord:
    name: str
    code_repository: str | None = None
    version: str | None = None
    publisher: str | None = None
    description: str | None = None
    license: str | None = None
    identifier: str | None = None
    reference_publication: tuple[str, ...] = ()
    keywords: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("codemeta record needs a name")
        if self.identifier is not None:
            try:
                parse_swhid(self.identifier)
            except SwhidError as exc:
                raise ValueError(f"identifier is not a SWHID: {exc}") from exc


def _version_sort_key(version: str):
    core = version.lstrip("vV")
    parts = core.split(".")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        return (-1,)


def build_codemeta(candidate: AssetCandidate, paper_id: str) -> CodeMetaRecord:
    """Map a candidate onto a CodeMeta record linked to one paper."""
    version = None
    if candidate.versions:
        top = max(_version_sort_key(v) for v in candidate.versions)
        version = min(v for v in candidate.versions if _version_sort_key(v) == top)
    publisher = None
    if len(candidate.publishers) == 1:
        (publisher,) = candidate.publishers
    return CodeMetaRecord(
        name=candidate.canonical_name,
        code_repository=min(candidate.urls) if candidate.urls else None,
        version=version,
        publisher=publisher,
        reference_publication=(paper_id,),
    )


def parse_repo_metadata(source: "bytes | str") -> dict:
    """Flat key-values from a repository metadata file.

    Accepts a codemeta-style JSON document or a YAML citation-metadata
    file; anything else raises EnrichmentSkipped.
    """
    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EnrichmentSkipped(f"not UTF-8: {exc}") from exc
    else:
        text = source
    parsed = None
    try:
        parsed = json.loads(text)
    except (ValueError, UnicodeDecodeError):
        try:
            parsed = yaml.safe_load(text)
        except yaml.YAMLError:
            parsed = None
    if not isinstance(parsed, dict):
        raise EnrichmentSkipped("repository metadata is not a key-value document")
    flat = {}
    for key in ("description", "license", "version", "authors"):
        value = parsed.get(key)
        if isinstance(value, str) and value.strip():
            flat[key] = value.strip()
        elif key == "authors" and isinstance(value, list):
            flat[key] = value
    if "description" not in flat and isinstance(parsed.get("abstract"), str):
        flat["description"] = parsed["abstract"].strip()
    return flat


def enrich_from_repo(record: CodeMetaRecord, repo_doc) -> CodeMetaRecord:
    """Fill gaps from repository metadata.

    Extraction wins over enrichment for every field except description and
    license, which always follow the repository when present.
    """
    if not isinstance(repo_doc, dict):
        try:
            repo_doc = parse_repo_metadata(repo_doc)
        except EnrichmentSkipped:
            return record
    updates = {}
    if repo_doc.get("description"):
        updates["description"] = repo_doc["description"]
    if repo_doc.get("license"):
        updates["license"] = repo_doc["license"]
    if repo_doc.get("version") and record.version is None:
        updates["version"] = repo_doc["version"]
    return replace(record, **updates) if updates else record


_JSONLD_FIELDS = {
    "codeRepository": "code_repository",
    "description": "description",
    "identifier": "identifier",
    "license": "license",
    "publisher": "publisher",
    "version": "version",
}


def serialize_jsonld(record: CodeMetaRecord) -> bytes:
    doc: dict = {"@context": CODEMETA_CONTEXT, "@type": "SoftwareSourceCode"}
    body: dict = {"name": record.name}
    for json_key, attr in _JSONLD_FIELDS.items():
        value = getattr(record, attr)
        if value is not None:
            body[json_key] = value
    if record.keywords:
        body["keywords"] = list(record.keywords)
    if record.reference_publication:
        body["referencePublication"] = list(record.reference_publication)
    for key in sorted(body):
        doc[key] = body[key]
    return json.dumps(doc, indent=2, ensure_ascii=False).encode("utf-8")


def parse_jsonld(data: bytes) -> CodeMetaRecord:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise SchemaError(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict) or "@context" not in doc:
        raise SchemaError("missing @context")
    if not doc.get("name"):
        raise SchemaError("missing name")
    try:
        return CodeMetaRecord(
            name=doc["name"],
            code_repository=doc.get("codeRepository"),
            version=doc.get("version"),
            publisher=doc.get("publisher"),
            description=doc.get("description"),
            license=doc.get("license"),
            identifier=doc.get("identifier"),
            reference_publication=tuple(doc.get("referencePublication", ())),
            keywords=tuple(doc.get("keywords", ())),
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
