"""Publish validated paper-software links.

An OAI-PMH v2.0 provider serves link records under the `sofair_links`
metadata format (relatedIdentifier elements with SWHID values), and
Signposting emits `cite-as`/`describedby` Link header values for the same
links.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Mapping

from .lifecycle import State
from .resolve import AssetCandidate
from .store import LifecycleStore, PaperMeta
from .swhid import parse_swhid

OAI_NS = "http://www.openarchives.org/OAI/2.0/"
METADATA_PREFIX = "sofair_links"
METADATA_NAMESPACE = "urn:sofair:links:1.0"
METADATA_SCHEMA = "urn:sofair:links:1.0:xsd"
DEFAULT_RESOLVER_BASE = "https://archive.softwareheritage.org/"

ET.register_namespace("", OAI_NS)
ET.register_namespace("sl", METADATA_NAMESPACE)


class ExposeError(Exception):
    pass


class NoLinks(ExposeError):
    pass


class NotFound(ExposeError):
    pass


@dataclass(frozen=True)
class RelatedLink:
    swhid: str
    software_name: str
    codemeta_ref: str
    relation_type: str = "References"

    def __post_init__(self):
        parse_swhid(self.swhid)  # every exposed identifier must be well-formed


@dataclass(frozen=True)
class LinkRecord:
    paper_id: str
    paper_title: str
    related: tuple[RelatedLink, ...]


def build_link_record(
    paper: PaperMeta,
    archived_records,
    candidates: Mapping[str, AssetCandidate],
) -> LinkRecord:
    """One related entry per archived asset of the paper, sorted by SWHID."""
    related = {}
    for record in archived_records:
        if record.state not in (State.ARCHIVED, State.EXPOSED):
            raise ExposeError(f"record {record.record_id} is not archived: {record.state.value}")
        if record.swhid is None or record.swhid in related:
            continue
        candidate = candidates.get(record.candidate_id)
        related[record.swhid] = RelatedLink(
            swhid=record.swhid,
            software_name=candidate.canonical_name if candidate else record.candidate_id,
            codemeta_ref=f"/api/assets/{record.candidate_id}/codemeta.json",
        )
    if not related:
        raise NoLinks(paper.paper_id)
    return LinkRecord(
        paper_id=paper.paper_id,
        paper_title=paper.title,
        related=tuple(related[k] for k in sorted(related)),
    )


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class OaiPmhProvider:
    """Answers Identify, ListMetadataFormats, ListRecords and GetRecord."""

    def __init__(
        self,
        store: LifecycleStore,
        base_url: str = "http://fixture.invalid/oai",
        repository_name: str = "Paper-software link provider",
        admin_email: str = "admin@fixture.invalid",
        clock=_utcnow,
    ):
        self.store = store
        self.base_url = base_url
        self.repository_name = repository_name
        self.admin_email = admin_email
        self.clock = clock

    # --- queries over the lifecycle store ---------------------------------

    def exposed_link_record(self, paper_id: str) -> LinkRecord:
        paper = self.store.papers.get(paper_id)
        if paper is None:
            raise NotFound(paper_id)
        records = self.store.records_for_paper(paper_id, states={State.EXPOSED})
        if not records:
            raise NoLinks(paper_id)
        return build_link_record(paper, records, self.store.candidates)

    def exposed_papers(self) -> list[str]:
        return sorted(
            {
                r.paper_id
                for r in self.store.records.values()
                if r.state is State.EXPOSED
            }
        )

    # --- protocol ----------------------------------------------------------

    def handle(self, params: Mapping[str, str]) -> bytes:
        verb = params.get("verb", "")
        if verb == "Identify":
            body = self._identify()
        elif verb == "ListMetadataFormats":
            body = self._list_metadata_formats()
        elif verb == "ListRecords":
            body = self._list_records(params)
        elif verb == "GetRecord":
            body = self._get_record(params)
        else:
            body = _error("badVerb", f"unknown verb {verb!r}")
        return self._envelope(verb, params, body)

    def _envelope(self, verb: str, params: Mapping[str, str], body: ET.Element) -> bytes:
        root = ET.Element(f"{{{OAI_NS}}}OAI-PMH")
        response_date = ET.SubElement(root, f"{{{OAI_NS}}}responseDate")
        response_date.text = self.clock().strftime("%Y-%m-%dT%H:%M:%SZ")
        request = ET.SubElement(root, f"{{{OAI_NS}}}request")
        # a bad verb is not echoed back, per protocol
        if verb in ("Identify", "ListMetadataFormats", "ListRecords", "GetRecord"):
            request.set("verb", verb)
            for key in ("identifier", "metadataPrefix", "resumptionToken", "set"):
                if params.get(key):
                    request.set(key, params[key])
        request.text = self.base_url
        root.append(body)
        return ET.tostring(root, encoding="UTF-8", xml_declaration=True)

    def _identify(self) -> ET.Element:
        identify = ET.Element(f"{{{OAI_NS}}}Identify")
        earliest = min(
            (p.datestamp for p in self.store.papers.values() if p.datestamp),
            default="2024-01-01",
        )
        for tag, text in (
            ("repositoryName", self.repository_name),
            ("baseURL", self.base_url),
            ("protocolVersion", "2.0"),
            ("adminEmail", self.admin_email),
            ("earliestDatestamp", earliest),
            ("deletedRecord", "no"),
            ("granularity", "YYYY-MM-DD"),
        ):
            el = ET.SubElement(identify, f"{{{OAI_NS}}}{tag}")
            el.text = text
        return identify

    def _list_metadata_formats(self) -> ET.Element:
        formats = ET.Element(f"{{{OAI_NS}}}ListMetadataFormats")
        fmt = ET.SubElement(formats, f"{{{OAI_NS}}}metadataFormat")
        for tag, text in (
            ("metadataPrefix", METADATA_PREFIX),
            ("schema", METADATA_SCHEMA),
            ("metadataNamespace", METADATA_NAMESPACE),
        ):
            el = ET.SubElement(fmt, f"{{{OAI_NS}}}{tag}")
            el.text = text
        return formats

    def _check_prefix(self, params: Mapping[str, str]) -> ET.Element | None:
        prefix = params.get("metadataPrefix")
        if not prefix:
            return _error("badArgument", "metadataPrefix is required")
        if prefix != METADATA_PREFIX:
            return _error("cannotDisseminateFormat", f"unsupported prefix {prefix!r}")
        return None

    def _list_records(self, params: Mapping[str, str]) -> ET.Element:
        failure = self._check_prefix(params)
        if failure is not None:
            return failure
        paper_ids = self.exposed_papers()
        if not paper_ids:
            return _error("noRecordsMatch", "no exposed records")
        listing = ET.Element(f"{{{OAI_NS}}}ListRecords")
        for paper_id in paper_ids:
            listing.append(self._record_element(paper_id))
        return listing

    def _get_record(self, params: Mapping[str, str]) -> ET.Element:
        failure = self._check_prefix(params)
        if failure is not None:
            return failure
        identifier = params.get("identifier", "")
        if not identifier:
            return _error("badArgument", "identifier is required")
        try:
            element = self._record_element(identifier)
        except (NotFound, NoLinks):
            return _error("idDoesNotExist", identifier)
        wrapper = ET.Element(f"{{{OAI_NS}}}GetRecord")
        wrapper.append(element)
        return wrapper

    def _record_element(self, paper_id: str) -> ET.Element:
        link_record = self.exposed_link_record(paper_id)
        paper = self.store.papers[paper_id]
        record = ET.Element(f"{{{OAI_NS}}}record")
        header = ET.SubElement(record, f"{{{OAI_NS}}}header")
        identifier = ET.SubElement(header, f"{{{OAI_NS}}}identifier")
        identifier.text = paper_id
        datestamp = ET.SubElement(header, f"{{{OAI_NS}}}datestamp")
        datestamp.text = paper.datestamp or "2024-01-01"
        metadata = ET.SubElement(record, f"{{{OAI_NS}}}metadata")
        links = ET.SubElement(metadata, f"{{{METADATA_NAMESPACE}}}links")
        title = ET.SubElement(links, f"{{{METADATA_NAMESPACE}}}paperTitle")
        title.text = link_record.paper_title
        for related in link_record.related:
            el = ET.SubElement(links, f"{{{METADATA_NAMESPACE}}}relatedIdentifier")
            el.set("relatedIdentifierType", "SWHID")
            el.set("relationType", related.relation_type)
            el.set("softwareName", related.software_name)
            el.set("codemetaRef", related.codemeta_ref)
            el.text = related.swhid
        return record


def _error(code: str, message: str) -> ET.Element:
    el = ET.Element(f"{{{OAI_NS}}}error")
    el.set("code", code)
    el.text = message
    return el


def signposting_headers(
    provider: OaiPmhProvider,
    paper_id: str,
    resolver_base: str = DEFAULT_RESOLVER_BASE,
    public_base: str = "",
) -> list[str]:
    """Link header values for a paper: cite-as per SWHID plus describedby
    per CodeMeta document."""
    try:
        link_record = provider.exposed_link_record(paper_id)
    except NoLinks as exc:
        raise NotFound(paper_id) from exc
    headers = []
    for related in link_record.related:
        headers.append(f'<{resolver_base}{related.swhid}>; rel="cite-as"')
        headers.append(
            f'<{public_base}{related.codemeta_ref}>; rel="describedby"; '
            f'type="application/ld+json"'
        )
    return headers
