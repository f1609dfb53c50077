"""OAI-PMH client: page through ListRecords with resumption tokens and
fetch the linked full texts.

Only the Dublin Core subset needed downstream is parsed (title, creator,
identifier, date); the full-text link is the first dc:identifier whose
value is a URL ending in .xml or .txt.
"""

from __future__ import annotations

import time
import urllib.error
import urllib.parse
import urllib.request
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Iterator, Protocol

OAI_NS = "http://www.openarchives.org/OAI/2.0/"
DC_NS = "http://purl.org/dc/elements/1.1/"

ACCEPTED_MEDIA_TYPES = ("application/tei+xml", "text/xml", "text/plain")

RETRY_ATTEMPTS = 3
BACKOFF_START_SECONDS = 0.5


class HarvestError(Exception):
    pass


class OaiParseError(HarvestError):
    pass


class OaiProtocolError(HarvestError):
    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


class NoFulltext(HarvestError):
    pass


class UnsupportedFormat(HarvestError):
    pass


@dataclass(frozen=True)
class RepositoryEndpoint:
    base_url: str
    metadata_prefix: str = "oai_dc"
    set_spec: str | None = None

    def __post_init__(self):
        scheme = urllib.parse.urlparse(self.base_url).scheme
        if scheme not in ("http", "https"):
            raise ValueError(f"base_url must be absolute http(s), got {self.base_url!r}")
        if not self.metadata_prefix:
            raise ValueError("metadata_prefix must be non-empty")


@dataclass(frozen=True)
class HarvestRecord:
    oai_identifier: str
    datestamp: "date | datetime"
    deleted: bool = False
    title: str = ""
    creators: tuple[str, ...] = ()
    fulltext_link: str | None = None


@dataclass(frozen=True)
class ResumptionToken:
    value: str
    complete_list_size: int | None = None
    cursor: int | None = None


@dataclass(frozen=True)
class HttpResponse:
    status: int
    media_type: str
    body: bytes


class HttpFetcher(Protocol):
    def get(self, url: str) -> HttpResponse: ...


class UrllibFetcher:
    """Stdlib-backed fetcher for real endpoints."""

    def __init__(self, timeout: float = 30.0):
        self.timeout = timeout

    def get(self, url: str) -> HttpResponse:
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                media_type = resp.headers.get_content_type()
                return HttpResponse(resp.status, media_type, resp.read())
        except urllib.error.HTTPError as exc:
            return HttpResponse(exc.code, "", exc.read() or b"")


class FixtureFetcher:
    """Serves a directory of static files as if it were a repository.

    ListRecords requests resolve to oai/<token>.xml (first page: page1);
    anything else resolves to docs/<basename>. Media types follow the file
    extension.
    """

    def __init__(self, fixture_dir: "str | Path"):
        self.fixture_dir = Path(fixture_dir)
        self.requests: list[str] = []

    def get(self, url: str) -> HttpResponse:
        self.requests.append(url)
        parsed = urllib.parse.urlparse(url)
        params = urllib.parse.parse_qs(parsed.query)
        if params.get("verb"):
            token = params.get("resumptionToken", ["page1"])[0]
            path = self.fixture_dir / "oai" / f"{token}.xml"
            if not path.exists():
                return HttpResponse(404, "text/plain", b"no such page")
            return HttpResponse(200, "text/xml", path.read_bytes())
        path = self.fixture_dir / "docs" / Path(parsed.path).name
        if not path.exists():
            return HttpResponse(404, "text/plain", b"no such document")
        return HttpResponse(200, media_type_for(path.name), path.read_bytes())


def media_type_for(filename: str) -> str:
    if filename.endswith(".tei.xml"):
        return "application/tei+xml"
    if filename.endswith(".xml"):
        return "text/xml"
    if filename.endswith(".txt"):
        return "text/plain"
    return "application/octet-stream"


def _q(tag: str, ns: str = OAI_NS) -> str:
    return f"{{{ns}}}{tag}"


def _parse_datestamp(text: str) -> "date | datetime":
    text = text.strip()
    if len(text) == 10:
        return date.fromisoformat(text)
    return datetime.fromisoformat(text.replace("Z", "+00:00"))


def _fulltext_link(identifiers: list[str]) -> str | None:
    for value in identifiers:
        parsed = urllib.parse.urlparse(value.strip())
        if parsed.scheme in ("http", "https") and parsed.path.endswith((".xml", ".txt")):
            return value.strip()
    return None


def parse_list_records(xml_bytes: bytes) -> tuple[list[HarvestRecord], ResumptionToken | None]:
    """One page of a ListRecords response.

    Returns the records plus the resumption token when a non-empty one is
    present; an OAI <error> element raises OaiProtocolError with its code.
    """
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise OaiParseError(str(exc)) from exc

    error = root.find(_q("error"))
    if error is not None:
        raise OaiProtocolError(error.get("code", "unknown"), (error.text or "").strip())

    records = []
    for record_el in root.iter(_q("record")):
        header = record_el.find(_q("header"))
        if header is None:
            continue
        identifier = (header.findtext(_q("identifier")) or "").strip()
        datestamp = _parse_datestamp(header.findtext(_q("datestamp")) or "1970-01-01")
        deleted = header.get("status") == "deleted"
        title = ""
        creators: list[str] = []
        dc_identifiers: list[str] = []
        metadata = record_el.find(_q("metadata"))
        if metadata is not None and not deleted:
            title = (metadata.findtext(f".//{_q('title', DC_NS)}") or "").strip()
            creators = [
                (el.text or "").strip()
                for el in metadata.findall(f".//{_q('creator', DC_NS)}")
                if (el.text or "").strip()
            ]
            dc_identifiers = [
                el.text or "" for el in metadata.findall(f".//{_q('identifier', DC_NS)}")
            ]
        records.append(
            HarvestRecord(
                oai_identifier=identifier,
                datestamp=datestamp,
                deleted=deleted,
                title=title,
                creators=tuple(creators),
                fulltext_link=None if deleted else _fulltext_link(dc_identifiers),
            )
        )

    token = None
    token_el = root.find(f".//{_q('resumptionToken')}")
    if token_el is not None and (token_el.text or "").strip():
        size = token_el.get("completeListSize")
        cursor = token_el.get("cursor")
        token = ResumptionToken(
            value=token_el.text.strip(),
            complete_list_size=int(size) if size else None,
            cursor=int(cursor) if cursor else None,
        )
    return records, token


def build_list_records_url(endpoint: RepositoryEndpoint, token: ResumptionToken | None = None) -> str:
    if token is not None:
        params = {"verb": "ListRecords", "resumptionToken": token.value}
    else:
        params = {"verb": "ListRecords", "metadataPrefix": endpoint.metadata_prefix}
        if endpoint.set_spec:
            params["set"] = endpoint.set_spec
    return f"{endpoint.base_url}?{urllib.parse.urlencode(params)}"


def _fetch_page(http: HttpFetcher, url: str, sleep) -> bytes:
    last_error: Exception | None = None
    for attempt in range(RETRY_ATTEMPTS):
        if attempt:
            sleep(BACKOFF_START_SECONDS * 2 ** (attempt - 1))
        try:
            resp = http.get(url)
        except OSError as exc:
            last_error = exc
            continue
        if resp.status == 200:
            return resp.body
        last_error = HarvestError(f"HTTP {resp.status} for {url}")
    raise HarvestError(f"harvest aborted after {RETRY_ATTEMPTS} attempts: {last_error}")


def harvest_all(
    endpoint: RepositoryEndpoint,
    http: HttpFetcher,
    sleep=time.sleep,
) -> Iterator[HarvestRecord]:
    """Yield every record of the endpoint exactly once across all pages.

    Each page is retried up to 3 times with exponential backoff starting at
    500 ms. noRecordsMatch completes with zero records; any other protocol
    error aborts the harvest.
    """
    token: ResumptionToken | None = None
    seen: set[str] = set()
    first_page = True
    while True:
        url = build_list_records_url(endpoint, token)
        body = _fetch_page(http, url, sleep)
        try:
            records, token = parse_list_records(body)
        except OaiProtocolError as exc:
            if exc.code == "noRecordsMatch" and first_page:
                return
            raise
        first_page = False
        for record in records:
            if record.oai_identifier in seen:
                continue
            seen.add(record.oai_identifier)
            yield record
        if token is None:
            return


def fetch_fulltext(record: HarvestRecord, http: HttpFetcher) -> tuple[bytes, str]:
    """Fetch the record's full text; only TEI/XML and plain text qualify."""
    if record.deleted or not record.fulltext_link:
        raise NoFulltext(record.oai_identifier)
    resp = http.get(record.fulltext_link)
    if resp.status != 200:
        raise HarvestError(f"HTTP {resp.status} for {record.fulltext_link}")
    media_type = resp.media_type.split(";")[0].strip().lower()
    if media_type not in ACCEPTED_MEDIA_TYPES:
        raise UnsupportedFormat(media_type)
    return resp.body, media_type
