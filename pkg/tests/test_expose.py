import xml.etree.ElementTree as ET
from datetime import datetime, timezone

import pytest

from softassets.archival import MockArchivalClient
from softassets.expose import (
    METADATA_NAMESPACE,
    METADATA_PREFIX,
    OAI_NS,
    LinkRecord,
    NoLinks,
    NotFound,
    OaiPmhProvider,
    build_link_record,
    signposting_headers,
)
from softassets.lifecycle import State
from softassets.resolve import AssetCandidate
from softassets.store import LifecycleStore, PaperMeta
from softassets.swhid import parse_swhid
from softassets.weblink import LinkSyntaxError, parse_link_value


def make_candidate(candidate_id, name, versions=()):
    return AssetCandidate(
        candidate_id=candidate_id,
        canonical_name=name,
        aliases=frozenset({name}),
        urls=frozenset(),
        publishers=frozenset(),
        versions=frozenset(versions),
        member_groups=frozenset({f"{candidate_id}:g"}),
    )


@pytest.fixture()
def exposed_store(tmp_path):
    store = LifecycleStore(tmp_path / "storage", token_factory=lambda: "tok-fixed")
    store.save_papers(
        [
            PaperMeta("oai:fixture.invalid:doc01", "Study 01", ("Ada Lovelace",), "2024-05-01"),
            PaperMeta("oai:fixture.invalid:doc99", "Study 99 (no links)", (), "2024-05-01"),
        ]
    )
    store.save_candidates(
        [make_candidate("cand-a", "SPSS", versions=("21",)), make_candidate("cand-b", "NumPy")]
    )
    client = MockArchivalClient(polls_until_done=1)
    for candidate_id in ("cand-a", "cand-b"):
        record = store.create_record("oai:fixture.invalid:doc01", candidate_id)
        store.route_to_manager(record.record_id)
        _, token, _ = store.manager_approve(record.record_id)
        store.apply_author_decision(token, "confirm")
        store.register_and_archive(record.record_id, client)
        store.expose_record(record.record_id)
    return store


@pytest.fixture()
def provider(exposed_store):
    return OaiPmhProvider(
        exposed_store,
        clock=lambda: datetime(2024, 6, 1, tzinfo=timezone.utc),
    )


def oai_find(root, path):
    return root.find(path.replace("oai:", f"{{{OAI_NS}}}"))


def assert_valid_envelope(xml_bytes):
    root = ET.fromstring(xml_bytes)
    assert root.tag == f"{{{OAI_NS}}}OAI-PMH"
    assert oai_find(root, "oai:responseDate") is not None
    assert oai_find(root, "oai:request") is not None
    children = [child.tag for child in root]
    assert len(children) == 3
    return root


# --- build_link_record ----------------------------------------------------------


def test_build_link_record_sorted_by_swhid(exposed_store):
    paper = exposed_store.papers["oai:fixture.invalid:doc01"]
    records = exposed_store.records_for_paper(paper.paper_id, states={State.EXPOSED})
    link_record = build_link_record(paper, records, exposed_store.candidates)
    assert len(link_record.related) == 2
    swhids = [r.swhid for r in link_record.related]
    assert swhids == sorted(swhids)
    for related in link_record.related:
        parse_swhid(related.swhid)
        assert related.relation_type == "References"
        assert related.codemeta_ref.endswith("/codemeta.json")


def test_build_link_record_no_assets(exposed_store):
    paper = exposed_store.papers["oai:fixture.invalid:doc99"]
    with pytest.raises(NoLinks):
        build_link_record(paper, [], exposed_store.candidates)


def test_build_link_record_duplicate_swhids_collapse(exposed_store):
    paper = exposed_store.papers["oai:fixture.invalid:doc01"]
    records = exposed_store.records_for_paper(paper.paper_id, states={State.EXPOSED})
    doubled = list(records) + list(records)
    link_record = build_link_record(paper, doubled, exposed_store.candidates)
    assert len(link_record.related) == 2


# --- OAI-PMH provider -----------------------------------------------------------


def test_get_record_contains_swhid_verbatim(provider, exposed_store):
    response = provider.handle(
        {
            "verb": "GetRecord",
            "identifier": "oai:fixture.invalid:doc01",
            "metadataPrefix": METADATA_PREFIX,
        }
    )
    root = assert_valid_envelope(response)
    text = response.decode("utf-8")
    records = exposed_store.records_for_paper(
        "oai:fixture.invalid:doc01", states={State.EXPOSED}
    )
    for record in records:
        assert record.swhid in text
    related = root.findall(f".//{{{METADATA_NAMESPACE}}}relatedIdentifier")
    assert len(related) == 2
    for el in related:
        assert el.get("relatedIdentifierType") == "SWHID"
        assert el.get("relationType") == "References"
        parse_swhid(el.text)


def test_get_record_matches_live_store(provider, exposed_store):
    response = provider.handle(
        {
            "verb": "GetRecord",
            "identifier": "oai:fixture.invalid:doc01",
            "metadataPrefix": METADATA_PREFIX,
        }
    )
    root = ET.fromstring(response)
    related = root.findall(f".//{{{METADATA_NAMESPACE}}}relatedIdentifier")
    live = provider.exposed_link_record("oai:fixture.invalid:doc01")
    assert [(el.text, el.get("softwareName")) for el in related] == [
        (r.swhid, r.software_name) for r in live.related
    ]


def test_bad_verb(provider):
    root = assert_valid_envelope(provider.handle({"verb": "Frobnicate"}))
    error = oai_find(root, "oai:error")
    assert error.get("code") == "badVerb"


def test_unknown_identifier(provider):
    root = assert_valid_envelope(
        provider.handle(
            {"verb": "GetRecord", "identifier": "oai:nope", "metadataPrefix": METADATA_PREFIX}
        )
    )
    assert oai_find(root, "oai:error").get("code") == "idDoesNotExist"


def test_paper_without_exposed_links_is_absent(provider):
    root = assert_valid_envelope(
        provider.handle(
            {
                "verb": "GetRecord",
                "identifier": "oai:fixture.invalid:doc99",
                "metadataPrefix": METADATA_PREFIX,
            }
        )
    )
    assert oai_find(root, "oai:error").get("code") == "idDoesNotExist"


def test_list_records_empty_store(tmp_path):
    store = LifecycleStore(tmp_path / "empty")
    provider = OaiPmhProvider(store)
    root = assert_valid_envelope(
        provider.handle({"verb": "ListRecords", "metadataPrefix": METADATA_PREFIX})
    )
    assert oai_find(root, "oai:error").get("code") == "noRecordsMatch"


def test_list_records_lists_exposed_papers(provider):
    root = assert_valid_envelope(
        provider.handle({"verb": "ListRecords", "metadataPrefix": METADATA_PREFIX})
    )
    records = root.findall(f".//{{{OAI_NS}}}record")
    assert len(records) == 1


def test_list_records_requires_prefix(provider):
    root = assert_valid_envelope(provider.handle({"verb": "ListRecords"}))
    assert oai_find(root, "oai:error").get("code") == "badArgument"
    root = assert_valid_envelope(
        provider.handle({"verb": "ListRecords", "metadataPrefix": "oai_dc"})
    )
    assert oai_find(root, "oai:error").get("code") == "cannotDisseminateFormat"


def test_identify(provider):
    root = assert_valid_envelope(provider.handle({"verb": "Identify"}))
    identify = oai_find(root, "oai:Identify")
    assert identify.find(f"{{{OAI_NS}}}protocolVersion").text == "2.0"
    assert identify.find(f"{{{OAI_NS}}}earliestDatestamp").text == "2024-05-01"


def test_list_metadata_formats_advertises_sofair_links(provider):
    root = assert_valid_envelope(provider.handle({"verb": "ListMetadataFormats"}))
    prefixes = [el.text for el in root.findall(f".//{{{OAI_NS}}}metadataPrefix")]
    assert prefixes == [METADATA_PREFIX]


def test_every_swhid_in_responses_parses(provider):
    response = provider.handle({"verb": "ListRecords", "metadataPrefix": METADATA_PREFIX})
    root = ET.fromstring(response)
    swhids = [el.text for el in root.iter(f"{{{METADATA_NAMESPACE}}}relatedIdentifier")]
    assert swhids
    for text in swhids:
        parse_swhid(text)


# --- signposting ----------------------------------------------------------------


def test_signposting_two_headers_per_asset(provider):
    headers = signposting_headers(provider, "oai:fixture.invalid:doc01")
    assert len(headers) == 4  # two assets: cite-as + describedby each
    parsed = [parse_link_value(h) for h in headers]
    rels = [p.param("rel") for p in parsed]
    assert rels.count("cite-as") == 2
    assert rels.count("describedby") == 2
    for p in parsed:
        if p.param("rel") == "cite-as":
            assert p.target.startswith("https://archive.softwareheritage.org/swh:1:dir:")
        else:
            assert p.param("type") == "application/ld+json"
            assert p.target.endswith("/codemeta.json")


def test_signposting_unknown_paper(provider):
    with pytest.raises(NotFound):
        signposting_headers(provider, "oai:unknown")
    with pytest.raises(NotFound):
        signposting_headers(provider, "oai:fixture.invalid:doc99")


# --- web linking grammar oracle ---------------------------------------------------


def test_weblink_parses_typical_values():
    link = parse_link_value('<https://example.org/x>; rel="cite-as"')
    assert link.target == "https://example.org/x"
    assert link.param("rel") == "cite-as"
    link = parse_link_value('</api/a/codemeta.json>; rel="describedby"; type="application/ld+json"')
    assert link.param("type") == "application/ld+json"


def test_weblink_accepts_token_params():
    link = parse_link_value("<https://example.org>; rel=preload; as=script")
    assert link.param("rel") == "preload"


@pytest.mark.parametrize(
    "bad",
    [
        "https://example.org; rel=x",  # missing angle brackets
        "<https://example.org> rel=x",  # missing semicolon
        '<https://example.org>; rel="unterminated',
        "<https://exa mple.org>; rel=x",  # space inside URI
        "<https://example.org>;",  # dangling separator
    ],
)
def test_weblink_rejects_violations(bad):
    with pytest.raises(LinkSyntaxError):
        parse_link_value(bad)
