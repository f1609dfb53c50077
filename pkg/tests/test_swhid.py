import random

import pytest

from softassets.archival import (
    ArchivalReceipt,
    MockArchivalClient,
    NotFound,
    RetryableError,
    bundle_request_id,
    poll_archival,
    request_archival,
)
from softassets.swhid import (
    DirectoryTree,
    InvalidEntryName,
    MalformedSwhid,
    Swhid,
    TreeEntry,
    UnsupportedVersion,
    content_swhid,
    directory_swhid,
    format_swhid,
    parse_swhid,
    tree_from_manifest,
)

from .gitoracle import git_blob_digest, git_tree_digest

EMPTY_BLOB = "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
EMPTY_TREE = "4b825dc642cb6eb9a060e54bf8d69288fbee4904"


def test_content_swhid_empty():
    assert format_swhid(content_swhid(b"")) == f"swh:1:cnt:{EMPTY_BLOB}"


def test_content_swhid_hello_matches_git():
    data = b"hello world\n"
    assert content_swhid(data).digest == git_blob_digest(data) == (
        "3b18e512dba79e4c8300dd08aeb37f8e728b8dad"
    )


def test_content_swhid_distinct():
    assert content_swhid(b"a").digest != content_swhid(b"b").digest


def test_content_swhid_random_files_match_git():
    rng = random.Random(7)
    for _ in range(10):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(200)))
        assert content_swhid(data).digest == git_blob_digest(data)


def test_directory_swhid_empty_tree():
    assert directory_swhid(DirectoryTree({})).digest == EMPTY_TREE


def test_directory_swhid_single_file_matches_git():
    tree = tree_from_manifest({"a.txt": b"x"})
    assert directory_swhid(tree).digest == git_tree_digest(tree)


def test_directory_swhid_entry_order_irrelevant():
    t1 = tree_from_manifest({"a": b"1", "b": b"2"})
    t2 = DirectoryTree(
        {"b": TreeEntry("file", b"2"), "a": TreeEntry("file", b"1")}
    )
    assert directory_swhid(t1) == directory_swhid(t2)


def test_directory_swhid_git_sort_rule():
    # "sub" sorts as "sub/" among files, after "sub.txt"
    tree = DirectoryTree(
        {
            "sub": TreeEntry("dir", tree_from_manifest({"inner.txt": b"i"})),
            "sub.txt": TreeEntry("file", b"s"),
            "sub0": TreeEntry("file", b"z"),
        }
    )
    assert directory_swhid(tree).digest == git_tree_digest(tree)


def test_directory_swhid_modes_match_git():
    tree = DirectoryTree(
        {
            "run.sh": TreeEntry("executable", b"#!/bin/sh\n"),
            "link": TreeEntry("symlink", b"run.sh"),
            "data.txt": TreeEntry("file", b"d"),
        }
    )
    assert directory_swhid(tree).digest == git_tree_digest(tree)


def test_invalid_entry_names():
    with pytest.raises(InvalidEntryName):
        DirectoryTree({"": TreeEntry("file", b"")})
    with pytest.raises(InvalidEntryName):
        DirectoryTree({"a/b": TreeEntry("file", b"")})
    with pytest.raises(InvalidEntryName):
        DirectoryTree({"a\x00b": TreeEntry("file", b"")})


def test_parse_swhid_content():
    swhid = parse_swhid(f"swh:1:cnt:{EMPTY_BLOB}")
    assert swhid.object_type == "cnt"
    assert swhid.digest == EMPTY_BLOB
    assert swhid.qualifiers == ()


def test_parse_swhid_unsupported_version():
    with pytest.raises(UnsupportedVersion):
        parse_swhid(f"swh:2:cnt:{EMPTY_BLOB}")


def test_parse_swhid_qualifier():
    text = f"swh:1:dir:{EMPTY_TREE};origin=https://example.org/r"
    swhid = parse_swhid(text)
    assert swhid.qualifiers == (("origin", "https://example.org/r"),)
    assert format_swhid(swhid) == text


@pytest.mark.parametrize(
    "bad",
    [
        "swh:1:xyz:" + EMPTY_BLOB,
        "swh:1:cnt:1234",
        "swh:1:cnt:" + EMPTY_BLOB.upper(),
        "swh:1:cnt:" + EMPTY_BLOB + ";nope=1",
        "swh:1:cnt:" + EMPTY_BLOB + ";origin=a;origin=b",
        "not-a-swhid",
    ],
)
def test_parse_swhid_malformed(bad):
    with pytest.raises(MalformedSwhid):
        parse_swhid(bad)


def test_format_orders_qualifiers_canonically():
    swhid = Swhid(
        object_type="dir",
        digest=EMPTY_TREE,
        qualifiers=(("path", "/src"), ("origin", "https://o.example")),
    )
    assert format_swhid(swhid).endswith(";origin=https://o.example;path=/src")


def test_parse_format_roundtrip_generated():
    rng = random.Random(13)
    for _ in range(25):
        object_type = rng.choice(["cnt", "dir", "rev", "rel", "snp"])
        digest = "".join(rng.choice("0123456789abcdef") for _ in range(40))
        n_quals = rng.randrange(4)
        keys = rng.sample(["origin", "visit", "anchor", "path", "lines"], n_quals)
        keys.sort(key=["origin", "visit", "anchor", "path", "lines"].index)
        qualifiers = tuple((k, f"val{rng.randrange(100)}") for k in keys)
        text = format_swhid(Swhid(object_type, digest, qualifiers))
        assert format_swhid(parse_swhid(text)) == text


# --- archival client contract -------------------------------------------------


def test_mock_request_pending_with_deterministic_id():
    client = MockArchivalClient()
    bundle = tree_from_manifest({"readme.md": b"hi"})
    receipt = request_archival(client, bundle)
    assert receipt.status == "pending"
    assert receipt.request_id == bundle_request_id(bundle)


def test_mock_request_idempotent():
    client = MockArchivalClient()
    bundle = tree_from_manifest({"readme.md": b"hi"})
    first = request_archival(client, bundle)
    second = request_archival(client, bundle)
    assert first.request_id == second.request_id


def test_mock_fail_once_then_success():
    client = MockArchivalClient(fail_first_request=True)
    bundle = tree_from_manifest({"a": b"1"})
    with pytest.raises(RetryableError):
        request_archival(client, bundle)
    assert request_archival(client, bundle).status == "pending"


def test_mock_poll_twice_completes_with_directory_swhid():
    client = MockArchivalClient(polls_until_done=2)
    bundle = tree_from_manifest({"a": b"1"})
    receipt = request_archival(client, bundle)
    receipt = poll_archival(client, receipt)
    assert receipt.status == "pending"
    receipt = poll_archival(client, receipt)
    assert receipt.status == "done"
    assert receipt.swhid == directory_swhid(bundle)


def test_mock_poll_done_unchanged():
    client = MockArchivalClient(polls_until_done=1)
    receipt = request_archival(client, tree_from_manifest({"a": b"1"}))
    done = poll_archival(client, receipt)
    assert done.status == "done"
    assert poll_archival(client, done) == done


def test_mock_poll_unknown_id():
    client = MockArchivalClient()
    with pytest.raises(NotFound):
        poll_archival(client, ArchivalReceipt(request_id="missing", status="pending"))


def test_mock_failed_status_scripting():
    client = MockArchivalClient(polls_until_done=1, always_fail_status=True)
    receipt = request_archival(client, tree_from_manifest({"a": b"1"}))
    receipt = poll_archival(client, receipt)
    assert receipt.status == "failed"
    assert receipt.swhid is None


def test_receipt_done_requires_swhid():
    with pytest.raises(ValueError):
        ArchivalReceipt(request_id="x", status="done")


class _StubHttp:
    """Scripted urlopen replacement for the HTTP archival client."""

    def __init__(self, bodies):
        self.bodies = list(bodies)
        self.requests = []

    def __call__(self, req):
        import io
        import json as _json
        import urllib.error

        self.requests.append(req)
        body = self.bodies.pop(0)
        if body == 404:
            raise urllib.error.HTTPError(req.full_url, 404, "not found", {}, io.BytesIO(b""))

        class _Resp:
            status = 200

            def read(self_inner):
                return _json.dumps(body).encode()

            def __enter__(self_inner):
                return self_inner

            def __exit__(self_inner, *exc):
                return False

        return _Resp()


def test_http_archival_client_request_and_poll():
    from softassets.archival import HttpArchivalClient

    stub = _StubHttp(
        [
            {"request_id": "abc", "status": "pending"},
            {"request_id": "abc", "status": "done", "swhid": f"swh:1:dir:{EMPTY_TREE}"},
        ]
    )
    client = HttpArchivalClient("https://archive.example", opener=stub)
    receipt = client.request("https://example.org/repo")
    assert receipt.status == "pending"
    assert stub.requests[0].get_method() == "POST"
    assert stub.requests[0].full_url == "https://archive.example/api/1/origin/save"
    receipt = client.poll(receipt)
    assert receipt.status == "done"
    assert receipt.swhid.digest == EMPTY_TREE
    assert stub.requests[1].full_url.endswith("/api/1/origin/save/abc")


def test_http_archival_client_poll_404():
    from softassets.archival import HttpArchivalClient

    client = HttpArchivalClient("https://archive.example", opener=_StubHttp([404]))
    with pytest.raises(NotFound):
        client.poll(ArchivalReceipt(request_id="gone", status="pending"))


def test_http_archival_client_rejects_bundles():
    from softassets.archival import ArchivalError, HttpArchivalClient

    client = HttpArchivalClient("https://archive.example", opener=_StubHttp([]))
    with pytest.raises(ArchivalError):
        client.request(tree_from_manifest({"a": b"1"}))
