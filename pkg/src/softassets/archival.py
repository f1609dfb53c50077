"""Archival clients for a Software Heritage-like registration service.

The mock client is the default everywhere: it keeps per-request state in
memory, transitions pending -> done after a fixed number of polls, and
derives the minted identifier from the submitted bundle, so tests never
need a live service. The HTTP client speaks the same interface against a
configurable base URL.
"""

from __future__ import annotations

import hashlib
import json
import urllib.error
import urllib.request
from dataclasses import dataclass

from .swhid import DirectoryTree, Swhid, TreeEntry, directory_swhid, parse_swhid


class ArchivalError(Exception):
    pass


class RetryableError(ArchivalError):
    """Transient transport failure; the same request may be retried."""


class NotFound(ArchivalError):
    pass


@dataclass(frozen=True)
class ArchivalReceipt:
    request_id: str
    status: str  # pending | done | failed
    swhid: Swhid | None = None

    def __post_init__(self):
        if self.status == "done" and self.swhid is None:
            raise ValueError("done receipt needs a swhid")


def _bundle_tree(bundle: "DirectoryTree | str") -> DirectoryTree:
    if isinstance(bundle, DirectoryTree):
        return bundle
    return DirectoryTree({"origin.txt": TreeEntry("file", bundle.encode("utf-8"))})


def bundle_request_id(bundle: "DirectoryTree | str") -> str:
    """Deterministic request id: a pure function of the bundle."""
    tree = _bundle_tree(bundle)
    seed = "bundle:" + directory_swhid(tree).digest
    return hashlib.sha256(seed.encode("ascii")).hexdigest()[:16]


class MockArchivalClient:
    """In-memory archival service double.

    polls_until_done: polls needed before a pending request completes.
    fail_first_request: raise RetryableError once, then accept.
    always_fail_status: every request ends in status "failed".
    """

    def __init__(self, polls_until_done: int = 2, fail_first_request: bool = False,
                 always_fail_status: bool = False):
        self.polls_until_done = polls_until_done
        self.always_fail_status = always_fail_status
        self._fail_next = fail_first_request
        self._requests: dict[str, dict] = {}

    def request(self, bundle: "DirectoryTree | str") -> ArchivalReceipt:
        if self._fail_next:
            self._fail_next = False
            raise RetryableError("scripted transport failure")
        request_id = bundle_request_id(bundle)
        if request_id not in self._requests:
            self._requests[request_id] = {
                "tree": _bundle_tree(bundle),
                "polls_left": self.polls_until_done,
                "status": "pending",
            }
        return self._receipt(request_id)

    def poll(self, receipt: ArchivalReceipt) -> ArchivalReceipt:
        state = self._requests.get(receipt.request_id)
        if state is None:
            raise NotFound(receipt.request_id)
        if state["status"] == "pending":
            state["polls_left"] -= 1
            if state["polls_left"] <= 0:
                state["status"] = "failed" if self.always_fail_status else "done"
        return self._receipt(receipt.request_id)

    def _receipt(self, request_id: str) -> ArchivalReceipt:
        state = self._requests[request_id]
        swhid = directory_swhid(state["tree"]) if state["status"] == "done" else None
        return ArchivalReceipt(request_id=request_id, status=state["status"], swhid=swhid)


class HttpArchivalClient:
    """Archival over HTTP: POST an origin save request, GET its status.

    Only origin URLs can be submitted over the wire; bundles stay local to
    the mock client.
    """

    def __init__(self, base_url: str, save_path: str = "/api/1/origin/save",
                 opener=None):
        self.base_url = base_url.rstrip("/")
        self.save_path = save_path
        self._open = opener or urllib.request.urlopen

    def request(self, bundle: str) -> ArchivalReceipt:
        if not isinstance(bundle, str):
            raise ArchivalError("HTTP client archives origin URLs only")
        payload = json.dumps({"origin_url": bundle}).encode("utf-8")
        req = urllib.request.Request(
            self.base_url + self.save_path,
            data=payload,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with self._open(req) as resp:
                body = json.loads(resp.read())
        except OSError as exc:
            raise RetryableError(str(exc)) from exc
        return self._from_body(body)

    def poll(self, receipt: ArchivalReceipt) -> ArchivalReceipt:
        url = f"{self.base_url}{self.save_path}/{receipt.request_id}"
        try:
            with self._open(urllib.request.Request(url)) as resp:
                if getattr(resp, "status", 200) == 404:
                    raise NotFound(receipt.request_id)
                body = json.loads(resp.read())
        except urllib.error.HTTPError as exc:
            if exc.code == 404:
                raise NotFound(receipt.request_id) from exc
            raise RetryableError(str(exc)) from exc
        except OSError as exc:
            raise RetryableError(str(exc)) from exc
        return self._from_body(body)

    @staticmethod
    def _from_body(body: dict) -> ArchivalReceipt:
        swhid = parse_swhid(body["swhid"]) if body.get("swhid") else None
        return ArchivalReceipt(
            request_id=str(body["request_id"]), status=body["status"], swhid=swhid
        )


def request_archival(client, bundle) -> ArchivalReceipt:
    """Submit an archival request; idempotent per bundle."""
    return client.request(bundle)


def poll_archival(client, receipt: ArchivalReceipt) -> ArchivalReceipt:
    """Refresh the receipt's status."""
    return client.poll(receipt)
