"""Persistence and orchestration for lifecycle records.

The append-only event log is the system of record: every mutation folds an
event into memory and appends one JSON line; reopening the store replays
the log and reproduces the exact same state, including validation tokens
and author amendments.
"""

from __future__ import annotations

import hashlib
import json
import re
import secrets
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from pathlib import Path

from .archival import RetryableError, poll_archival, request_archival
from .codemeta import build_codemeta, serialize_jsonld
from .lifecycle import (
    Event,
    IllegalTransition,
    InvalidToken,
    LifecycleError,
    LifecycleRecord,
    State,
    apply_event,
    new_record,
    utcnow,
)
from .resolve import AssetCandidate, dump_candidates_jsonl, load_candidates_jsonl
from .swhid import DirectoryTree, TreeEntry

TOKEN_TTL_DAYS = 30


@dataclass(frozen=True)
class PaperMeta:
    paper_id: str
    title: str
    creators: tuple[str, ...] = ()
    datestamp: str = ""


@dataclass(frozen=True)
class NotificationMessage:
    to: str
    subject: str
    body: str


@dataclass
class _TokenInfo:
    record_id: str
    expires: str  # ISO timestamp
    consumed: bool = False


def _author_address(paper: PaperMeta) -> str:
    if not paper.creators:
        return "author@unknown.example.org"
    slug = re.sub(r"[^a-z0-9]+", ".", paper.creators[0].lower()).strip(".")
    return f"{slug or 'author'}@authors.example.org"


def candidate_bundle(candidate: AssetCandidate, paper_id: str) -> DirectoryTree:
    """Registration bundle: a snapshot directory holding the codemeta file."""
    payload = serialize_jsonld(build_codemeta(candidate, paper_id))
    return DirectoryTree({"codemeta.json": TreeEntry("file", payload)})


class LifecycleStore:
    def __init__(
        self,
        storage_dir: "str | Path",
        clock=utcnow,
        token_factory=None,
        public_base: str = "http://127.0.0.1:8765",
    ):
        self.storage_dir = Path(storage_dir)
        self.storage_dir.mkdir(parents=True, exist_ok=True)
        self.events_path = self.storage_dir / "events.jsonl"
        self.outbox_path = self.storage_dir / "outbox.jsonl"
        self.papers_path = self.storage_dir / "papers.jsonl"
        self.candidates_path = self.storage_dir / "candidates.jsonl"
        self.clock = clock
        self.token_factory = token_factory or (lambda: secrets.token_urlsafe(16))
        self.public_base = public_base.rstrip("/")

        self.records: dict[str, LifecycleRecord] = {}
        self.candidates: dict[str, AssetCandidate] = {}
        self.papers: dict[str, PaperMeta] = {}
        self._tokens: dict[str, _TokenInfo] = {}
        self._lock = threading.Lock()
        self._record_locks: dict[str, threading.Lock] = {}
        self._load()

    # --- loading ---------------------------------------------------------

    def _load(self):
        if self.papers_path.exists():
            for line in self.papers_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    obj = json.loads(line)
                    self.papers[obj["paper_id"]] = PaperMeta(
                        paper_id=obj["paper_id"],
                        title=obj["title"],
                        creators=tuple(obj.get("creators", ())),
                        datestamp=obj.get("datestamp", ""),
                    )
        if self.candidates_path.exists():
            for c in load_candidates_jsonl(self.candidates_path.read_text(encoding="utf-8")):
                self.candidates[c.candidate_id] = c
        if self.events_path.exists():
            per_record: dict[str, list[Event]] = {}
            for line in self.events_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    event = Event.from_json_line(line)
                    per_record.setdefault(event.record_id, []).append(event)
            for record_id, events in per_record.items():
                record = new_record(events[0])
                for event in events[1:]:
                    record = apply_event(record, event)
                self.records[record_id] = record
                self._replay_side_effects(events)

    def _replay_side_effects(self, events: list[Event]):
        for event in events:
            if event.kind == "validation_issued":
                self._tokens[event.payload["token"]] = _TokenInfo(
                    record_id=event.record_id, expires=event.payload["expires"]
                )
            elif event.kind in ("author_confirmed", "author_amended_confirmed", "author_rejected"):
                for info in self._tokens.values():
                    if info.record_id == event.record_id:
                        info.consumed = True
                if event.kind == "author_amended_confirmed":
                    record = self.records[event.record_id]
                    self._amend_candidate(record.candidate_id, event.payload.get("amendments", {}))

    # --- persistence helpers ----------------------------------------------

    def save_papers(self, papers: list[PaperMeta]):
        with self._lock:
            for p in papers:
                self.papers[p.paper_id] = p
            lines = [
                json.dumps(
                    {
                        "paper_id": p.paper_id,
                        "title": p.title,
                        "creators": list(p.creators),
                        "datestamp": p.datestamp,
                    },
                    ensure_ascii=False,
                )
                for p in self.papers.values()
            ]
            self.papers_path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    def save_candidates(self, candidates: list[AssetCandidate]):
        with self._lock:
            for c in candidates:
                self.candidates[c.candidate_id] = c
            self.candidates_path.write_text(
                dump_candidates_jsonl(sorted(self.candidates.values(), key=lambda c: c.candidate_id)),
                encoding="utf-8",
            )

    def _record_lock(self, record_id: str) -> threading.Lock:
        with self._lock:
            return self._record_locks.setdefault(record_id, threading.Lock())

    def _append(self, record: "LifecycleRecord | None", event: Event) -> LifecycleRecord:
        """Fold the event and append it to the log; memory changes only on success."""
        updated = new_record(event) if record is None else apply_event(record, event)
        with self._lock:
            with self.events_path.open("a", encoding="utf-8") as fh:
                fh.write(event.to_json_line() + "\n")
            self.records[updated.record_id] = updated
        return updated

    def _event(self, record_id: str, seq: int, actor: str, kind: str, payload: dict) -> Event:
        return Event(
            record_id=record_id,
            seq=seq,
            timestamp=self.clock(),
            actor=actor,
            kind=kind,
            payload=payload,
        )

    # --- record operations -------------------------------------------------

    def record_id_for(self, paper_id: str, candidate_id: str) -> str:
        digest = hashlib.sha1(f"{paper_id}|{candidate_id}".encode("utf-8")).hexdigest()[:12]
        return f"rec-{digest}"

    def create_record(self, paper_id: str, candidate_id: str, evidence: dict | None = None) -> LifecycleRecord:
        record_id = self.record_id_for(paper_id, candidate_id)
        with self._record_lock(record_id):
            if record_id in self.records:
                return self.records[record_id]
            event = self._event(
                record_id,
                1,
                "system",
                "created",
                {
                    "paper_id": paper_id,
                    "candidate_id": candidate_id,
                    "evidence": evidence or {},
                },
            )
            return self._append(None, event)

    def route_to_manager(self, record_id: str) -> LifecycleRecord:
        with self._record_lock(record_id):
            record = self._get(record_id)
            event = self._event(record_id, record.last_seq + 1, "system", "routed_to_manager", {})
            return self._append(record, event)

    def manager_approve(self, record_id: str):
        """Approve routing and immediately issue the author validation request."""
        with self._record_lock(record_id):
            record = self._get(record_id)
            event = self._event(record_id, record.last_seq + 1, "manager", "manager_approved", {})
            record = self._append(record, event)
            return self._issue_validation_locked(record)

    def manager_reject(self, record_id: str) -> LifecycleRecord:
        with self._record_lock(record_id):
            record = self._get(record_id)
            event = self._event(record_id, record.last_seq + 1, "manager", "manager_rejected", {})
            return self._append(record, event)

    def issue_validation(self, record_id: str):
        with self._record_lock(record_id):
            return self._issue_validation_locked(self._get(record_id))

    def _issue_validation_locked(self, record: LifecycleRecord):
        if record.state is not State.PENDING_AUTHOR_VALIDATION:
            raise IllegalTransition(f"validation_issued in state {record.state.value}")
        existing = record.validation_token
        if existing is not None and not self._token_expired(existing):
            return record, existing, None
        token = self.token_factory()
        expires = (self.clock() + timedelta(days=TOKEN_TTL_DAYS)).isoformat()
        event = self._event(
            record.record_id,
            record.last_seq + 1,
            "system",
            "validation_issued",
            {"token": token, "expires": expires},
        )
        record = self._append(record, event)
        self._tokens[token] = _TokenInfo(record_id=record.record_id, expires=expires)
        message = self._notification(record, token)
        with self._lock:
            with self.outbox_path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"to": message.to, "subject": message.subject, "body": message.body},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        return record, token, message

    def _notification(self, record: LifecycleRecord, token: str) -> NotificationMessage:
        paper = self.papers.get(record.paper_id) or PaperMeta(record.paper_id, record.paper_id)
        candidate = self.candidates.get(record.candidate_id)
        name = candidate.canonical_name if candidate else record.candidate_id
        url = f"{self.public_base}/dashboard/?token={token}"
        body = (
            f"Our extraction pipeline found the software \"{name}\" mentioned in your "
            f"paper \"{paper.title}\".\n"
            f"Please confirm, amend or reject this finding within {TOKEN_TTL_DAYS} days:\n"
            f"{url}\n"
        )
        return NotificationMessage(
            to=_author_address(paper),
            subject=f"Validate software mention \"{name}\" in \"{paper.title}\"",
            body=body,
        )

    def _token_expired(self, token: str) -> bool:
        info = self._tokens.get(token)
        if info is None:
            return True
        return self.clock() > datetime.fromisoformat(info.expires)

    def _token_info_or_raise(self, token: str) -> _TokenInfo:
        info = self._tokens.get(token)
        if info is None or info.consumed or self._token_expired(token):
            raise InvalidToken("unknown, expired or already used token")
        return info

    def validation_view(self, token: str) -> dict:
        """Payload the author sees: sentence context, spans, candidate fields."""
        info = self._token_info_or_raise(token)
        record = self._get(info.record_id)
        paper = self.papers.get(record.paper_id)
        candidate = self.candidates.get(record.candidate_id)
        evidence = {}
        if record.history:
            evidence = record.history[0].payload.get("evidence", {})
        fields = {"name": None, "url": None, "version": None, "publisher": None}
        if candidate is not None:
            cm = build_codemeta(candidate, record.paper_id)
            fields = {
                "name": cm.name,
                "url": cm.code_repository,
                "version": cm.version,
                "publisher": cm.publisher,
            }
        return {
            "record_id": record.record_id,
            "paper_id": record.paper_id,
            "paper_title": paper.title if paper else record.paper_id,
            "sentence": evidence.get("sentence", ""),
            "mentions": evidence.get("mentions", []),
            "candidate": fields,
        }

    def apply_author_decision(
        self, token: str, decision: str, amendments: dict | None = None
    ) -> LifecycleRecord:
        info = self._token_info_or_raise(token)
        with self._record_lock(info.record_id):
            record = self._get(info.record_id)
            if decision == "confirm":
                kind, payload = "author_confirmed", {}
            elif decision == "reject":
                kind, payload = "author_rejected", {}
            elif decision == "amend":
                allowed = {"name", "url", "version"}
                amendments = {
                    k: v for k, v in (amendments or {}).items() if k in allowed and v
                }
                if not amendments:
                    raise ValueError("amend decision needs at least one of name, url, version")
                kind, payload = "author_amended_confirmed", {"amendments": amendments}
            else:
                raise ValueError(f"unknown decision {decision!r}")
            event = self._event(info.record_id, record.last_seq + 1, "author", kind, payload)
            record = self._append(record, event)
            info.consumed = True
            if kind == "author_amended_confirmed":
                self._amend_candidate(record.candidate_id, payload["amendments"])
            return record

    def _amend_candidate(self, candidate_id: str, amendments: dict):
        candidate = self.candidates.get(candidate_id)
        if candidate is None:
            return
        changes = {}
        if "name" in amendments:
            changes["canonical_name"] = amendments["name"]
            changes["aliases"] = candidate.aliases | {amendments["name"]}
        if "url" in amendments:
            changes["urls"] = frozenset({amendments["url"]})
        if "version" in amendments:
            changes["versions"] = frozenset({amendments["version"]})
        self.candidates[candidate_id] = replace(candidate, **changes)

    def register_and_archive(self, record_id: str, client, max_polls: int = 8) -> LifecycleRecord:
        """Send the registration request and drive it to completion.

        On a failed receipt the record stays in RegistrationRequested with
        the failure on file, ready for a retry.
        """
        with self._record_lock(record_id):
            record = self._get(record_id)
            if record.state is not State.VALIDATED:
                raise IllegalTransition(f"registration_sent in state {record.state.value}")
            candidate = self.candidates.get(record.candidate_id)
            if candidate is None:
                raise LifecycleError(f"unknown candidate {record.candidate_id!r}")
            bundle = candidate_bundle(candidate, record.paper_id)

            receipt = None
            last_error = None
            for _ in range(3):
                try:
                    receipt = request_archival(client, bundle)
                    break
                except RetryableError as exc:
                    last_error = exc
            if receipt is None:
                raise LifecycleError(f"archival request failed: {last_error}")

            event = self._event(
                record_id,
                record.last_seq + 1,
                "system",
                "registration_sent",
                {"request_id": receipt.request_id},
            )
            record = self._append(record, event)

            polls = 0
            while receipt.status == "pending" and polls < max_polls:
                receipt = poll_archival(client, receipt)
                polls += 1
            if receipt.status == "done":
                event = self._event(
                    record_id,
                    record.last_seq + 1,
                    "system",
                    "archival_completed",
                    {"swhid": str(receipt.swhid), "request_id": receipt.request_id},
                )
                record = self._append(record, event)
            elif receipt.status == "failed":
                event = self._event(
                    record_id,
                    record.last_seq + 1,
                    "system",
                    "archival_failed",
                    {"request_id": receipt.request_id, "reason": "archival service reported failure"},
                )
                record = self._append(record, event)
            return record

    def expose_record(self, record_id: str) -> LifecycleRecord:
        with self._record_lock(record_id):
            record = self._get(record_id)
            event = self._event(record_id, record.last_seq + 1, "system", "exposed", {})
            return self._append(record, event)

    # --- queries -----------------------------------------------------------

    def _get(self, record_id: str) -> LifecycleRecord:
        record = self.records.get(record_id)
        if record is None:
            raise LifecycleError(f"unknown record {record_id!r}")
        return record

    def pending_manager(self) -> list[LifecycleRecord]:
        return sorted(
            (r for r in self.records.values() if r.state is State.PENDING_MANAGER_APPROVAL),
            key=lambda r: r.record_id,
        )

    def records_for_paper(self, paper_id: str, states=None) -> list[LifecycleRecord]:
        wanted = set(states) if states else None
        return sorted(
            (
                r
                for r in self.records.values()
                if r.paper_id == paper_id and (wanted is None or r.state in wanted)
            ),
            key=lambda r: r.record_id,
        )

    def outbox_messages(self) -> list[NotificationMessage]:
        if not self.outbox_path.exists():
            return []
        messages = []
        for line in self.outbox_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                obj = json.loads(line)
                messages.append(NotificationMessage(obj["to"], obj["subject"], obj["body"]))
        return messages
