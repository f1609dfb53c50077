"""Event-sourced lifecycle of one asset candidate on one paper.

State is always the deterministic fold of the event history; the engine in
`store` appends events, this module defines what they mean. Rejected and
Exposed are terminal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum

from .swhid import SwhidError, parse_swhid


class LifecycleError(Exception):
    pass


class IllegalTransition(LifecycleError):
    pass


class SequenceError(LifecycleError):
    pass


class InvalidToken(LifecycleError):
    pass


class State(str, Enum):
    EXTRACTED = "Extracted"
    PENDING_MANAGER_APPROVAL = "PendingManagerApproval"
    PENDING_AUTHOR_VALIDATION = "PendingAuthorValidation"
    VALIDATED = "Validated"
    REJECTED = "Rejected"
    REGISTRATION_REQUESTED = "RegistrationRequested"
    ARCHIVED = "Archived"
    EXPOSED = "Exposed"


TERMINAL_STATES = frozenset({State.REJECTED, State.EXPOSED})

EVENT_KINDS = (
    "created",
    "routed_to_manager",
    "manager_approved",
    "manager_rejected",
    "validation_issued",
    "author_confirmed",
    "author_amended_confirmed",
    "author_rejected",
    "registration_sent",
    "archival_completed",
    "archival_failed",
    "exposed",
)

TRANSITIONS: dict[tuple[State, str], State] = {
    (State.EXTRACTED, "routed_to_manager"): State.PENDING_MANAGER_APPROVAL,
    (State.PENDING_MANAGER_APPROVAL, "manager_approved"): State.PENDING_AUTHOR_VALIDATION,
    (State.PENDING_MANAGER_APPROVAL, "manager_rejected"): State.REJECTED,
    (State.PENDING_AUTHOR_VALIDATION, "validation_issued"): State.PENDING_AUTHOR_VALIDATION,
    (State.PENDING_AUTHOR_VALIDATION, "author_confirmed"): State.VALIDATED,
    (State.PENDING_AUTHOR_VALIDATION, "author_amended_confirmed"): State.VALIDATED,
    (State.PENDING_AUTHOR_VALIDATION, "author_rejected"): State.REJECTED,
    (State.VALIDATED, "registration_sent"): State.REGISTRATION_REQUESTED,
    (State.REGISTRATION_REQUESTED, "archival_completed"): State.ARCHIVED,
    # failures keep the record retryable in place
    (State.REGISTRATION_REQUESTED, "archival_failed"): State.REGISTRATION_REQUESTED,
    (State.ARCHIVED, "exposed"): State.EXPOSED,
}

# author decisions are only legal once a validation request went out
_AUTHOR_KINDS = frozenset({"author_confirmed", "author_amended_confirmed", "author_rejected"})


@dataclass(frozen=True)
class Event:
    record_id: str
    seq: int
    timestamp: datetime
    actor: str  # system | manager | author
    kind: str
    payload: dict

    def to_json_line(self) -> str:
        # field order pinned for the append-only log
        return json.dumps(
            {
                "record_id": self.record_id,
                "seq": self.seq,
                "timestamp": self.timestamp.isoformat(),
                "actor": self.actor,
                "kind": self.kind,
                "payload": self.payload,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json_line(cls, line: str) -> "Event":
        obj = json.loads(line)
        return cls(
            record_id=obj["record_id"],
            seq=obj["seq"],
            timestamp=datetime.fromisoformat(obj["timestamp"]),
            actor=obj["actor"],
            kind=obj["kind"],
            payload=obj["payload"],
        )


@dataclass(frozen=True)
class LifecycleRecord:
    record_id: str
    paper_id: str
    candidate_id: str
    state: State
    validation_token: str | None = None
    swhid: str | None = None
    history: tuple[Event, ...] = ()

    @property
    def last_seq(self) -> int:
        return self.history[-1].seq if self.history else 0


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def new_record(event: Event) -> LifecycleRecord:
    """Start a record from its `created` event."""
    if event.kind != "created":
        raise IllegalTransition(f"record must begin with created, got {event.kind!r}")
    if event.seq != 1:
        raise SequenceError(f"created event must have seq 1, got {event.seq}")
    payload = event.payload
    return LifecycleRecord(
        record_id=event.record_id,
        paper_id=payload["paper_id"],
        candidate_id=payload["candidate_id"],
        state=State.EXTRACTED,
        history=(event,),
    )


def apply_event(record: LifecycleRecord, event: Event) -> LifecycleRecord:
    """Fold one event into the record, enforcing the transition table."""
    if event.record_id != record.record_id:
        raise SequenceError(
            f"event for {event.record_id!r} applied to {record.record_id!r}"
        )
    if event.seq != record.last_seq + 1:
        raise SequenceError(f"expected seq {record.last_seq + 1}, got {event.seq}")
    if event.kind == "created":
        raise IllegalTransition("created is only legal as the first event")
    if event.kind not in EVENT_KINDS:
        raise IllegalTransition(f"unknown event kind {event.kind!r}")
    next_state = TRANSITIONS.get((record.state, event.kind))
    if next_state is None:
        raise IllegalTransition(f"{event.kind} in state {record.state.value}")
    if event.kind in _AUTHOR_KINDS and not any(
        e.kind == "validation_issued" for e in record.history
    ):
        raise IllegalTransition("author decision before validation_issued")

    changes: dict = {"state": next_state, "history": record.history + (event,)}
    if event.kind == "validation_issued":
        changes["validation_token"] = event.payload["token"]
    elif event.kind in _AUTHOR_KINDS:
        changes["validation_token"] = None
    elif event.kind == "archival_completed":
        text = event.payload.get("swhid", "")
        try:
            parse_swhid(text)
        except SwhidError as exc:
            raise IllegalTransition(f"archival_completed without a valid SWHID: {exc}")
        changes["swhid"] = text
    return replace(record, **changes)


def replay(events: list[Event]) -> LifecycleRecord:
    """Deterministic fold of a gap-free, seq-ordered event list."""
    if not events:
        raise SequenceError("empty event log: record must begin with created")
    record = new_record(events[0])
    for event in events[1:]:
        record = apply_event(record, event)
    return record
