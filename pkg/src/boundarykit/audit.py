"""Hash-chained append-only audit log and incident tracking.

Every record is chained to its predecessor via SHA-256, so any mutation of
persisted history is detectable and localizable to the first bad sequence
number. Incidents carry the boundary metrics (detection latency, user
exposure, irreversible commits prevented) used to judge containment.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import struct
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

GENESIS_HASH = "0" * 64
HASH_ALG = "sha256"
LOG_MAGIC = "boundarykit-audit"
LOG_VERSION = 1
INDEX_EVERY = 64


class AuditEvent(str, Enum):
    HANDOFF_TRANSITION = "handoff_transition"
    VALIDATION_OUTCOME = "validation_outcome"
    CAPABILITY_DENIAL = "capability_denial"
    APPROVAL = "approval"
    INCIDENT_EVENT = "incident_event"
    WORKFLOW_EVENT = "workflow_event"


def canonical_json(obj: Any) -> bytes:
    """Deterministic JSON serialization used for digests and persistence."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Clock:
    """Monotonic logical clock.

    All durations (e.g. incident detection latency) are measured in ticks of
    this clock, so replayed scenarios produce identical timings. Wall-clock
    time is annotation only and never enters a hash.
    """

    def __init__(self) -> None:
        self._now = 0
        self._lock = threading.Lock()

    def tick(self) -> int:
        with self._lock:
            self._now += 1
            return self._now

    def peek(self) -> int:
        return self._now


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    at: int
    actor: str
    event: str
    payload: dict
    payload_digest: str
    prev_hash: str
    hash: str
    # Annotation only: not part of the hashed or persisted body.
    wall_clock: str = field(default="", compare=False)

    @staticmethod
    def compute_hash(seq: int, at: int, actor: str, event: str, payload_digest: str, prev_hash: str) -> str:
        material = canonical_json(
            {
                "seq": seq,
                "at": at,
                "actor": actor,
                "event": event,
                "payload_digest": payload_digest,
                "prev_hash": prev_hash,
            }
        )
        return sha256_hex(material)

    def body(self) -> dict:
        """The persisted (and fully hash-covered) record content."""
        return {
            "seq": self.seq,
            "at": self.at,
            "actor": self.actor,
            "event": self.event,
            "payload": self.payload,
            "payload_digest": self.payload_digest,
            "prev_hash": self.prev_hash,
            "hash": self.hash,
        }

    def export(self) -> dict:
        out = self.body()
        out["wall_clock"] = self.wall_clock
        return out


@dataclass(frozen=True)
class ChainVerification:
    valid: bool
    first_bad_seq: int | None = None


class AuditLogError(Exception):
    pass


class AuditLog:
    """Append-only, globally serialized audit log.

    Appends never fail silently: a persistence failure raises and halts the
    caller. Reads return snapshots and need no locking on the caller's side.
    """

    def __init__(self, clock: Clock | None = None, persist_path: str | Path | None = None) -> None:
        self.clock = clock or Clock()
        self._records: list[AuditRecord] = []
        self._lock = threading.Lock()
        self._persist_path = Path(persist_path) if persist_path else None
        self._fh = None
        if self._persist_path is not None:
            self._open_persistence()

    def _open_persistence(self) -> None:
        assert self._persist_path is not None
        self._persist_path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self._persist_path, "wb")
        header = {
            "format": LOG_MAGIC,
            "version": LOG_VERSION,
            "hash_alg": HASH_ALG,
            "wall_clock_start": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        self._write_blob(canonical_json(header))
        self._index_fh = open(str(self._persist_path) + ".idx", "w", encoding="utf-8")

    def _write_blob(self, blob: bytes) -> int:
        assert self._fh is not None
        offset = self._fh.tell()
        self._fh.write(struct.pack(">I", len(blob)))
        self._fh.write(blob)
        self._fh.flush()
        return offset

    def append(self, event: AuditEvent | str, actor: str, payload: dict) -> AuditRecord:
        event_name = event.value if isinstance(event, AuditEvent) else str(event)
        if event_name not in {e.value for e in AuditEvent}:
            raise AuditLogError(f"unknown audit event kind: {event_name}")
        with self._lock:
            seq = len(self._records) + 1
            at = self.clock.tick()
            prev_hash = self._records[-1].hash if self._records else GENESIS_HASH
            payload_digest = sha256_hex(canonical_json(payload))
            rec = AuditRecord(
                seq=seq,
                at=at,
                actor=actor,
                event=event_name,
                payload=payload,
                payload_digest=payload_digest,
                prev_hash=prev_hash,
                hash=AuditRecord.compute_hash(seq, at, actor, event_name, payload_digest, prev_hash),
                wall_clock=_dt.datetime.now(_dt.timezone.utc).isoformat(),
            )
            self._records.append(rec)
            if self._fh is not None:
                offset = self._write_blob(canonical_json(rec.body()))
                if seq % INDEX_EVERY == 1:
                    self._index_fh.write(f"{seq} {offset}\n")
                    self._index_fh.flush()
            return rec

    def records(self, from_seq: int = 1, limit: int | None = None) -> list[AuditRecord]:
        with self._lock:
            snapshot = self._records[max(from_seq - 1, 0):]
        if limit is not None:
            snapshot = snapshot[:limit]
        return snapshot

    def __len__(self) -> int:
        return len(self._records)

    def count(self, event: AuditEvent | str) -> int:
        name = event.value if isinstance(event, AuditEvent) else str(event)
        return sum(1 for r in self.records() if r.event == name)

    def verify(self) -> ChainVerification:
        return verify_records([r.body() for r in self.records()])

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._index_fh.close()
            self._fh = None


_REQUIRED_KEYS = {"seq", "at", "actor", "event", "payload", "payload_digest", "prev_hash", "hash"}


def verify_records(bodies: Iterable[dict]) -> ChainVerification:
    """Recompute digests and linkage; name the first violating position."""
    prev_hash = GENESIS_HASH
    for position, body in enumerate(bodies, start=1):
        if not isinstance(body, dict) or not _REQUIRED_KEYS.issubset(body):
            return ChainVerification(False, position)
        if body["seq"] != position:
            return ChainVerification(False, position)
        if sha256_hex(canonical_json(body["payload"])) != body["payload_digest"]:
            return ChainVerification(False, position)
        if body["prev_hash"] != prev_hash:
            return ChainVerification(False, position)
        recomputed = AuditRecord.compute_hash(
            body["seq"], body["at"], body["actor"], body["event"], body["payload_digest"], body["prev_hash"]
        )
        if recomputed != body["hash"]:
            return ChainVerification(False, position)
        prev_hash = body["hash"]
    return ChainVerification(True, None)


def read_log_blobs(path: str | Path) -> tuple[dict, list[bytes], int | None]:
    """Read the raw length-prefixed blobs: header first, then record bodies.

    Returns (header, record_blobs, frame_error_position); the position is the
    1-based record index where framing broke (a declared length overrunning
    the file), or None. Raises AuditLogError if the header is unreadable.
    """
    data = Path(path).read_bytes()
    blobs: list[bytes] = []
    frame_error: int | None = None
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            frame_error = len(blobs)
            blobs.append(data[pos:])
            break
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        pos += 4
        if length > len(data) - pos:
            frame_error = len(blobs)
            blobs.append(data[pos:])
            break
        blobs.append(data[pos:pos + length])
        pos += length
    if not blobs:
        raise AuditLogError("empty audit log file")
    if frame_error == 0:
        raise AuditLogError("unreadable audit log header: truncated frame")
    try:
        header = json.loads(blobs[0])
        if header.get("format") != LOG_MAGIC:
            raise ValueError("bad magic")
    except Exception as exc:
        raise AuditLogError(f"unreadable audit log header: {exc}") from exc
    return header, blobs[1:], frame_error


def verify_log_file(path: str | Path) -> ChainVerification:
    """Verify a persisted log end to end, including framing and parse integrity."""
    header, blobs, frame_error = read_log_blobs(path)
    bodies: list[dict] = []
    for position, blob in enumerate(blobs, start=1):
        if frame_error is not None and position >= frame_error:
            break
        try:
            body = json.loads(blob)
        except Exception:
            return ChainVerification(False, position)
        if not isinstance(body, dict):
            return ChainVerification(False, position)
        bodies.append(body)
    result = verify_records(bodies)
    if not result.valid:
        return result
    if frame_error is not None:
        return ChainVerification(False, frame_error)
    return result


class IncidentStatus(str, Enum):
    OPEN = "open"
    REMEDIATED = "remediated"
    VERIFIED = "verified"
    CLOSED = "closed"


_STATUS_NEXT = {
    IncidentStatus.OPEN: IncidentStatus.REMEDIATED,
    IncidentStatus.REMEDIATED: IncidentStatus.VERIFIED,
    IncidentStatus.VERIFIED: IncidentStatus.CLOSED,
}


class IllegalIncidentTransition(Exception):
    pass


@dataclass
class Incident:
    id: str
    opened_at: int
    boundary_point: str
    defect_class: str
    impacted_count: int
    impacted_unit: str
    status: IncidentStatus
    resolution_chain: list[str]
    detection_latency: int
    user_exposure: int
    commits_prevented: tuple[int, int]
    kind: str = "detection"
    evidence: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "opened_at": self.opened_at,
            "boundary_point": self.boundary_point,
            "defect_class": self.defect_class,
            "impacted_scope": {"count": self.impacted_count, "unit": self.impacted_unit},
            "status": self.status.value,
            "resolution_chain": list(self.resolution_chain),
            "kind": self.kind,
            "evidence": list(self.evidence),
            "metrics": {
                "detection_latency": self.detection_latency,
                "user_exposure": self.user_exposure,
                "irreversible_commits_prevented": f"{self.commits_prevented[0]}/{self.commits_prevented[1]}",
            },
        }


class IncidentLog:
    """Sequentially numbered incident registry (ISS-001, ISS-002, ...)."""

    def __init__(self, audit: AuditLog) -> None:
        self._audit = audit
        self._incidents: dict[str, Incident] = {}
        self._lock = threading.Lock()

    def open_incident(
        self,
        boundary_point: str,
        defect_class: str,
        impacted_count: int,
        impacted_unit: str = "records",
        *,
        produced_at: int | None = None,
        kind: str = "detection",
        user_exposure: int = 0,
        commits_prevented: tuple[int, int] = (0, 0),
        evidence: Iterable[int] = (),
    ) -> Incident:
        with self._lock:
            incident_id = f"ISS-{len(self._incidents) + 1:03d}"
            now = self._audit.clock.peek()
            latency = now - produced_at if produced_at is not None else 0
            incident = Incident(
                id=incident_id,
                opened_at=now,
                boundary_point=boundary_point,
                defect_class=defect_class,
                impacted_count=impacted_count,
                impacted_unit=impacted_unit,
                status=IncidentStatus.OPEN,
                resolution_chain=[incident_id],
                detection_latency=max(latency, 0),
                user_exposure=user_exposure,
                commits_prevented=commits_prevented,
                kind=kind,
                evidence=list(evidence),
            )
            self._incidents[incident_id] = incident
        self._audit.append(
            AuditEvent.INCIDENT_EVENT,
            actor="incident-log",
            payload={"action": "opened", "incident": incident.to_dict()},
        )
        return incident

    def link_resolution(
        self,
        incident_id: str,
        follow_up: "Incident | str | int",
        new_status: IncidentStatus | str,
    ) -> Incident:
        status = IncidentStatus(new_status)
        with self._lock:
            incident = self._incidents[incident_id]
            if incident.status not in _STATUS_NEXT or _STATUS_NEXT[incident.status] is not status:
                raise IllegalIncidentTransition(
                    f"{incident_id}: cannot move {incident.status.value} -> {status.value}"
                )
            follow_ref: str
            if isinstance(follow_up, Incident):
                follow_ref = follow_up.id
            elif isinstance(follow_up, int):
                follow_ref = f"audit:{follow_up}"
            else:
                follow_ref = str(follow_up)
            if status is IncidentStatus.VERIFIED:
                linked = self._incidents.get(follow_ref)
                if linked is None or linked.kind != "verification" or not linked.evidence:
                    raise IllegalIncidentTransition(
                        f"{incident_id}: verified requires an independent re-validation incident with evidence"
                    )
            incident.resolution_chain.append(follow_ref)
            incident.status = status
        self._audit.append(
            AuditEvent.INCIDENT_EVENT,
            actor="incident-log",
            payload={
                "action": "resolution_linked",
                "incident": incident_id,
                "follow_up": follow_ref,
                "status": status.value,
            },
        )
        return incident

    def get(self, incident_id: str) -> Incident:
        return self._incidents[incident_id]

    def list(self) -> list[Incident]:
        return [self._incidents[k] for k in sorted(self._incidents)]

    def __len__(self) -> int:
        return len(self._incidents)
