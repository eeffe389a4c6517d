"""Audited handoff protocol: prepare, validate, approve, commit.

Every agent-to-agent transfer crosses this state machine. Gate failures block
the package and open an incident; blocked artifacts are quarantined out of
reach of publish-capable roles. Digests are re-verified at commit, so content
that drifts between approval and commit is treated as tampering and blocked.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum

from .audit import AuditEvent, AuditLog, IncidentLog, sha256_hex
from .governance import Capability, RoleRegistry
from .validation import GateResult, Severity, ValidatorSpec, Verdict, run_gate


class HandoffPhase(str, Enum):
    PREPARED = "prepared"
    VALIDATING = "validating"
    APPROVED = "approved"
    COMMITTED = "committed"
    BLOCKED = "blocked"
    QUARANTINED = "quarantined"


# approved -> blocked is the tamper edge: digest drift found at commit time.
LEGAL_TRANSITIONS: dict[HandoffPhase, frozenset[HandoffPhase]] = {
    HandoffPhase.PREPARED: frozenset({HandoffPhase.VALIDATING}),
    HandoffPhase.VALIDATING: frozenset({HandoffPhase.APPROVED, HandoffPhase.BLOCKED}),
    HandoffPhase.APPROVED: frozenset({HandoffPhase.COMMITTED, HandoffPhase.BLOCKED}),
    HandoffPhase.BLOCKED: frozenset({HandoffPhase.QUARANTINED}),
    HandoffPhase.COMMITTED: frozenset(),
    HandoffPhase.QUARANTINED: frozenset(),
}


class IllegalTransition(Exception):
    pass


class DigestMismatch(Exception):
    pass


class QuarantinedArtifact(Exception):
    pass


class ContentStore:
    """In-memory content-addressed store with a quarantine namespace."""

    WORKING = "working"
    QUARANTINE = "quarantine"

    def __init__(self) -> None:
        self._data: dict[str, bytes] = {}
        self._namespace: dict[str, str] = {}
        self._lock = threading.Lock()

    def put(self, content: bytes) -> str:
        digest = sha256_hex(content)
        with self._lock:
            self._data[digest] = content
            self._namespace.setdefault(digest, self.WORKING)
        return digest

    def get(self, digest: str) -> bytes:
        return self._data[digest]

    def namespace(self, digest: str) -> str:
        return self._namespace[digest]

    def move_to_quarantine(self, digest: str) -> None:
        with self._lock:
            if digest in self._namespace:
                self._namespace[digest] = self.QUARANTINE

    def resolve_for_publish(self, digest: str) -> bytes:
        """Publish-path resolution: quarantined content is unreachable."""
        if self._namespace.get(digest) != self.WORKING:
            raise QuarantinedArtifact(f"artifact {digest[:12]} is not publishable")
        return self._data[digest]

    # Test hook: simulate out-of-band tampering with stored content.
    def overwrite_for_test(self, digest: str, content: bytes) -> None:
        self._data[digest] = content


@dataclass(frozen=True)
class ArtifactRef:
    name: str
    digest: str
    storage_ref: str

    def to_dict(self) -> dict:
        return {"name": self.name, "digest": self.digest, "storage_ref": self.storage_ref}


@dataclass(frozen=True)
class Provenance:
    producing_skill: str
    input_digests: tuple[str, ...]
    produced_at: int
    incident_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "producing_skill": self.producing_skill,
            "input_digests": list(self.input_digests),
            "produced_at": self.produced_at,
            "incident_ref": self.incident_ref,
        }


@dataclass
class HandoffPackage:
    id: str
    run_id: str
    from_role: str
    to_role: str
    artifacts: tuple[ArtifactRef, ...]
    provenance: Provenance
    phase: HandoffPhase = HandoffPhase.PREPARED
    gate_result: GateResult | None = None
    approval: dict | None = None
    incident_id: str | None = None

    @property
    def awaiting_approval(self) -> bool:
        return (
            self.phase is HandoffPhase.VALIDATING
            and self.gate_result is not None
            and self.gate_result.approved
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "run_id": self.run_id,
            "from_role": self.from_role,
            "to_role": self.to_role,
            "artifacts": [a.to_dict() for a in self.artifacts],
            "provenance": self.provenance.to_dict(),
            "phase": self.phase.value,
            "gate_result": self.gate_result.to_dict() if self.gate_result else None,
            "approval": dict(self.approval) if self.approval else None,
            "incident_id": self.incident_id,
        }


@dataclass(frozen=True)
class IncidentMeta:
    """Context the boundary needs to score an incident when it blocks."""

    boundary_point: str
    impacted_unit: str = "records"
    user_exposure: int = 0
    commits_prevented: tuple[int, int] = (0, 0)


def _impacted_count(gate_result: GateResult) -> int:
    """Distinct offending records across blocking failures.

    Collocation findings report one item carrying a cluster size, so the
    count is the larger of distinct record ids and summed cluster sizes.
    """
    distinct: set[str] = set()
    collocated = 0
    for outcome in gate_result.blocking_failures:
        for item in outcome.offending_items:
            if len(item) >= 3 and item[1] == "collocated_count":
                collocated += int(item[2])
            else:
                distinct.add(str(item[0]))
    return max(len(distinct), collocated)


class HandoffManager:
    """Owns package state; transitions are serialized and all audited."""

    def __init__(
        self,
        registry: RoleRegistry,
        audit: AuditLog,
        incidents: IncidentLog,
        content: ContentStore,
        *,
        verify_pure: bool = False,
    ) -> None:
        self.registry = registry
        self.audit = audit
        self.incidents = incidents
        self.content = content
        self.verify_pure = verify_pure
        self._packages: dict[str, HandoffPackage] = {}
        self._counter = 0
        self._lock = threading.RLock()

    def get(self, package_id: str) -> HandoffPackage:
        return self._packages[package_id]

    def packages(self) -> list[HandoffPackage]:
        return [self._packages[k] for k in sorted(self._packages)]

    def pending_approval(self) -> list[HandoffPackage]:
        return [p for p in self.packages() if p.awaiting_approval]

    def _transition(self, pkg: HandoffPackage, new_phase: HandoffPhase, detail: dict | None = None) -> None:
        if new_phase not in LEGAL_TRANSITIONS[pkg.phase]:
            raise IllegalTransition(f"package {pkg.id}: {pkg.phase.value} -> {new_phase.value}")
        pkg.phase = new_phase
        payload = {"package": pkg.id, "run": pkg.run_id, "phase": new_phase.value}
        if detail:
            payload.update(detail)
        self.audit.append(AuditEvent.HANDOFF_TRANSITION, actor=pkg.to_role, payload=payload)

    def prepare(
        self,
        run_id: str,
        from_role: str,
        to_role: str,
        artifacts: dict[str, bytes],
        provenance: Provenance,
        *,
        claimed_digests: dict[str, str] | None = None,
        store=None,
    ) -> HandoffPackage:
        if not artifacts:
            raise ValueError("handoff package requires at least one artifact")
        role = self.registry.get(from_role)
        self.registry.require(from_role, Capability.WRITE_WORKING, role.zone)
        if store is not None and provenance.producing_skill not in store.skills:
            raise ValueError(f"provenance skill {provenance.producing_skill!r} does not resolve in the store")
        refs = []
        for name in sorted(artifacts):
            content = artifacts[name]
            digest = sha256_hex(content)
            if claimed_digests and name in claimed_digests and claimed_digests[name] != digest:
                raise DigestMismatch(
                    f"artifact {name!r}: claimed digest {claimed_digests[name][:12]} != computed {digest[:12]}"
                )
            self.content.put(content)
            refs.append(ArtifactRef(name=name, digest=digest, storage_ref=f"cas://{digest}"))
        with self._lock:
            self._counter += 1
            pkg = HandoffPackage(
                id=f"pkg-{self._counter:04d}",
                run_id=run_id,
                from_role=from_role,
                to_role=to_role,
                artifacts=tuple(refs),
                provenance=provenance,
            )
            self._packages[pkg.id] = pkg
        self.audit.append(
            AuditEvent.HANDOFF_TRANSITION,
            actor=from_role,
            payload={
                "package": pkg.id,
                "run": run_id,
                "phase": HandoffPhase.PREPARED.value,
                "from": from_role,
                "to": to_role,
                "artifacts": [r.to_dict() for r in refs],
                "provenance": provenance.to_dict(),
            },
        )
        return pkg

    def validate(
        self,
        package_id: str,
        gate_specs: list[ValidatorSpec],
        *,
        requires_approval: bool = False,
        meta: IncidentMeta | None = None,
    ) -> HandoffPackage:
        with self._lock:
            pkg = self._packages[package_id]
            if pkg.phase is not HandoffPhase.PREPARED:
                raise IllegalTransition(f"package {pkg.id}: validate requires phase=prepared, got {pkg.phase.value}")
            self._transition(pkg, HandoffPhase.VALIDATING, {"gate": [s.id for s in gate_specs]})
            outcomes = []
            flags = []
            for ref in pkg.artifacts:
                payload = self.content.get(ref.digest)
                result = run_gate(
                    gate_specs,
                    payload,
                    audit=self.audit,
                    actor=pkg.to_role,
                    clock=self.audit.clock,
                    artifact_name=ref.name,
                    audit_context={"package": pkg.id, "run": pkg.run_id},
                    verify_pure=self.verify_pure,
                )
                outcomes.extend(result.outcomes)
                flags.extend(result._blocking_flags)
            gate_result = GateResult(
                approved=all(o.verdict is Verdict.PASS for o, b in zip(outcomes, flags) if b),
                outcomes=tuple(outcomes),
                _blocking_flags=tuple(flags),
            )
            pkg.gate_result = gate_result
            if not gate_result.approved:
                self._block(pkg, meta, reason="gate_blocked")
                return pkg
            if requires_approval and pkg.approval is None:
                # Waits in validating until a supervisor records approval.
                return pkg
            self._transition(pkg, HandoffPhase.APPROVED, {"reason": "gate_approved"})
            return pkg

    def _block(self, pkg: HandoffPackage, meta: IncidentMeta | None, *, reason: str, impacted: int | None = None) -> None:
        meta = meta or IncidentMeta(boundary_point=f"gate:{pkg.to_role}")
        self._transition(pkg, HandoffPhase.BLOCKED, {"reason": reason})
        if pkg.incident_id is not None:
            # Re-blocking re-links to the same incident instead of opening twice.
            return
        if impacted is None:
            impacted = _impacted_count(pkg.gate_result) if pkg.gate_result else len(pkg.artifacts)
        failing_kinds = sorted(
            {o.validator_id for o in (pkg.gate_result.blocking_failures if pkg.gate_result else ())}
        )
        defect = reason if reason != "gate_blocked" else "+".join(failing_kinds) or "gate_blocked"
        incident = self.incidents.open_incident(
            boundary_point=meta.boundary_point,
            defect_class=defect,
            impacted_count=impacted,
            impacted_unit=meta.impacted_unit,
            produced_at=pkg.provenance.produced_at,
            user_exposure=meta.user_exposure,
            commits_prevented=meta.commits_prevented,
        )
        pkg.incident_id = incident.id
        self.audit.append(
            AuditEvent.INCIDENT_EVENT,
            actor=pkg.to_role,
            payload={"action": "escalation", "package": pkg.id, "incident": incident.id, "reason": reason},
        )

    def record_approval(self, package_id: str, approver_role: str) -> HandoffPackage:
        with self._lock:
            pkg = self._packages[package_id]
            self.registry.require_self(approver_role, Capability.APPROVE_HANDOFF)
            if pkg.phase in (HandoffPhase.APPROVED, HandoffPhase.COMMITTED):
                return pkg  # Idempotent: one approval record, ever.
            if not pkg.awaiting_approval:
                raise IllegalTransition(
                    f"package {pkg.id}: approval requires validating phase with an approved gate, got {pkg.phase.value}"
                )
            pkg.approval = {"approver": approver_role, "at": self.audit.clock.tick()}
            self.audit.append(
                AuditEvent.APPROVAL,
                actor=approver_role,
                payload={"package": pkg.id, "run": pkg.run_id, "approver": approver_role, "at": pkg.approval["at"]},
            )
            self._transition(pkg, HandoffPhase.APPROVED, {"reason": "approval_recorded", "approver": approver_role})
            return pkg

    def commit(self, package_id: str, *, meta: IncidentMeta | None = None) -> HandoffPackage:
        with self._lock:
            pkg = self._packages[package_id]
            if pkg.phase is not HandoffPhase.APPROVED:
                raise IllegalTransition(f"package {pkg.id}: commit requires phase=approved, got {pkg.phase.value}")
            drifted = []
            for ref in pkg.artifacts:
                stored = self.content.get(ref.digest)
                if sha256_hex(stored) != ref.digest:
                    drifted.append(ref.name)
            if drifted:
                # Tamper between approval and commit is a defect, not a commit.
                self._block_after_approval(pkg, meta, drifted)
                return pkg
            self._transition(pkg, HandoffPhase.COMMITTED, {"artifacts": [r.digest for r in pkg.artifacts]})
            return pkg

    def _block_after_approval(self, pkg: HandoffPackage, meta: IncidentMeta | None, drifted: list[str]) -> None:
        meta = meta or IncidentMeta(boundary_point=f"commit:{pkg.to_role}")
        self._transition(pkg, HandoffPhase.BLOCKED, {"reason": "digest_drift", "artifacts": drifted})
        if pkg.incident_id is None:
            incident = self.incidents.open_incident(
                boundary_point=meta.boundary_point,
                defect_class="digest_drift",
                impacted_count=len(drifted),
                impacted_unit="artifacts",
                produced_at=pkg.provenance.produced_at,
                user_exposure=meta.user_exposure,
                commits_prevented=meta.commits_prevented,
            )
            pkg.incident_id = incident.id
            self.audit.append(
                AuditEvent.INCIDENT_EVENT,
                actor=pkg.to_role,
                payload={"action": "escalation", "package": pkg.id, "incident": incident.id, "reason": "digest_drift"},
            )

    def block_by_operator(self, package_id: str, operator_role: str, *, meta: IncidentMeta | None = None) -> HandoffPackage:
        """Operator rejection of a package pending approval."""
        with self._lock:
            pkg = self._packages[package_id]
            self.registry.require_self(operator_role, Capability.APPROVE_HANDOFF)
            if not pkg.awaiting_approval:
                raise IllegalTransition(
                    f"package {pkg.id}: operator block requires a package pending approval, got {pkg.phase.value}"
                )
            self._block(pkg, meta, reason="operator_rejection", impacted=len(pkg.artifacts))
            return pkg

    def quarantine(self, package_id: str) -> HandoffPackage:
        with self._lock:
            pkg = self._packages[package_id]
            if pkg.phase is HandoffPhase.QUARANTINED:
                return pkg  # Idempotent no-op.
            if pkg.phase is not HandoffPhase.BLOCKED:
                raise IllegalTransition(f"package {pkg.id}: quarantine requires phase=blocked, got {pkg.phase.value}")
            for ref in pkg.artifacts:
                self.content.move_to_quarantine(ref.digest)
            self._transition(pkg, HandoffPhase.QUARANTINED, {"incident": pkg.incident_id})
            return pkg
