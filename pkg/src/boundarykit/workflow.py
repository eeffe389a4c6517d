"""Workflow runner: stages bind a role, a skill, a validation gate, and an
approval requirement; stage transitions ride the audited handoff protocol.

The engine is the single enforcement point. Capability checks run here, not
inside agent stubs, because agents are untrusted by construction. Publication
goes to a mock sink that refuses any package not in phase=committed.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum

from .artifacts import ArtifactStore, Enforcement, resolve_skill
from .audit import AuditEvent, AuditLog, Clock, IncidentLog
from .governance import Capability, CapabilityDenied, Role, RoleRegistry, Zone
from .handoff import ContentStore, HandoffManager, HandoffPhase, IncidentMeta, Provenance
from .stubs import StubContext
from .validation import ValidatorSpec


class DefinitionError(Exception):
    pass


class PublishRefused(Exception):
    pass


@dataclass(frozen=True)
class Stage:
    role: str
    skill: str
    gate: tuple[str, ...] = ()
    requires_approval: bool = False
    irreversible: bool = False

    @staticmethod
    def from_dict(doc: dict) -> "Stage":
        return Stage(
            role=doc["role"],
            skill=doc["skill"],
            gate=tuple(doc.get("gate", [])),
            requires_approval=bool(doc.get("requires_approval", False)),
            irreversible=bool(doc.get("irreversible", False)),
        )

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "skill": self.skill,
            "gate": list(self.gate),
            "requires_approval": self.requires_approval,
            "irreversible": self.irreversible,
        }


@dataclass(frozen=True)
class WorkflowDefinition:
    id: str
    stages: tuple[Stage, ...]
    metadata: dict = field(default_factory=dict)

    @staticmethod
    def from_dict(doc: dict) -> "WorkflowDefinition":
        return WorkflowDefinition(
            id=doc["id"],
            stages=tuple(Stage.from_dict(s) for s in doc.get("stages", [])),
            metadata=dict(doc.get("metadata", {})),
        )

    def to_dict(self) -> dict:
        return {"id": self.id, "stages": [s.to_dict() for s in self.stages], "metadata": dict(self.metadata)}


class StageStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    BLOCKED = "blocked"


@dataclass
class WorkflowRun:
    id: str
    definition_id: str
    stage_status: list[StageStatus]
    package_ids: list[str] = field(default_factory=list)
    started_at: int = 0
    ended_at: int | None = None
    incident_id: str | None = None
    awaiting_package: str | None = None

    @property
    def status(self) -> str:
        if any(s is StageStatus.BLOCKED for s in self.stage_status):
            return "blocked"
        if self.awaiting_package is not None:
            return "awaiting_approval"
        if all(s is StageStatus.DONE for s in self.stage_status):
            return "done"
        return "running"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "definition_id": self.definition_id,
            "status": self.status,
            "stage_status": [s.value for s in self.stage_status],
            "package_ids": list(self.package_ids),
            "started_at": self.started_at,
            "ended_at": self.ended_at,
            "incident_id": self.incident_id,
            "awaiting_package": self.awaiting_package,
        }


class PublishSink:
    """Mock external platform: records would-be-published artifacts.

    Refuses (and audits) any publish action whose input package is not in
    phase=committed, including quarantined content.
    """

    def __init__(self, registry: RoleRegistry, audit: AuditLog, content: ContentStore) -> None:
        self.registry = registry
        self.audit = audit
        self.content = content
        self.published: list[dict] = []
        self.refusals = 0
        self._lock = threading.Lock()

    def publish(self, role_id: str, package, run_id: str) -> dict:
        role = self.registry.get(role_id)
        self.registry.require(role_id, Capability.PUBLISH_EXTERNAL, role.zone)
        phase = package.phase.value if package is not None else "none"
        if package is None or package.phase is not HandoffPhase.COMMITTED:
            self._refuse(role_id, run_id, package, f"package_not_committed:{phase}")
        try:
            artifacts = {ref.name: self.content.resolve_for_publish(ref.digest) for ref in package.artifacts}
        except Exception:
            self._refuse(role_id, run_id, package, "artifact_quarantined")
        entry = {
            "run": run_id,
            "package": package.id,
            "phase_at_execution": package.phase.value,
            "artifacts": sorted(a.name for a in package.artifacts),
            "role": role_id,
        }
        with self._lock:
            self.published.append(entry)
        self.audit.append(AuditEvent.WORKFLOW_EVENT, actor=role_id, payload={"kind": "published", **entry})
        return entry

    def _refuse(self, role_id: str, run_id: str, package, reason: str) -> None:
        with self._lock:
            self.refusals += 1
        self.audit.append(
            AuditEvent.CAPABILITY_DENIAL,
            actor=role_id,
            payload={
                "role": role_id,
                "action": Capability.PUBLISH_EXTERNAL.value,
                "zone": self.registry.get(role_id).zone,
                "reason": reason,
                "run": run_id,
                "package": package.id if package is not None else None,
            },
        )
        raise PublishRefused(reason)

    def count_for_run(self, run_id: str) -> int:
        return sum(1 for e in self.published if e["run"] == run_id)

    def artifact_count_for_run(self, run_id: str) -> int:
        return sum(len(e["artifacts"]) for e in self.published if e["run"] == run_id)


class Engine:
    """Single-process orchestration engine.

    Multiple runs may execute concurrently (each on its own thread); within a
    run, stages are strictly sequential and package transitions serialize
    through the handoff manager.
    """

    def __init__(
        self,
        store: ArtifactStore,
        *,
        clock: Clock | None = None,
        audit: AuditLog | None = None,
        persist_path=None,
        orchestrator_role: str = "flow-orchestrator",
        verify_pure: bool = False,
    ) -> None:
        self.clock = clock or Clock()
        self.audit = audit or AuditLog(self.clock, persist_path)
        self.store = store
        self.registry = RoleRegistry(self.audit)
        self.incidents = IncidentLog(self.audit)
        self.content = ContentStore()
        self.handoff = HandoffManager(self.registry, self.audit, self.incidents, self.content, verify_pure=verify_pure)
        self.sink = PublishSink(self.registry, self.audit, self.content)
        self.validators: dict[str, ValidatorSpec] = {}
        self.runs: dict[str, WorkflowRun] = {}
        self.definitions: dict[str, WorkflowDefinition] = {}
        self.orchestrator_role = orchestrator_role
        self._run_counter = 0
        self._lock = threading.Lock()
        self.approval_changed = threading.Condition()

    def register_zone(self, zone: Zone) -> str:
        return self.registry.register_zone(zone)

    def register_role(self, role: Role) -> str:
        return self.registry.register_role(role)

    def register_validator(self, spec: ValidatorSpec) -> str:
        self.validators[spec.id] = spec
        return spec.id

    def validate_definition(self, defn: WorkflowDefinition) -> None:
        if not defn.stages:
            raise DefinitionError(f"workflow {defn.id}: at least one stage required")
        role_ids = {r.id for r in self.registry.list_roles()}
        for i, stage in enumerate(defn.stages):
            where = f"workflow {defn.id} stage {i + 1}"
            if stage.role not in role_ids:
                raise DefinitionError(f"{where}: unknown role {stage.role!r}")
            try:
                resolved = resolve_skill(self.store, stage.skill)
            except KeyError as exc:
                raise DefinitionError(f"{where}: unknown skill {stage.skill!r}") from exc
            for validator_id in stage.gate:
                if validator_id not in self.validators:
                    raise DefinitionError(f"{where}: unknown validator {validator_id!r}")
            if stage.irreversible and not stage.gate:
                raise DefinitionError(f"{where}: irreversible stages must carry a non-empty gate")
            needs_confirm = any(b.enforcement is Enforcement.HUMAN_CONFIRM for b in resolved.behaviors)
            if stage.irreversible and needs_confirm and not stage.requires_approval:
                raise DefinitionError(
                    f"{where}: skill {stage.skill!r} is gated by a human-confirmation behavior; "
                    "the stage must set requires_approval"
                )

    def _next_run_id(self) -> str:
        with self._lock:
            self._run_counter += 1
            return f"run-{self._run_counter:04d}"

    def _incident_meta(self, defn: WorkflowDefinition, stage_index: int, run_id: str) -> IncidentMeta:
        total_irreversible = sum(1 for s in defn.stages if s.irreversible)
        prevented = sum(1 for s in defn.stages[stage_index:] if s.irreversible)
        return IncidentMeta(
            boundary_point=f"pre:{defn.stages[stage_index].skill}",
            impacted_unit=defn.metadata.get("impacted_unit", "records"),
            user_exposure=self.sink.artifact_count_for_run(run_id),
            commits_prevented=(prevented, total_irreversible),
        )

    def run_workflow(
        self,
        defn: WorkflowDefinition,
        stubs: dict,
        inputs: dict[str, bytes],
        *,
        approver: str | None = None,
        approval_timeout: float | None = None,
        incident_ref: str | None = None,
        run_id: str | None = None,
    ) -> WorkflowRun:
        self.validate_definition(defn)
        report = self.store.integrity()
        if not report.traversable:
            raise DefinitionError(
                f"workflow {defn.id}: artifact store is not traversable ({report.defect_count} defects)"
            )
        for stage in defn.stages:
            if stage.role not in stubs:
                raise DefinitionError(f"workflow {defn.id}: no agent stub bound for role {stage.role!r}")

        run_id = run_id or self._next_run_id()
        run = WorkflowRun(
            id=run_id,
            definition_id=defn.id,
            stage_status=[StageStatus.PENDING] * len(defn.stages),
            started_at=self.clock.tick(),
        )
        self.runs[run_id] = run
        self.definitions.setdefault(defn.id, defn)
        self.audit.append(
            AuditEvent.WORKFLOW_EVENT,
            actor=self.orchestrator_role,
            payload={"kind": "run_started", "run": run_id, "definition": defn.id},
        )

        current_artifacts = dict(inputs)
        produced_at = self.clock.peek()
        # Read-only stages (validators) forward artifacts untouched, so the
        # handoff's from_role stays the last role that actually wrote them.
        producer_role = defn.stages[0].role
        producer_skill = defn.stages[0].skill
        pkg = None
        for i, stage in enumerate(defn.stages):
            if i > 0:
                pkg = self._handoff_into(
                    defn, i, run, current_artifacts, produced_at,
                    producer_role, producer_skill, incident_ref, approver, approval_timeout,
                )
                if pkg is None:  # parked awaiting approval
                    return run
                if pkg.phase is not HandoffPhase.COMMITTED:
                    self._mark_blocked(run, i, pkg)
                    return run
                current_artifacts = {ref.name: self.content.get(ref.digest) for ref in pkg.artifacts}

            run.stage_status[i] = StageStatus.RUNNING
            self.audit.append(
                AuditEvent.WORKFLOW_EVENT,
                actor=stage.role,
                payload={"kind": "stage_started", "run": run_id, "stage": i + 1, "skill": stage.skill},
            )
            resolved = resolve_skill(self.store, stage.skill)
            role = self.registry.get(stage.role)
            for cap_name in sorted(resolved.skill.required_capabilities):
                decision = self.registry.check(stage.role, Capability(cap_name), role.zone)
                if not decision.allowed:
                    self._escalate_denial(run, i, stage, decision.reason or "denied")
                    return run

            if Capability.PUBLISH_EXTERNAL.value in resolved.skill.required_capabilities or stage.irreversible:
                try:
                    self.sink.publish(stage.role, pkg, run_id)
                except (PublishRefused, CapabilityDenied) as exc:
                    self._escalate_denial(run, i, stage, str(exc))
                    return run

            ctx = StubContext(run_id=run_id, stage_index=i, role_id=stage.role, skill=resolved, inputs=current_artifacts)
            outputs = stubs[stage.role].produce(ctx)
            if outputs:
                # Writing outputs requires write_working regardless of what
                # the skill declared; read-only roles cannot smuggle content.
                decision = self.registry.check(stage.role, Capability.WRITE_WORKING, role.zone)
                if not decision.allowed:
                    self._escalate_denial(run, i, stage, decision.reason or "denied")
                    return run
                produced_at = self.clock.tick()
            run.stage_status[i] = StageStatus.DONE
            self.audit.append(
                AuditEvent.WORKFLOW_EVENT,
                actor=stage.role,
                payload={
                    "kind": "stage_done",
                    "run": run_id,
                    "stage": i + 1,
                    "skill": stage.skill,
                    "outputs": sorted(outputs),
                },
            )
            if outputs:
                current_artifacts = outputs
                producer_role = stage.role
                producer_skill = stage.skill

        run.ended_at = self.clock.tick()
        self.audit.append(
            AuditEvent.WORKFLOW_EVENT,
            actor=self.orchestrator_role,
            payload={"kind": "run_done", "run": run_id},
        )
        return run

    def _handoff_into(
        self,
        defn: WorkflowDefinition,
        stage_index: int,
        run: WorkflowRun,
        artifacts: dict[str, bytes],
        produced_at: int,
        producer_role: str,
        producer_skill: str,
        incident_ref: str | None,
        approver: str | None,
        approval_timeout: float | None,
    ):
        stage = defn.stages[stage_index]
        orch = self.registry.get(self.orchestrator_role)
        self.registry.require(self.orchestrator_role, Capability.ROUTE_HANDOFF, orch.zone)
        provenance = Provenance(
            producing_skill=producer_skill,
            input_digests=(),
            produced_at=produced_at,
            incident_ref=incident_ref,
        )
        pkg = self.handoff.prepare(run.id, producer_role, stage.role, artifacts, provenance, store=self.store)
        run.package_ids.append(pkg.id)
        gate_specs = [self.validators[v] for v in stage.gate]
        meta = self._incident_meta(defn, stage_index, run.id)
        pkg = self.handoff.validate(pkg.id, gate_specs, requires_approval=stage.requires_approval, meta=meta)

        if pkg.awaiting_approval:
            if approver is not None:
                pkg = self.handoff.record_approval(pkg.id, approver)
            else:
                pkg = self._wait_for_approval(run, pkg, approval_timeout)
                if pkg is None:
                    return None
        if pkg.phase is HandoffPhase.BLOCKED:
            return pkg
        if pkg.phase is HandoffPhase.APPROVED:
            pkg = self.handoff.commit(pkg.id, meta=meta)
        return pkg

    def _wait_for_approval(self, run: WorkflowRun, pkg, timeout: float | None):
        run.awaiting_package = pkg.id
        self.audit.append(
            AuditEvent.WORKFLOW_EVENT,
            actor=self.orchestrator_role,
            payload={"kind": "awaiting_approval", "run": run.id, "package": pkg.id},
        )
        with self.approval_changed:
            if timeout is None:
                while self.handoff.get(pkg.id).awaiting_approval:
                    self.approval_changed.wait()
            elif self.handoff.get(pkg.id).awaiting_approval:
                self.approval_changed.wait(timeout)
        pkg = self.handoff.get(pkg.id)
        if pkg.awaiting_approval:
            return None  # parked: resumable only through the gateway path
        run.awaiting_package = None
        return pkg

    def _mark_blocked(self, run: WorkflowRun, stage_index: int, pkg) -> None:
        self.handoff.quarantine(pkg.id)
        run.stage_status[stage_index] = StageStatus.BLOCKED
        run.incident_id = pkg.incident_id
        run.ended_at = self.clock.tick()
        self.audit.append(
            AuditEvent.WORKFLOW_EVENT,
            actor=self.orchestrator_role,
            payload={"kind": "run_blocked", "run": run.id, "package": pkg.id, "incident": pkg.incident_id},
        )

    def _escalate_denial(self, run: WorkflowRun, stage_index: int, stage: Stage, reason: str) -> None:
        run.stage_status[stage_index] = StageStatus.BLOCKED
        incident = self.incidents.open_incident(
            boundary_point=f"stage:{stage.skill}",
            defect_class="escalated_denial",
            impacted_count=1,
            impacted_unit="actions",
            produced_at=self.clock.peek(),
        )
        run.incident_id = incident.id
        run.ended_at = self.clock.tick()
        self.audit.append(
            AuditEvent.WORKFLOW_EVENT,
            actor=self.orchestrator_role,
            payload={"kind": "run_blocked", "run": run.id, "reason": reason, "incident": incident.id},
        )

    # Async submission: gateway-facing surface.

    def submit(self, defn: WorkflowDefinition, stubs: dict, inputs: dict[str, bytes], **kwargs) -> str:
        run_id = self._next_run_id()
        # Placeholder so the run id resolves immediately; the worker thread
        # replaces it with the live run object.
        self.runs[run_id] = WorkflowRun(
            id=run_id,
            definition_id=defn.id,
            stage_status=[StageStatus.PENDING] * len(defn.stages),
        )

        def _target() -> None:
            try:
                self.run_workflow(defn, stubs, inputs, run_id=run_id, **kwargs)
            except Exception as exc:  # surfaced through run state, thread must not die silently
                run = self.runs[run_id]
                if run.stage_status:
                    run.stage_status[0] = StageStatus.BLOCKED
                run.ended_at = self.clock.tick()
                self.audit.append(
                    AuditEvent.WORKFLOW_EVENT,
                    actor=self.orchestrator_role,
                    payload={"kind": "run_failed", "run": run_id, "error": str(exc)},
                )

        thread = threading.Thread(target=_target, daemon=True)
        thread.start()
        return run_id

    def pending_approvals(self) -> list[dict]:
        cards = []
        for pkg in self.handoff.pending_approval():
            run = self.runs.get(pkg.run_id)
            defn = self.definitions.get(run.definition_id) if run else None
            irreversible = False
            if run is not None and defn is not None:
                idx = next((j for j, s in enumerate(run.stage_status) if s is StageStatus.PENDING), None)
                if idx is not None:
                    irreversible = defn.stages[idx].irreversible
            cards.append(
                {
                    "package_id": pkg.id,
                    "run_id": pkg.run_id,
                    "from_role": pkg.from_role,
                    "to_role": pkg.to_role,
                    "irreversible": irreversible,
                    "artifacts": [a.to_dict() for a in pkg.artifacts],
                    "gate_outcomes": [o.to_dict() for o in (pkg.gate_result.outcomes if pkg.gate_result else ())],
                }
            )
        return cards

    def approve(self, package_id: str, approver_role: str):
        pkg = self.handoff.record_approval(package_id, approver_role)
        with self.approval_changed:
            self.approval_changed.notify_all()
        return pkg

    def reject(self, package_id: str, operator_role: str):
        pkg = self.handoff.get(package_id)
        run = self.runs.get(pkg.run_id)
        meta = None
        if run is not None:
            defn = self.definitions.get(run.definition_id)
            idx = next((j for j, s in enumerate(run.stage_status) if s is StageStatus.PENDING), None)
            if defn is not None and idx is not None:
                meta = self._incident_meta(defn, idx, run.id)
        pkg = self.handoff.block_by_operator(package_id, operator_role, meta=meta)
        with self.approval_changed:
            self.approval_changed.notify_all()
        return pkg

    def wait_for_run(
        self, run_id: str, timeout: float = 10.0, until: tuple[str, ...] = ("done", "blocked")
    ) -> WorkflowRun:
        import time

        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            run = self.runs.get(run_id)
            if run is not None and run.status in until:
                return run
            time.sleep(0.01)
        return self.runs[run_id]
