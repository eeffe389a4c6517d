"""Replayable scenario fixtures and the standard execution environment.

Each scenario builds (or reuses) an engine, drives it to a deterministic end
state, and reports whether the expected end state was reached. Replaying a
scenario twice with the same seed produces identical audit trails.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .artifacts import ArtifactStore, load_store, validate_integrity, retrieve_subgraph, NonTraversableStoreError
from .audit import AuditEvent, Incident, IncidentStatus
from .governance import Capability, Role, RoleKind, Zone
from .handoff import HandoffPhase
from .stubs import (
    DEFAULT_DATASET,
    AgentStub,
    ErrorClass,
    StubContext,
    build_station_layers,
    collapse_to_anchor,
    inject_error,
    make_station_records,
    scripted_stub,
    stations_from_csv,
    stations_to_csv,
)
from .validation import Severity, ValidatorKind, ValidatorSpec, Verdict, run_gate
from .workflow import Engine, Stage, WorkflowDefinition, WorkflowRun

FIXTURES_DIR = Path(__file__).parent / "fixtures"

WORKER = "envita-worker"
AUDITOR = "stori-auditor"
PUBLISHER = "diva-publisher"
ORCHESTRATOR = "flow-orchestrator"
SUPERVISOR = "data-steward"

PREPARE_SKILL = "skill-prepare-station-layers"
AUDIT_SKILL = "skill-audit-station-layers"
PUBLISH_SKILL = "skill-publish-station-layers"


class UnknownScenario(KeyError):
    pass


def fixture_path(name: str) -> Path:
    path = FIXTURES_DIR / name
    if not path.exists():
        raise FileNotFoundError(f"no packaged fixture named {name!r}")
    return path


def standard_store_documents() -> list[dict]:
    """Self-consistent three-track store for the station publication flow."""
    return [
        {
            "track": "behavior",
            "id": "beh-validate-before-publish",
            "title": "Validate before publication",
            "constraint_text": "Publication skills execute only after the pre-publication gate passes.",
            "enforcement": "hard_gate",
            "applies_to": ["skill-publish-*"],
            "version": 1,
        },
        {
            "track": "behavior",
            "id": "beh-confirm-before-publish",
            "title": "Human confirmation before irreversible actions",
            "constraint_text": "Irreversible publication requires a recorded supervisor approval.",
            "enforcement": "human_confirm",
            "applies_to": ["skill-publish-*"],
            "version": 1,
        },
        {
            "track": "behavior",
            "id": "beh-kg-first-retrieval",
            "title": "Graph-first context",
            "constraint_text": "Retrieve task knowledge from the graph before acting.",
            "enforcement": "advisory",
            "applies_to": ["skill-*"],
            "version": 2,
        },
        {
            "track": "behavior",
            "id": "beh-no-fabrication",
            "title": "No fabricated metadata",
            "constraint_text": "Never guess field mappings; use an authoritative mapping source.",
            "enforcement": "hard_gate",
            "applies_to": ["skill-prepare-*"],
            "version": 1,
        },
        {
            "track": "knowledge_node",
            "id": "kn-sf2bench-stations",
            "kind": "dataset",
            "attributes": {"span": "1985-2024", "stations": 2452, "files": 8557},
            "retrieval_tags": ["hydrology", "station", "sf2bench", "florida"],
        },
        {
            "track": "knowledge_node",
            "id": "kn-florida-bounds",
            "kind": "convention",
            "attributes": {"lat_min": 24.5, "lat_max": 31.0, "lon_min": -87.5, "lon_max": -79.5},
            "retrieval_tags": ["florida", "bounds", "convention"],
        },
        {
            "track": "knowledge_node",
            "id": "kn-station-schema",
            "kind": "convention",
            "attributes": {"required": ["station_id", "name"]},
            "retrieval_tags": ["schema", "station"],
        },
        {
            "track": "knowledge_node",
            "id": "kn-dataverse-platform",
            "kind": "platform",
            "attributes": {"kind": "repository"},
            "retrieval_tags": ["dataverse", "publication"],
        },
        {
            "track": "knowledge_node",
            "id": "kn-pelican-platform",
            "kind": "platform",
            "attributes": {"kind": "federation"},
            "retrieval_tags": ["pelican", "publication"],
        },
        {
            "track": "knowledge_node",
            "id": "kn-hydrology-domain",
            "kind": "domain_entity",
            "attributes": {"field": "compound flooding"},
            "retrieval_tags": ["hydrology", "domain"],
        },
        {
            "track": "knowledge_node",
            "id": "kn-prep-server",
            "kind": "system",
            "attributes": {"os": "windows", "purpose": "data preparation"},
            "retrieval_tags": ["server", "preparation"],
        },
        {"track": "knowledge_edge", "from": "kn-hydrology-domain", "to": "kn-sf2bench-stations", "relation": "references"},
        {"track": "knowledge_edge", "from": "kn-station-schema", "to": "kn-sf2bench-stations", "relation": "part_of"},
        {"track": "knowledge_edge", "from": "kn-prep-server", "to": PREPARE_SKILL, "relation": "supports_skill"},
        {"track": "knowledge_edge", "from": "kn-florida-bounds", "to": AUDIT_SKILL, "relation": "supports_skill"},
        {
            "track": "skill",
            "id": PREPARE_SKILL,
            "name": "Prepare station GeoJSON layers",
            "prerequisites": ["kn-sf2bench-stations", "kn-station-schema"],
            "behavior_gates": ["beh-kg-first-retrieval", "beh-no-fabrication"],
            "recipe": [
                {"kind": "tool", "target": "read-station-table"},
                {"kind": "tool", "target": "build-geojson-layers", "params": {"layers": 5}},
            ],
            "expected_outcomes": [{"validator": "v-schema-station", "verdict": "pass"}],
            "required_capabilities": ["read_working", "write_working"],
        },
        {
            "track": "skill",
            "id": AUDIT_SKILL,
            "name": "Audit station layer artifacts",
            "prerequisites": ["kn-florida-bounds", "kn-station-schema"],
            "behavior_gates": ["beh-kg-first-retrieval"],
            "recipe": [{"kind": "tool", "target": "run-boundary-checks"}],
            "expected_outcomes": [
                {"validator": "v-lat-bounds", "verdict": "pass"},
                {"validator": "v-lon-bounds", "verdict": "pass"},
            ],
            "required_capabilities": ["run_validation"],
        },
        {
            "track": "skill",
            "id": PUBLISH_SKILL,
            "name": "Publish station layers",
            "prerequisites": ["kn-dataverse-platform", "kn-pelican-platform", "kn-florida-bounds"],
            "behavior_gates": ["beh-validate-before-publish", "beh-confirm-before-publish"],
            "recipe": [
                {"kind": "tool", "target": "upload-layers"},
                {"kind": "tool", "target": "register-doi"},
            ],
            "expected_outcomes": [{"validator": "v-expected-dataset", "verdict": "pass"}],
            "required_capabilities": ["publish_external"],
        },
    ]


def corrupted_store_documents() -> list[dict]:
    """Degraded early-deployment store: 16 broken skill-to-behavior
    references, 20 dangling prerequisite links, 3 orphaned nodes."""
    docs: list[dict] = [
        {
            "track": "behavior",
            "id": f"beh-{name}",
            "title": title,
            "constraint_text": text,
            "enforcement": enforcement,
            "applies_to": ["skill-*"],
            "version": 1,
        }
        for name, title, text, enforcement in [
            ("archive-standards", "Archive standards", "Apply archive metadata standards.", "hard_gate"),
            ("confirm-removal", "Confirm removals", "Require confirmation before destructive actions.", "human_confirm"),
            ("cite-sources", "Cite mapping sources", "Record the mapping source for every field.", "advisory"),
            ("zone-discipline", "Stay in zone", "Operate only inside the assigned workspace.", "hard_gate"),
        ]
    ]
    kinds = ["dataset", "convention", "platform", "system", "domain_entity", "convention"]
    for i in range(12):
        docs.append(
            {
                "track": "knowledge_node",
                "id": f"kn-archive-{i + 1:02d}",
                "kind": kinds[i % len(kinds)],
                "attributes": {"index": i + 1},
                "retrieval_tags": ["archive", f"group-{i % 3}"],
            }
        )
    for i in range(3):
        docs.append(
            {
                "track": "knowledge_node",
                "id": f"kn-orphan-{i + 1:02d}",
                "kind": "domain_entity",
                "attributes": {"note": "no inbound or outbound links"},
                "retrieval_tags": ["orphan"],
            }
        )
    real_behaviors = ["beh-archive-standards", "beh-confirm-removal", "beh-cite-sources", "beh-zone-discipline"]
    skill_names = [
        "skill-ingest-aerial-photos",
        "skill-normalize-gis-layers",
        "skill-extract-sensor-series",
        "skill-map-field-surveys",
        "skill-catalog-rasters",
        "skill-stage-downloads",
        "skill-register-metadata",
        "skill-sync-mirrors",
    ]
    dangling_prereq_counts = [3, 3, 3, 3, 2, 2, 2, 2]  # sums to 20
    gap_behavior = 0
    gap_node = 0
    for j, skill_id in enumerate(skill_names):
        gates = [real_behaviors[j % 4]]
        for _ in range(2):  # 8 skills x 2 = 16 broken references
            gap_behavior += 1
            gates.append(f"beh-gap-{gap_behavior:02d}")
        prereqs = [f"kn-archive-{(j % 12) + 1:02d}", f"kn-archive-{((j + 8) % 12) + 1:02d}"]
        for _ in range(dangling_prereq_counts[j]):
            gap_node += 1
            prereqs.append(f"kn-gap-{gap_node:02d}")
        docs.append(
            {
                "track": "skill",
                "id": skill_id,
                "name": skill_id.replace("skill-", "").replace("-", " "),
                "prerequisites": prereqs,
                "behavior_gates": gates,
                "recipe": [{"kind": "tool", "target": "legacy-pipeline-step"}],
                "expected_outcomes": [],
                "required_capabilities": ["read_working", "write_working"],
            }
        )
    docs.append(
        {"track": "knowledge_edge", "from": "kn-archive-01", "to": "kn-archive-02", "relation": "references"}
    )
    docs.append(
        {"track": "knowledge_edge", "from": "kn-archive-03", "to": "skill-ingest-aerial-photos", "relation": "supports_skill"}
    )
    return docs


def standard_validators() -> list[ValidatorSpec]:
    return [
        ValidatorSpec(
            id="v-lat-bounds",
            kind=ValidatorKind.NUMERIC_RANGE,
            params={"field": "latitude", "min": 24.5, "max": 31.0, "min_inclusive": True, "max_inclusive": True},
        ),
        ValidatorSpec(
            id="v-lon-bounds",
            kind=ValidatorKind.NUMERIC_RANGE,
            params={"field": "longitude", "min": -87.5, "max": -79.5, "min_inclusive": True, "max_inclusive": True},
        ),
        ValidatorSpec(
            id="v-schema-station",
            kind=ValidatorKind.SCHEMA_CONFORMANCE,
            params={"required_fields": ["station_id", "name"], "collection_required": ["dataset"]},
        ),
        ValidatorSpec(
            id="v-spatial-spread",
            kind=ValidatorKind.SPATIAL_PLAUSIBILITY,
            params={"max_collocated_fraction": 0.5},
        ),
        ValidatorSpec(
            id="v-expected-dataset",
            kind=ValidatorKind.SCRIPTED_PREDICATE,
            params={"predicate": "expected-dataset", "expected": DEFAULT_DATASET, "declared_pure": True},
        ),
        ValidatorSpec(
            id="v-artifact-integrity",
            kind=ValidatorKind.ARTIFACT_INTEGRITY,
            params={},
        ),
    ]


@dataclass
class Environment:
    engine: Engine
    worker: str = WORKER
    auditor: str = AUDITOR
    publisher: str = PUBLISHER
    orchestrator: str = ORCHESTRATOR
    supervisor: str = SUPERVISOR


def build_environment(*, persist_path=None, verify_pure: bool = False) -> Environment:
    store = load_store(standard_store_documents())
    engine = Engine(store, persist_path=persist_path, orchestrator_role=ORCHESTRATOR, verify_pure=verify_pure)
    for zone in ("prep-server", "pipeline-server", "pub-server", "control"):
        engine.register_zone(Zone(id=zone, description=f"{zone} isolation domain"))
    engine.register_role(
        Role(WORKER, RoleKind.WORKER, frozenset({Capability.READ_WORKING, Capability.WRITE_WORKING}), "prep-server")
    )
    engine.register_role(
        Role(AUDITOR, RoleKind.VALIDATOR, frozenset({Capability.RUN_VALIDATION, Capability.READ_AUDIT}), "pipeline-server")
    )
    engine.register_role(
        Role(PUBLISHER, RoleKind.PUBLISHER, frozenset({Capability.PUBLISH_EXTERNAL, Capability.READ_WORKING}), "pub-server")
    )
    engine.register_role(
        Role(ORCHESTRATOR, RoleKind.ORCHESTRATOR, frozenset({Capability.ROUTE_HANDOFF, Capability.READ_AUDIT}), "control")
    )
    engine.register_role(
        Role(SUPERVISOR, RoleKind.HUMAN_SUPERVISOR, frozenset({Capability.APPROVE_HANDOFF, Capability.READ_AUDIT}), "control")
    )
    for spec in standard_validators():
        engine.register_validator(spec)
    return Environment(engine=engine)


def station_publication_definition(*, requires_approval: bool = True) -> WorkflowDefinition:
    return WorkflowDefinition(
        id="sf2bench-station-publication",
        stages=(
            Stage(role=WORKER, skill=PREPARE_SKILL),
            Stage(role=AUDITOR, skill=AUDIT_SKILL, gate=("v-schema-station",)),
            Stage(
                role=PUBLISHER,
                skill=PUBLISH_SKILL,
                gate=("v-lat-bounds", "v-lon-bounds", "v-spatial-spread", "v-expected-dataset"),
                requires_approval=requires_approval,
                irreversible=True,
            ),
        ),
        metadata={"impacted_unit": "stations"},
    )


def _station_stubs(worker_fn) -> dict:
    return {
        WORKER: scripted_stub("stub-worker", WORKER, worker_fn),
        AUDITOR: scripted_stub("stub-auditor", AUDITOR, lambda ctx: {}),
        PUBLISHER: scripted_stub("stub-publisher", PUBLISHER, lambda ctx: {}),
    }


@dataclass
class ScenarioResult:
    name: str
    ok: bool
    summary: dict
    lines: list[str]
    engine: Engine
    runs: list[WorkflowRun] = field(default_factory=list)
    incidents: list[Incident] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "summary": self.summary,
            "runs": [r.to_dict() for r in self.runs],
            "incidents": [i.to_dict() for i in self.incidents],
        }


def _swapped_worker(layers: int = 5):
    def produce(ctx: StubContext) -> dict[str, bytes]:
        records = stations_from_csv(ctx.inputs["stations.csv"])
        return build_station_layers(records, layers, swap_fields=True)

    return produce


def _corrected_worker(layers: int = 5):
    def produce(ctx: StubContext) -> dict[str, bytes]:
        records = stations_from_csv(ctx.inputs["stations.csv"])
        return build_station_layers(records, layers)

    return produce


def iss004_chain(seed: int = 0, env: Environment | None = None, station_count: int = 2452) -> ScenarioResult:
    """Coordinate-field defect blocked pre-publication, then remediated and
    independently verified: detection -> remediation -> verification."""
    env = env or build_environment()
    engine = env.engine
    stations = make_station_records(station_count, seed)
    inputs = {"stations.csv": stations_to_csv(stations)}
    defn = station_publication_definition()

    faulty_run = engine.run_workflow(defn, _station_stubs(_swapped_worker()), inputs, approver=SUPERVISOR)
    detection = engine.incidents.get(faulty_run.incident_id) if faulty_run.incident_id else None

    remediated_run = engine.run_workflow(
        defn,
        _station_stubs(_corrected_worker()),
        inputs,
        approver=SUPERVISOR,
        incident_ref=detection.id if detection else None,
    )

    regenerated = 0
    if remediated_run.package_ids:
        final_pkg = engine.handoff.get(remediated_run.package_ids[-1])
        regenerated = len(final_pkg.artifacts)

    remediation_evidence = [
        r.seq
        for r in engine.audit.records()
        if r.event == AuditEvent.WORKFLOW_EVENT.value
        and r.payload.get("kind") == "stage_done"
        and r.payload.get("run") == remediated_run.id
        and r.payload.get("stage") == 1
    ]
    range_check_records = [
        r
        for r in engine.audit.records()
        if r.event == AuditEvent.VALIDATION_OUTCOME.value
        and r.payload.get("run") == remediated_run.id
        and r.payload.get("package") == (remediated_run.package_ids[-1] if remediated_run.package_ids else None)
        and r.payload.get("kind") == ValidatorKind.NUMERIC_RANGE.value
        and r.payload.get("outcome", {}).get("verdict") == "pass"
    ]
    range_checked_layers = sorted({r.payload.get("artifact") for r in range_check_records})

    remediation = engine.incidents.open_incident(
        boundary_point="remediation-response",
        defect_class="remediation",
        impacted_count=regenerated,
        impacted_unit="files",
        kind="remediation",
        evidence=remediation_evidence,
    )
    verification = engine.incidents.open_incident(
        boundary_point="pre-republish-verification",
        defect_class="independent_verification",
        impacted_count=len(range_checked_layers),
        impacted_unit="layers",
        kind="verification",
        evidence=[r.seq for r in range_check_records],
    )
    if detection is not None:
        engine.incidents.link_resolution(detection.id, remediation, IncidentStatus.REMEDIATED)
        engine.incidents.link_resolution(detection.id, verification, IncidentStatus.VERIFIED)

    summary = {
        "station_count": station_count,
        "blocked_at": detection.boundary_point if detection else None,
        "detection_incident": detection.id if detection else None,
        "resolution_chain": list(detection.resolution_chain) if detection else [],
        "final_status": detection.status.value if detection else None,
        "impacted": detection.impacted_count if detection else None,
        "impacted_unit": detection.impacted_unit if detection else None,
        "detection_latency_ticks": detection.detection_latency if detection else None,
        "user_exposure": detection.user_exposure if detection else None,
        "commits_prevented": (
            f"{detection.commits_prevented[0]}/{detection.commits_prevented[1]}" if detection else None
        ),
        "regenerated_artifacts": regenerated,
        "range_checked_layers": len(range_checked_layers),
        "publish_executions": {
            faulty_run.id: engine.sink.count_for_run(faulty_run.id),
            remediated_run.id: engine.sink.count_for_run(remediated_run.id),
        },
    }
    ok = (
        faulty_run.status == "blocked"
        and remediated_run.status == "done"
        and detection is not None
        and detection.status is IncidentStatus.VERIFIED
        and len(detection.resolution_chain) == 3
        and detection.impacted_count == station_count
        and detection.user_exposure == 0
        and detection.commits_prevented == (1, 1)
        and regenerated == 5
        and len(range_checked_layers) == 5
        and engine.sink.count_for_run(faulty_run.id) == 0
        and engine.sink.count_for_run(remediated_run.id) == 1
    )
    lines = [
        f"run {faulty_run.id}: blocked at {summary['blocked_at']} "
        f"({summary['impacted']} {summary['impacted_unit']} impacted, publish never executed)",
        f"incident chain: {' -> '.join(summary['resolution_chain'])} (status {summary['final_status']})",
        f"metrics: detection_latency={summary['detection_latency_ticks']} ticks, "
        f"user_exposure={summary['user_exposure']}, commits_prevented={summary['commits_prevented']}",
        f"run {remediated_run.id}: {regenerated} artifacts regenerated, "
        f"range checks logged for {len(range_checked_layers)} layers, republish approved and committed",
    ]
    return ScenarioResult(
        name="iss004_chain",
        ok=ok,
        summary=summary,
        lines=lines,
        engine=engine,
        runs=[faulty_run, remediated_run],
        incidents=engine.incidents.list(),
    )


_DIFFERENTIAL_CLASSES = (
    ErrorClass.COORDINATE_SWAP,
    ErrorClass.SCHEMA_DRIFT,
    ErrorClass.WRONG_DATASET,
    ErrorClass.BOUNDARY_CROSSING,
)


def _defective_artifact(error_class: ErrorClass, stations: list[dict]) -> dict[str, bytes]:
    base = build_station_layers(stations, layer_count=1)
    if error_class is ErrorClass.COORDINATE_SWAP:
        # The wrong-field transform lands every station on one reference
        # point: structurally valid, in bounds, spatially implausible.
        return collapse_to_anchor(base)
    return inject_error(error_class, base)


def audit_differential(seed: int = 0, env: Environment | None = None, station_count: int = 40) -> ScenarioResult:
    """Producer self-checks pass all four seeded defect classes; boundary
    gates catch all four, each through a different validator kind."""
    env = env or build_environment()
    engine = env.engine
    stations = make_station_records(station_count, seed)
    self_check = ValidatorSpec(
        id="self-check-wellformed",
        kind=ValidatorKind.SCRIPTED_PREDICATE,
        params={"predicate": "well-formed-geojson", "min_features": 1, "declared_pure": True},
        severity=Severity.ADVISORY,
    )
    defn = WorkflowDefinition(
        id="audit-differential",
        stages=(
            Stage(role=WORKER, skill=PREPARE_SKILL),
            Stage(
                role=PUBLISHER,
                skill=PUBLISH_SKILL,
                gate=("v-lat-bounds", "v-lon-bounds", "v-schema-station", "v-spatial-spread", "v-expected-dataset"),
                requires_approval=True,
                irreversible=True,
            ),
        ),
        metadata={"impacted_unit": "stations"},
    )

    self_detections = 0
    audit_detections = 0
    detected_by: dict[str, str] = {}
    runs: list[WorkflowRun] = []
    kind_by_validator = {s.id: s.kind.value for s in standard_validators()}

    for error_class in _DIFFERENTIAL_CLASSES:
        artifact = _defective_artifact(error_class, stations)
        self_result = run_gate(
            [self_check],
            artifact["layer-01.geojson"],
            audit=engine.audit,
            actor=WORKER,
            clock=engine.clock,
            artifact_name="layer-01.geojson",
            audit_context={"self_check": True, "error_class": error_class.value},
        )
        if any(o.verdict is Verdict.FAIL for o in self_result.outcomes):
            self_detections += 1

        stubs = {
            WORKER: scripted_stub(f"stub-{error_class.value}", WORKER, lambda ctx, a=artifact: dict(a)),
            PUBLISHER: scripted_stub("stub-publisher", PUBLISHER, lambda ctx: {}),
        }
        run = engine.run_workflow(defn, stubs, {"stations.csv": stations_to_csv(stations)}, approver=SUPERVISOR)
        runs.append(run)
        if run.status == "blocked" and run.package_ids:
            pkg = engine.handoff.get(run.package_ids[-1])
            failing_kinds = sorted(
                {kind_by_validator[o.validator_id] for o in pkg.gate_result.blocking_failures}
            )
            if failing_kinds:
                audit_detections += 1
                detected_by[error_class.value] = "+".join(failing_kinds)

    distinct_kinds = len(set(detected_by.values()))
    summary = {
        "seeded_classes": [c.value for c in _DIFFERENTIAL_CLASSES],
        "self_detections": f"{self_detections}/4",
        "audit_detections": f"{audit_detections}/4",
        "detected_by": detected_by,
        "distinct_validator_kinds": distinct_kinds,
    }
    ok = (
        self_detections == 0
        and audit_detections == 4
        and distinct_kinds == 4
        and all(r.status == "blocked" for r in runs)
    )
    lines = [
        f"producer self-check detections: {summary['self_detections']} (fail-open outputs look plausible)",
        f"boundary gate detections: {summary['audit_detections']}",
    ]
    for cls, kind in detected_by.items():
        lines.append(f"  {cls} caught by {kind}")
    return ScenarioResult(
        name="audit_differential",
        ok=ok,
        summary=summary,
        lines=lines,
        engine=engine,
        runs=runs,
        incidents=engine.incidents.list(),
    )


def kg_corruption(seed: int = 0, env: Environment | None = None) -> ScenarioResult:
    """Integrity lint over the corrupted knowledge store fixture, plus the
    governance refusals a non-traversable store triggers."""
    env = env or build_environment()
    engine = env.engine
    corrupted = load_store(fixture_path("corrupted"))
    report = validate_integrity(corrupted)

    bundle_bytes = json.dumps({"documents": corrupted.serialize()}, sort_keys=True).encode("utf-8")
    integrity_spec = next(s for s in standard_validators() if s.id == "v-artifact-integrity")
    gate = run_gate(
        [integrity_spec],
        bundle_bytes,
        audit=engine.audit,
        actor=AUDITOR,
        clock=engine.clock,
        artifact_name="corrupted-bundle.json",
        audit_context={"scenario": "kg_corruption"},
    )

    retrieval_refused = False
    try:
        retrieve_subgraph(corrupted, {"archive"}, limit=5)
    except NonTraversableStoreError:
        retrieval_refused = True

    workflow_refused = False
    probe = Engine(corrupted, orchestrator_role=ORCHESTRATOR)
    probe.register_zone(Zone(id="prep-server"))
    probe.register_zone(Zone(id="control"))
    probe.register_role(
        Role(WORKER, RoleKind.WORKER, frozenset({Capability.READ_WORKING, Capability.WRITE_WORKING}), "prep-server")
    )
    probe.register_role(
        Role(ORCHESTRATOR, RoleKind.ORCHESTRATOR, frozenset({Capability.ROUTE_HANDOFF}), "control")
    )
    probe_defn = WorkflowDefinition(
        id="probe",
        stages=(Stage(role=WORKER, skill="skill-ingest-aerial-photos"),),
    )
    try:
        probe.run_workflow(probe_defn, {WORKER: scripted_stub("s", WORKER, lambda ctx: {"out.json": b"{}"})}, {"in.json": b"{}"})
    except Exception:
        workflow_refused = True

    summary = {
        "broken_behavior_refs": len(report.broken_behavior_refs),
        "missing_knowledge_links": len(report.missing_knowledge_links),
        "orphan_nodes": len(report.orphan_nodes),
        "defect_count": report.defect_count,
        "traversable": report.traversable,
        "lint_gate_approved": gate.approved,
        "retrieval_refused": retrieval_refused,
        "workflow_refused": workflow_refused,
    }
    ok = (
        len(report.broken_behavior_refs) == 16
        and len(report.missing_knowledge_links) == 20
        and len(report.orphan_nodes) == 3
        and not report.traversable
        and not gate.approved
        and retrieval_refused
        and workflow_refused
    )
    lines = [
        f"broken skill->behavior references: {len(report.broken_behavior_refs)}",
        f"missing knowledge->skill links: {len(report.missing_knowledge_links)}",
        f"orphaned nodes: {len(report.orphan_nodes)}",
        f"traversable: {report.traversable}; retrieval refused: {retrieval_refused}; workflow refused: {workflow_refused}",
    ]
    return ScenarioResult(
        name="kg_corruption",
        ok=ok,
        summary=summary,
        lines=lines,
        engine=engine,
        runs=[],
        incidents=engine.incidents.list(),
    )


SCENARIOS = {
    "iss004_chain": iss004_chain,
    "audit_differential": audit_differential,
    "kg_corruption": kg_corruption,
}


def replay_scenario(name: str, seed: int = 0, env: Environment | None = None) -> ScenarioResult:
    if name not in SCENARIOS:
        raise UnknownScenario(name)
    return SCENARIOS[name](seed=seed, env=env)


def approval_pipeline_fixture(station_count: int = 12, seed: int = 7):
    """Runnable fixture for gateway submissions: clean pipeline that stalls
    at the irreversible stage until a supervisor decision arrives."""
    stations = make_station_records(station_count, seed)
    defn = station_publication_definition()
    stubs = _station_stubs(_corrected_worker())
    inputs = {"stations.csv": stations_to_csv(stations)}
    return defn, stubs, inputs


RUN_FIXTURES = {
    "approval-pipeline": approval_pipeline_fixture,
}
