from __future__ import annotations

import pytest

from boundarykit.audit import AuditLog, Clock, IncidentLog
from boundarykit.governance import Capability, Role, RoleKind, RoleRegistry, Zone
from boundarykit.handoff import ContentStore, HandoffManager
from boundarykit.scenarios import build_environment


@pytest.fixture
def env():
    return build_environment()


@pytest.fixture
def audit_log():
    return AuditLog(Clock())


@pytest.fixture
def registry(audit_log):
    reg = RoleRegistry(audit_log)
    for zone in ("prep-server", "pipeline-server", "pub-server", "control"):
        reg.register_zone(Zone(id=zone))
    reg.register_role(
        Role("worker-1", RoleKind.WORKER, frozenset({Capability.READ_WORKING, Capability.WRITE_WORKING}), "prep-server")
    )
    reg.register_role(
        Role("validator-1", RoleKind.VALIDATOR, frozenset({Capability.RUN_VALIDATION, Capability.READ_AUDIT}), "pipeline-server")
    )
    reg.register_role(
        Role("publisher-1", RoleKind.PUBLISHER, frozenset({Capability.PUBLISH_EXTERNAL, Capability.READ_WORKING}), "pub-server")
    )
    reg.register_role(
        Role("orchestrator-1", RoleKind.ORCHESTRATOR, frozenset({Capability.ROUTE_HANDOFF}), "control")
    )
    reg.register_role(
        Role("supervisor-1", RoleKind.HUMAN_SUPERVISOR, frozenset({Capability.APPROVE_HANDOFF, Capability.READ_AUDIT}), "control")
    )
    return reg


@pytest.fixture
def handoff_world(audit_log, registry):
    incidents = IncidentLog(audit_log)
    content = ContentStore()
    manager = HandoffManager(registry, audit_log, incidents, content)
    return manager, audit_log, registry, incidents, content
