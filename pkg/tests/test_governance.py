from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from boundarykit.audit import AuditEvent, AuditLog, Clock
from boundarykit.governance import (
    Capability,
    CapabilityDenied,
    Role,
    RoleInvariantViolation,
    RoleKind,
    RoleRegistry,
    Zone,
)

ALL_CAPS = list(Capability)


class TestRegistration:
    def test_valid_validator_registers(self, registry):
        rid = registry.register_role(
            Role("validator-2", RoleKind.VALIDATOR, frozenset({Capability.RUN_VALIDATION}), "pipeline-server")
        )
        assert registry.get(rid).kind is RoleKind.VALIDATOR

    def test_worker_with_publish_rejected(self, registry):
        with pytest.raises(RoleInvariantViolation) as err:
            registry.register_role(
                Role("worker-bad", RoleKind.WORKER, frozenset({Capability.PUBLISH_EXTERNAL}), "prep-server")
            )
        assert "publish_external" in str(err.value)

    def test_validator_with_write_rejected(self, registry):
        with pytest.raises(RoleInvariantViolation):
            registry.register_role(
                Role("validator-bad", RoleKind.VALIDATOR, frozenset({Capability.RUN_VALIDATION, Capability.WRITE_WORKING}), "pipeline-server")
            )

    def test_publisher_needs_publish_external(self, registry):
        with pytest.raises(RoleInvariantViolation):
            registry.register_role(
                Role("publisher-bad", RoleKind.PUBLISHER, frozenset({Capability.READ_WORKING}), "pub-server")
            )

    def test_publisher_cannot_route(self, registry):
        with pytest.raises(RoleInvariantViolation):
            registry.register_role(
                Role(
                    "publisher-bad2",
                    RoleKind.PUBLISHER,
                    frozenset({Capability.PUBLISH_EXTERNAL, Capability.ROUTE_HANDOFF}),
                    "pub-server",
                )
            )

    def test_orchestrator_invariants(self, registry):
        with pytest.raises(RoleInvariantViolation):
            registry.register_role(
                Role("orch-bad", RoleKind.ORCHESTRATOR, frozenset({Capability.READ_AUDIT}), "control")
            )
        with pytest.raises(RoleInvariantViolation):
            registry.register_role(
                Role(
                    "orch-bad2",
                    RoleKind.ORCHESTRATOR,
                    frozenset({Capability.ROUTE_HANDOFF, Capability.WRITE_WORKING}),
                    "control",
                )
            )

    def test_approve_handoff_reserved_for_supervisors(self, registry):
        for kind in (RoleKind.WORKER, RoleKind.PUBLISHER, RoleKind.ORCHESTRATOR):
            caps = {Capability.APPROVE_HANDOFF}
            if kind is RoleKind.PUBLISHER:
                caps.add(Capability.PUBLISH_EXTERNAL)
            if kind is RoleKind.ORCHESTRATOR:
                caps.add(Capability.ROUTE_HANDOFF)
            with pytest.raises(RoleInvariantViolation):
                registry.register_role(Role(f"bad-{kind.value}", kind, frozenset(caps), "control"))

    def test_duplicate_role_id_rejected(self, registry):
        with pytest.raises(RoleInvariantViolation):
            registry.register_role(
                Role("worker-1", RoleKind.WORKER, frozenset({Capability.READ_WORKING}), "prep-server")
            )

    def test_unknown_zone_rejected(self, registry):
        with pytest.raises(RoleInvariantViolation):
            registry.register_role(
                Role("worker-x", RoleKind.WORKER, frozenset({Capability.READ_WORKING}), "atlantis")
            )

    def test_registration_audited(self, audit_log, registry):
        before = audit_log.count(AuditEvent.WORKFLOW_EVENT)
        registry.register_role(
            Role("worker-audited", RoleKind.WORKER, frozenset({Capability.READ_WORKING}), "prep-server")
        )
        assert audit_log.count(AuditEvent.WORKFLOW_EVENT) == before + 1


class TestCheck:
    def test_worker_publish_denied_capability_missing(self, registry):
        decision = registry.check("worker-1", Capability.PUBLISH_EXTERNAL, "prep-server")
        assert not decision.allowed
        assert decision.reason == "capability_missing"

    def test_publisher_publish_own_zone_allowed(self, registry):
        decision = registry.check("publisher-1", Capability.PUBLISH_EXTERNAL, "pub-server")
        assert decision.allowed

    def test_cross_zone_denied(self, registry):
        decision = registry.check("publisher-1", Capability.WRITE_WORKING, "prep-server")
        assert not decision.allowed
        assert decision.reason == "zone_violation"

    def test_unknown_role_denied_and_audited(self, audit_log, registry):
        before = audit_log.count(AuditEvent.CAPABILITY_DENIAL)
        decision = registry.check("ghost", Capability.READ_WORKING, "prep-server")
        assert decision.reason == "unknown_role"
        assert audit_log.count(AuditEvent.CAPABILITY_DENIAL) == before + 1

    def test_every_denial_exactly_one_audit_record(self, audit_log, registry):
        before = audit_log.count(AuditEvent.CAPABILITY_DENIAL)
        denied = 0
        for role_id, action, zone in [
            ("worker-1", Capability.PUBLISH_EXTERNAL, "prep-server"),
            ("worker-1", Capability.WRITE_WORKING, "pub-server"),
            ("validator-1", Capability.WRITE_WORKING, "pipeline-server"),
            ("ghost", Capability.READ_AUDIT, "control"),
            ("publisher-1", Capability.PUBLISH_EXTERNAL, "pub-server"),  # allowed
        ]:
            if not registry.check(role_id, action, zone).allowed:
                denied += 1
        assert denied == 4
        assert audit_log.count(AuditEvent.CAPABILITY_DENIAL) == before + denied
        assert registry.denials_issued == denied

    def test_require_raises_after_audit(self, audit_log, registry):
        before = audit_log.count(AuditEvent.CAPABILITY_DENIAL)
        with pytest.raises(CapabilityDenied):
            registry.require("worker-1", Capability.APPROVE_HANDOFF, "prep-server")
        assert audit_log.count(AuditEvent.CAPABILITY_DENIAL) == before + 1

    def test_allows_produce_no_denial_record(self, audit_log, registry):
        before = audit_log.count(AuditEvent.CAPABILITY_DENIAL)
        registry.require("worker-1", Capability.WRITE_WORKING, "prep-server")
        assert audit_log.count(AuditEvent.CAPABILITY_DENIAL) == before


@given(
    action=st.sampled_from(ALL_CAPS),
    zone=st.sampled_from(["prep-server", "pipeline-server", "pub-server", "control", "nowhere"]),
    role_id=st.sampled_from(["worker-1", "validator-1", "publisher-1", "orchestrator-1", "supervisor-1", "ghost"]),
)
def test_default_deny_property(action, zone, role_id):
    # Allowed iff the capability is held AND the zone matches; deny otherwise.
    audit = AuditLog(Clock())
    registry = RoleRegistry(audit)
    for z in ("prep-server", "pipeline-server", "pub-server", "control"):
        registry.register_zone(Zone(id=z))
    roles = {
        "worker-1": Role("worker-1", RoleKind.WORKER, frozenset({Capability.READ_WORKING, Capability.WRITE_WORKING}), "prep-server"),
        "validator-1": Role("validator-1", RoleKind.VALIDATOR, frozenset({Capability.RUN_VALIDATION, Capability.READ_AUDIT}), "pipeline-server"),
        "publisher-1": Role("publisher-1", RoleKind.PUBLISHER, frozenset({Capability.PUBLISH_EXTERNAL, Capability.READ_WORKING}), "pub-server"),
        "orchestrator-1": Role("orchestrator-1", RoleKind.ORCHESTRATOR, frozenset({Capability.ROUTE_HANDOFF}), "control"),
        "supervisor-1": Role("supervisor-1", RoleKind.HUMAN_SUPERVISOR, frozenset({Capability.APPROVE_HANDOFF, Capability.READ_AUDIT}), "control"),
    }
    for role in roles.values():
        registry.register_role(role)
    decision = registry.check(role_id, action, zone)
    if role_id in roles and action in roles[role_id].capabilities and zone == roles[role_id].zone:
        assert decision.allowed
    else:
        assert not decision.allowed
