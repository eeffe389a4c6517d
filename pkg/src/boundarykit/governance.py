"""Capability-based least-privilege enforcement.

Roles hold a fixed set of capabilities constrained by their kind, and are
confined to a single zone. Checks are default-deny: an action is allowed only
when the capability is held and the resource lives in the role's own zone.
Every denial produces exactly one audit record.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum

from .audit import AuditEvent, AuditLog


class Capability(str, Enum):
    READ_WORKING = "read_working"
    WRITE_WORKING = "write_working"
    RUN_VALIDATION = "run_validation"
    PUBLISH_EXTERNAL = "publish_external"
    ROUTE_HANDOFF = "route_handoff"
    APPROVE_HANDOFF = "approve_handoff"
    READ_AUDIT = "read_audit"


class RoleKind(str, Enum):
    WORKER = "worker"
    VALIDATOR = "validator"
    PUBLISHER = "publisher"
    ORCHESTRATOR = "orchestrator"
    HUMAN_SUPERVISOR = "human_supervisor"


@dataclass(frozen=True)
class Zone:
    id: str
    description: str = ""


@dataclass(frozen=True)
class Role:
    id: str
    kind: RoleKind
    capabilities: frozenset[Capability]
    zone: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "capabilities": sorted(c.value for c in self.capabilities),
            "zone": self.zone,
        }


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: str | None = None

    @staticmethod
    def allow() -> "Decision":
        return Decision(True, None)

    @staticmethod
    def deny(reason: str) -> "Decision":
        return Decision(False, reason)


class RoleInvariantViolation(Exception):
    pass


class CapabilityDenied(Exception):
    def __init__(self, decision: Decision, role_id: str, action: Capability, zone: str):
        super().__init__(f"denied({decision.reason}): role={role_id} action={action.value} zone={zone}")
        self.decision = decision
        self.role_id = role_id
        self.action = action
        self.zone = zone


_VALIDATOR_ALLOWED = frozenset({Capability.RUN_VALIDATION, Capability.READ_AUDIT})


def _check_role_invariants(role: Role) -> None:
    caps = role.capabilities
    kind = role.kind
    if kind is not RoleKind.HUMAN_SUPERVISOR and Capability.APPROVE_HANDOFF in caps:
        raise RoleInvariantViolation(
            f"role {role.id}: approve_handoff is reserved for human_supervisor roles"
        )
    if kind is RoleKind.WORKER and Capability.PUBLISH_EXTERNAL in caps:
        raise RoleInvariantViolation(f"role {role.id}: worker roles must not hold publish_external")
    if kind is RoleKind.VALIDATOR and not caps <= _VALIDATOR_ALLOWED:
        extra = sorted(c.value for c in caps - _VALIDATOR_ALLOWED)
        raise RoleInvariantViolation(
            f"role {role.id}: validator roles hold only run_validation/read_audit (extra: {extra})"
        )
    if kind is RoleKind.PUBLISHER:
        if Capability.PUBLISH_EXTERNAL not in caps:
            raise RoleInvariantViolation(f"role {role.id}: publisher roles must hold publish_external")
        if Capability.ROUTE_HANDOFF in caps:
            raise RoleInvariantViolation(f"role {role.id}: publisher roles must not hold route_handoff")
    if kind is RoleKind.ORCHESTRATOR:
        if Capability.ROUTE_HANDOFF not in caps:
            raise RoleInvariantViolation(f"role {role.id}: orchestrator roles must hold route_handoff")
        if Capability.PUBLISH_EXTERNAL in caps or Capability.WRITE_WORKING in caps:
            raise RoleInvariantViolation(
                f"role {role.id}: orchestrator roles hold neither publish_external nor write_working"
            )


class RoleRegistry:
    """Registry plus enforcement point for the capability matrix."""

    def __init__(self, audit: AuditLog) -> None:
        self._audit = audit
        self._roles: dict[str, Role] = {}
        self._zones: dict[str, Zone] = {}
        self._lock = threading.Lock()
        self.denials_issued = 0

    def register_zone(self, zone: Zone) -> str:
        with self._lock:
            self._zones[zone.id] = zone
        return zone.id

    def register_role(self, role: Role) -> str:
        _check_role_invariants(role)
        with self._lock:
            if role.id in self._roles:
                raise RoleInvariantViolation(f"role {role.id}: duplicate role id")
            if role.zone not in self._zones:
                raise RoleInvariantViolation(f"role {role.id}: unknown zone {role.zone!r}")
            self._roles[role.id] = role
        self._audit.append(
            AuditEvent.WORKFLOW_EVENT,
            actor="governance",
            payload={"kind": "role_registered", "role": role.to_dict()},
        )
        return role.id

    def get(self, role_id: str) -> Role:
        return self._roles[role_id]

    def list_roles(self) -> list[Role]:
        return [self._roles[k] for k in sorted(self._roles)]

    def zones(self) -> list[Zone]:
        return [self._zones[k] for k in sorted(self._zones)]

    def check(self, role_id: str, action: Capability, resource_zone: str) -> Decision:
        role = self._roles.get(role_id)
        if role is None:
            return self._deny(role_id, action, resource_zone, "unknown_role")
        if resource_zone != role.zone:
            return self._deny(role_id, action, resource_zone, "zone_violation")
        if action not in role.capabilities:
            return self._deny(role_id, action, resource_zone, "capability_missing")
        return Decision.allow()

    def require(self, role_id: str, action: Capability, resource_zone: str) -> None:
        decision = self.check(role_id, action, resource_zone)
        if not decision.allowed:
            raise CapabilityDenied(decision, role_id, action, resource_zone)

    def check_self(self, role_id: str, action: Capability) -> Decision:
        """Check an action against the role's own zone (control-plane actions)."""
        role = self._roles.get(role_id)
        zone = role.zone if role else "unknown"
        return self.check(role_id, action, zone)

    def require_self(self, role_id: str, action: Capability) -> None:
        role = self._roles.get(role_id)
        zone = role.zone if role else "unknown"
        self.require(role_id, action, zone)

    def _deny(self, role_id: str, action: Capability, zone: str, reason: str) -> Decision:
        with self._lock:
            self.denials_issued += 1
        self._audit.append(
            AuditEvent.CAPABILITY_DENIAL,
            actor=role_id,
            payload={"role": role_id, "action": action.value, "zone": zone, "reason": reason},
        )
        return Decision.deny(reason)
