"""boundarykit: orchestration engine for partially probabilistic workflows.

Reliability is enforced architecturally: role-separated execution under a
default-deny capability matrix, deterministic validation gates at every
handoff, a hash-chained audit log, a three-track knowledge artifact store
with integrity linting, and a fault-injection simulator that checks the
composition math empirically.
"""

from .artifacts import (
    ArtifactStore,
    IntegrityReport,
    load_store,
    resolve_skill,
    retrieve_subgraph,
    validate_integrity,
)
from .audit import AuditLog, AuditRecord, Clock, Incident, IncidentLog, verify_log_file, verify_records
from .governance import Capability, Decision, Role, RoleKind, RoleRegistry, Zone
from .handoff import HandoffManager, HandoffPackage, HandoffPhase
from .reliability import ReliabilityParams, SimulationReport, chain_reliability, escape_probability, run_simulation
from .scenarios import build_environment, fixture_path, replay_scenario
from .validation import GateResult, ValidationOutcome, ValidatorSpec, run_gate, run_validator
from .workflow import Engine, Stage, WorkflowDefinition, WorkflowRun

__version__ = "0.1.0"

__all__ = [
    "ArtifactStore",
    "AuditLog",
    "AuditRecord",
    "Capability",
    "Clock",
    "Decision",
    "Engine",
    "GateResult",
    "HandoffManager",
    "HandoffPackage",
    "HandoffPhase",
    "Incident",
    "IncidentLog",
    "IntegrityReport",
    "ReliabilityParams",
    "Role",
    "RoleKind",
    "RoleRegistry",
    "SimulationReport",
    "Stage",
    "ValidationOutcome",
    "ValidatorSpec",
    "WorkflowDefinition",
    "WorkflowRun",
    "Zone",
    "build_environment",
    "chain_reliability",
    "escape_probability",
    "fixture_path",
    "load_store",
    "replay_scenario",
    "resolve_skill",
    "retrieve_subgraph",
    "run_gate",
    "run_simulation",
    "run_validator",
    "validate_integrity",
    "verify_log_file",
    "verify_records",
]
