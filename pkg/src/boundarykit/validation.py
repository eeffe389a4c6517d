"""Deterministic, side-effect-free validators run at trust boundaries.

A validator is a pure function of artifact content: same input digest, same
outcome. Failures carry the complete list of offending values (collect-all,
not first-fail); fail-stop applies at the gate, which blocks when any
blocking validator fails. Parse failures are validation failures, never
silent passes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable

from . import artifacts as _artifacts
from .audit import AuditEvent, AuditLog, Clock, canonical_json, sha256_hex


class ValidatorKind(str, Enum):
    NUMERIC_RANGE = "numeric_range"
    SCHEMA_CONFORMANCE = "schema_conformance"
    SPATIAL_PLAUSIBILITY = "spatial_plausibility"
    ARTIFACT_INTEGRITY = "artifact_integrity"
    SCRIPTED_PREDICATE = "scripted_predicate"


class Severity(str, Enum):
    BLOCKING = "blocking"
    ADVISORY = "advisory"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"


class ValidatorSpecError(Exception):
    pass


class PurityError(Exception):
    pass


class PayloadParseError(Exception):
    pass


@dataclass(frozen=True)
class ValidatorSpec:
    id: str
    kind: ValidatorKind
    params: dict
    severity: Severity = Severity.BLOCKING

    def __post_init__(self) -> None:
        if self.kind is ValidatorKind.NUMERIC_RANGE:
            for key in ("field", "min", "max"):
                if key not in self.params:
                    raise ValidatorSpecError(f"validator {self.id}: numeric_range requires {key!r}")
        if self.kind is ValidatorKind.SPATIAL_PLAUSIBILITY and "max_collocated_fraction" not in self.params:
            raise ValidatorSpecError(f"validator {self.id}: spatial_plausibility requires max_collocated_fraction")
        if self.kind is ValidatorKind.SCRIPTED_PREDICATE:
            if "predicate" not in self.params:
                raise ValidatorSpecError(f"validator {self.id}: scripted_predicate requires a predicate name")
            if not self.params.get("declared_pure", True):
                raise ValidatorSpecError(f"validator {self.id}: scripted predicates must declare purity")

    @staticmethod
    def from_dict(doc: dict) -> "ValidatorSpec":
        return ValidatorSpec(
            id=doc["id"],
            kind=ValidatorKind(doc["kind"]),
            params=dict(doc.get("params", {})),
            severity=Severity(doc.get("severity", "blocking")),
        )

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind.value, "params": dict(self.params), "severity": self.severity.value}


OffendingItem = tuple  # (record_id, field, value)


@dataclass(frozen=True)
class ValidationOutcome:
    validator_id: str
    verdict: Verdict
    offending_items: tuple[OffendingItem, ...]
    ran_at: int
    input_digest: str

    def to_dict(self) -> dict:
        return {
            "validator_id": self.validator_id,
            "verdict": self.verdict.value,
            "offending_items": [list(item) for item in self.offending_items],
            "ran_at": self.ran_at,
            "input_digest": self.input_digest,
        }

    def canonical(self) -> bytes:
        return canonical_json(self.to_dict())


@dataclass(frozen=True)
class GateResult:
    approved: bool
    outcomes: tuple[ValidationOutcome, ...]

    @property
    def blocking_failures(self) -> tuple[ValidationOutcome, ...]:
        return tuple(o for o, blocking in zip(self.outcomes, self._blocking_flags) if blocking and o.verdict is Verdict.FAIL)

    # Parallel flags frozen at construction so the result is self-contained.
    _blocking_flags: tuple[bool, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "approved": self.approved,
            "outcomes": [o.to_dict() for o in self.outcomes],
            "blocking_flags": list(self._blocking_flags),
        }


@dataclass(frozen=True)
class _Record:
    record_id: str
    fields: dict
    lonlat: tuple[float, float] | None


@dataclass(frozen=True)
class ParsedPayload:
    kind: str  # "geojson", "table", or "json"
    records: tuple[_Record, ...]
    collection: dict


def payload_bytes(payload: Any) -> bytes:
    if isinstance(payload, bytes):
        return payload
    if isinstance(payload, str):
        return payload.encode("utf-8")
    return canonical_json(payload)


def _record_id(props: dict, fallback: str) -> str:
    for key in ("station_id", "id"):
        value = props.get(key)
        if value is not None:
            return str(value)
    return fallback


def _parse_geojson(doc: dict) -> ParsedPayload:
    records = []
    for i, feature in enumerate(doc.get("features", [])):
        props = feature.get("properties") or {}
        lonlat = None
        geometry = feature.get("geometry") or {}
        coords = geometry.get("coordinates")
        if (
            geometry.get("type") == "Point"
            and isinstance(coords, (list, tuple))
            and len(coords) >= 2
            and all(isinstance(c, (int, float)) for c in coords[:2])
        ):
            lonlat = (float(coords[0]), float(coords[1]))
        rid = str(feature.get("id")) if feature.get("id") is not None else _record_id(props, f"feature-{i}")
        records.append(_Record(record_id=rid, fields=dict(props), lonlat=lonlat))
    collection = {k: v for k, v in doc.items() if k != "features"}
    return ParsedPayload(kind="geojson", records=tuple(records), collection=collection)


def _parse_csv(text: str) -> ParsedPayload:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise PayloadParseError("CSV payload has no header row")
    records = []
    for i, row in enumerate(reader):
        if None in row:
            raise PayloadParseError(f"CSV row {i} has more cells than the header declares")
        records.append(_Record(record_id=_record_id(row, f"row-{i}"), fields=dict(row), lonlat=None))
    return ParsedPayload(kind="table", records=tuple(records), collection={})


def parse_payload(payload: Any) -> ParsedPayload:
    if isinstance(payload, dict):
        doc = payload
    elif isinstance(payload, (bytes, str)):
        text = payload.decode("utf-8") if isinstance(payload, bytes) else payload
        stripped = text.lstrip()
        if stripped.startswith("{") or stripped.startswith("["):
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as exc:
                raise PayloadParseError(f"invalid JSON: {exc}") from exc
        else:
            return _parse_csv(text)
    else:
        raise PayloadParseError(f"unsupported payload type {type(payload).__name__}")
    if isinstance(doc, dict) and doc.get("type") == "FeatureCollection":
        return _parse_geojson(doc)
    return ParsedPayload(kind="json", records=(), collection=doc if isinstance(doc, dict) else {"documents": doc})


def _lookup(record: _Record, fieldname: str) -> Any:
    if fieldname in record.fields:
        return record.fields[fieldname]
    if record.lonlat is not None:
        if fieldname in ("lat", "latitude"):
            return record.lonlat[1]
        if fieldname in ("lon", "longitude", "lng"):
            return record.lonlat[0]
    return None


def _check_numeric_range(spec: ValidatorSpec, parsed: ParsedPayload) -> list[OffendingItem]:
    fieldname = spec.params["field"]
    lo, hi = float(spec.params["min"]), float(spec.params["max"])
    lo_inc = bool(spec.params.get("min_inclusive", True))
    hi_inc = bool(spec.params.get("max_inclusive", True))
    offending: list[OffendingItem] = []
    for record in parsed.records:
        raw = _lookup(record, fieldname)
        try:
            value = float(raw)
        except (TypeError, ValueError):
            offending.append((record.record_id, fieldname, raw))
            continue
        ok_lo = value >= lo if lo_inc else value > lo
        ok_hi = value <= hi if hi_inc else value < hi
        if not (ok_lo and ok_hi):
            offending.append((record.record_id, fieldname, value))
    return offending


def _check_schema(spec: ValidatorSpec, parsed: ParsedPayload) -> list[OffendingItem]:
    required = list(spec.params.get("required_fields", []))
    collection_required = list(spec.params.get("collection_required", []))
    field_types = dict(spec.params.get("field_types", {}))
    offending: list[OffendingItem] = []
    for key in collection_required:
        if parsed.collection.get(key) in (None, ""):
            offending.append(("collection", key, None))
    for record in parsed.records:
        for key in required:
            value = record.fields.get(key)
            if value in (None, ""):
                offending.append((record.record_id, key, None))
        for key, expected in field_types.items():
            value = record.fields.get(key)
            if value is None:
                continue
            if expected == "number" and not isinstance(value, (int, float)):
                offending.append((record.record_id, key, value))
            elif expected == "string" and not isinstance(value, str):
                offending.append((record.record_id, key, value))
    return offending


def _check_spatial(spec: ValidatorSpec, parsed: ParsedPayload) -> list[OffendingItem]:
    max_fraction = float(spec.params["max_collocated_fraction"])
    epsilon = float(spec.params.get("epsilon", 1e-9))
    located = [(r.record_id, r.lonlat) for r in parsed.records]
    missing = [(rid, "coordinates", None) for rid, lonlat in located if lonlat is None]
    if missing:
        return missing
    if len(located) < 2:
        return []
    clusters: dict[tuple[int, int], list[int]] = {}
    for i, (_, lonlat) in enumerate(located):
        key = (int(round(lonlat[0] / epsilon)), int(round(lonlat[1] / epsilon)))
        clusters.setdefault(key, []).append(i)
    dominant = max(clusters.values(), key=lambda idxs: (len(idxs), -idxs[0]))
    if len(dominant) / len(located) > max_fraction:
        rep_id, rep_lonlat = located[dominant[0]]
        point = f"({rep_lonlat[0]},{rep_lonlat[1]})"
        return [(f"cluster{point}", "collocated_count", len(dominant))]
    return []


def _check_artifact_integrity(spec: ValidatorSpec, parsed: ParsedPayload) -> list[OffendingItem]:
    source = parsed.collection.get("documents", parsed.collection)
    store = _artifacts.load_store(source)
    report = _artifacts.validate_integrity(store)
    offending: list[OffendingItem] = []
    for skill_id, missing in report.broken_behavior_refs:
        offending.append((skill_id, "behavior_gate", missing))
    for skill_id, missing in report.missing_knowledge_links:
        offending.append((skill_id, "knowledge_link", missing))
    for node_id in report.orphan_nodes:
        offending.append((node_id, "orphan", node_id))
    return offending


PredicateFn = Callable[[ParsedPayload, dict], tuple[bool, list]]
PREDICATES: dict[str, PredicateFn] = {}


def register_predicate(name: str, fn: PredicateFn) -> None:
    PREDICATES[name] = fn


def _predicate_expected_dataset(parsed: ParsedPayload, params: dict) -> tuple[bool, list]:
    expected = params.get("expected")
    actual = parsed.collection.get("dataset")
    if actual == expected:
        return True, []
    return False, [("collection", "dataset", actual)]


def _predicate_well_formed_geojson(parsed: ParsedPayload, params: dict) -> tuple[bool, list]:
    min_features = int(params.get("min_features", 1))
    if parsed.kind == "geojson" and len(parsed.records) >= min_features:
        return True, []
    return False, [("artifact", "features", len(parsed.records))]


def _predicate_non_empty(parsed: ParsedPayload, params: dict) -> tuple[bool, list]:
    if parsed.records:
        return True, []
    return False, [("artifact", "records", 0)]


register_predicate("expected-dataset", _predicate_expected_dataset)
register_predicate("well-formed-geojson", _predicate_well_formed_geojson)
register_predicate("non-empty", _predicate_non_empty)


def _check_scripted(spec: ValidatorSpec, parsed: ParsedPayload) -> list[OffendingItem]:
    name = spec.params["predicate"]
    if name not in PREDICATES:
        raise ValidatorSpecError(f"validator {spec.id}: unknown predicate {name!r}")
    passed, offending = PREDICATES[name](parsed, spec.params)
    if passed:
        return []
    if not offending:
        offending = [("artifact", "predicate", name)]
    return [tuple(item) for item in offending]


_CHECKS = {
    ValidatorKind.NUMERIC_RANGE: _check_numeric_range,
    ValidatorKind.SCHEMA_CONFORMANCE: _check_schema,
    ValidatorKind.SPATIAL_PLAUSIBILITY: _check_spatial,
    ValidatorKind.ARTIFACT_INTEGRITY: _check_artifact_integrity,
    ValidatorKind.SCRIPTED_PREDICATE: _check_scripted,
}


def run_validator(spec: ValidatorSpec, payload: Any, *, ran_at: int = 0, verify_pure: bool = False) -> ValidationOutcome:
    """Run one validator over one artifact payload.

    Unparseable artifacts fail (with the parse error as the offending item)
    rather than erroring out, keeping the gate fail-stop.
    """
    digest = sha256_hex(payload_bytes(payload))

    def execute() -> ValidationOutcome:
        try:
            parsed = parse_payload(payload)
            offending = _CHECKS[spec.kind](spec, parsed)
        except (PayloadParseError, _artifacts.BundleParseError) as exc:
            offending = [("artifact", "parse", str(exc))]
        verdict = Verdict.FAIL if offending else Verdict.PASS
        return ValidationOutcome(
            validator_id=spec.id,
            verdict=verdict,
            offending_items=tuple(tuple(i) for i in offending),
            ran_at=ran_at,
            input_digest=digest,
        )

    outcome = execute()
    if verify_pure and spec.kind is ValidatorKind.SCRIPTED_PREDICATE:
        second = execute()
        if second.canonical() != outcome.canonical():
            raise PurityError(f"validator {spec.id}: scripted predicate is not pure")
    return outcome


def run_gate(
    specs: Iterable[ValidatorSpec],
    payload: Any,
    *,
    audit: AuditLog | None = None,
    actor: str = "validation-gate",
    clock: Clock | None = None,
    artifact_name: str | None = None,
    audit_context: dict | None = None,
    verify_pure: bool = False,
) -> GateResult:
    """Run an ordered validator list over one artifact.

    Approved iff every blocking validator passes; advisory failures annotate
    but never block. Every outcome (pass and fail alike) is audited when an
    audit log is supplied.
    """
    specs = list(specs)
    outcomes: list[ValidationOutcome] = []
    flags: list[bool] = []
    for spec in specs:
        ran_at = clock.tick() if clock is not None else 0
        outcome = run_validator(spec, payload, ran_at=ran_at, verify_pure=verify_pure)
        outcomes.append(outcome)
        flags.append(spec.severity is Severity.BLOCKING)
        if audit is not None:
            payload_doc = {
                "validator": spec.id,
                "kind": spec.kind.value,
                "severity": spec.severity.value,
                "outcome": outcome.to_dict(),
            }
            if artifact_name is not None:
                payload_doc["artifact"] = artifact_name
            if audit_context:
                payload_doc.update(audit_context)
            audit.append(AuditEvent.VALIDATION_OUTCOME, actor=actor, payload=payload_doc)
    approved = all(
        o.verdict is Verdict.PASS for o, blocking in zip(outcomes, flags) if blocking
    )
    return GateResult(approved=approved, outcomes=tuple(outcomes), _blocking_flags=tuple(flags))
