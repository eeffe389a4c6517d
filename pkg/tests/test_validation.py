from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from boundarykit.audit import AuditEvent, AuditLog, Clock, sha256_hex
from boundarykit.scenarios import corrupted_store_documents, standard_store_documents
from boundarykit.validation import (
    PurityError,
    Severity,
    ValidationOutcome,
    ValidatorKind,
    ValidatorSpec,
    ValidatorSpecError,
    Verdict,
    register_predicate,
    run_gate,
    run_validator,
)

LAT_SPEC = ValidatorSpec(
    id="v-lat",
    kind=ValidatorKind.NUMERIC_RANGE,
    params={"field": "latitude", "min": 24.5, "max": 31.0},
)
LON_SPEC = ValidatorSpec(
    id="v-lon",
    kind=ValidatorKind.NUMERIC_RANGE,
    params={"field": "longitude", "min": -87.5, "max": -79.5},
)


def feature(lon, lat, station_id="station-0001", extra_props=None):
    props = {"station_id": station_id, "name": "Station"}
    if extra_props:
        props.update(extra_props)
    return {
        "type": "Feature",
        "properties": props,
        "geometry": {"type": "Point", "coordinates": [lon, lat]},
    }


def collection(features, dataset="sf2bench-stations"):
    return {"type": "FeatureCollection", "dataset": dataset, "features": features}


class TestNumericRange:
    def test_interior_point_passes(self):
        outcome = run_validator(LAT_SPEC, collection([feature(-81.2, 27.3)]))
        assert outcome.verdict is Verdict.PASS
        assert outcome.offending_items == ()

    def test_boundary_values_inclusive(self):
        payload = collection([feature(-79.5, 24.5)])
        assert run_validator(LAT_SPEC, payload).verdict is Verdict.PASS
        assert run_validator(LON_SPEC, payload).verdict is Verdict.PASS

    def test_exclusive_flags(self):
        spec = ValidatorSpec(
            id="v-open",
            kind=ValidatorKind.NUMERIC_RANGE,
            params={"field": "latitude", "min": 24.5, "max": 31.0, "min_inclusive": False},
        )
        assert run_validator(spec, collection([feature(-80.0, 24.5)])).verdict is Verdict.FAIL

    def test_swapped_fields_fail_both_with_values(self):
        # The coordinate-swap defect: latitude and longitude written into
        # each other's slots; both checks must name the concrete values.
        payload = collection([feature(27.3, -81.2)])
        lat_out = run_validator(LAT_SPEC, payload)
        lon_out = run_validator(LON_SPEC, payload)
        assert lat_out.verdict is Verdict.FAIL
        assert lon_out.verdict is Verdict.FAIL
        assert lat_out.offending_items[0][2] == -81.2
        assert lon_out.offending_items[0][2] == 27.3

    def test_csv_payload(self):
        csv_payload = "station_id,latitude\ns-1,27.3\ns-2,44.0\n"
        outcome = run_validator(LAT_SPEC, csv_payload)
        assert outcome.verdict is Verdict.FAIL
        assert outcome.offending_items == (("s-2", "latitude", 44.0),)

    def test_missing_field_is_violation(self):
        payload = {"type": "FeatureCollection", "features": [{"type": "Feature", "properties": {"station_id": "s-1"}, "geometry": None}]}
        outcome = run_validator(LAT_SPEC, payload)
        assert outcome.verdict is Verdict.FAIL

    def test_spec_requires_min_max(self):
        with pytest.raises(ValidatorSpecError):
            ValidatorSpec(id="bad", kind=ValidatorKind.NUMERIC_RANGE, params={"field": "x"})

    @settings(max_examples=50, deadline=None)
    @given(values=st.lists(st.floats(min_value=-200, max_value=200, allow_nan=False), max_size=40))
    def test_exhaustive_against_brute_force(self, values):
        # Oracle: independent scan counting out-of-range values.
        expected = sum(1 for v in values if not (24.5 <= v <= 31.0))
        payload = collection([feature(-81.0, v, station_id=f"s-{i:03d}") for i, v in enumerate(values)])
        outcome = run_validator(LAT_SPEC, payload)
        assert len(outcome.offending_items) == expected
        assert (outcome.verdict is Verdict.FAIL) == (expected > 0)


class TestSchemaConformance:
    SPEC = ValidatorSpec(
        id="v-schema",
        kind=ValidatorKind.SCHEMA_CONFORMANCE,
        params={"required_fields": ["station_id", "name"], "collection_required": ["dataset"]},
    )

    def test_complete_schema_passes(self):
        assert run_validator(self.SPEC, collection([feature(-81, 27)])).verdict is Verdict.PASS

    def test_renamed_field_fails(self):
        f = feature(-81, 27)
        f["properties"]["stationId"] = f["properties"].pop("station_id")
        outcome = run_validator(self.SPEC, collection([f]))
        assert outcome.verdict is Verdict.FAIL
        assert any(item[1] == "station_id" for item in outcome.offending_items)

    def test_missing_collection_field_fails(self):
        doc = collection([feature(-81, 27)])
        del doc["dataset"]
        outcome = run_validator(self.SPEC, doc)
        assert ("collection", "dataset", None) in outcome.offending_items

    def test_field_type_check(self):
        spec = ValidatorSpec(
            id="v-types",
            kind=ValidatorKind.SCHEMA_CONFORMANCE,
            params={"required_fields": ["station_id"], "field_types": {"station_id": "number"}},
        )
        assert run_validator(spec, collection([feature(-81, 27)])).verdict is Verdict.FAIL


class TestSpatialPlausibility:
    SPEC = ValidatorSpec(
        id="v-spatial",
        kind=ValidatorKind.SPATIAL_PLAUSIBILITY,
        params={"max_collocated_fraction": 0.5},
    )

    @staticmethod
    def oracle_max_coincident(points, eps=1e-9):
        best = 0
        for lon, lat in points:
            count = sum(1 for lon2, lat2 in points if abs(lon - lon2) <= eps and abs(lat - lat2) <= eps)
            best = max(best, count)
        return best

    def test_all_collocated_fails_with_cluster_count(self):
        features = [feature(-81.1, 26.9, station_id=f"s-{i:04d}") for i in range(2452)]
        outcome = run_validator(self.SPEC, collection(features))
        assert outcome.verdict is Verdict.FAIL
        assert outcome.offending_items[0][1] == "collocated_count"
        assert outcome.offending_items[0][2] == 2452

    def test_spread_points_pass(self):
        # Deterministic spread over the Florida box; oracle confirms no
        # coincident pair dominates.
        points = []
        for i in range(2452):
            lon = -87.0 + (i % 70) * 0.1
            lat = 25.0 + (i // 70) * 0.15
            points.append((lon, lat))
        assert self.oracle_max_coincident(points[:200]) == 1
        features = [feature(lon, lat, station_id=f"s-{i:04d}") for i, (lon, lat) in enumerate(points)]
        assert run_validator(self.SPEC, collection(features)).verdict is Verdict.PASS

    def test_single_point_vacuous_pass(self):
        assert run_validator(self.SPEC, collection([feature(-81, 27)])).verdict is Verdict.PASS

    def test_zero_points_vacuous_pass(self):
        assert run_validator(self.SPEC, collection([])).verdict is Verdict.PASS

    def test_fraction_threshold(self):
        features = [feature(-81.0, 27.0, station_id=f"a{i}") for i in range(6)] + [
            feature(-82.0 - i * 0.1, 26.0, station_id=f"b{i}") for i in range(4)
        ]
        outcome = run_validator(self.SPEC, collection(features))
        assert outcome.verdict is Verdict.FAIL
        assert outcome.offending_items[0][2] == 6

    def test_orthogonality_with_schema(self):
        # The coordinate-defect class: structurally valid (schema passes)
        # yet spatially implausible (collocated points fail).
        features = [feature(-81.1, 26.9, station_id=f"s-{i:04d}") for i in range(50)]
        payload = collection(features)
        schema_outcome = run_validator(TestSchemaConformance.SPEC, payload)
        spatial_outcome = run_validator(self.SPEC, payload)
        assert schema_outcome.verdict is Verdict.PASS
        assert spatial_outcome.verdict is Verdict.FAIL


class TestArtifactIntegrity:
    SPEC = ValidatorSpec(id="v-integrity", kind=ValidatorKind.ARTIFACT_INTEGRITY, params={})

    def test_clean_bundle_passes(self):
        payload = {"documents": standard_store_documents()}
        assert run_validator(self.SPEC, payload).verdict is Verdict.PASS

    def test_corrupted_bundle_fails_with_all_defects(self):
        payload = {"documents": corrupted_store_documents()}
        outcome = run_validator(self.SPEC, payload)
        assert outcome.verdict is Verdict.FAIL
        assert len(outcome.offending_items) == 39

    def test_unparseable_bundle_fails(self):
        outcome = run_validator(self.SPEC, {"documents": [{"track": "mystery"}]})
        assert outcome.verdict is Verdict.FAIL
        assert outcome.offending_items[0][1] == "parse"


class TestScriptedPredicate:
    def test_expected_dataset_pass_and_fail(self):
        spec = ValidatorSpec(
            id="v-dataset",
            kind=ValidatorKind.SCRIPTED_PREDICATE,
            params={"predicate": "expected-dataset", "expected": "sf2bench-stations"},
        )
        assert run_validator(spec, collection([feature(-81, 27)])).verdict is Verdict.PASS
        wrong = collection([feature(-81, 27)], dataset="gis-ecological-archive")
        outcome = run_validator(spec, wrong)
        assert outcome.verdict is Verdict.FAIL
        assert outcome.offending_items[0][2] == "gis-ecological-archive"

    def test_must_declare_purity(self):
        with pytest.raises(ValidatorSpecError):
            ValidatorSpec(
                id="v-impure",
                kind=ValidatorKind.SCRIPTED_PREDICATE,
                params={"predicate": "expected-dataset", "declared_pure": False},
            )

    def test_unknown_predicate(self):
        spec = ValidatorSpec(
            id="v-ghost",
            kind=ValidatorKind.SCRIPTED_PREDICATE,
            params={"predicate": "no-such-predicate"},
        )
        with pytest.raises(ValidatorSpecError):
            run_validator(spec, collection([feature(-81, 27)]))

    def test_purity_double_execution_passes_for_pure(self):
        spec = ValidatorSpec(
            id="v-dataset-pure",
            kind=ValidatorKind.SCRIPTED_PREDICATE,
            params={"predicate": "expected-dataset", "expected": "sf2bench-stations"},
        )
        outcome = run_validator(spec, collection([feature(-81, 27)]), verify_pure=True)
        assert outcome.verdict is Verdict.PASS

    def test_impure_predicate_detected(self):
        calls = {"n": 0}

        def flapping(parsed, params):
            calls["n"] += 1
            return calls["n"] % 2 == 1, [("artifact", "flap", calls["n"])]

        register_predicate("flapping-check", flapping)
        spec = ValidatorSpec(
            id="v-flap",
            kind=ValidatorKind.SCRIPTED_PREDICATE,
            params={"predicate": "flapping-check"},
        )
        with pytest.raises(PurityError):
            run_validator(spec, collection([feature(-81, 27)]), verify_pure=True)


class TestRunValidatorContract:
    def test_parse_failure_is_validation_failure(self):
        outcome = run_validator(LAT_SPEC, b"{broken json")
        assert outcome.verdict is Verdict.FAIL
        assert outcome.offending_items[0][:2] == ("artifact", "parse")

    def test_deterministic_over_1000_runs(self):
        payload = json.dumps(collection([feature(-81.2, 27.3), feature(-80.0, 44.0)])).encode()
        outcomes = {run_validator(LAT_SPEC, payload).canonical() for _ in range(1000)}
        assert len(outcomes) == 1

    def test_read_only_contract(self):
        payload = json.dumps(collection([feature(-81.2, 27.3)])).encode()
        digest_before = sha256_hex(payload)
        outcome = run_validator(LAT_SPEC, payload)
        assert sha256_hex(payload) == digest_before
        assert outcome.input_digest == digest_before

    def test_same_digest_same_outcome(self):
        payload = collection([feature(-81.2, 44.0)])
        a = run_validator(LAT_SPEC, payload)
        b = run_validator(LAT_SPEC, payload)
        assert a.input_digest == b.input_digest
        assert a.canonical() == b.canonical()


class TestGate:
    def specs(self):
        return [LAT_SPEC, LON_SPEC]

    def test_all_pass_approved_with_audit_records(self):
        audit = AuditLog(Clock())
        result = run_gate(self.specs(), collection([feature(-81.2, 27.3)]), audit=audit, clock=audit.clock)
        assert result.approved
        assert audit.count(AuditEvent.VALIDATION_OUTCOME) == 2

    def test_blocking_fail_blocks_with_failing_outcomes(self):
        result = run_gate(self.specs(), collection([feature(27.3, -81.2)]))
        assert not result.approved
        assert {o.validator_id for o in result.blocking_failures} == {"v-lat", "v-lon"}

    def test_advisory_only_failure_still_approved_but_audited(self):
        advisory = ValidatorSpec(
            id="v-advisory-lat",
            kind=ValidatorKind.NUMERIC_RANGE,
            params={"field": "latitude", "min": 24.5, "max": 31.0},
            severity=Severity.ADVISORY,
        )
        audit = AuditLog(Clock())
        result = run_gate([advisory], collection([feature(-81.2, 44.0)]), audit=audit, clock=audit.clock)
        assert result.approved
        assert result.outcomes[0].verdict is Verdict.FAIL
        assert audit.count(AuditEvent.VALIDATION_OUTCOME) == 1

    def test_verdict_combination_enumeration(self):
        # Oracle: enumerate blocking/advisory x pass/fail; approval is the
        # conjunction over blocking outcomes only. The blocking spec reads
        # latitude, the advisory spec longitude, so they fail independently.
        specs = [
            ValidatorSpec(
                id="blocking-lat", kind=ValidatorKind.NUMERIC_RANGE,
                params={"field": "latitude", "min": 24.5, "max": 31.0},
            ),
            ValidatorSpec(
                id="advisory-lon", kind=ValidatorKind.NUMERIC_RANGE,
                params={"field": "longitude", "min": -87.5, "max": -79.5},
                severity=Severity.ADVISORY,
            ),
        ]
        for blocking_fails in (False, True):
            for advisory_fails in (False, True):
                lat = 44.0 if blocking_fails else 27.3
                lon = 10.0 if advisory_fails else -81.2
                result = run_gate(specs, collection([feature(lon, lat)]))
                assert result.approved == (not blocking_fails)
                verdicts = [o.verdict for o in result.outcomes]
                assert (verdicts[0] is Verdict.FAIL) == blocking_fails
                assert (verdicts[1] is Verdict.FAIL) == advisory_fails

    def test_outcomes_in_spec_order(self):
        result = run_gate(self.specs(), collection([feature(-81.2, 27.3)]))
        assert [o.validator_id for o in result.outcomes] == ["v-lat", "v-lon"]
