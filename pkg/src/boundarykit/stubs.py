"""Scripted and stochastic agent stubs plus synthetic station data.

Stubs stand in for the probabilistic components a live deployment would run.
A scripted stub emits fixed outputs; a stochastic stub injects one of four
error classes with a per-step probability, reproducibly under its seed. The
error classes are deliberately fail-open: the corrupted output stays
well-formed and plausible, so only a boundary check can tell it apart.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .artifacts import ResolvedSkill

FLORIDA_LAT = (24.5, 31.0)
FLORIDA_LON = (-87.5, -79.5)
DEFAULT_DATASET = "sf2bench-stations"
WRONG_DATASET_ID = "gis-ecological-archive"
# In-bounds reference point a misdirected transform collapses stations onto.
FOREIGN_ANCHOR = (-81.1, 26.9)  # (lon, lat)


class ErrorClass(str, Enum):
    COORDINATE_SWAP = "coordinate_swap"
    SCHEMA_DRIFT = "schema_drift"
    WRONG_DATASET = "wrong_dataset"
    BOUNDARY_CROSSING = "boundary_crossing"


@dataclass
class StubContext:
    run_id: str
    stage_index: int
    role_id: str
    skill: ResolvedSkill
    inputs: dict[str, bytes]


ProduceFn = Callable[[StubContext], dict[str, bytes]]


@dataclass
class AgentStub:
    id: str
    role_id: str
    produce_fn: ProduceFn

    def produce(self, ctx: StubContext) -> dict[str, bytes]:
        return self.produce_fn(ctx)


def make_station_records(count: int, seed: int) -> list[dict]:
    """Deterministic synthetic monitoring stations inside the Florida box."""
    rng = random.Random(seed)
    records = []
    for i in range(count):
        records.append(
            {
                "station_id": f"station-{i:04d}",
                "name": f"Monitoring Station {i:04d}",
                "latitude": round(rng.uniform(25.0, 30.5), 6),
                "longitude": round(rng.uniform(-87.0, -80.0), 6),
            }
        )
    return records


def stations_to_csv(records: list[dict]) -> bytes:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=["station_id", "name", "latitude", "longitude"])
    writer.writeheader()
    writer.writerows(records)
    return buffer.getvalue().encode("utf-8")


def stations_from_csv(data: bytes) -> list[dict]:
    reader = csv.DictReader(io.StringIO(data.decode("utf-8")))
    records = []
    for row in reader:
        records.append(
            {
                "station_id": row["station_id"],
                "name": row["name"],
                "latitude": float(row["latitude"]),
                "longitude": float(row["longitude"]),
            }
        )
    return records


def build_station_layers(
    records: list[dict],
    layer_count: int = 5,
    dataset_id: str = DEFAULT_DATASET,
    *,
    swap_fields: bool = False,
) -> dict[str, bytes]:
    """Split stations into GeoJSON layer files.

    With swap_fields=True the latitude value lands in the longitude slot and
    vice versa: structurally valid output with every coordinate wrong.
    """
    layers: dict[str, bytes] = {}
    per = len(records) // layer_count
    extra = len(records) % layer_count
    start = 0
    for li in range(layer_count):
        size = per + (1 if li < extra else 0)
        chunk = records[start:start + size]
        start += size
        features = []
        for rec in chunk:
            lon, lat = rec["longitude"], rec["latitude"]
            coords = [lat, lon] if swap_fields else [lon, lat]
            features.append(
                {
                    "type": "Feature",
                    "properties": {"station_id": rec["station_id"], "name": rec["name"]},
                    "geometry": {"type": "Point", "coordinates": coords},
                }
            )
        doc = {
            "type": "FeatureCollection",
            "dataset": dataset_id,
            "layer": f"layer-{li + 1:02d}",
            "features": features,
        }
        layers[f"layer-{li + 1:02d}.geojson"] = json.dumps(doc, sort_keys=True).encode("utf-8")
    return layers


def inject_error(error_class: ErrorClass, outputs: dict[str, bytes]) -> dict[str, bytes]:
    """Corrupt GeoJSON outputs according to the error class, in place shape.

    Non-GeoJSON artifacts pass through untouched.
    """
    corrupted: dict[str, bytes] = {}
    for name, content in outputs.items():
        try:
            doc = json.loads(content)
        except Exception:
            corrupted[name] = content
            continue
        if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
            corrupted[name] = content
            continue
        if error_class is ErrorClass.COORDINATE_SWAP:
            for feature in doc.get("features", []):
                coords = feature.get("geometry", {}).get("coordinates")
                if isinstance(coords, list) and len(coords) >= 2:
                    coords[0], coords[1] = coords[1], coords[0]
        elif error_class is ErrorClass.SCHEMA_DRIFT:
            for feature in doc.get("features", []):
                props = feature.get("properties", {})
                if "station_id" in props:
                    props["stationId"] = props.pop("station_id")
        elif error_class is ErrorClass.WRONG_DATASET:
            doc["dataset"] = WRONG_DATASET_ID
        elif error_class is ErrorClass.BOUNDARY_CROSSING:
            for feature in doc.get("features", []):
                coords = feature.get("geometry", {}).get("coordinates")
                if isinstance(coords, list) and len(coords) >= 2:
                    coords[1] = coords[1] + 15.0
        corrupted[name] = json.dumps(doc, sort_keys=True).encode("utf-8")
    return corrupted


def collapse_to_anchor(outputs: dict[str, bytes], anchor: tuple[float, float] = FOREIGN_ANCHOR) -> dict[str, bytes]:
    """Rewrite every feature onto one anchor point: the clustered signature a
    wrong-field coordinate transform produces."""
    collapsed: dict[str, bytes] = {}
    for name, content in outputs.items():
        doc = json.loads(content)
        for feature in doc.get("features", []):
            geometry = feature.get("geometry", {})
            if "coordinates" in geometry:
                geometry["coordinates"] = [anchor[0], anchor[1]]
        collapsed[name] = json.dumps(doc, sort_keys=True).encode("utf-8")
    return collapsed


def _clean_producer(layers: int = 5, dataset_id: str = DEFAULT_DATASET) -> ProduceFn:
    def produce(ctx: StubContext) -> dict[str, bytes]:
        records = stations_from_csv(ctx.inputs["stations.csv"])
        return build_station_layers(records, layers, dataset_id)

    return produce


def _swapped_producer(layers: int = 5, dataset_id: str = DEFAULT_DATASET) -> ProduceFn:
    def produce(ctx: StubContext) -> dict[str, bytes]:
        records = stations_from_csv(ctx.inputs["stations.csv"])
        return build_station_layers(records, layers, dataset_id, swap_fields=True)

    return produce


def _passthrough(ctx: StubContext) -> dict[str, bytes]:
    return dict(ctx.inputs)


def _read_only(ctx: StubContext) -> dict[str, bytes]:
    # Validator and publisher stages inspect inputs but write nothing back
    # into the working store; artifacts flow onward under the producer's name.
    return {}


def _publish_receipt(ctx: StubContext) -> dict[str, bytes]:
    receipt = {
        "run": ctx.run_id,
        "published": sorted(ctx.inputs),
        "target": "mock-sink",
    }
    return {"publish-receipt.json": json.dumps(receipt, sort_keys=True).encode("utf-8")}


def scripted_stub(stub_id: str, role_id: str, fn: ProduceFn) -> AgentStub:
    return AgentStub(id=stub_id, role_id=role_id, produce_fn=fn)


@dataclass
class StochasticStub:
    """Fault-injecting stub: per recipe step, Bernoulli(error_rate) decides
    whether the configured error class corrupts the output."""

    id: str
    role_id: str
    error_rate: float
    error_class: ErrorClass
    seed: int
    base_fn: ProduceFn = field(default_factory=lambda: _clean_producer(1))

    def __post_init__(self) -> None:
        self._rng = random.Random(self.seed)

    def produce(self, ctx: StubContext) -> dict[str, bytes]:
        outputs = self.base_fn(ctx)
        steps = max(len(ctx.skill.skill.recipe), 1)
        errored = any(self._rng.random() < self.error_rate for _ in range(steps))
        if errored:
            return inject_error(self.error_class, outputs)
        return outputs


STUB_TYPES: dict[str, Callable[..., ProduceFn]] = {
    "clean-station-producer": _clean_producer,
    "swapped-station-producer": _swapped_producer,
    "passthrough": lambda: _passthrough,
    "read-only": lambda: _read_only,
    "publish-receipt": lambda: _publish_receipt,
}


def build_stub(stub_id: str, role_id: str, config: dict) -> "AgentStub | StochasticStub":
    """Build a stub from a declarative config (workflow files, API bodies)."""
    kind = config.get("type", "passthrough")
    if kind == "stochastic":
        base_kind = config.get("base", "clean-station-producer")
        base_kwargs = {k: v for k, v in config.items() if k in ("layers", "dataset_id")}
        base = STUB_TYPES[base_kind](**base_kwargs) if base_kwargs else STUB_TYPES[base_kind]()
        return StochasticStub(
            id=stub_id,
            role_id=role_id,
            error_rate=float(config.get("error_rate", 0.0)),
            error_class=ErrorClass(config.get("error_class", "coordinate_swap")),
            seed=int(config.get("seed", 0)),
            base_fn=base,
        )
    if kind not in STUB_TYPES:
        raise ValueError(f"unknown stub type {kind!r}")
    kwargs = {k: v for k, v in config.items() if k in ("layers", "dataset_id")}
    fn = STUB_TYPES[kind](**kwargs) if kwargs else STUB_TYPES[kind]()
    return AgentStub(id=stub_id, role_id=role_id, produce_fn=fn)
