"""HTTP gateway: a thin adapter over the engine.

Every state change achievable here maps one-to-one onto an engine operation;
the gateway holds no state of its own. Sessions are static token-to-role
bindings from the config file; each mutating request is capability-checked
and denials come back as 403 with the denial already audited.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .artifacts import BundleParseError, load_store, validate_integrity
from .audit import IllegalIncidentTransition
from .governance import Capability, CapabilityDenied
from .handoff import IllegalTransition
from .reliability import ReliabilityParams, run_simulation
from .scenarios import RUN_FIXTURES, Environment, build_environment, replay_scenario
from .stubs import build_stub, make_station_records, stations_to_csv
from .workflow import DefinitionError, WorkflowDefinition

CONFIG_ENV_VAR = "BOUNDARYKIT_CONFIG"


@dataclass
class GatewayConfig:
    tokens: dict[str, str] = field(default_factory=dict)  # session token -> role id
    preload_scenarios: list[str] = field(default_factory=list)
    audit_log_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8400

    @staticmethod
    def from_dict(doc: dict) -> "GatewayConfig":
        return GatewayConfig(
            tokens=dict(doc.get("tokens", {})),
            preload_scenarios=list(doc.get("preload_scenarios", [])),
            audit_log_path=doc.get("audit_log_path"),
            host=doc.get("host", "127.0.0.1"),
            port=int(doc.get("port", 8400)),
        )


def load_config(path: str | Path | None = None) -> GatewayConfig:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return GatewayConfig()
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return GatewayConfig.from_dict(doc)


def _session_role(request: Request, config: GatewayConfig) -> str:
    token = request.headers.get("x-session-token")
    if token is None:
        auth = request.headers.get("authorization", "")
        if auth.lower().startswith("bearer "):
            token = auth[7:].strip()
    if token is None:
        return "anonymous-session"
    return config.tokens.get(token, "unknown-session")


def _inputs_from_config(doc: dict) -> dict[str, bytes]:
    if "stations" in doc:
        records = make_station_records(int(doc["stations"]), int(doc.get("seed", 0)))
        return {"stations.csv": stations_to_csv(records)}
    out = {}
    for name, text in doc.get("artifacts", {}).items():
        out[name] = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    return out


def create_app(env: Environment | None = None, config: GatewayConfig | None = None) -> FastAPI:
    config = config or GatewayConfig()
    env = env or build_environment(persist_path=config.audit_log_path)
    for scenario in config.preload_scenarios:
        replay_scenario(scenario, env=env)
    engine = env.engine

    app = FastAPI(title="boundarykit gateway", version="1")
    app.state.env = env
    app.state.config = config

    @app.exception_handler(CapabilityDenied)
    async def _denied(request, exc: CapabilityDenied):
        return JSONResponse(status_code=403, content={"error": str(exc), "reason": exc.decision.reason})

    @app.exception_handler(IllegalTransition)
    async def _illegal(request, exc):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(IllegalIncidentTransition)
    async def _illegal_incident(request, exc):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(KeyError)
    async def _missing(request, exc):
        return JSONResponse(status_code=404, content={"error": f"not found: {exc}"})

    @app.post("/v1/runs")
    async def submit_run(request: Request):
        role = _session_role(request, config)
        engine.registry.require_self(role, Capability.ROUTE_HANDOFF)
        body = await request.json()
        if "fixture" in body:
            name = body["fixture"]
            if name not in RUN_FIXTURES:
                return JSONResponse(status_code=404, content={"error": f"unknown run fixture {name!r}"})
            defn, stubs, inputs = RUN_FIXTURES[name]()
        else:
            workflow = body.get("workflow", {})
            try:
                defn = WorkflowDefinition.from_dict(workflow.get("definition", {}))
                stubs = {
                    role_id: build_stub(f"stub-{role_id}", role_id, cfg)
                    for role_id, cfg in workflow.get("stubs", {}).items()
                }
                inputs = _inputs_from_config(workflow.get("inputs", {}))
            except (KeyError, ValueError) as exc:
                return JSONResponse(status_code=400, content={"error": f"bad workflow document: {exc}"})
        try:
            engine.validate_definition(defn)
        except DefinitionError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        run_id = engine.submit(defn, stubs, inputs)
        return {"run_id": run_id}

    @app.get("/v1/runs/{run_id}")
    async def get_run(run_id: str):
        run = engine.runs.get(run_id)
        if run is None:
            return JSONResponse(status_code=404, content={"error": f"unknown run {run_id!r}"})
        return run.to_dict()

    @app.get("/v1/approvals/pending")
    async def pending_approvals():
        return {"pending": engine.pending_approvals()}

    @app.get("/v1/packages/{package_id}")
    async def get_package(package_id: str):
        try:
            pkg = engine.handoff.get(package_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"error": f"unknown package {package_id!r}"})
        return pkg.to_dict()

    @app.post("/v1/approvals/{package_id}")
    async def decide(package_id: str, request: Request):
        role = _session_role(request, config)
        body = await request.json()
        decision = body.get("decision")
        if decision not in ("approve", "block"):
            return JSONResponse(status_code=400, content={"error": "decision must be 'approve' or 'block'"})
        if package_id not in {p.id for p in engine.handoff.packages()}:
            return JSONResponse(status_code=404, content={"error": f"unknown package {package_id!r}"})
        if decision == "approve":
            pkg = engine.approve(package_id, role)
        else:
            pkg = engine.reject(package_id, role)
        return pkg.to_dict()

    @app.get("/v1/incidents")
    async def incidents():
        return {"incidents": [i.to_dict() for i in engine.incidents.list()]}

    @app.get("/v1/incidents/{incident_id}")
    async def incident(incident_id: str):
        try:
            found = engine.incidents.get(incident_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"error": f"unknown incident {incident_id!r}"})
        doc = found.to_dict()
        chain = []
        for ref in found.resolution_chain:
            try:
                chain.append(engine.incidents.get(ref).to_dict())
            except KeyError:
                chain.append({"id": ref})
        doc["chain"] = chain
        return doc

    @app.get("/v1/audit")
    async def audit(from_seq: int = 1, limit: int = 100, format: str = "json"):
        records = engine.audit.records(from_seq=from_seq, limit=limit)
        if format == "ndjson":
            text = "\n".join(json.dumps(r.export(), sort_keys=True) for r in records)
            return PlainTextResponse(text + ("\n" if text else ""), media_type="application/x-ndjson")
        return {"records": [r.export() for r in records], "total": len(engine.audit)}

    @app.get("/v1/audit/verify")
    async def audit_verify():
        result = engine.audit.verify()
        return {"valid": result.valid, "first_bad_seq": result.first_bad_seq}

    @app.post("/v1/lint")
    async def lint(request: Request):
        body = await request.json()
        try:
            store = load_store(body.get("documents", []))
        except BundleParseError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return validate_integrity(store).to_dict()

    @app.post("/v1/simulate")
    async def simulate(request: Request):
        body = await request.json()
        try:
            params = ReliabilityParams(
                p=float(body.get("p", 1.0)),
                n=int(body.get("n", 1)),
                q=float(body.get("q", 0.0)),
                k=int(body.get("k", 0)),
            )
            report = run_simulation(params, trials=int(body.get("trials", 1000)), seed=int(body.get("seed", 0)))
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return report.to_dict()

    @app.get("/v1/roles")
    async def roles():
        return {"roles": [r.to_dict() for r in engine.registry.list_roles()]}

    return app
