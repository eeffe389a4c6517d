"""Command line interface: lint, run, replay, simulate, audit, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .api import CONFIG_ENV_VAR, create_app, load_config
from .artifacts import BundleParseError, format_report, load_store, validate_integrity
from .audit import verify_log_file
from .reliability import ReliabilityParams, run_simulation
from .scenarios import SCENARIOS, build_environment, replay_scenario
from .stubs import build_stub, make_station_records, stations_to_csv
from .workflow import DefinitionError, WorkflowDefinition


@click.group()
def main() -> None:
    """Orchestration engine with audited handoffs and validation gates."""


@main.command("lint-artifacts")
@click.argument("path", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--fail-on-defect", is_flag=True, help="Exit nonzero when the store is not traversable.")
def lint_artifacts(path: str, fmt: str, fail_on_defect: bool) -> None:
    """Lint an artifact bundle for broken references and orphaned nodes."""
    try:
        store = load_store(path)
    except BundleParseError as exc:
        click.echo(f"bundle error: {exc}", err=True)
        sys.exit(2)
    report = validate_integrity(store)
    click.echo(format_report(report, fmt))
    if fail_on_defect and not report.traversable:
        sys.exit(1)


@main.command("run")
@click.argument("workflow_file", type=click.Path(exists=True))
@click.option("--approve-as", default=None, help="Role id used to auto-approve stages that require it.")
@click.option("--json", "as_json", is_flag=True, help="Print the run state as JSON.")
def run_command(workflow_file: str, approve_as: str | None, as_json: bool) -> None:
    """Execute a workflow document against the standard environment."""
    doc = json.loads(Path(workflow_file).read_text(encoding="utf-8"))
    env = build_environment()
    workflow = doc.get("workflow", doc)
    defn = WorkflowDefinition.from_dict(workflow["definition"])
    stubs = {
        role_id: build_stub(f"stub-{role_id}", role_id, cfg)
        for role_id, cfg in workflow.get("stubs", {}).items()
    }
    inputs_cfg = workflow.get("inputs", {})
    if "stations" in inputs_cfg:
        records = make_station_records(int(inputs_cfg["stations"]), int(inputs_cfg.get("seed", 0)))
        inputs = {"stations.csv": stations_to_csv(records)}
    else:
        inputs = {name: text.encode("utf-8") for name, text in inputs_cfg.get("artifacts", {}).items()}
    try:
        run = env.engine.run_workflow(defn, stubs, inputs, approver=approve_as, approval_timeout=0.0)
    except DefinitionError as exc:
        click.echo(f"definition error: {exc}", err=True)
        sys.exit(2)
    if as_json:
        click.echo(json.dumps(run.to_dict(), indent=2))
    else:
        click.echo(f"run {run.id}: {run.status}")
        if run.incident_id:
            incident = env.engine.incidents.get(run.incident_id)
            click.echo(f"incident {incident.id}: {incident.defect_class} at {incident.boundary_point}")
        if run.status == "awaiting_approval":
            click.echo("stalled awaiting approval; submit the decision through the gateway")
    sys.exit(0 if run.status == "done" else 1)


@main.command("replay")
@click.argument("scenario", type=click.Choice(sorted(SCENARIOS)))
@click.option("--seed", default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print the scenario result as JSON.")
def replay(scenario: str, seed: int, as_json: bool) -> None:
    """Replay a shipped scenario to its deterministic end state."""
    result = replay_scenario(scenario, seed=seed)
    if as_json:
        click.echo(json.dumps(result.to_dict(), indent=2, default=str))
    else:
        click.echo(f"scenario {result.name}: {'reproduced' if result.ok else 'DIVERGED'}")
        for line in result.lines:
            click.echo(f"  {line}")
    sys.exit(0 if result.ok else 1)


@main.command("simulate")
@click.option("--p", default=1.0, show_default=True, help="Per-stage success probability.")
@click.option("--n", default=1, show_default=True, help="Stage count.")
@click.option("--q", default=0.0, show_default=True, help="Per-layer catch probability.")
@click.option("--k", default=0, show_default=True, help="Catch layer count.")
@click.option("--trials", default=10000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), default=None, help="Write CSV, text, and figures here.")
def simulate(p: float, n: int, q: float, k: int, trials: int, seed: int, out_dir: str | None) -> None:
    """Monte Carlo check of the composition and filtering formulas."""
    try:
        params = ReliabilityParams(p=p, n=n, q=q, k=k)
    except ValueError as exc:
        click.echo(f"invalid parameters: {exc}", err=True)
        sys.exit(2)
    report = run_simulation(params, trials=trials, seed=seed)
    for line in report.summary_lines():
        click.echo(line)
    if out_dir:
        from .report import write_simulation_outputs

        outputs = write_simulation_outputs(report, out_dir)
        for kind in ("csv", "text", "figures"):
            for path in outputs[kind]:
                click.echo(f"wrote {path}")
    sys.exit(0 if report.success_within_3sigma and report.escape_within_3sigma else 1)


@main.group("audit")
def audit_group() -> None:
    """Audit log tooling."""


@audit_group.command("verify")
@click.option("--log", "log_path", type=click.Path(exists=True), required=True, help="Persisted audit log file.")
def audit_verify(log_path: str) -> None:
    """Verify the hash chain of a persisted audit log."""
    result = verify_log_file(log_path)
    if result.valid:
        click.echo("chain valid")
        sys.exit(0)
    click.echo(f"chain INVALID at seq {result.first_bad_seq}")
    sys.exit(1)


@main.command("serve")
@click.option("--port", default=None, type=int, help="Override the configured port.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help=f"Gateway config file (or set {CONFIG_ENV_VAR}).")
@click.option("--host", default=None, help="Override the configured host.")
def serve(port: int | None, config_path: str | None, host: str | None) -> None:
    """Serve the HTTP gateway."""
    import uvicorn

    config = load_config(config_path)
    app = create_app(config=config)
    uvicorn.run(app, host=host or config.host, port=port or config.port, log_level="warning")


if __name__ == "__main__":
    main()
