from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from boundarykit.audit import AuditLog, Clock
from boundarykit.cli import main
from boundarykit.scenarios import fixture_path


@pytest.fixture
def runner():
    return CliRunner()


class TestLintArtifacts:
    def test_text_output_and_exit_zero_without_flag(self, runner):
        result = runner.invoke(main, ["lint-artifacts", str(fixture_path("corrupted"))])
        assert result.exit_code == 0
        assert "broken skill->behavior references: 16" in result.output
        assert "missing knowledge->skill links: 20" in result.output
        assert "orphaned nodes: 3" in result.output
        assert "traversable: false" in result.output
        assert "total defects: 39" in result.output

    def test_fail_on_defect_exits_nonzero(self, runner):
        result = runner.invoke(main, ["lint-artifacts", str(fixture_path("corrupted")), "--fail-on-defect"])
        assert result.exit_code == 1

    def test_clean_bundle_passes_with_flag(self, runner):
        result = runner.invoke(main, ["lint-artifacts", str(fixture_path("clean")), "--fail-on-defect"])
        assert result.exit_code == 0
        assert "traversable: true" in result.output

    def test_json_format(self, runner):
        result = runner.invoke(main, ["lint-artifacts", str(fixture_path("corrupted")), "--format", "json"])
        doc = json.loads(result.output)
        assert doc["defect_count"] == 39
        assert doc["traversable"] is False


class TestReplay:
    @pytest.mark.parametrize("name", ["iss004_chain", "audit_differential", "kg_corruption"])
    def test_replay_exits_zero(self, runner, name):
        result = runner.invoke(main, ["replay", name])
        assert result.exit_code == 0, result.output
        assert "reproduced" in result.output

    def test_replay_prints_incident_chain(self, runner):
        result = runner.invoke(main, ["replay", "iss004_chain"])
        assert "ISS-001 -> ISS-002 -> ISS-003" in result.output
        assert "verified" in result.output

    def test_replay_json(self, runner):
        result = runner.invoke(main, ["replay", "kg_corruption", "--json"])
        doc = json.loads(result.output)
        assert doc["ok"] is True
        assert doc["summary"]["defect_count"] == 39

    def test_unknown_scenario_rejected(self, runner):
        result = runner.invoke(main, ["replay", "ghost_scenario"])
        assert result.exit_code == 2


class TestSimulate:
    def test_seeded_run_deterministic(self, runner):
        args = ["simulate", "--p", "0.95", "--n", "10", "--q", "0.9", "--k", "3", "--trials", "20000", "--seed", "7"]
        first = runner.invoke(main, args)
        second = runner.invoke(main, args)
        assert first.exit_code == 0
        assert first.output == second.output
        assert "within band" in first.output

    def test_out_dir_writes_csv_text_and_figures(self, runner, tmp_path):
        out = tmp_path / "report"
        result = runner.invoke(
            main,
            ["simulate", "--p", "0.9", "--n", "5", "--q", "0.8", "--k", "2",
             "--trials", "5000", "--seed", "3", "--out-dir", str(out)],
        )
        assert result.exit_code == 0, result.output
        csv_path = out / "simulation_report.csv"
        assert csv_path.exists()
        header = csv_path.read_text().splitlines()[0]
        assert header == "section,index,analytic,empirical"
        assert (out / "simulation_report.txt").exists()
        assert (out / "reliability_decay.png").stat().st_size > 0
        assert (out / "escape_filtering.png").stat().st_size > 0

    def test_invalid_params_exit_2(self, runner):
        result = runner.invoke(main, ["simulate", "--p", "1.5"])
        assert result.exit_code == 2


class TestAuditVerify:
    def make_persisted_log(self, tmp_path, n=30):
        path = tmp_path / "audit.log"
        log = AuditLog(Clock(), persist_path=path)
        for i in range(n):
            log.append("workflow_event", "actor", {"i": i})
        log.close()
        return path

    def test_verify_clean_log(self, runner, tmp_path):
        path = self.make_persisted_log(tmp_path)
        result = runner.invoke(main, ["audit", "verify", "--log", str(path)])
        assert result.exit_code == 0
        assert "chain valid" in result.output

    def test_verify_tampered_log(self, runner, tmp_path):
        path = self.make_persisted_log(tmp_path)
        data = bytearray(path.read_bytes())
        data[len(data) // 2] ^= 0x01
        path.write_bytes(bytes(data))
        result = runner.invoke(main, ["audit", "verify", "--log", str(path)])
        assert result.exit_code == 1
        assert "INVALID" in result.output


class TestRunCommand:
    def workflow_doc(self, stub_type):
        return {
            "workflow": {
                "definition": {
                    "id": "cli-test",
                    "stages": [
                        {"role": "envita-worker", "skill": "skill-prepare-station-layers"},
                        {
                            "role": "diva-publisher",
                            "skill": "skill-publish-station-layers",
                            "gate": ["v-lat-bounds", "v-lon-bounds", "v-spatial-spread", "v-expected-dataset"],
                            "requires_approval": True,
                            "irreversible": True,
                        },
                    ],
                    "metadata": {"impacted_unit": "stations"},
                },
                "stubs": {
                    "envita-worker": {"type": stub_type, "layers": 2},
                    "diva-publisher": {"type": "read-only"},
                },
                "inputs": {"stations": 10, "seed": 5},
            }
        }

    def test_clean_run_done(self, runner, tmp_path):
        doc = tmp_path / "workflow.json"
        doc.write_text(json.dumps(self.workflow_doc("clean-station-producer")))
        result = runner.invoke(main, ["run", str(doc), "--approve-as", "data-steward"])
        assert result.exit_code == 0, result.output
        assert "done" in result.output

    def test_faulty_run_blocked_nonzero(self, runner, tmp_path):
        doc = tmp_path / "workflow.json"
        doc.write_text(json.dumps(self.workflow_doc("swapped-station-producer")))
        result = runner.invoke(main, ["run", str(doc), "--approve-as", "data-steward"])
        assert result.exit_code == 1
        assert "blocked" in result.output
        assert "ISS-001" in result.output

    def test_awaiting_approval_without_approver(self, runner, tmp_path):
        doc = tmp_path / "workflow.json"
        doc.write_text(json.dumps(self.workflow_doc("clean-station-producer")))
        result = runner.invoke(main, ["run", str(doc)])
        assert result.exit_code == 1
        assert "awaiting" in result.output

    def test_run_json_output(self, runner, tmp_path):
        doc = tmp_path / "workflow.json"
        doc.write_text(json.dumps(self.workflow_doc("clean-station-producer")))
        result = runner.invoke(main, ["run", str(doc), "--approve-as", "data-steward", "--json"])
        assert result.exit_code == 0
        parsed = json.loads(result.output)
        assert parsed["status"] == "done"
