import json

import pytest
from click.testing import CliRunner

from sitewise import DATA_DIR
from sitewise.cli import akb as akb_group, main

SUITE = DATA_DIR / "suite"
STUB = SUITE / "stub_rules.json"
SEEDS = DATA_DIR / "seed_tips.json"


@pytest.fixture
def runner(monkeypatch):
    monkeypatch.delenv("SITEWISE_LLM_URL", raising=False)
    return CliRunner()


def goal_file(tmp_path, task_id):
    doc = json.loads((SUITE / "suite.json").read_text(encoding="utf-8"))
    task = next(t for t in doc["tasks"] if t["goal"]["id"] == task_id)
    path = tmp_path / f"{task_id}.json"
    path.write_text(json.dumps(task["goal"]), encoding="utf-8")
    return path, SUITE / task["site"]


class TestRun:
    def test_success_exit_zero(self, runner, tmp_path):
        goal, site = goal_file(tmp_path, "t01")
        rec = tmp_path / "rec"
        r = runner.invoke(main, [
            "run", "--goal", str(goal), "--site", str(site),
            "--akb", str(SUITE / "akb.json"), "--stub", str(STUB),
            "--record", str(rec),
        ])
        assert r.exit_code == 0, r.output
        assert "success" in r.output
        assert "answer: 14" in r.output
        assert (rec / "meta.json").exists()
        assert (rec / "trajectory.jsonl").exists()

    def test_failure_exit_one(self, runner, tmp_path):
        # no knowledge base: the vote task noop-loops until the loop rule fires
        goal, site = goal_file(tmp_path, "t10")
        r = runner.invoke(main, ["run", "--goal", str(goal), "--site", str(site), "--stub", str(STUB)])
        assert r.exit_code == 1
        assert "failure" in r.output
        assert "trigger fired: rule_loop" in r.output

    def test_no_model_configured(self, runner, tmp_path):
        goal, site = goal_file(tmp_path, "t01")
        r = runner.invoke(main, ["run", "--goal", str(goal), "--site", str(site)])
        assert r.exit_code != 0
        assert "no model configured" in r.output

    def test_bad_mode_rejected(self, runner, tmp_path):
        goal, site = goal_file(tmp_path, "t01")
        r = runner.invoke(main, ["run", "--goal", str(goal), "--site", str(site), "--mode", "turbo"])
        assert r.exit_code != 0


class TestBench:
    def test_protocol_suite_report(self, runner):
        r = runner.invoke(main, ["bench", "--suite", str(SUITE), "--protocol"])
        assert r.exit_code == 0, r.output
        assert "tasks: 12" in r.output
        assert "success rate: 100.00%" in r.output
        assert "[protocol]" in r.output

    def test_out_dir_gets_report_and_recordings(self, runner, tmp_path):
        out = tmp_path / "out"
        r = runner.invoke(main, ["bench", "--suite", str(SUITE), "--mode", "no_knowledge", "--out", str(out)])
        assert r.exit_code == 0, r.output
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["v"] == 1
        assert report["mode"] == "no_knowledge"
        assert (out / "t01-no_knowledge" / "trajectory.jsonl").exists()

    def test_protocol_refuses_unfrozen_kb(self, runner, tmp_path):
        doc = json.loads((SUITE / "akb.json").read_text(encoding="utf-8"))
        doc["frozen"] = False
        akb = tmp_path / "akb.json"
        akb.write_text(json.dumps(doc), encoding="utf-8")
        r = runner.invoke(main, ["bench", "--suite", str(SUITE), "--protocol", "--akb", str(akb)])
        assert r.exit_code != 0
        assert "frozen" in r.output


class TestAdapt:
    def test_failures_reach_queue(self, runner, tmp_path):
        queue = tmp_path / "queue.json"
        r = runner.invoke(main, [
            "adapt", "--suite", str(SUITE), "--queue", str(queue),
            "--akb", str(tmp_path / "kb.json"),
        ])
        assert r.exit_code == 0, r.output
        report = json.loads(r.output)
        assert report["enqueued"] == ["t02-full", "t10-full"]
        doc = json.loads(queue.read_text(encoding="utf-8"))
        assert len(doc["entries"]) == 2

    def test_frozen_kb_refused(self, runner, tmp_path):
        r = runner.invoke(main, [
            "adapt", "--suite", str(SUITE), "--queue", str(tmp_path / "q.json"),
            "--akb", str(SUITE / "akb.json"),
        ])
        assert r.exit_code != 0
        assert "mutable knowledge base" in r.output


class TestAkb:
    def test_import_stats_freeze_export(self, runner, tmp_path):
        kb_path = tmp_path / "kb.json"

        r = runner.invoke(main, ["akb", "import", "--akb", str(kb_path), str(SEEDS)])
        assert r.exit_code == 0, r.output
        assert "imported 52 tips" in r.output

        r = runner.invoke(main, ["akb", "stats", "--akb", str(kb_path)])
        stats = json.loads(r.output)
        assert stats == {"frozen": False, "tips": 52, "domains": stats["domains"]}
        assert sum(stats["domains"].values()) == 52

        r = runner.invoke(main, ["akb", "freeze", "--akb", str(kb_path)])
        assert r.exit_code == 0
        assert "froze" in r.output

        r = runner.invoke(main, ["akb", "import", "--akb", str(kb_path), str(SEEDS)])
        assert r.exit_code != 0
        assert "Frozen" in r.output

        out = tmp_path / "export.json"
        r = runner.invoke(main, ["akb", "export", "--akb", str(kb_path), "--out", str(out)])
        assert r.exit_code == 0
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert doc["frozen"] is True
        assert len(doc["tips"]) == 52

    def test_duplicate_import_rejected(self, runner, tmp_path):
        kb_path = tmp_path / "kb.json"
        runner.invoke(main, ["akb", "import", "--akb", str(kb_path), str(SEEDS)])
        r = runner.invoke(main, ["akb", "import", "--akb", str(kb_path), str(SEEDS)])
        assert r.exit_code != 0
        assert "DuplicateId" in r.output

    def test_export_to_stdout(self, runner):
        r = runner.invoke(main, ["akb", "export", "--akb", str(SUITE / "akb.json")])
        assert r.exit_code == 0
        assert json.loads(r.output)["frozen"] is True

    def test_standalone_entry_point(self, runner):
        # the akb group is also installed as its own console script
        r = runner.invoke(akb_group, ["stats", "--akb", str(SUITE / "akb.json")])
        assert r.exit_code == 0
        assert json.loads(r.output)["tips"] == 4


class TestServe:
    def test_builds_app_and_boots(self, runner, tmp_path, monkeypatch):
        calls = {}

        def fake_run(app, **kwargs):
            calls["app"] = app
            calls.update(kwargs)

        monkeypatch.setattr("sitewise.cli.uvicorn.run", fake_run)
        r = runner.invoke(main, [
            "serve", "--port", "8199",
            "--akb", str(tmp_path / "akb.json"),
            "--queue", str(tmp_path / "queue.json"),
            "--runs-root", str(tmp_path / "runs"),
        ])
        assert r.exit_code == 0, r.output
        assert calls["port"] == 8199
        assert calls["host"] == "127.0.0.1"
        assert calls["app"].title == "sitewise"

    def test_busy_port_is_bind_failure(self, runner, tmp_path, monkeypatch):
        import socket

        monkeypatch.setattr("sitewise.cli.uvicorn.run", lambda *a, **k: None)
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            r = runner.invoke(main, [
                "serve", "--port", str(port),
                "--akb", str(tmp_path / "akb.json"),
                "--queue", str(tmp_path / "queue.json"),
                "--runs-root", str(tmp_path / "runs"),
            ])
        finally:
            blocker.close()
        assert r.exit_code != 0
        assert "cannot bind" in r.output
