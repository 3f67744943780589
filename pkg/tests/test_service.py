import json
import time

import pytest
from fastapi.testclient import TestClient

from sitewise import DATA_DIR
from sitewise.akb.store import KnowledgeBase
from sitewise.service import ServiceConfig, create_app

SUITE = DATA_DIR / "suite"


def unfrozen_akb(tmp_path):
    doc = json.loads((SUITE / "akb.json").read_text(encoding="utf-8"))
    doc["frozen"] = False
    path = tmp_path / "akb.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def make_app(tmp_path, *, frozen=False, token=None):
    if frozen:
        akb_path = tmp_path / "akb.json"
        akb_path.write_text((SUITE / "akb.json").read_text(encoding="utf-8"), encoding="utf-8")
    else:
        akb_path = unfrozen_akb(tmp_path)
    cfg = ServiceConfig(
        akb_path=akb_path,
        queue_path=tmp_path / "queue.json",
        runs_root=tmp_path / "runs",
        token=token,
    )
    return create_app(cfg), cfg


@pytest.fixture
def client(tmp_path):
    app, _ = make_app(tmp_path)
    return TestClient(app)


def tip_doc(tip_id="svc-test-tip"):
    return {
        "id": tip_id,
        "domain_label": "forum",
        "scope": "Voting controls on forum posts",
        "action_guidance": "Open the actions menu before looking for the vote button.",
        "url_patterns": ["http://forum.mock/*"],
        "keywords": ["vote", "upvote"],
    }


class TestHealthAndAuth:
    def test_health_is_open(self, tmp_path):
        app, _ = make_app(tmp_path, token="sekrit")
        c = TestClient(app)
        r = c.get("/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_missing_token_rejected(self, tmp_path):
        app, _ = make_app(tmp_path, token="sekrit")
        c = TestClient(app)
        r = c.get("/tips")
        assert r.status_code == 401
        body = r.json()
        assert body["code"] == "unauthorized"
        assert set(body) == {"code", "message", "detail"}

    def test_wrong_token_rejected(self, tmp_path):
        app, _ = make_app(tmp_path, token="sekrit")
        c = TestClient(app)
        assert c.get("/tips", headers={"X-Auth-Token": "nope"}).status_code == 401

    def test_good_token_accepted(self, tmp_path):
        app, _ = make_app(tmp_path, token="sekrit")
        c = TestClient(app, headers={"X-Auth-Token": "sekrit"})
        assert c.get("/tips").status_code == 200

    def test_no_token_configured_means_open(self, client):
        assert client.get("/tips").status_code == 200

    def test_cross_origin_preflight_allows_auth_header(self, tmp_path):
        # browser front ends live on their own origin; the preflight must pass
        app, _ = make_app(tmp_path, token="sekrit")
        c = TestClient(app)
        r = c.options(
            "/tips",
            headers={
                "Origin": "http://workbench.local",
                "Access-Control-Request-Method": "POST",
                "Access-Control-Request-Headers": "X-Auth-Token, Content-Type",
            },
        )
        assert r.status_code == 200
        assert r.headers["access-control-allow-origin"] == "*"
        allowed = r.headers["access-control-allow-headers"].lower()
        assert "x-auth-token" in allowed

    def test_cross_origin_response_carries_allow_origin(self, client):
        r = client.get("/tips", headers={"Origin": "http://workbench.local"})
        assert r.status_code == 200
        assert r.headers["access-control-allow-origin"] == "*"


class TestTips:
    def test_list_matches_store(self, client):
        tips = client.get("/tips").json()
        assert [t["id"] for t in tips] == sorted(t["id"] for t in tips)
        assert any(t["id"] == "suite-forum-vote-menu" for t in tips)

    def test_create_and_fetch(self, tmp_path):
        app, cfg = make_app(tmp_path)
        c = TestClient(app)
        r = c.post("/tips", json=tip_doc())
        assert r.status_code == 201
        assert r.json()["id"] == "svc-test-tip"
        assert c.get("/tips/svc-test-tip").json()["scope"] == tip_doc()["scope"]
        # the mutation must land in the same document the library reads
        kb = KnowledgeBase.load(cfg.akb_path)
        assert "svc-test-tip" in kb.tips

    def test_create_on_frozen_kb_409(self, tmp_path):
        app, _ = make_app(tmp_path, frozen=True)
        c = TestClient(app)
        r = c.post("/tips", json=tip_doc())
        assert r.status_code == 409
        body = r.json()
        assert body["code"] == "frozen"
        assert set(body) == {"code", "message", "detail"}

    def test_duplicate_409(self, client):
        assert client.post("/tips", json=tip_doc()).status_code == 201
        r = client.post("/tips", json=tip_doc())
        assert r.status_code == 409
        assert r.json()["code"] == "duplicate_id"

    def test_invalid_tip_422(self, client):
        doc = tip_doc()
        doc["scope"] = "   "
        r = client.post("/tips", json=doc)
        assert r.status_code == 422
        assert r.json()["code"] == "invalid_tip"

    def test_update_roundtrip(self, client):
        client.post("/tips", json=tip_doc())
        doc = tip_doc()
        doc["constraint"] = "Never vote twice."
        r = client.put("/tips/svc-test-tip", json=doc)
        assert r.status_code == 200
        assert client.get("/tips/svc-test-tip").json()["constraint"] == "Never vote twice."

    def test_update_id_mismatch_422(self, client):
        client.post("/tips", json=tip_doc())
        r = client.put("/tips/other-id", json=tip_doc())
        assert r.status_code == 422

    def test_update_unknown_404(self, client):
        r = client.put("/tips/ghost", json=tip_doc("ghost"))
        assert r.status_code == 404
        assert r.json()["code"] == "not_found"

    def test_delete(self, client):
        client.post("/tips", json=tip_doc())
        assert client.delete("/tips/svc-test-tip").status_code == 204
        assert client.get("/tips/svc-test-tip").status_code == 404

    def test_freeze_endpoint(self, client):
        r = client.post("/akb/freeze")
        assert r.status_code == 200
        assert r.json()["frozen"] is True
        assert client.post("/tips", json=tip_doc()).status_code == 409
        assert client.get("/akb/stats").json()["frozen"] is True

    def test_stats(self, client):
        s = client.get("/akb/stats").json()
        assert s["tips"] == 4
        assert s["frozen"] is False
        assert sum(s["domains"].values()) == 4


class TestFailures:
    def test_empty_queue_is_empty_list(self, client):
        r = client.get("/failures")
        assert r.status_code == 200
        assert r.json() == []

    def test_resolve_unknown_404(self, client):
        r = client.post("/failures/ghost/resolve", json={"tip_id": "t"})
        assert r.status_code == 404
        assert r.json()["code"] == "not_found"


class TestRuns:
    def test_launch_and_read_back(self, client):
        r = client.post("/runs", json={"task_id": "t01", "mode": "full"})
        assert r.status_code == 201
        meta = r.json()
        assert meta["status"] == "success"
        assert meta["answer"] == "14"
        run_id = meta["run_id"]
        assert run_id == "t01-full"

        runs = client.get("/runs").json()
        assert [x["run_id"] for x in runs] == [run_id]
        assert runs[0]["goal_id"] == "t01"

        got = client.get(f"/runs/{run_id}").json()
        assert got["status"] == "success"
        assert got["v"] == 1

    def test_repeat_launch_gets_fresh_run_id(self, client):
        first = client.post("/runs", json={"task_id": "t01"}).json()["run_id"]
        second = client.post("/runs", json={"task_id": "t01"}).json()["run_id"]
        assert first == "t01-full"
        assert second == "t01-full-2"

    def test_event_cursor_pages_cover_everything(self, client):
        run_id = client.post("/runs", json={"task_id": "t01"}).json()["run_id"]
        whole = client.get(f"/runs/{run_id}/events").json()
        assert whole["total"] > 0
        assert whole["next"] == whole["total"]
        assert whole["events"][0]["phase"] == "observe"

        seen, cursor = [], 0
        while True:
            page = client.get(f"/runs/{run_id}/events", params={"from": cursor, "limit": 4}).json()
            seen.extend(page["events"])
            if page["next"] == cursor:
                break
            cursor = page["next"]
        assert seen == whole["events"]

    def test_events_past_end_empty(self, client):
        run_id = client.post("/runs", json={"task_id": "t01"}).json()["run_id"]
        total = client.get(f"/runs/{run_id}/events").json()["total"]
        page = client.get(f"/runs/{run_id}/events", params={"from": total}).json()
        assert page["events"] == []
        assert page["next"] == total

    def test_fired_verdict_lands_in_failure_queue(self, tmp_path):
        # empty kb: the forum vote task noop-loops and trips the loop rule
        cfg = ServiceConfig(
            akb_path=tmp_path / "empty-akb.json",
            queue_path=tmp_path / "queue.json",
            runs_root=tmp_path / "runs",
        )
        c = TestClient(create_app(cfg))
        meta = c.post("/runs", json={"task_id": "t10", "mode": "full"}).json()
        assert meta["status"] == "failure"
        assert meta["verdict"]["source"] == "rule_loop"

        failures = c.get("/failures").json()
        assert [f["id"] for f in failures] == [meta["run_id"]]
        assert failures[0]["status"] == "open"

        r = c.post(
            f"/failures/{meta['run_id']}/resolve",
            json={"tip_id": "suite-forum-vote-menu", "note": "menu first"},
        )
        assert r.status_code == 200
        assert r.json()["status"] == "resolved"
        assert c.get("/failures", params={"status": "open"}).json() == []

    def test_async_launch_completes(self, client):
        r = client.post("/runs", json={"task_id": "t01", "wait": False})
        assert r.status_code == 202
        run_id = r.json()["run_id"]
        for _ in range(100):
            got = client.get(f"/runs/{run_id}")
            if got.status_code == 200 and got.json().get("status") not in (None, "running"):
                break
            time.sleep(0.05)
        assert client.get(f"/runs/{run_id}").json()["status"] == "success"

    def test_unknown_task_404(self, client):
        r = client.post("/runs", json={"task_id": "t99"})
        assert r.status_code == 404

    def test_bad_mode_422(self, client):
        r = client.post("/runs", json={"task_id": "t01", "mode": "turbo"})
        assert r.status_code == 422
        assert r.json()["code"] == "invalid_mode"

    def test_missing_body_field_is_validation_error(self, client):
        r = client.post("/runs", json={"mode": "full"})
        assert r.status_code == 422
        assert r.json()["code"] == "validation_error"

    def test_unknown_run_404(self, client):
        assert client.get("/runs/ghost").status_code == 404
        assert client.get("/runs/ghost/events").status_code == 404

    def test_missing_screenshot_404(self, client):
        run_id = client.post("/runs", json={"task_id": "t01"}).json()["run_id"]
        r = client.get(f"/runs/{run_id}/screenshots/{'ab' * 32}")
        assert r.status_code == 404


class TestReadsAreSideEffectFree:
    def test_stores_untouched_by_reads(self, tmp_path):
        app, cfg = make_app(tmp_path)
        c = TestClient(app)
        c.post("/runs", json={"task_id": "t01"})
        before_akb = cfg.akb_path.read_bytes()

        c.get("/tips")
        c.get("/failures")
        c.get("/runs")
        c.get("/runs/t01-full")
        c.get("/runs/t01-full/events")
        c.get("/akb/stats")

        assert cfg.akb_path.read_bytes() == before_akb
        assert not (tmp_path / "queue.json").exists()
