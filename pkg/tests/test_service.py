"""HTTP API tests driven through an in-process test client.

The service is exercised exactly as a remote console would use it: JSON
in, JSON out, no reaching into server internals except where the point
of the test is to compare the wire payload against the library call it
wraps (views, grasps, replay).
"""

from __future__ import annotations

import numpy as np
import pytest
from fastapi.testclient import TestClient

from mvgrasp.features import render_views
from mvgrasp.grasping import AnnealSchedule, plan_grasp
from mvgrasp.projection import FIXED_SIZE
from mvgrasp.protocol import sliding_accuracy
from mvgrasp.service import create_app, kb_digest, replay_events
from mvgrasp.views import rank_views


@pytest.fixture()
def client():
    app = create_app()
    with TestClient(app) as c:
        c.app = app
        yield c


def make_session(client, **body):
    r = client.post("/sessions", json=body or None)
    assert r.status_code == 201
    return r.json()["id"]


# ---------------------------------------------------------------------------
# sessions and teaching


class TestSessions:
    def test_fresh_session_is_empty(self, client):
        r = client.post("/sessions")
        assert r.status_code == 201
        doc = r.json()
        assert doc["categories"] == {}
        assert doc["n_total"] == 0
        assert doc["d"] is None
        assert doc["window_accuracy"] is None
        assert doc["last_prediction"] is None
        assert doc["events"] == []
        assert len(doc["kb_digest"]) == 64

    def test_teach_adds_a_category_with_counts(self, client):
        sid = make_session(client)
        r = client.post(
            f"/sessions/{sid}/teach",
            json={"label": "box", "instance_ids": ["box_0", "box_1"]},
        )
        assert r.status_code == 200
        doc = r.json()
        assert doc["categories"] == {"box": 2}
        assert doc["n_total"] == 2
        assert doc["d"] == 1024
        assert [e["event"] for e in doc["events"]] == ["teach", "teach"]
        assert [e["instance_id"] for e in doc["events"]] == ["box_0", "box_1"]

    def test_ask_before_any_teaching_is_a_conflict(self, client):
        sid = make_session(client)
        r = client.post(f"/sessions/{sid}/ask", json={"instance_id": "box_0"})
        assert r.status_code == 409
        assert r.json() == {
            "code": "no_knowledge",
            "message": r.json()["message"],
        }

    def test_ask_recognizes_a_taught_instance(self, client):
        sid = make_session(client)
        client.post(
            f"/sessions/{sid}/teach",
            json={"label": "box", "instance_ids": ["box_0", "box_1", "box_2"]},
        )
        r = client.post(f"/sessions/{sid}/ask", json={"instance_id": "box_0"})
        assert r.status_code == 200
        doc = r.json()
        assert doc["prediction"]["label"] == "box"
        assert doc["true_label"] == "box"
        assert doc["correct"] is True
        assert doc["window_accuracy"] == 1.0
        event = doc["session"]["events"][-1]
        assert event["event"] == "ask"
        assert event["predicted"] == "box"
        assert event["correct"] is True

    def test_correct_reinforces_an_existing_category(self, client):
        sid = make_session(client)
        client.post(
            f"/sessions/{sid}/teach",
            json={"label": "box", "instance_ids": ["box_0"]},
        )
        r = client.post(
            f"/sessions/{sid}/correct",
            json={"label": "box", "instance_id": "box_1"},
        )
        assert r.status_code == 200
        doc = r.json()
        assert doc["categories"] == {"box": 2}
        assert doc["events"][-1]["event"] == "correct"

    def test_sessions_are_isolated(self, client):
        a = make_session(client)
        b = make_session(client)
        client.post(
            f"/sessions/{a}/teach", json={"label": "box", "instance_ids": ["box_0"]}
        )
        doc_b = client.get(f"/sessions/{b}").json()
        assert doc_b["categories"] == {}
        r = client.post(f"/sessions/{b}/ask", json={"instance_id": "box_0"})
        assert r.status_code == 409

    def test_gets_do_not_change_state(self, client):
        sid = make_session(client)
        client.post(
            f"/sessions/{sid}/teach", json={"label": "box", "instance_ids": ["box_0"]}
        )
        before = client.get(f"/sessions/{sid}").json()
        client.get(f"/sessions/{sid}/metrics")
        client.get("/objects")
        client.get(f"/sessions/{sid}")
        after = client.get(f"/sessions/{sid}").json()
        assert after["kb_digest"] == before["kb_digest"]
        assert after["events"] == before["events"]


# ---------------------------------------------------------------------------
# accuracy bookkeeping and replay


class TestAccountingAndReplay:
    def script(self, client, sid):
        client.post(
            f"/sessions/{sid}/teach",
            json={"label": "box", "instance_ids": ["box_0", "box_1"]},
        )
        client.post(
            f"/sessions/{sid}/teach",
            json={"label": "sphere", "instance_ids": ["sphere_6", "sphere_7"]},
        )
        graded = []
        for iid in ["box_2", "sphere_8", "box_0", "cylinder_3", "sphere_6"]:
            doc = client.post(f"/sessions/{sid}/ask", json={"instance_id": iid}).json()
            graded.append(doc["correct"])
        client.post(
            f"/sessions/{sid}/correct",
            json={"label": "box", "instance_id": "box_2"},
        )
        return graded

    def test_window_accuracy_matches_the_shared_oracle(self, client):
        sid = make_session(client)
        graded = self.script(client, sid)
        doc = client.get(f"/sessions/{sid}").json()
        expected = sliding_accuracy([g for g in graded if g is not None], 2, 3)
        assert doc["window_accuracy"] == pytest.approx(expected)

    def test_metrics_recount_from_the_event_log(self, client):
        sid = make_session(client)
        graded = self.script(client, sid)
        m = client.get(f"/sessions/{sid}/metrics").json()
        assert m["qci"] == 5
        assert m["alc"] == 2
        # 4 teaches + 1 correction spread over 2 categories
        assert m["aic"] == pytest.approx(5 / 2)
        hits = [g for g in graded if g is not None]
        assert m["gca"] == pytest.approx(sum(hits) / len(hits))
        assert 0.0 <= m["apa"] <= 1.0

    def test_replaying_the_event_log_reproduces_the_digest(self, client):
        sid = make_session(client)
        self.script(client, sid)
        doc = client.get(f"/sessions/{sid}").json()
        rebuilt = replay_events(doc["events"], client.app.state.store, 0.01)
        assert kb_digest(rebuilt) == doc["kb_digest"]


# ---------------------------------------------------------------------------
# objects, views, grasps


class TestObjects:
    def test_builtin_catalog_lists_nine_primitives(self, client):
        doc = client.get("/objects").json()
        objs = doc["objects"]
        assert len(objs) == 9
        assert all(o["points"] == 400 for o in objs)
        labels = sorted({o["label"] for o in objs})
        assert labels == ["box", "cylinder", "sphere"]
        assert [o["id"] for o in objs] == sorted(o["id"] for o in objs)

    def test_views_payload_matches_the_renderer(self, client):
        doc = client.get("/objects/cylinder_4/views").json()
        assert doc["bins"] == 64
        assert doc["plane_side"] == pytest.approx(0.45)
        assert len(doc["views"]) == 3

        cloud = client.app.state.store.cloud("cylinder_4")
        ranked = rank_views(render_views(cloud, bins=64, mode=FIXED_SIZE))
        assert doc["best"] == ranked[0].view_index
        assert [r["view_index"] for r in doc["ranking"]] == [
            s.view_index for s in ranked
        ]
        np.testing.assert_allclose(
            [r["entropy_bits"] for r in doc["ranking"]],
            [s.entropy_bits for s in ranked],
            atol=1e-12,
        )
        for view in doc["views"]:
            grid = np.array(view["grid"])
            assert grid.shape == (64, 64)
            assert (grid >= 0).all()

    def test_views_are_deterministic(self, client):
        a = client.get("/objects/box_1/views").json()
        b = client.get("/objects/box_1/views").json()
        assert a == b

    def test_grasp_payload_matches_the_planner(self, client):
        body = {"seed": 3, "budget": 8, "iters": 30}
        doc = client.post("/objects/cylinder_4/grasp", json=body).json()

        cloud = client.app.state.store.cloud("cylinder_4")
        plan = plan_grasp(
            cloud, budget=8, seed=3, bins=64, schedule=AnnealSchedule(iters=30)
        )
        assert doc["view_index"] == plan.view_index
        np.testing.assert_allclose(doc["entropies"], plan.entropies, atol=1e-12)
        best = doc["best"]
        assert (best["u"], best["v"]) == tuple(plan.best.center_px)
        assert best["rotation_rad"] == pytest.approx(plan.best.rotation_rad, abs=1e-12)
        assert best["width_m"] == pytest.approx(plan.best.width_m, abs=1e-12)
        assert best["quality"] == pytest.approx(plan.best.quality, abs=1e-12)
        assert doc["collision_free"] == plan.collision_free
        np.testing.assert_allclose(
            np.array(doc["map"]["quality"]), plan.grasp_map.quality, atol=1e-12
        )
        assert doc["bins"] == 64

    def test_grasp_defaults_fill_in_when_body_is_omitted(self, client):
        doc = client.post("/objects/sphere_7/grasp").json()
        assert doc["view_index"] in (0, 1, 2)
        assert doc["best"]["quality"] > 0.0


# ---------------------------------------------------------------------------
# error surface


class TestErrors:
    def test_unknown_session_is_404(self, client):
        r = client.get("/sessions/doesnotexist")
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_session"

    def test_unknown_object_is_404(self, client):
        r = client.get("/objects/teapot_99/views")
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_object"

    def test_unknown_instance_is_404(self, client):
        sid = make_session(client)
        r = client.post(
            f"/sessions/{sid}/teach",
            json={"label": "box", "instance_ids": ["teapot_99"]},
        )
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_instance"

    def test_correcting_into_an_unknown_category_is_409(self, client):
        sid = make_session(client)
        client.post(
            f"/sessions/{sid}/teach", json={"label": "box", "instance_ids": ["box_0"]}
        )
        r = client.post(
            f"/sessions/{sid}/correct",
            json={"label": "mug", "instance_id": "box_1"},
        )
        assert r.status_code == 409
        assert r.json()["code"] == "unknown_category"

    def test_empty_teach_batch_is_422(self, client):
        sid = make_session(client)
        r = client.post(
            f"/sessions/{sid}/teach", json={"label": "box", "instance_ids": []}
        )
        assert r.status_code == 422
        assert r.json()["code"] == "validation_error"

    def test_malformed_ask_body_is_422(self, client):
        sid = make_session(client)
        r = client.post(f"/sessions/{sid}/ask", json={"id": "box_0"})
        assert r.status_code == 422
        assert r.json()["code"] == "validation_error"

    def test_error_payloads_are_flat_code_message_objects(self, client):
        r = client.get("/sessions/nope")
        assert sorted(r.json()) == ["code", "message"]
