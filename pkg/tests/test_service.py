import json

import pytest
from fastapi.testclient import TestClient

from memdialog import service

from conftest import make_tiny_model


@pytest.fixture
def client(tmp_path):
    model, _ = make_tiny_model()
    app = service.create_app(model, checkpoint_id="tiny",
                             log_path=str(tmp_path / "chat.jsonl"))
    with TestClient(app) as c:
        c.log_path = tmp_path / "chat.jsonl"
        yield c


@pytest.fixture
def modelless_client():
    with TestClient(service.create_app(None)) as c:
        yield c


class TestHealth:
    def test_reports_checkpoint(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok", "model": "tiny"}

    def test_works_without_model(self, modelless_client):
        assert modelless_client.get("/health").status_code == 200


class TestSessions:
    def test_create_returns_id(self, client):
        r = client.post("/sessions")
        assert r.status_code == 201
        assert r.json()["session_id"]

    def test_create_without_model_503(self, modelless_client):
        assert modelless_client.post("/sessions").status_code == 503

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.delete("/sessions/nope").status_code == 404
        assert client.post("/sessions/nope/messages",
                           json={"text": "hi"}).status_code == 404

    def test_delete_then_use(self, client):
        sid = client.post("/sessions").json()["session_id"]
        assert client.delete("/sessions/%s" % sid).status_code == 200
        assert client.get("/sessions/%s" % sid).status_code == 404


class TestMessages:
    def test_reply_shape(self, client):
        sid = client.post("/sessions").json()["session_id"]
        r = client.post("/sessions/%s/messages" % sid,
                        json={"text": "hello there"})
        assert r.status_code == 200
        body = r.json()
        assert body["session_id"] == sid
        assert isinstance(body["response"], str) and body["response"]
        assert isinstance(body["attention"], list)
        assert body["unknown_words"] == []

    def test_unknown_words_reported(self, client):
        sid = client.post("/sessions").json()["session_id"]
        body = client.post("/sessions/%s/messages" % sid,
                           json={"text": "hello xyzzy"}).json()
        assert body["unknown_words"] == ["xyzzy"]

    def test_empty_message_400(self, client):
        sid = client.post("/sessions").json()["session_id"]
        r = client.post("/sessions/%s/messages" % sid, json={"text": "   "})
        assert r.status_code == 400
        assert "<SILENCE>" in r.json()["detail"]

    def test_history_accumulates(self, client):
        sid = client.post("/sessions").json()["session_id"]
        client.post("/sessions/%s/messages" % sid, json={"text": "hello there"})
        client.post("/sessions/%s/messages" % sid, json={"text": "book a table"})
        hist = client.get("/sessions/%s" % sid).json()["history"]
        assert len(hist) == 4
        assert [h["speaker"] for h in hist] == ["user", "system"] * 2
        assert hist[0]["text"] == "hello there"

    def test_attention_grows_with_history(self, client):
        sid = client.post("/sessions").json()["session_id"]
        first = client.post("/sessions/%s/messages" % sid,
                            json={"text": "hello there"}).json()
        second = client.post("/sessions/%s/messages" % sid,
                             json={"text": "book a table in rome"}).json()
        assert all(len(p) == 0 for p in first["attention"])
        assert all(len(p) == 2 for p in second["attention"])
        for p in second["attention"]:
            assert sum(p) == pytest.approx(1.0, abs=1e-5)

    def test_sessions_are_isolated(self, client):
        a = client.post("/sessions").json()["session_id"]
        b = client.post("/sessions").json()["session_id"]
        client.post("/sessions/%s/messages" % a, json={"text": "hello there"})
        assert client.get("/sessions/%s" % b).json()["history"] == []

    def test_exchange_log_replayable(self, client):
        sid = client.post("/sessions").json()["session_id"]
        client.post("/sessions/%s/messages" % sid, json={"text": "hello there"})
        client.post("/sessions/%s/messages" % sid, json={"text": "<SILENCE>"})
        lines = [json.loads(l) for l in
                 client.log_path.read_text().splitlines()]
        assert len(lines) == 2
        assert lines[0]["session"] == sid
        assert lines[0]["user"] == "hello there"
        assert lines[1]["user"] == "<silence>"
        # replaying the same inputs in a fresh session gives the same replies
        sid2 = client.post("/sessions").json()["session_id"]
        r1 = client.post("/sessions/%s/messages" % sid2,
                         json={"text": "hello there"}).json()
        r2 = client.post("/sessions/%s/messages" % sid2,
                         json={"text": "<SILENCE>"}).json()
        assert r1["response"] == lines[0]["system"]
        assert r2["response"] == lines[1]["system"]
