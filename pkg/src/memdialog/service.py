"""Stateful chat inference service: JSON over HTTP, one session per dialog."""

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import corpus
from .model import pack_subdialog


@dataclass
class Session:
    id: str
    created_at: float = field(default_factory=time.time)
    history: list = field(default_factory=list)   # alternating user/system
    lock: threading.Lock = field(default_factory=threading.Lock)


class MessageIn(BaseModel):
    text: str


def create_app(model=None, checkpoint_id="unloaded", log_path=None):
    """Build the FastAPI app around one loaded model.

    Sessions are in-memory; the optional log_path gets an append-only JSON
    line per exchange for replay.
    """
    app = FastAPI(title="memdialog chat service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    state = {"model": model, "checkpoint_id": checkpoint_id}
    sessions = {}
    sessions_lock = threading.Lock()
    log_lock = threading.Lock()

    def get_session(session_id):
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/health")
    def health():
        return {"status": "ok", "model": state["checkpoint_id"]}

    @app.post("/sessions", status_code=201)
    def create_session():
        if state["model"] is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        session = Session(id=uuid.uuid4().hex)
        with sessions_lock:
            sessions[session.id] = session
        return {"session_id": session.id}

    @app.get("/sessions/{session_id}")
    def get_history(session_id: str):
        session = get_session(session_id)
        with session.lock:
            history = [{"speaker": u.speaker, "text": u.text()}
                       for u in session.history]
        return {"session_id": session_id, "history": history}

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        with sessions_lock:
            if sessions.pop(session_id, None) is None:
                raise HTTPException(status_code=404, detail="unknown session")
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, message: MessageIn):
        session = get_session(session_id)
        mdl = state["model"]
        if mdl is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        tokens = corpus.tokenize(message.text)
        if not tokens:
            raise HTTPException(
                status_code=400,
                detail="empty message; send the literal token <SILENCE> "
                       "for a silent turn")
        unknown = mdl.vocab.unknown_words(tokens)
        query = corpus.Utterance(tokens, corpus.USER)
        with session.lock:
            sd = corpus.Subdialog(history=tuple(session.history),
                                  query=query, gold_tokens=())
            ex = pack_subdialog(sd, mdl.vocab, mdl.config)
            pred = mdl.predict(ex)
            reply = corpus.Utterance(pred.tokens, corpus.SYSTEM)
            session.history.append(query)
            session.history.append(reply)
        payload = {
            "session_id": session_id,
            "response": reply.text(),
            "attention": [[float(x) for x in p] for p in pred.attention],
            "unknown_words": unknown,
        }
        if log_path:
            with log_lock, open(log_path, "a", encoding="utf-8") as f:
                f.write(json.dumps({"session": session_id,
                                    "user": query.text(),
                                    "system": reply.text()}) + "\n")
        return payload

    return app


def serve(model, checkpoint_id, addr="127.0.0.1:8080", log_path=None):
    import uvicorn

    host, _, port = addr.partition(":")
    app = create_app(model, checkpoint_id, log_path=log_path)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080))
