"""HTTP service: live choice-bit ingestion driving a simulated Bell session.

Endpoints (JSON unless noted):

- POST   /sessions                  {preset, seed, max_trials, noise...} -> {id}
- POST   /sessions/{id}/bits        {role: "A"|"B"|"interleaved", bits: "0101"} -> {accepted}
- GET    /sessions/{id}/stats       -> snapshot
- GET    /sessions/{id}/events      -> server-sent event stream of snapshots
- GET    /sessions/{id}/log         -> the session log as text (for download)
- DELETE /sessions/{id}             -> closes the session and flushes its log

All mutations of one session are serialized under its lock; snapshots are
plain dicts assembled under the same lock, so every snapshot is internally
consistent (its count table always sums to its trial count). Different
sessions are fully independent.
"""

from __future__ import annotations

import asyncio
import json
import tempfile
import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel, Field

from . import pipeline, qstate
from .session import (LOG_HEADER, QueueBits, SessionConfig, SessionEngine,
                      SessionLog, write_log)

HEARTBEAT_S = 1.0
POLL_S = 0.05


class MarkovMeter:
    """Online order-2 Markov predictor; scores how guessable the input is.

    Each incoming bit is first predicted from the counts seen for the
    current two-bit context, then learned. The score is the hit fraction;
    a strictly alternating stream converges to 1.0.
    """

    MIN_BITS = 16

    def __init__(self):
        self.counts = [[0, 0] for _ in range(4)]
        self.context: list[int] = []
        self.hits = 0
        self.total = 0

    def feed(self, bits) -> None:
        for bit in bits:
            if len(self.context) == 2:
                ctx = self.context[0] * 2 + self.context[1]
                c0, c1 = self.counts[ctx]
                guess = 1 if c1 > c0 else 0
                self.hits += int(guess == bit)
                self.total += 1
                self.counts[ctx][bit] += 1
                self.context = [self.context[1], bit]
            else:
                self.context.append(bit)

    def score(self) -> float | None:
        if self.total < self.MIN_BITS:
            return None
        return self.hits / self.total


class LiveSession:
    """One live experiment: bit queues, the trial engine, and rolling tallies."""

    def __init__(self, session_id: str, config: SessionConfig, log_path: Path):
        self.id = session_id
        self.config = config
        self.log_path = log_path
        self.engine = SessionEngine(config)
        self.queue_a = QueueBits("live-A")
        self.queue_b = QueueBits("live-B")
        self.records: list = []
        self.tally = pipeline.CountTable.zero()
        self.meter = MarkovMeter()
        self.accepted = {"A": 0, "B": 0}
        self.version = 0
        self.closed = False
        self.lock = threading.Lock()
        self._interleave_next = "A"

    def push(self, role: str, bits: str) -> int:
        parsed = [int(ch) for ch in bits if not ch.isspace()]
        if any(b not in (0, 1) for b in parsed):
            raise ValueError("bits must be a string over {0, 1}")
        with self.lock:
            if self.closed:
                raise RuntimeError("session is closed")
            self.meter.feed(parsed)
            if role == "interleaved":
                a_bits, b_bits = [], []
                for bit in parsed:
                    if self._interleave_next == "A":
                        a_bits.append(bit)
                        self._interleave_next = "B"
                    else:
                        b_bits.append(bit)
                        self._interleave_next = "A"
                self.queue_a.push(a_bits)
                self.queue_b.push(b_bits)
                self.accepted["A"] += len(a_bits)
                self.accepted["B"] += len(b_bits)
            elif role in ("A", "B"):
                queue = self.queue_a if role == "A" else self.queue_b
                queue.push(parsed)
                self.accepted[role] += len(parsed)
            else:
                raise ValueError(f"unknown role {role!r}")
            self._drain_locked()
        return len(parsed)

    def _drain_locked(self) -> None:
        while True:
            rem = self.engine.remaining()
            if rem == 0:
                return
            k = min(self.queue_a.available(), self.queue_b.available())
            if rem is not None:
                k = min(k, rem)
            if k == 0:
                return
            new = self.engine.run_chunk(self.queue_a.take(k), self.queue_b.take(k))
            self.records.extend(new)
            add = pipeline.CountTable.zero().counts.copy()
            for r in new:
                if r.coincidence:
                    add[r.a, r.b, r.x, r.y] += 1
            self.tally = pipeline.CountTable(self.tally.counts + add)
            self.version += 1

    def log(self) -> SessionLog:
        return SessionLog(records=tuple(self.records),
                          status="closed" if self.closed else "live",
                          coincidences=self.engine.coincidences)

    def snapshot(self) -> dict:
        with self.lock:
            analysis = pipeline.analysis_dict(self.tally)
            queued = {"A": self.queue_a.available(), "B": self.queue_b.available()}
            score = self.meter.score()
            return {
                "id": self.id,
                "trials": self.engine.trials,
                "coincidences": self.engine.coincidences,
                "accepted_bits": dict(self.accepted),
                "queued_bits": queued,
                "analysis": analysis,
                "predictability": score,
                "predictability_status": "ok" if score is not None else "insufficient data",
                "status": "closed" if self.closed else "open",
                "version": self.version,
            }

    def close(self) -> dict:
        with self.lock:
            if not self.closed:
                self._drain_locked()
                self.closed = True
                self.queue_a.close()
                self.queue_b.close()
                write_log(self.log(), self.log_path)
                self.version += 1
            return {"id": self.id, "status": "closed",
                    "trials": self.engine.trials, "log_path": str(self.log_path)}


class SessionCreate(BaseModel):
    preset: str = "chsh"
    seed: int = 0
    max_trials: int | None = Field(default=None, ge=0)
    pulse_rate_hz: float = Field(default=1e5, gt=0)
    noise_white: float = Field(default=0.0, ge=0.0, le=1.0)
    noise_dephasing: float = Field(default=0.0, ge=0.0, le=1.0)
    eta_a: float = Field(default=1.0, ge=0.0, le=1.0)
    eta_b: float = Field(default=1.0, ge=0.0, le=1.0)


class BitsPush(BaseModel):
    role: str = "interleaved"
    bits: str


def create_app(log_dir: str | Path | None = None,
               ui_dir: str | Path | None = None) -> FastAPI:
    """The service app; `ui_dir` (a built frontend) is served at / when given."""
    app = FastAPI(title="mdlbell live session service")
    base = Path(log_dir) if log_dir else Path(tempfile.mkdtemp(prefix="mdlbell-"))
    base.mkdir(parents=True, exist_ok=True)
    sessions: dict[str, LiveSession] = {}
    app.state.sessions = sessions
    app.state.log_dir = base

    def lookup(session_id: str) -> LiveSession:
        sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return sess

    @app.post("/sessions")
    def create_session(req: SessionCreate):
        try:
            noise = qstate.NoiseModel(white=req.noise_white,
                                      dephasing=req.noise_dephasing,
                                      eta_a=req.eta_a, eta_b=req.eta_b)
            config = SessionConfig.preset(req.preset, noise=noise, rng_seed=req.seed,
                                          max_trials=req.max_trials,
                                          pulse_rate_hz=req.pulse_rate_hz)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        session_id = uuid.uuid4().hex[:12]
        sessions[session_id] = LiveSession(session_id, config,
                                           base / f"session-{session_id}.log")
        return {"id": session_id}

    @app.post("/sessions/{session_id}/bits")
    def push_bits(session_id: str, req: BitsPush):
        sess = lookup(session_id)
        try:
            accepted = sess.push(req.role, req.bits)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        except RuntimeError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return {"accepted": accepted, "trials": sess.engine.trials}

    @app.get("/sessions/{session_id}/stats")
    def stats(session_id: str):
        return lookup(session_id).snapshot()

    @app.get("/sessions/{session_id}/events")
    async def events(session_id: str):
        sess = lookup(session_id)

        async def stream():
            last_emit = 0.0
            last_version = -1
            while True:
                snap = await asyncio.to_thread(sess.snapshot)
                now = time.monotonic()
                if snap["version"] != last_version or now - last_emit >= HEARTBEAT_S:
                    yield f"data: {json.dumps(snap, sort_keys=True)}\n\n"
                    last_emit = now
                    last_version = snap["version"]
                    if snap["status"] == "closed":
                        return
                await asyncio.sleep(POLL_S)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/log")
    def download_log(session_id: str):
        sess = lookup(session_id)
        log = sess.log()
        lines = [LOG_HEADER]
        for r in log.records:
            a = "-" if r.a is None else r.a
            b = "-" if r.b is None else r.b
            lines.append(f"{r.trial},{r.time_ns},{r.x},{r.y},{a},{b}")
        return PlainTextResponse("\n".join(lines) + "\n")

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str):
        return lookup(session_id).close()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


app = create_app()
