"""Trial-level simulation of the two-station experiment.

Each trial consumes one setting bit per station, samples a detection
outcome pair from the noisy state in the selected bases, and applies
per-arm detection erasure. Trials are synchronous with the pulse clock;
pulses with no bits available produce no record. The analysis downstream
post-selects coincidences, so the detection-efficiency loophole is open
here exactly as it is in coincidence-counted experiments; it is not
patched over.

One session owns its log exclusively; bit sources may be fed from other
threads (the queue source is thread-safe and blocking-consume).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace

import numpy as np

from . import qstate

SPEED_OF_LIGHT_M_PER_S = 299792458.0

_CHUNK = 1 << 14


class LogParseError(ValueError):
    """Malformed session-log content; message carries the 1-based line number."""


@dataclass(frozen=True)
class Geometry:
    """Straight-line source/station layout and the setting-change response time."""

    source_to_alice_m: float = 87.0
    source_to_bob_m: float = 88.0
    setting_response_ns: float = 150.0
    distance_uncertainty_m: float = 2.0

    def __post_init__(self):
        if self.source_to_alice_m < 0 or self.source_to_bob_m < 0:
            raise ValueError("distances must be non-negative")


def timing_margin(geometry: Geometry, worst_case: bool = False) -> float:
    """Light-travel time of the nearer arm minus the setting response, in ns.

    Positive margin means a setting choice cannot reach the remote
    detection event; zero or negative flags a locality violation.
    `worst_case` shrinks the nearer distance by the stated uncertainty.
    """
    d = min(geometry.source_to_alice_m, geometry.source_to_bob_m)
    if worst_case:
        d = max(0.0, d - geometry.distance_uncertainty_m)
    return d / SPEED_OF_LIGHT_M_PER_S * 1e9 - geometry.setting_response_ns


@dataclass(frozen=True)
class SessionConfig:
    state_kind: str = "chsh-maximal"
    noise: qstate.NoiseModel = field(default_factory=qstate.NoiseModel)
    angles_a: tuple[float, float] = (0.0, math.pi / 4)
    angles_b: tuple[float, float] = (3 * math.pi / 8, math.pi / 8)
    pulse_rate_hz: float = 1e5
    pulse_width_ns: float = 10.0
    geometry: Geometry = field(default_factory=Geometry)
    rng_seed: int = 0
    max_trials: int | None = None

    def __post_init__(self):
        if self.pulse_rate_hz <= 0:
            raise ValueError("pulse rate must be positive")
        if self.pulse_width_ns <= 0:
            raise ValueError("pulse width must be positive")
        if self.max_trials is not None and self.max_trials < 0:
            raise ValueError("max_trials must be >= 0")

    @property
    def period_ns(self) -> int:
        return round(1e9 / self.pulse_rate_hz)

    @classmethod
    def preset(cls, experiment: str, **overrides) -> "SessionConfig":
        """Config for one of the two built-in experiments ("chsh" or "mdl")."""
        if experiment == "chsh":
            aa, bb = qstate.chsh_basis_angles()
            kind = "chsh-maximal"
        elif experiment == "mdl":
            aa, bb = qstate.mdl_basis_angles()
            kind = "mdl-nonmaximal"
        else:
            raise ValueError(f"unknown experiment {experiment!r}")
        cfg = cls(state_kind=kind, angles_a=(aa[0], aa[1]), angles_b=(bb[0], bb[1]))
        return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    time_ns: int
    x: int
    y: int
    a: int | None  # None = no detection on Alice's arm
    b: int | None

    @property
    def coincidence(self) -> bool:
        return self.a is not None and self.b is not None


@dataclass(frozen=True)
class SessionLog:
    records: tuple[TrialRecord, ...]
    status: str = "completed"  # completed | exhausted | max-trials | ingested
    coincidences: int = 0

    def __len__(self):
        return len(self.records)


class BitSourceExhausted(Exception):
    pass


class StringBits:
    """Finite bit source from an ASCII '0'/'1' string (whitespace ignored)."""

    def __init__(self, text: str, origin: str = "string"):
        cleaned = [ch for ch in text if not ch.isspace()]
        bad = next((ch for ch in cleaned if ch not in "01"), None)
        if bad is not None:
            raise ValueError(f"non-binary character {bad!r} in bit source")
        self._bits = np.array([int(ch) for ch in cleaned], dtype=np.int8)
        self._pos = 0
        self.origin = origin

    def available(self) -> int:
        return len(self._bits) - self._pos

    def exhausted(self) -> bool:
        return self.available() == 0

    def take(self, n: int) -> np.ndarray:
        n = min(n, self.available())
        out = self._bits[self._pos:self._pos + n]
        self._pos += n
        return out


def file_bits(path) -> StringBits:
    with open(path, "r", encoding="ascii") as fh:
        return StringBits(fh.read(), origin=str(path))


class PrngBits:
    """Seeded pseudo-random bit source (unlimited unless `limit` is given)."""

    def __init__(self, seed: int, limit: int | None = None):
        self._rng = np.random.default_rng(seed)
        self._remaining = limit
        self.origin = f"prng:{seed}"

    def available(self) -> int:
        return self._remaining if self._remaining is not None else 1 << 62

    def exhausted(self) -> bool:
        return self.available() == 0

    def take(self, n: int) -> np.ndarray:
        n = min(n, self.available())
        if self._remaining is not None:
            self._remaining -= n
        return self._rng.integers(0, 2, size=n, dtype=np.int8)


class QueueBits:
    """Live bit source fed from other threads; consuming can block until fed."""

    def __init__(self, origin: str = "live"):
        self._bits: list[int] = []
        self._cond = threading.Condition()
        self._closed = False
        self.origin = origin

    def push(self, bits) -> int:
        if isinstance(bits, str):
            parsed = [int(ch) for ch in bits if not ch.isspace()]
        else:
            parsed = [int(b) for b in bits]
        if any(b not in (0, 1) for b in parsed):
            raise ValueError("non-binary payload pushed to bit queue")
        with self._cond:
            if self._closed:
                raise BitSourceExhausted("queue is closed")
            self._bits.extend(parsed)
            self._cond.notify_all()
        return len(parsed)

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def available(self) -> int:
        with self._cond:
            return len(self._bits)

    def exhausted(self) -> bool:
        with self._cond:
            return self._closed and not self._bits

    def wait_available(self, timeout: float | None = None) -> bool:
        """Block until at least one bit is queued or the queue closes."""
        with self._cond:
            return self._cond.wait_for(lambda: self._bits or self._closed, timeout)

    def take(self, n: int) -> np.ndarray:
        with self._cond:
            n = min(n, len(self._bits))
            out = np.array(self._bits[:n], dtype=np.int8)
            del self._bits[:n]
            return out


def pair_bits(source_a, source_b, n: int | None = None, block: bool = False,
              timeout: float | None = None):
    """Yield (x, y) setting pairs, consuming one bit per side per pair.

    A pair is emitted only when both sides have a bit, in arrival order;
    leftover bits stay in their source. With `block=True` (live mode) the
    generator waits for stalled sides until both close or the timeout runs
    out on an empty wait.
    """
    emitted = 0
    while n is None or emitted < n:
        want = _CHUNK if n is None else min(_CHUNK, n - emitted)
        k = min(want, source_a.available(), source_b.available())
        if k == 0:
            if source_a.exhausted() or source_b.exhausted():
                return
            if not block:
                return
            waited = False
            for src in (source_a, source_b):
                if src.available() == 0 and hasattr(src, "wait_available"):
                    if not src.wait_available(timeout):
                        return
                    waited = True
            if not waited:
                return
            continue
        xs = source_a.take(k)
        ys = source_b.take(k)
        for x, y in zip(xs, ys):
            yield int(x), int(y)
        emitted += k


class SessionEngine:
    """Incremental trial simulator: shared by batch runs and the live service.

    Outcome sampling draws exactly three uniforms per trial (outcome pair,
    Alice erasure, Bob erasure) from one seeded stream, so a session's log
    depends only on (config, seed, consumed bit pairs), not on how the
    pairs were batched.
    """

    def __init__(self, config: SessionConfig):
        self.config = config
        state = qstate.apply_noise(qstate.make_state(config.state_kind), config.noise)
        self._cum = np.empty((2, 2, 4))
        for x in (0, 1):
            for y in (0, 1):
                cond = qstate.born_probs(
                    state, qstate.MeasurementBasis(config.angles_a[x]),
                    qstate.MeasurementBasis(config.angles_b[y]))
                self._cum[x, y] = np.cumsum(cond.reshape(4))
        self._rng = np.random.default_rng(config.rng_seed)
        self.trials = 0
        self.coincidences = 0

    def remaining(self) -> int | None:
        if self.config.max_trials is None:
            return None
        return self.config.max_trials - self.trials

    def run_chunk(self, xs, ys) -> list[TrialRecord]:
        xs = np.asarray(xs, dtype=np.int8)
        ys = np.asarray(ys, dtype=np.int8)
        k = len(xs)
        if k != len(ys):
            raise ValueError("setting arrays must be the same length")
        rem = self.remaining()
        if rem is not None and k > rem:
            raise ValueError("chunk exceeds max_trials")
        if k == 0:
            return []
        u = self._rng.random((k, 3))
        thresholds = self._cum[xs, ys]  # (k, 4)
        outcome = (u[:, :1] > thresholds[:, :3]).sum(axis=1)
        a_vals = outcome >> 1
        b_vals = outcome & 1
        eta = self.config.noise
        a_seen = u[:, 1] < eta.eta_a
        b_seen = u[:, 2] < eta.eta_b
        period = self.config.period_ns
        base = self.trials
        records = []
        for i in range(k):
            rec = TrialRecord(
                trial=base + i, time_ns=(base + i) * period,
                x=int(xs[i]), y=int(ys[i]),
                a=int(a_vals[i]) if a_seen[i] else None,
                b=int(b_vals[i]) if b_seen[i] else None)
            records.append(rec)
            if rec.coincidence:
                self.coincidences += 1
        self.trials += k
        return records


def run_session(config: SessionConfig, source_a, source_b) -> SessionLog:
    """Consume bit pairs until a source runs dry or max_trials is reached."""
    engine = SessionEngine(config)
    records: list[TrialRecord] = []
    status = "exhausted"
    while True:
        rem = engine.remaining()
        if rem == 0:
            status = "max-trials"
            break
        want = _CHUNK if rem is None else min(_CHUNK, rem)
        k = min(want, source_a.available(), source_b.available())
        if k == 0:
            status = "exhausted"
            break
        records.extend(engine.run_chunk(source_a.take(k), source_b.take(k)))
    return SessionLog(records=tuple(records), status=status,
                      coincidences=engine.coincidences)


LOG_HEADER = "#mdlbell-log v1"


def _field_str(v: int | None) -> str:
    return "-" if v is None else str(v)


def write_log(log: SessionLog, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(LOG_HEADER + "\n")
        for r in log.records:
            fh.write(f"{r.trial},{r.time_ns},{r.x},{r.y},"
                     f"{_field_str(r.a)},{_field_str(r.b)}\n")


def _parse_outcome(token: str, lineno: int) -> int | None:
    if token == "-":
        return None
    if token in ("0", "1"):
        return int(token)
    raise LogParseError(f"line {lineno}: outcome must be 0, 1 or '-', got {token!r}")


def read_log(path) -> SessionLog:
    """Parse a session log; malformed lines raise LogParseError with the line number."""
    records = []
    coincidences = 0
    with open(path, "r", encoding="ascii") as fh:
        first = fh.readline()
        if first == "":
            return SessionLog(records=(), status="ingested", coincidences=0)
        if first.rstrip("\n") != LOG_HEADER:
            raise LogParseError(f"line 1: expected header {LOG_HEADER!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise LogParseError(f"line {lineno}: expected 6 fields, got {len(parts)}")
            try:
                trial, time_ns = int(parts[0]), int(parts[1])
                x, y = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise LogParseError(f"line {lineno}: {exc}") from None
            if x not in (0, 1) or y not in (0, 1):
                raise LogParseError(f"line {lineno}: settings must be 0/1")
            rec = TrialRecord(trial=trial, time_ns=time_ns, x=x, y=y,
                              a=_parse_outcome(parts[4], lineno),
                              b=_parse_outcome(parts[5], lineno))
            records.append(rec)
            if rec.coincidence:
                coincidences += 1
    return SessionLog(records=tuple(records), status="ingested",
                      coincidences=coincidences)
