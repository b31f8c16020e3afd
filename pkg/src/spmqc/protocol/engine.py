"""Frame-by-frame Monte Carlo of the six-step protocol.

One frame carries ``message_bits`` of plaintext. Alice one-time-pads it with
key-sink bits, appends a CRC-32 of the ciphertext, applies the error-control
code, and interleaves random integrity-check bits. Each resulting slot is
put on teleported qubits until Charlie reports a valid Step-5 click for it;
qubits lost in Step 5 are flagged invalid and their slot goes out again on
the next qubit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..channel import (
    BASES,
    DEFAULT_CHANNEL,
    Basis,
    ChannelParams,
    PerformancePoint,
    binary_entropy,
    capacity_from_rates,
    performance_point,
)
from . import kernels
from .coding import CRC_BITS, ErrorControlCode, RepetitionCode, as_bits, attach_crc, check_crc
from .events import (
    BASIS_CODE,
    CheckEvents,
    InterceptResend,
    sample_check_coincidences,
    step5_tables,
)
from .keysink import KeySink

ROLES = ("alice", "bob", "charlie", "channel", "eve", "source", "bootstrap")


class Abort(str, enum.Enum):
    NONE = "none"
    SECURITY_CHECK = "security_check"
    INTEGRITY_CHECK = "integrity_check"
    DECODE = "decode_failure"
    KEY_STARVED = "key_starved"


class IntegrityFailure(Exception):
    def __init__(self, qber: float, threshold: float):
        super().__init__(f"QBER {qber:.4f} above threshold {threshold:.4f}")
        self.qber = qber


class DecodeFailure(Exception):
    def __init__(self, qber: float):
        super().__init__("codeword could not be decoded (CRC mismatch)")
        self.qber = qber


class ConfigError(ValueError):
    """Invalid session configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def role_streams(seed) -> dict[str, np.random.Generator]:
    """Independent generators per role, derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(len(ROLES))
    return {name: np.random.default_rng(ss) for name, ss in zip(ROLES, children)}


# -- frames -------------------------------------------------------------------------------


@dataclass
class Frame:
    message: np.ndarray
    key: np.ndarray
    ciphertext: np.ndarray
    payload: np.ndarray  # ciphertext followed by its CRC-32
    codeword: np.ndarray
    slot_bits: np.ndarray  # codeword with integrity bits interleaved
    integrity_positions: np.ndarray  # slot indices holding integrity bits
    mask: np.ndarray | None = None  # per-slot mask of the delivering qubit (INCUM)
    masked: np.ndarray | None = None
    check_positions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    message_positions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_pairs: int = 0
    n_check_rounds: int = 0

    @property
    def incum(self) -> bool:
        return self.mask is not None

    @property
    def code_positions(self) -> np.ndarray:
        keep = np.ones(self.slot_bits.size, dtype=bool)
        keep[self.integrity_positions] = False
        return np.flatnonzero(keep)

    @property
    def transmitted_bits(self) -> np.ndarray:
        """Per-slot bit that Alice maps onto a qubit (masked when INCUM is on)."""
        return self.masked if self.incum else self.slot_bits

    @property
    def operations(self) -> list[str]:
        """Encoding operation per slot: I for 0, i sigma_y for 1."""
        return ["iY" if b else "I" for b in self.transmitted_bits]


def encode_frame(message, key, code: ErrorControlCode, incum: bool, rng, integrity_fraction: float = 0.1) -> Frame:
    """Encrypt, frame and encode one message (Step 4, classical part)."""
    m = as_bits(message)
    k = as_bits(key)
    if k.size < m.size:
        raise ValueError(f"key has {k.size} bits, message needs {m.size}")
    k = k[: m.size]
    cipher = m ^ k
    payload = attach_crc(cipher)
    codeword = code.encode(payload)
    n_check = math.ceil(integrity_fraction * codeword.size)
    n_slots = codeword.size + n_check
    positions = np.sort(rng.choice(n_slots, n_check, replace=False))
    slots = np.empty(n_slots, dtype=np.uint8)
    is_check = np.zeros(n_slots, dtype=bool)
    is_check[positions] = True
    slots[is_check] = rng.integers(0, 2, n_check, dtype=np.uint8)
    slots[~is_check] = codeword
    frame = Frame(m, k, cipher, payload, codeword, slots, positions)
    if incum:
        frame.mask = rng.integers(0, 2, n_slots, dtype=np.uint8)
        frame.masked = frame.slot_bits ^ frame.mask
    return frame


# -- Step 5 ---------------------------------------------------------------------------------


@dataclass
class QubitLog:
    """Per-qubit record of the message-carrying (entangled) rounds of one attempt."""

    slot: np.ndarray
    bell: np.ndarray  # index into BellOutcome order
    bob_basis: np.ndarray  # 0 = Z, 1 = X
    bob_bit: np.ndarray
    recovery: np.ndarray  # 1 = i sigma_y
    mapped: np.ndarray  # bit put on the qubit (masked under INCUM)
    mask: np.ndarray
    valid: np.ndarray
    result: np.ndarray  # Charlie's Step-5 bit, 0 where invalid
    mask_announced: np.ndarray

    def __len__(self):
        return self.slot.size


def transmit_frame(frame: Frame, point: PerformancePoint, streams) -> QubitLog:
    """Teleport-and-encode each slot until Charlie reports a valid Step-5 click."""
    params = point.params
    rng_a, rng_b, rng_c, rng_ch = (streams[r] for r in ("alice", "bob", "charlie", "channel"))
    n_slots = frame.slot_bits.size
    per_slot = rng_ch.geometric(point.q_c2, n_slots)
    n = int(per_slot.sum())
    slot = np.repeat(np.arange(n_slots), per_slot)
    last = np.cumsum(per_slot) - 1
    valid = np.zeros(n, dtype=bool)
    valid[last] = True

    bell = rng_c.integers(0, 4, n).astype(np.int8)
    bob_basis = rng_b.integers(0, 2, n).astype(np.int8)
    bob_bit = rng_b.integers(0, 2, n, dtype=np.uint8)
    recovery_t, measured_t = step5_tables()
    recovery = recovery_t[bob_basis, bob_bit, bell]

    if frame.incum:
        mask = rng_a.integers(0, 2, n, dtype=np.uint8)
        first = np.concatenate([[0], last[:-1] + 1])
        mask[first] = frame.mask
        frame.mask = mask[last].copy()
        frame.masked = frame.slot_bits ^ frame.mask
        mapped = frame.slot_bits[slot] ^ mask
    else:
        mask = np.zeros(n, dtype=np.uint8)
        mapped = frame.slot_bits[slot].copy()

    ideal = measured_t[bob_basis, bob_bit, bell, mapped]
    k = int(valid.sum())
    measured, _ = kernels.resolve_clicks(
        ideal[valid], rng_ch.random(k), rng_ch.random(k), point.eta_c / point.q_c2, params.e_det, params.e0
    )
    result = np.zeros(n, dtype=np.uint8)
    result[valid] = measured
    return QubitLog(slot, bell, bob_basis, bob_bit, recovery, mapped, mask, valid, result, np.zeros(n, dtype=bool))


# -- Step 3 ------------------------------------------------------------------------------------


@dataclass
class SecurityCheckResult:
    dber: dict
    counts: dict  # basis -> (wrong, valid)
    passed: bool
    inconclusive: bool


def security_check(events: CheckEvents, threshold: float, bases=("X", "Y", "Z")) -> SecurityCheckResult:
    """Empirical DBER per basis; pass iff every basis has coincidences and none exceeds ``threshold``."""
    dber, counts = {}, {}
    inconclusive = False
    for b in bases:
        key = Basis.parse(b).value
        wrong, valid = events.counts(key)
        counts[key] = (wrong, valid)
        if valid == 0:
            inconclusive = True
            dber[key] = math.nan
        else:
            dber[key] = wrong / valid
    passed = not inconclusive and all(v <= threshold for v in dber.values())
    return SecurityCheckResult(dber, counts, passed, inconclusive)


# -- Step 6 ---------------------------------------------------------------------------------------


@dataclass
class Delivery:
    message: np.ndarray
    ciphertext: np.ndarray
    qber: float


def received_slots(frame: Frame, log: QubitLog, incum: bool) -> np.ndarray:
    """Bob's per-slot bits from valid clicks, before unmasking."""
    v = log.valid
    out = np.zeros(frame.slot_bits.size, dtype=np.uint8)
    out[log.slot[v]] = log.result[v] ^ log.bob_bit[v]
    return out


def integrity_qber(frame: Frame, log: QubitLog) -> float:
    raw = received_slots(frame, log, frame.incum)
    pos = frame.integrity_positions
    if pos.size == 0:
        return 0.0
    sent = frame.transmitted_bits[pos]
    return float(np.count_nonzero(raw[pos] != sent)) / pos.size


def decode_frame(frame: Frame, log: QubitLog, key, code: ErrorControlCode, qber_threshold: float) -> Delivery:
    """Integrity check, unmasking, error decoding and decryption on Bob's side.

    Raises :class:`IntegrityFailure` when the check bits disagree too much and
    :class:`DecodeFailure` when the check passes but the CRC does not.
    """
    qber = integrity_qber(frame, log)
    if qber > qber_threshold:
        raise IntegrityFailure(qber, qber_threshold)
    raw = received_slots(frame, log, frame.incum)
    if frame.incum:
        # Alice reveals mask bits only where Bob reported a valid result.
        log.mask_announced[:] = log.valid
        announced = np.zeros(frame.slot_bits.size, dtype=np.uint8)
        announced[log.slot[log.valid]] = log.mask[log.valid]
        raw = raw ^ announced
    payload = code.decode(raw[frame.code_positions])
    cipher, ok = check_crc(payload)
    if not ok:
        raise DecodeFailure(qber)
    k = as_bits(key)[: cipher.size]
    return Delivery(cipher ^ k, cipher, qber)


def estimate_capacity(point: PerformancePoint, basis, incum: bool, qber_hat: float, dber_hat: float) -> float:
    """Per-pair secrecy capacity from empirical error rates and the model gain."""
    key = Basis.parse(basis).value
    e = min(max(qber_hat, 0.0), 1.0)
    eps = min(max(dber_hat, 0.0), 1.0)
    return float(capacity_from_rates(point.big_q[key], e, eps, point.g(incum)))


def distill_keys(ciphertext, n_pairs: int, capacity_estimate: float, delivered: bool = True) -> np.ndarray:
    """Key bits extracted from a delivered frame: the first floor(n_pairs * C) ciphertext bits.

    The count is capped by the frame's ciphertext length.
    """
    c = as_bits(ciphertext)
    if not delivered or not capacity_estimate > 0:
        return np.zeros(0, dtype=np.uint8)
    n = min(c.size, int(math.floor(n_pairs * capacity_estimate)))
    return c[:n].copy()


# -- sessions --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class SessionConfig:
    params: ChannelParams = DEFAULT_CHANNEL
    distance_km: float = 20.0
    basis: str = "X"  # security-check basis whose DBER enters the capacity estimate
    check_bases: tuple = ("X", "Y", "Z")
    incum: bool = True
    message_bits: int = 64
    repetition: int = 3
    check_fraction: float = 0.5
    integrity_fraction: float = 0.1
    dber_threshold: float | None = None  # default e_d + 0.03
    qber_threshold: float | None = None  # default e_det + 0.03
    max_attempts: int = 5
    bootstrap_key: str | None = None  # hex; drawn from the seed when absent
    bootstrap_capacity_factor: float = 0.5
    attack: InterceptResend | None = None
    record_transcript: bool = False

    def __post_init__(self):
        def need(ok, path, msg):
            if not ok:
                raise ConfigError(path, msg)

        need(isinstance(self.params, ChannelParams), "channel", "must be a ChannelParams")
        need(self.distance_km >= 0, "session.distance_km", "must be >= 0")
        try:
            object.__setattr__(self, "basis", Basis.parse(self.basis).value)
        except ValueError as exc:
            raise ConfigError("session.basis", str(exc)) from None
        try:
            bases = tuple(Basis.parse(b).value for b in self.check_bases)
        except ValueError as exc:
            raise ConfigError("session.check_bases", str(exc)) from None
        need(len(bases) > 0 and len(set(bases)) == len(bases), "session.check_bases", "must be distinct and non-empty")
        object.__setattr__(self, "check_bases", bases)
        need(self.basis in bases, "session.basis", "must be one of check_bases")
        need(isinstance(self.message_bits, int) and self.message_bits > 0, "session.message_bits", "must be a positive integer")
        need(isinstance(self.repetition, int) and self.repetition >= 1 and self.repetition % 2 == 1,
             "session.repetition", "must be a positive odd integer")
        need(0.0 < self.check_fraction < 1.0, "session.check_fraction", "must lie in (0, 1)")
        need(0.0 <= self.integrity_fraction < 1.0, "session.integrity_fraction", "must lie in [0, 1)")
        for name in ("dber_threshold", "qber_threshold"):
            v = getattr(self, name)
            need(v is None or 0.0 <= v <= 1.0, f"session.{name}", "must lie in [0, 1]")
        need(isinstance(self.max_attempts, int) and self.max_attempts >= 1, "session.max_attempts", "must be >= 1")
        need(self.bootstrap_capacity_factor >= 0, "session.bootstrap_capacity_factor", "must be >= 0")
        if self.bootstrap_key is not None:
            try:
                bits = hex_to_bits(self.bootstrap_key)
            except ValueError:
                raise ConfigError("session.bootstrap_key", "must be a hex string") from None
            need(bits.size >= self.message_bits, "session.bootstrap_key", f"needs at least {self.message_bits} bits")

    @property
    def code(self) -> RepetitionCode:
        return RepetitionCode(self.repetition)

    @property
    def code_rate(self) -> float:
        return 1.0 / self.repetition

    @property
    def dber_limit(self) -> float:
        return self.params.e_d + 0.03 if self.dber_threshold is None else self.dber_threshold

    @property
    def qber_limit(self) -> float:
        return self.params.e_det + 0.03 if self.qber_threshold is None else self.qber_threshold

    def point(self) -> PerformancePoint:
        return performance_point(self.params, self.distance_km)

    def wiretap_margin(self) -> float:
        """Analytic C_s/Q minus the code rate; negative means the wiretap condition fails."""
        pt = self.point()
        cap = pt.capacity_for(self.basis, self.incum, clamp=False)
        q = pt.big_q[self.basis]
        return (cap / q if q > 0 else -math.inf) - self.code_rate


def hex_to_bits(text: str) -> np.ndarray:
    raw = bytes.fromhex(text.strip())
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))


@dataclass
class RoundReport:
    frame_index: int
    attempt: int
    key_source: str
    n_pairs: int = 0
    n_check_rounds: int = 0
    n_qubits: int = 0
    dber: dict = field(default_factory=dict)
    dber_counts: dict = field(default_factory=dict)
    qber: float = math.nan
    qber_bits: int = 0
    capacity_estimate: float = math.nan
    distilled_key_len: int = 0
    delivered: bool = False
    aborted_at: Abort = Abort.NONE
    wiretap_ok: bool = True

    def to_record(self) -> dict:
        def num(x):
            return None if isinstance(x, float) and math.isnan(x) else x

        return {
            "record": "round",
            "frame": self.frame_index,
            "attempt": self.attempt,
            "key_source": self.key_source,
            "n_pairs": self.n_pairs,
            "n_check_rounds": self.n_check_rounds,
            "n_qubits": self.n_qubits,
            "dber": {k: num(v) for k, v in self.dber.items()},
            "dber_counts": {k: list(v) for k, v in self.dber_counts.items()},
            "qber": num(self.qber),
            "qber_bits": self.qber_bits,
            "capacity_estimate": num(self.capacity_estimate),
            "distilled_key_len": self.distilled_key_len,
            "delivered": self.delivered,
            "aborted_at": self.aborted_at.value,
            "wiretap_ok": self.wiretap_ok,
        }


@dataclass
class AttemptTrace:
    """Everything one attempt put on the wire; kept only when transcripts are requested."""

    frame_index: int
    attempt: int
    frame: Frame
    log: QubitLog
    checks: CheckEvents


@dataclass
class SessionResult:
    config: SessionConfig
    seed: int
    reports: list
    sent: list
    received: list  # decoded message per frame, None when not delivered
    alice_sink: KeySink
    bob_sink: KeySink
    traces: list

    @property
    def n_frames(self) -> int:
        return len(self.sent)

    def delivered_fraction(self) -> float:
        return sum(r is not None for r in self.received) / max(1, self.n_frames)

    def undetected_errors(self) -> int:
        return sum(r is not None and not np.array_equal(r, s) for s, r in zip(self.sent, self.received))

    def pooled_dber(self) -> dict:
        out = {}
        for b in self.config.check_bases:
            wrong = sum(r.dber_counts.get(b, (0, 0))[0] for r in self.reports)
            valid = sum(r.dber_counts.get(b, (0, 0))[1] for r in self.reports)
            out[b] = (wrong / valid if valid else math.nan, valid)
        return out

    def pooled_qber(self) -> tuple[float, int]:
        bits = sum(r.qber_bits for r in self.reports if not math.isnan(r.qber))
        errs = sum(round(r.qber * r.qber_bits) for r in self.reports if not math.isnan(r.qber))
        return (errs / bits if bits else math.nan), bits

    def summary(self) -> dict:
        pt = self.config.point()
        aborts = {a.value: 0 for a in Abort}
        for r in self.reports:
            aborts[r.aborted_at.value] += 1
        dber = self.pooled_dber()
        qber, qbits = self.pooled_qber()
        qsig = math.sqrt(pt.qber * (1 - pt.qber) / qbits) if qbits else math.nan
        return {
            "frames": self.n_frames,
            "delivered": sum(r is not None for r in self.received),
            "delivered_fraction": self.delivered_fraction(),
            "attempts": len(self.reports),
            "aborts": aborts,
            "undetected_errors": self.undetected_errors(),
            "dber": {b: {"empirical": v, "coincidences": n, "analytic": pt.dber[b]} for b, (v, n) in dber.items()},
            "qber": {"empirical": qber, "bits": qbits, "analytic": pt.qber, "sigma": qsig,
                     "within_3sigma": bool(qbits and abs(qber - pt.qber) <= 3 * qsig)},
            "distilled_bits": sum(r.distilled_key_len for r in self.reports),
            "key_consumed": self.alice_sink.consumed,
            "sinks_identical": self.alice_sink == self.bob_sink,
            "sink_length": len(self.alice_sink),
            "code_rate": self.config.code_rate,
            "wiretap_margin": self.config.wiretap_margin(),
            "wiretap_ok": self.config.wiretap_margin() > 0,
            "analytic_capacity": pt.capacity_for(self.config.basis, self.config.incum),
        }


def _sample_round_counts(n_qubits: int, point: PerformancePoint, config: SessionConfig, rng) -> tuple[int, int]:
    """Step-1 bookkeeping: entangled pairs prepared and check rounds interleaved with them."""
    q_c1 = point.q_c1[config.basis]
    failures = int(rng.negative_binomial(n_qubits, q_c1)) if q_c1 < 1 else 0
    n_pairs = n_qubits + failures
    n_check = int(rng.negative_binomial(n_pairs, 1.0 - config.check_fraction))
    return n_pairs, n_check


def run_attempt(frame: Frame, key, point: PerformancePoint, config: SessionConfig, streams):
    """Steps 1-6 for one attempt at a frame.

    Returns ``(report_fields, delivery, log, checks)``; ``delivery`` is None
    when the attempt aborts.
    """
    log = transmit_frame(frame, point, streams)
    n_pairs, n_check = _sample_round_counts(len(log), point, config, streams["alice"])
    frame.n_pairs, frame.n_check_rounds = n_pairs, n_check
    checks = sample_check_coincidences(
        n_check, config.check_bases, point.eta_c, config.params, streams["charlie"], config.attack
    )
    seq = len(checks) + len(log)
    frame.check_positions = np.sort(streams["alice"].choice(seq, len(checks), replace=False))
    is_check = np.zeros(seq, dtype=bool)
    is_check[frame.check_positions] = True
    frame.message_positions = np.flatnonzero(~is_check)

    fields = {"n_pairs": n_pairs, "n_check_rounds": n_check, "n_qubits": len(log)}
    sec = security_check(checks, config.dber_limit, config.check_bases)
    fields["dber"], fields["dber_counts"] = sec.dber, sec.counts
    if not sec.passed:
        fields["aborted_at"] = Abort.SECURITY_CHECK
        return fields, None, log, checks
    fields["qber_bits"] = int(frame.integrity_positions.size)
    try:
        delivery = decode_frame(frame, log, key, config.code, config.qber_limit)
    except IntegrityFailure as exc:
        fields["qber"] = exc.qber
        fields["aborted_at"] = Abort.INTEGRITY_CHECK
        return fields, None, log, checks
    except DecodeFailure as exc:
        fields["qber"] = exc.qber
        fields["aborted_at"] = Abort.DECODE
        return fields, None, log, checks
    fields["qber"] = delivery.qber
    fields["capacity_estimate"] = estimate_capacity(point, config.basis, config.incum, delivery.qber, sec.dber[config.basis])
    fields["delivered"] = True
    return fields, delivery, log, checks


def run_session(config: SessionConfig, n_frames: int, seed: int = 0, messages=None) -> SessionResult:
    """Run ``n_frames`` frames in order; bit-for-bit reproducible from ``seed``."""
    streams = role_streams(seed)
    point = config.point()
    code = config.code
    m = config.message_bits
    if config.bootstrap_key is not None:
        bootstrap = hex_to_bits(config.bootstrap_key)[:m]
    else:
        bootstrap = streams["bootstrap"].integers(0, 2, m, dtype=np.uint8)
    prev_capacity = config.bootstrap_capacity_factor * point.capacity_for(config.basis, config.incum)
    q = point.big_q[config.basis]

    alice_sink, bob_sink = KeySink(), KeySink()
    reports, sent, received, traces = [], [], [], []
    any_delivered = False
    for fi in range(n_frames):
        msg = as_bits(messages[fi]) if messages is not None else streams["source"].integers(0, 2, m, dtype=np.uint8)
        if msg.size != m:
            raise ValueError(f"message {fi} has {msg.size} bits, expected {m}")
        sent.append(msg)
        got = None
        for attempt in range(config.max_attempts):
            source = "sink" if any_delivered else "bootstrap"
            wiretap_ok = q > 0 and code.rate < prev_capacity / q
            report = RoundReport(fi, attempt, source, wiretap_ok=wiretap_ok)
            if source == "bootstrap":
                k_alice = k_bob = bootstrap
            elif len(alice_sink) < m:
                report.aborted_at = Abort.KEY_STARVED
                reports.append(report)
                break
            else:
                k_alice, k_bob = alice_sink.peek(m), bob_sink.peek(m)
            frame = encode_frame(msg, k_alice, code, config.incum, streams["alice"], config.integrity_fraction)
            fields, delivery, log, checks = run_attempt(frame, k_bob, point, config, streams)
            report = replace(report, **fields)
            if config.record_transcript:
                traces.append(AttemptTrace(fi, attempt, frame, log, checks))
            if delivery is not None:
                if source == "sink":
                    alice_sink.pop(m)
                    bob_sink.pop(m)
                alice_keys = distill_keys(frame.ciphertext, frame.n_pairs, report.capacity_estimate)
                bob_keys = distill_keys(delivery.ciphertext, frame.n_pairs, report.capacity_estimate)
                alice_sink.push(alice_keys, len(reports))
                bob_sink.push(bob_keys, len(reports))
                report.distilled_key_len = alice_keys.size
                prev_capacity = report.capacity_estimate
                any_delivered = True
                got = delivery.message
                reports.append(report)
                break
            reports.append(report)
        received.append(got)
    return SessionResult(config, seed, reports, sent, received, alice_sink, bob_sink, traces)
