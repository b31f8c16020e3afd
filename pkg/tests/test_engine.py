import dataclasses
import math

import numpy as np
import pytest

from spmqc.channel import DEFAULT_CHANNEL, performance_point
from spmqc.protocol.coding import CRC_BITS, RepetitionCode, attach_crc
from spmqc.protocol.engine import (
    Abort,
    ConfigError,
    DecodeFailure,
    IntegrityFailure,
    SessionConfig,
    decode_frame,
    distill_keys,
    encode_frame,
    estimate_capacity,
    integrity_qber,
    role_streams,
    run_session,
    transmit_frame,
)
from spmqc.protocol.events import InterceptResend

NOISELESS = DEFAULT_CHANNEL.with_(p_d=0.0, e_d=0.0, e_det=0.0)


def frame_and_log(message, key, params=DEFAULT_CHANNEL, d=20.0, incum=True, seed=0, code=RepetitionCode(3)):
    streams = role_streams(seed)
    pt = performance_point(params, d)
    frame = encode_frame(message, key, code, incum, streams["alice"])
    return frame, transmit_frame(frame, pt, streams), pt


class TestEncode:
    def test_all_zero_frame(self):
        rng = np.random.default_rng(0)
        m = np.zeros(16, dtype=np.uint8)
        f = encode_frame(m, m, RepetitionCode(3), False, rng)
        assert not f.ciphertext.any()
        body = f.codeword[: 3 * m.size]
        assert not body.any()
        ops = np.array(f.operations)
        assert set(ops[f.code_positions[: body.size]]) == {"I"}
        assert f.mask is None and not f.incum

    def test_one_time_pad_and_mask(self):
        rng = np.random.default_rng(1)
        m, k = rng.integers(0, 2, 64, dtype=np.uint8), rng.integers(0, 2, 64, dtype=np.uint8)
        f = encode_frame(m, k, RepetitionCode(3), True, rng)
        assert np.array_equal(f.ciphertext, m ^ k)
        assert np.array_equal(f.payload, attach_crc(f.ciphertext))
        assert np.array_equal(f.masked ^ f.mask, f.slot_bits)
        assert np.array_equal(f.slot_bits[f.code_positions], f.codeword)
        assert f.codeword.size == 3 * (64 + CRC_BITS)
        assert f.integrity_positions.size == math.ceil(0.1 * f.codeword.size)

    def test_short_key(self):
        with pytest.raises(ValueError):
            encode_frame([0, 1, 1], [1], RepetitionCode(3), False, np.random.default_rng(0))


class TestDecode:
    @pytest.mark.parametrize("incum", [False, True])
    def test_noiseless_roundtrip(self, incum):
        rng = np.random.default_rng(2)
        m, k = rng.integers(0, 2, 64, dtype=np.uint8), rng.integers(0, 2, 64, dtype=np.uint8)
        frame, log, _ = frame_and_log(m, k, NOISELESS, incum=incum)
        out = decode_frame(frame, log, k, RepetitionCode(3), 0.05)
        assert np.array_equal(out.message, m) and out.qber == 0.0

    def test_tampered_check_bits(self):
        m = np.ones(32, dtype=np.uint8)
        frame, log, _ = frame_and_log(m, m, NOISELESS, incum=False)
        hit = np.isin(log.slot, frame.integrity_positions) & log.valid
        log.result[hit] ^= 1
        assert integrity_qber(frame, log) == pytest.approx(1.0)
        with pytest.raises(IntegrityFailure):
            decode_frame(frame, log, m, RepetitionCode(3), 0.05)

    def test_uncorrectable_frame_is_detected(self):
        m = np.zeros(32, dtype=np.uint8)
        frame, log, _ = frame_and_log(m, m, NOISELESS, incum=False)
        code_slots = frame.code_positions[:6]  # two full repetition blocks
        log.result[np.isin(log.slot, code_slots) & log.valid] ^= 1
        with pytest.raises(DecodeFailure):
            decode_frame(frame, log, m, RepetitionCode(3), 0.05)

    def test_masks_revealed_only_for_valid_qubits(self):
        m = np.zeros(64, dtype=np.uint8)
        frame, log, _ = frame_and_log(m, m, DEFAULT_CHANNEL, d=40.0)
        assert (~log.valid).sum() > 0
        try:
            decode_frame(frame, log, m, RepetitionCode(3), 1.0)
        except DecodeFailure:
            pass  # masks are announced before decoding either way
        assert np.array_equal(log.mask_announced, log.valid)


class TestDistill:
    def test_empty_cases(self):
        c = np.ones(64, dtype=np.uint8)
        assert distill_keys(c, 1000, 0.0).size == 0
        assert distill_keys(c, 1000, -0.1).size == 0
        assert distill_keys(c, 1000, 0.5, delivered=False).size == 0

    def test_noiseless_count(self):
        pt = performance_point(NOISELESS, 10.0)
        cap = estimate_capacity(pt, "X", False, 0.0, 0.0)
        assert cap == pytest.approx(pt.big_q["X"])
        c = np.random.default_rng(0).integers(0, 2, 5000, dtype=np.uint8)
        keys = distill_keys(c, 1000, cap)
        assert keys.size == math.floor(1000 * pt.big_q["X"])
        assert np.array_equal(keys, c[: keys.size])

    def test_capped_by_frame(self):
        assert distill_keys(np.ones(8, dtype=np.uint8), 10**6, 0.5).size == 8


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs,path",
        [
            ({"repetition": 2}, "session.repetition"),
            ({"basis": "W"}, "session.basis"),
            ({"check_fraction": 1.0}, "session.check_fraction"),
            ({"bootstrap_key": "zz"}, "session.bootstrap_key"),
            ({"bootstrap_key": "ff"}, "session.bootstrap_key"),
            ({"check_bases": ("X", "Z"), "basis": "Y"}, "session.basis"),
            ({"distance_km": -1}, "session.distance_km"),
        ],
    )
    def test_errors_name_field(self, kwargs, path):
        with pytest.raises(ConfigError) as exc:
            SessionConfig(**kwargs)
        assert exc.value.path == path

    def test_wiretap_margin(self):
        assert SessionConfig(distance_km=20).wiretap_margin() > 0
        assert SessionConfig(distance_km=30, incum=False, repetition=1).wiretap_margin() < 0


@pytest.fixture(scope="module")
def session_d20():
    cfg = SessionConfig(distance_km=20.0, record_transcript=True)
    return run_session(cfg, 100, seed=11)


class TestSession:
    def test_deterministic(self, session_d20):
        again = run_session(session_d20.config, 100, seed=11)
        assert [r.to_record() for r in again.reports] == [r.to_record() for r in session_d20.reports]
        assert again.alice_sink == session_d20.alice_sink

    def test_sinks_identical(self, session_d20):
        assert session_d20.alice_sink == session_d20.bob_sink
        assert np.array_equal(session_d20.alice_sink.bits(), session_d20.bob_sink.bits())

    def test_bootstrap_first_round(self):
        key = "0123456789abcdef"
        cfg = SessionConfig(distance_km=20.0, bootstrap_key=key, record_transcript=True)
        res = run_session(cfg, 2, seed=3)
        first = res.reports[0]
        assert first.key_source == "bootstrap" and first.delivered
        bits = np.unpackbits(np.frombuffer(bytes.fromhex(key), dtype=np.uint8))
        assert np.array_equal(res.traces[0].frame.key, bits)
        assert res.reports[-1].key_source == "sink"

    def test_check_positions_disjoint(self, session_d20):
        for t in session_d20.traces:
            f = t.frame
            assert np.intersect1d(f.check_positions, f.message_positions).size == 0
            assert f.check_positions.size + f.message_positions.size == len(t.checks) + len(t.log)

    def test_masking_soundness(self, session_d20):
        for t in session_d20.traces:
            assert not (t.log.mask_announced & ~t.log.valid).any()

    def test_reports_consistent(self, session_d20):
        for r in session_d20.reports:
            if not r.delivered:
                assert r.distilled_key_len == 0 and r.aborted_at is not Abort.NONE

    def test_messages_argument(self):
        msgs = [np.ones(64, dtype=np.uint8), np.zeros(64, dtype=np.uint8)]
        res = run_session(SessionConfig(), 2, seed=0, messages=msgs)
        assert all(np.array_equal(a, b) for a, b in zip(res.received, msgs))
        with pytest.raises(ValueError):
            run_session(SessionConfig(), 1, messages=[np.ones(3, dtype=np.uint8)])

    def test_qber_tracks_model_at_30km(self):
        res = run_session(SessionConfig(distance_km=30.0), 1000, seed=5)
        s = res.summary()
        assert s["delivered_fraction"] >= 0.99
        assert s["undetected_errors"] == 0
        assert s["qber"]["within_3sigma"]

    def test_key_starvation_without_capacity(self):
        # past the no-masking cutoff nothing is distilled, so the second frame has no key
        cfg = SessionConfig(distance_km=36.0, incum=False, qber_threshold=0.2)
        res = run_session(cfg, 2, seed=0)
        assert res.reports[0].delivered and res.reports[0].distilled_key_len == 0
        assert res.reports[-1].aborted_at is Abort.KEY_STARVED
        assert res.received[1] is None


class TestAbortSafety:
    def test_attack_aborts_without_spending_key(self):
        cfg = SessionConfig(distance_km=10.0, attack=InterceptResend(), record_transcript=True, max_attempts=2)
        res = run_session(cfg, 3, seed=2)
        assert all(r.aborted_at is Abort.SECURITY_CHECK for r in res.reports)
        assert res.alice_sink.consumed == 0 and len(res.alice_sink) == 0
        assert all(r is None for r in res.received)
        for t in res.traces:
            assert not t.log.mask_announced.any()
        assert len(res.reports) == 3 * 2

    def test_retry_after_abort_delivers(self):
        # thresholds tight enough that some attempts abort, then later attempts succeed
        cfg = SessionConfig(distance_km=20.0, qber_threshold=0.02, max_attempts=5)
        res = run_session(cfg, 40, seed=1)
        aborted = [r for r in res.reports if r.aborted_at is Abort.INTEGRITY_CHECK]
        assert aborted and res.delivered_fraction() > 0.9
        assert res.alice_sink == res.bob_sink
