"""Line-delimited JSON export of a session.

Record types, one JSON object per line, distinguished by ``"record"``:

``header``
    ``seed``, ``config`` (same layout as the config file), ``schema``.
``round``
    One per frame attempt; fields of :class:`RoundReport`.
``qubit``
    One per qubit with a valid Step-2 announcement, in transmission order
    within the attempt: ``frame``, ``attempt``, ``seq``, ``kind``
    (``"message"`` or ``"check"``), ``alice_state``, ``bob_state``, ``bsm``
    and, for message qubits, ``slot``, ``recovery``, ``encoding``, ``mask``,
    ``mask_announced``, ``valid``, ``step5``; for check qubits ``pair``,
    ``wrong`` and ``attacked``.
``summary``
    The dict from :meth:`SessionResult.summary`.
"""

from __future__ import annotations

import json
import math

import numpy as np

from ..qcore import BellOutcome
from .events import LABELS, PAIRS, pair_outcome

SCHEMA_VERSION = 1
_BOB_LABELS = (("0", "1"), ("+", "-"))
_BELL = tuple(BellOutcome)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if math.isnan(f) or math.isinf(f) else f
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def qubit_records(trace):
    frame, log, checks = trace.frame, trace.log, trace.checks
    seq_len = len(log) + len(checks)
    kinds = np.zeros(seq_len, dtype=bool)
    kinds[frame.check_positions] = True
    msg_iter = iter(range(len(log)))
    chk_iter = iter(range(len(checks)))
    for seq in range(seq_len):
        base = {"record": "qubit", "frame": trace.frame_index, "attempt": trace.attempt, "seq": seq}
        if kinds[seq]:
            i = next(chk_iter)
            p = int(checks.pair[i])
            yield {
                **base,
                "kind": "check",
                "alice_state": LABELS[checks.alice[i]],
                "bob_state": LABELS[checks.bob[i]],
                "bsm": pair_outcome(p).value,
                "pair": list(PAIRS[p]),
                "wrong": bool(checks.wrong[i]),
                "attacked": bool(checks.attacked[i]),
            }
        else:
            i = next(msg_iter)
            valid = bool(log.valid[i])
            yield {
                **base,
                "kind": "message",
                "alice_state": "psi-",
                "bob_state": _BOB_LABELS[log.bob_basis[i]][log.bob_bit[i]],
                "bsm": _BELL[log.bell[i]].value,
                "slot": int(log.slot[i]),
                "recovery": "iY" if log.recovery[i] else "I",
                "encoding": "iY" if log.mapped[i] else "I",
                "mask": int(log.mask[i]) if frame.incum else None,
                "mask_announced": bool(log.mask_announced[i]),
                "valid": valid,
                "step5": int(log.result[i]) if valid else None,
            }


def session_records(result):
    cfg = result.config
    from ..config import config_to_dict  # local import: config depends on engine

    yield {"record": "header", "schema": SCHEMA_VERSION, "seed": result.seed, "config": config_to_dict(cfg)}
    traces = {(t.frame_index, t.attempt): t for t in result.traces}
    for report in result.reports:
        yield report.to_record()
        trace = traces.get((report.frame_index, report.attempt))
        if trace is not None:
            yield from qubit_records(trace)
    yield {"record": "summary", **result.summary()}


def write_transcript(result, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in session_records(result):
            fh.write(json.dumps(_clean(rec), separators=(",", ":")) + "\n")


def read_transcript(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
