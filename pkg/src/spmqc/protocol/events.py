"""Event-level sampling for check rounds, entangled rounds and Step-5 clicks."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import detection
from ..channel import PAIRS, Basis, ChannelParams, click_prob, is_wrong_click
from ..qcore import (
    BASIS_STATES,
    BellOutcome,
    PauliOp,
    apply_pauli,
    measure_probabilities,
    recovery_operation,
    teleport_oracle,
)
from . import kernels

# Label index = 2 * basis code + bit.
LABELS = ("H", "V", "+", "-", "~+", "~-")
BASIS_CODE = {Basis.Z: 0, Basis.X: 1, Basis.Y: 2}
CODE_BASIS = {v: k for k, v in BASIS_CODE.items()}
BELL_ORDER = tuple(BellOutcome)  # index order used in the arrays below
NO_CLICK = -1


class RoundKind(str, enum.Enum):
    ENTANGLED = "entangled"
    CHECK = "check"


@dataclass(frozen=True)
class InterceptResend:
    """Eve measures Alice's check photon in a basis drawn from ``eve_bases`` and resends the result.

    ``fraction`` is the share of check rounds attacked. With
    ``eve_bases=("Z", "X")`` this is the textbook intercept-resend; a single
    basis is the fixed-basis variant.
    """

    fraction: float = 1.0
    eve_bases: tuple = ("Z", "X")

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"attack fraction must lie in [0, 1], got {self.fraction}")
        bases = tuple(Basis.parse(b).value for b in self.eve_bases)
        if not bases:
            raise ValueError("eve_bases must not be empty")
        object.__setattr__(self, "eve_bases", bases)


# -- click distributions -----------------------------------------------------------


def check_distribution(a: int, b: int, eta_c: float, p_d: float) -> np.ndarray:
    """P(coincidence on each pair in S) for labels a, b, then P(no valid coincidence)."""
    la, lb = LABELS[a], LABELS[b]
    if a // 2 == b // 2:
        probs = np.array([click_prob(pr, la, lb, eta_c, p_d) for pr in PAIRS])
        return np.append(probs, 1.0 - probs.sum())
    return detection.click_distribution(la, lb, eta_c, p_d)


def attacked_distribution(a: int, b: int, eta_c: float, p_d: float, attack: InterceptResend) -> np.ndarray:
    """Click distribution once Eve has replaced Alice's photon by her measurement result."""
    alice = detection.POLARIZATIONS[LABELS[a]]
    out = np.zeros(len(PAIRS) + 1)
    for eb in attack.eve_bases:
        code = BASIS_CODE[Basis(eb)]
        for r in (2 * code, 2 * code + 1):
            weight = abs(np.vdot(detection.POLARIZATIONS[LABELS[r]], alice)) ** 2
            if weight > 0:
                out += weight * check_distribution(r, b, eta_c, p_d)
    return out / len(attack.eve_bases)


@lru_cache(maxsize=256)
def _check_tables(eta_c: float, p_d: float, attack: InterceptResend | None):
    n = len(LABELS)
    probs = np.zeros((2 * n * n, len(PAIRS) + 1))
    for a in range(n):
        for b in range(n):
            probs[a * n + b] = check_distribution(a, b, eta_c, p_d)
            if attack is not None:
                probs[n * n + a * n + b] = attacked_distribution(a, b, eta_c, p_d, attack)
    probs = np.clip(probs, 0.0, None)
    cum = np.cumsum(probs, axis=1)
    total = cum[:, -1:]
    cum = np.divide(cum, total, out=np.ones_like(cum), where=total > 0)  # unused attack rows stay inert
    return probs, cum


@lru_cache(maxsize=None)
def _wrong_table() -> np.ndarray:
    """wrong[a, b, k]: coincidence on PAIRS[k] counts as an error for prepared labels a, b."""
    n = len(LABELS)
    table = np.zeros((n, n, len(PAIRS)), dtype=bool)
    for a in range(n):
        for b in range(n):
            if a // 2 != b // 2:
                continue
            basis = CODE_BASIS[a // 2]
            for k, pr in enumerate(PAIRS):
                table[a, b, k] = is_wrong_click(basis, a == b, pr)
    return table


def pair_outcome(pair_index: int) -> BellOutcome | None:
    if pair_index < 0:
        return None
    return BellOutcome.PSI_MINUS if pair_index < 2 else BellOutcome.PSI_PLUS


# -- check rounds ----------------------------------------------------------------------


@dataclass
class CheckEvents:
    """Columnar record of check rounds. ``pair`` is an index into PAIRS or -1."""

    basis: np.ndarray
    alice: np.ndarray
    bob: np.ndarray
    pair: np.ndarray
    wrong: np.ndarray
    attacked: np.ndarray

    def __len__(self):
        return self.pair.size

    @property
    def valid(self) -> np.ndarray:
        return self.pair >= 0

    def subset(self, mask) -> "CheckEvents":
        return CheckEvents(**{k: getattr(self, k)[mask] for k in self.__dataclass_fields__})

    def counts(self, basis) -> tuple[int, int]:
        """(wrong, valid) coincidence counts for one basis."""
        sel = self.valid & (self.basis == BASIS_CODE[Basis.parse(basis)])
        return int(self.wrong[sel].sum()), int(sel.sum())

    @staticmethod
    def concatenate(parts) -> "CheckEvents":
        parts = list(parts)
        return CheckEvents(
            **{k: np.concatenate([getattr(p, k) for p in parts]) for k in CheckEvents.__dataclass_fields__}
        )


def _basis_codes(bases) -> np.ndarray:
    return np.array([BASIS_CODE[Basis.parse(b)] for b in bases], dtype=np.int8)


def _finish_events(basis, alice, bob, pair, attacked, e_d, rng) -> CheckEvents:
    valid = pair >= 0
    raw = np.zeros(pair.size, dtype=bool)
    raw[valid] = _wrong_table()[alice[valid], bob[valid], pair[valid]]
    flip = rng.random(pair.size) < e_d  # polarization misalignment
    wrong = (raw ^ flip) & valid
    return CheckEvents(basis, alice, bob, pair, wrong, attacked)


def sample_check_events(n: int, bases, eta_c: float, params: ChannelParams, rng, attack=None) -> CheckEvents:
    """Simulate ``n`` check rounds one by one (no-click rounds included).

    Alice and Bob pick the same basis uniformly from ``bases`` and each a
    random eigenstate of it.
    """
    codes = _basis_codes(bases)
    basis = codes[rng.integers(0, codes.size, n)]
    alice = (2 * basis + rng.integers(0, 2, n)).astype(np.int8)
    bob = (2 * basis + rng.integers(0, 2, n)).astype(np.int8)
    if attack is not None:
        attacked = rng.random(n) < attack.fraction
    else:
        attacked = np.zeros(n, dtype=bool)
    _, cum = _check_tables(float(eta_c), float(params.p_d), attack)
    nl = len(LABELS)
    rows = alice.astype(np.int64) * nl + bob + attacked * (nl * nl)
    cat = kernels.sample_categories(rows, cum, rng.random(n))
    pair = np.where(cat >= len(PAIRS), NO_CLICK, cat).astype(np.int8)
    return _finish_events(basis, alice, bob, pair, attacked, params.e_d, rng)


def sample_check_coincidences(n_rounds: int, bases, eta_c: float, params: ChannelParams, rng, attack=None) -> CheckEvents:
    """Same distribution as :func:`sample_check_events` restricted to valid coincidences.

    Counts per (basis, labels, attacked) group and per detector pair are drawn
    as multinomials, so the cost scales with the number of coincidences
    rather than with ``n_rounds``.
    """
    codes = _basis_codes(bases)
    probs, _ = _check_tables(float(eta_c), float(params.p_d), attack)
    f = 0.0 if attack is None else attack.fraction
    groups, weights = [], []
    for code in codes:
        for ba in range(2):
            for bb in range(2):
                for hit, w in ((False, 1.0 - f), (True, f)):
                    if w > 0:
                        groups.append((code, 2 * code + ba, 2 * code + bb, hit))
                        weights.append(w / (4 * codes.size))
    counts = rng.multinomial(n_rounds, weights)
    nl = len(LABELS)
    cols = {k: [] for k in ("basis", "alice", "bob", "pair", "attacked")}
    for (code, a, b, hit), c in zip(groups, counts):
        if c == 0:
            continue
        row = probs[a * nl + b + (nl * nl if hit else 0)]
        per_pair = rng.multinomial(c, row / row.sum())[: len(PAIRS)]
        total = int(per_pair.sum())
        if total == 0:
            continue
        cols["basis"].append(np.full(total, code, dtype=np.int8))
        cols["alice"].append(np.full(total, a, dtype=np.int8))
        cols["bob"].append(np.full(total, b, dtype=np.int8))
        cols["pair"].append(np.repeat(np.arange(len(PAIRS), dtype=np.int8), per_pair))
        cols["attacked"].append(np.full(total, hit, dtype=bool))
    if not cols["pair"]:
        empty = {k: np.zeros(0, dtype=bool if k == "attacked" else np.int8) for k in cols}
        return _finish_events(**empty, e_d=params.e_d, rng=rng)
    arrays = {k: np.concatenate(v) for k, v in cols.items()}
    return _finish_events(**arrays, e_d=params.e_d, rng=rng)


def expected_dber(basis, eta_c: float, params: ChannelParams, attack=None) -> float:
    """Exact expectation of the empirical DBER by enumerating labels and click patterns."""
    code = BASIS_CODE[Basis.parse(basis)]
    probs, _ = _check_tables(float(eta_c), float(params.p_d), attack)
    f = 0.0 if attack is None else attack.fraction
    nl = len(LABELS)
    wrong = valid = 0.0
    for a in (2 * code, 2 * code + 1):
        for b in (2 * code, 2 * code + 1):
            row = (1 - f) * probs[a * nl + b] + f * probs[nl * nl + a * nl + b]
            for k in range(len(PAIRS)):
                valid += row[k]
                if _wrong_table()[a, b, k]:
                    wrong += row[k]
    raw = wrong / valid
    return params.e_d * (1 - 2 * raw) + raw


# -- entangled rounds and Step 5 --------------------------------------------------------


@lru_cache(maxsize=None)
def step5_tables():
    """Lookup tables from exact state algebra, indexed [basis (0=Z, 1=X), bob_bit, outcome, mapped_bit].

    Returns ``(recovery, measured)``: recovery[...] is 1 when U_T = i sigma_y,
    measured[...] is Charlie's noiseless result in Bob's basis.
    """
    recovery = np.zeros((2, 2, 4), dtype=np.uint8)
    measured = np.zeros((2, 2, 4, 2), dtype=np.uint8)
    for bi, basis in enumerate(("Z", "X")):
        for bit, label in enumerate(BASIS_STATES[basis]):
            for oi, outcome in enumerate(BELL_ORDER):
                op = recovery_operation(outcome, basis)
                recovery[bi, bit, oi] = op is PauliOp.I_SIGMA_Y
                restored = apply_pauli(op, teleport_oracle(label, outcome).state)
                for mapped in (0, 1):
                    state = apply_pauli(PauliOp.I_SIGMA_Y, restored) if mapped else restored
                    p0, p1 = measure_probabilities(state, basis)
                    if min(p0, p1) > 1e-12:  # pragma: no cover
                        raise AssertionError("encoded qubit is not an eigenstate of Bob's basis")
                    measured[bi, bit, oi, mapped] = int(p1 > 0.5)
    return recovery, measured


def sample_entangled_bsm(n: int, q_c1: float, rng) -> np.ndarray:
    """Bell outcome index per entangled round, or -1 when Charlie's BSM fails."""
    success = rng.random(n) < q_c1
    outcome = rng.integers(0, 4, n).astype(np.int8)
    return np.where(success, outcome, NO_CLICK).astype(np.int8)


@dataclass
class Step5Sample:
    valid: np.ndarray
    error: np.ndarray  # meaningful where valid


def sample_step5(n: int, eta_c: float, params: ChannelParams, rng) -> Step5Sample:
    """Independent Step-5 transmissions of message qubits; errors relative to the ideal result."""
    q_c2 = eta_c + (1.0 - eta_c) * params.p_d
    valid = rng.random(n) < q_c2
    k = int(valid.sum())
    _, err = kernels.resolve_clicks(
        np.zeros(k, dtype=np.uint8), rng.random(k), rng.random(k), eta_c / q_c2, params.e_det, params.e0
    )
    error = np.zeros(n, dtype=bool)
    error[valid] = err
    return Step5Sample(valid, error)


# -- scalar convenience ------------------------------------------------------------------


@dataclass(frozen=True)
class SimEvent:
    kind: RoundKind
    alice_state: str
    bob_state: str


def sample_bsm(event: SimEvent, eta_c: float, params: ChannelParams, rng, q_c1: float | None = None):
    """One round's BSM announcement: a BellOutcome, or None for no valid coincidence."""
    if event.kind is RoundKind.ENTANGLED:
        if q_c1 is None:
            raise ValueError("entangled rounds need the Step-2 click rate q_c1")
        idx = int(sample_entangled_bsm(1, q_c1, rng)[0])
        return None if idx < 0 else BELL_ORDER[idx]
    a, b = LABELS.index(event.alice_state), LABELS.index(event.bob_state)
    row = check_distribution(a, b, eta_c, params.p_d)
    k = int(np.searchsorted(np.cumsum(row), rng.random(), side="right"))
    return pair_outcome(k if k < len(PAIRS) else NO_CLICK)
