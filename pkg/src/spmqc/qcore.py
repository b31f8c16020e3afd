"""Exact state-vector algebra for one and two qubits.

Qubit ordering in tensor products: the leftmost factor is qubit 0, so the
two-qubit basis is ordered |00>, |01>, |10>, |11>.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

NORM_TOL = 1e-12
_S = 1.0 / np.sqrt(2.0)


class StateError(ValueError):
    """Invalid state, label or qubit index."""


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).copy()
        if amps.ndim != 1 or amps.size not in (2, 4):
            raise StateError(f"state must have 2 or 4 amplitudes, got shape {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return 1 if self.amplitudes.size == 2 else 2

    def overlap(self, other: "PureState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def equals_up_to_phase(self, other: "PureState", tol: float = NORM_TOL) -> bool:
        if self.amplitudes.size != other.amplitudes.size:
            return False
        return abs(abs(self.overlap(other)) - 1.0) <= tol


class PauliOp(enum.Enum):
    I = "I"
    SIGMA_X = "X"
    I_SIGMA_Y = "iY"
    SIGMA_Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        return _PAULI_MATRICES[self].copy()


# i*sigma_y fixed as [[0, 1], [-1, 0]]
_PAULI_MATRICES = {
    PauliOp.I: np.eye(2, dtype=complex),
    PauliOp.SIGMA_X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliOp.I_SIGMA_Y: np.array([[0, 1], [-1, 0]], dtype=complex),
    PauliOp.SIGMA_Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


class BellOutcome(enum.Enum):
    PSI_MINUS = "psi-"
    PSI_PLUS = "psi+"
    PHI_MINUS = "phi-"
    PHI_PLUS = "phi+"

    @property
    def state(self) -> PureState:
        return prepare_state(self.value)


_SINGLE = {
    "0": (1, 0),
    "1": (0, 1),
    "+": (_S, _S),
    "-": (_S, -_S),
    "~+": (_S, 1j * _S),
    "~-": (_S, -1j * _S),
}
_BELL = {
    "phi+": (_S, 0, 0, _S),
    "phi-": (_S, 0, 0, -_S),
    "psi+": (0, _S, _S, 0),
    "psi-": (0, _S, -_S, 0),
}
SINGLE_LABELS = tuple(_SINGLE)
BELL_LABELS = tuple(_BELL)

# Eigenstates per basis, ordered (bit 0, bit 1).
BASIS_STATES = {"Z": ("0", "1"), "X": ("+", "-"), "Y": ("~+", "~-")}


def normalize_label(label: str) -> str:
    """Map typographic variants (unicode minus, tilde, Greek letters) to ASCII labels."""
    text = str(label).strip()
    for src, dst in (("−", "-"), ("∼", "~"), ("ψ", "psi"), ("φ", "phi"), ("|", ""), ("⟩", ""), (">", "")):
        text = text.replace(src, dst)
    return text.lower()


def prepare_state(label: str) -> PureState:
    """Return the exact amplitude vector for one of the ten named states."""
    key = normalize_label(label)
    if key in _SINGLE:
        return PureState(np.array(_SINGLE[key], dtype=complex))
    if key in _BELL:
        return PureState(np.array(_BELL[key], dtype=complex))
    raise StateError(f"unknown state label {label!r}")


def product_state(first: PureState, second: PureState) -> PureState:
    if first.n_qubits != 1 or second.n_qubits != 1:
        raise StateError("product_state takes two single-qubit states")
    return PureState(np.kron(first.amplitudes, second.amplitudes))


def apply_pauli(op: PauliOp, state: PureState, target: int = 0) -> PureState:
    """Apply ``op`` to qubit ``target`` of a one- or two-qubit state."""
    n = state.n_qubits
    if not 0 <= target < n:
        raise StateError(f"target {target} out of range for {n}-qubit state")
    m = _PAULI_MATRICES[op]
    if n == 2:
        m = np.kron(m, np.eye(2)) if target == 0 else np.kron(np.eye(2), m)
    return PureState(m @ state.amplitudes)


def bsm_probabilities(joint: PureState) -> dict[BellOutcome, float]:
    """Born probabilities of the four Bell projectors on a two-qubit state."""
    if joint.n_qubits != 2:
        raise StateError("Bell-state measurement needs a two-qubit state")
    return {k: abs(k.state.overlap(joint)) ** 2 for k in BellOutcome}


def measure_probabilities(state: PureState, basis: str) -> tuple[float, float]:
    """Probabilities of reading bit 0 / bit 1 when measuring a qubit in ``basis``."""
    if state.n_qubits != 1:
        raise StateError("single-qubit measurement only")
    zero, one = (prepare_state(lbl) for lbl in BASIS_STATES[basis])
    return abs(zero.overlap(state)) ** 2, abs(one.overlap(state)) ** 2


# ---------------------------------------------------------------------------
# Teleportation oracle: Alice holds |psi-> on (retained, sent); Bob's qubit is
# joined as the third factor and Charlie projects (sent, Bob) onto a Bell state.


class TeleportResult(NamedTuple):
    state: PureState
    label: str
    phase: complex


def _three_qubit_input(bob_initial: str) -> np.ndarray:
    pair = prepare_state("psi-").amplitudes
    bob = prepare_state(bob_initial).amplitudes
    return np.kron(pair, bob)


def _project_charlie(joint3: np.ndarray, outcome: BellOutcome) -> np.ndarray:
    """Unnormalized retained-qubit amplitude after projecting qubits 1, 2 onto ``outcome``."""
    projector = np.kron(np.eye(2), np.outer(outcome.state.amplitudes, outcome.state.amplitudes.conj()))
    post = (projector @ joint3).reshape(2, 4)
    # post[a, :] is proportional to the Bell vector for every a; read the coefficient.
    return post @ outcome.state.amplitudes.conj()


def teleport_probabilities(bob_initial: str) -> dict[BellOutcome, float]:
    joint3 = _three_qubit_input(bob_initial)
    return {k: float(np.vdot(v := _project_charlie(joint3, k), v).real) for k in BellOutcome}


def teleport_oracle(bob_initial: str, outcome: BellOutcome) -> TeleportResult:
    """Post-measurement state of Alice's retained qubit, with its global phase.

    ``state`` equals ``phase * prepare_state(label)`` where ``label`` is the
    single-qubit eigenstate the retained qubit collapsed onto.
    """
    key = normalize_label(bob_initial)
    if key not in ("0", "1", "+", "-"):
        raise StateError(f"Bob's initial state must be one of 0, 1, +, -; got {bob_initial!r}")
    amp = _project_charlie(_three_qubit_input(key), outcome)
    state = PureState(amp / np.linalg.norm(amp))
    for label in SINGLE_LABELS:
        ref = prepare_state(label)
        phase = ref.overlap(state)
        if abs(abs(phase) - 1.0) <= 1e-12:
            return TeleportResult(state, label, phase)
    raise AssertionError("retained qubit is not a named eigenstate")  # pragma: no cover


@lru_cache(maxsize=None)
def _recovery_table() -> dict[tuple[BellOutcome, str], PauliOp]:
    table = {}
    for basis in ("Z", "X"):
        for outcome in BellOutcome:
            for op in (PauliOp.I, PauliOp.I_SIGMA_Y):
                if all(
                    apply_pauli(op, teleport_oracle(lbl, outcome).state).equals_up_to_phase(prepare_state(lbl))
                    for lbl in BASIS_STATES[basis]
                ):
                    table[(outcome, basis)] = op
                    break
            else:  # pragma: no cover
                raise AssertionError(f"no recovery for {outcome} in basis {basis}")
    return table


def recovery_operation(outcome: BellOutcome, basis: str) -> PauliOp:
    """The U_T in {I, i sigma_y} that turns Alice's retained qubit into Bob's initial state."""
    basis = basis.upper()
    if basis not in ("Z", "X"):
        raise StateError(f"recovery basis must be Z or X, got {basis!r}")
    return _recovery_table()[(outcome, basis)]
