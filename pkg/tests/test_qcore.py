import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmqc.qcore import (
    BellOutcome,
    PauliOp,
    PureState,
    StateError,
    apply_pauli,
    bsm_probabilities,
    measure_probabilities,
    prepare_state,
    product_state,
    recovery_operation,
    teleport_oracle,
    teleport_probabilities,
)

S = 1 / math.sqrt(2)

# Retained-qubit state per (Bob's state, outcome), as printed in the correspondence table:
# columns psi-, psi+, phi-, phi+; each cell is (sign, label).
TABLE = {
    "0": ((-1, "0"), (1, "0"), (-1, "1"), (-1, "1")),
    "1": ((-1, "1"), (-1, "1"), (-1, "0"), (1, "0")),
    "+": ((-1, "+"), (1, "-"), (-1, "+"), (1, "-")),
    "-": ((-1, "-"), (1, "+"), (1, "-"), (-1, "+")),
}
COLUMNS = (BellOutcome.PSI_MINUS, BellOutcome.PSI_PLUS, BellOutcome.PHI_MINUS, BellOutcome.PHI_PLUS)
VECTORS = {"0": (1, 0), "1": (0, 1), "+": (S, S), "-": (S, -S)}


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(v / np.linalg.norm(v))


complex_amp = st.tuples(st.floats(-1, 1), st.floats(-1, 1))


@st.composite
def states(draw, dim=2):
    amps = np.array([complex(*draw(complex_amp)) for _ in range(dim)])
    n = np.linalg.norm(amps)
    if n < 1e-3:
        amps = np.eye(dim)[0].astype(complex)
        n = 1.0
    return PureState(amps / n)


class TestPrepare:
    def test_plus(self):
        np.testing.assert_allclose(prepare_state("+").amplitudes, [S, S], atol=1e-15)

    def test_zero(self):
        np.testing.assert_allclose(prepare_state("0").amplitudes, [1, 0])

    def test_psi_minus(self):
        np.testing.assert_allclose(prepare_state("ψ−").amplitudes, [0, S, -S, 0], atol=1e-15)
        np.testing.assert_allclose(prepare_state("psi-").amplitudes, [0, S, -S, 0], atol=1e-15)

    def test_circular(self):
        np.testing.assert_allclose(prepare_state("~+").amplitudes, [S, 1j * S], atol=1e-15)
        np.testing.assert_allclose(prepare_state("∼−").amplitudes, [S, -1j * S], atol=1e-15)

    def test_unknown_label(self):
        with pytest.raises(StateError):
            prepare_state("2")

    @pytest.mark.parametrize("amps", [[1, 0, 0], [1, 1], [0.5, 0.5, 0.5, 0.6]])
    def test_invalid_amplitudes(self, amps):
        with pytest.raises(StateError):
            PureState(np.array(amps, dtype=complex))


class TestPauli:
    def test_i_sigma_y_convention(self):
        np.testing.assert_allclose(PauliOp.I_SIGMA_Y.matrix, [[0, 1], [-1, 0]])
        out = apply_pauli(PauliOp.I_SIGMA_Y, prepare_state("0"))
        np.testing.assert_allclose(out.amplitudes, [0, -1])

    def test_identity(self):
        st_ = prepare_state("~+")
        assert np.array_equal(apply_pauli(PauliOp.I, st_).amplitudes, st_.amplitudes)

    def test_sigma_x_fixes_plus(self):
        np.testing.assert_allclose(apply_pauli(PauliOp.SIGMA_X, prepare_state("+")).amplitudes, [S, S])

    @pytest.mark.parametrize("op", list(PauliOp))
    def test_unitary(self, op):
        m = op.matrix
        assert np.max(np.abs(m.conj().T @ m - np.eye(2))) < 1e-12

    def test_target_out_of_range(self):
        with pytest.raises(StateError):
            apply_pauli(PauliOp.SIGMA_X, prepare_state("0"), target=1)
        with pytest.raises(StateError):
            apply_pauli(PauliOp.SIGMA_X, prepare_state("phi+"), target=2)

    @given(states(4), st.sampled_from(list(PauliOp)), st.integers(0, 1))
    def test_norm_preserved(self, state, op, target):
        out = apply_pauli(op, state, target)
        assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12

    def test_target_ordering(self):
        # leftmost factor is qubit 0
        out = apply_pauli(PauliOp.SIGMA_X, product_state(prepare_state("0"), prepare_state("0")), target=1)
        np.testing.assert_allclose(out.amplitudes, [0, 1, 0, 0])


class TestBsm:
    def test_psi_minus(self):
        p = bsm_probabilities(prepare_state("psi-"))
        assert p[BellOutcome.PSI_MINUS] == pytest.approx(1, abs=1e-12)
        assert sum(p.values()) == pytest.approx(1, abs=1e-12)

    def test_zero_zero(self):
        p = bsm_probabilities(product_state(prepare_state("0"), prepare_state("0")))
        assert p[BellOutcome.PHI_PLUS] == pytest.approx(0.5)
        assert p[BellOutcome.PHI_MINUS] == pytest.approx(0.5)
        assert p[BellOutcome.PSI_PLUS] == pytest.approx(0, abs=1e-15)

    def test_rejects_single_qubit(self):
        with pytest.raises(StateError):
            bsm_probabilities(prepare_state("0"))

    def test_completeness_random(self):
        rng = np.random.default_rng(5)
        worst = max(abs(sum(bsm_probabilities(random_state(rng, 4)).values()) - 1) for _ in range(1000))
        assert worst < 1e-12

    @pytest.mark.parametrize("bob", ["0", "1", "+", "-"])
    def test_teleport_uniform(self, bob):
        for p in teleport_probabilities(bob).values():
            assert p == pytest.approx(0.25, abs=1e-12)

    def test_measure(self):
        assert measure_probabilities(prepare_state("+"), "X") == pytest.approx((1, 0))
        assert measure_probabilities(prepare_state("+"), "Z") == pytest.approx((0.5, 0.5))


class TestTeleportOracle:
    @pytest.mark.parametrize("bob", list(TABLE))
    @pytest.mark.parametrize("col", range(4))
    def test_table_cell(self, bob, col):
        sign, label = TABLE[bob][col]
        res = teleport_oracle(bob, COLUMNS[col])
        expected = sign * np.array(VECTORS[label])
        assert abs(abs(np.vdot(expected, res.state.amplitudes)) - 1) < 1e-12
        assert np.max(np.abs(res.state.amplitudes - expected)) < 1e-12
        assert res.label == label
        assert res.phase == pytest.approx(sign, abs=1e-12)

    def test_caption_example(self):
        res = teleport_oracle("0", BellOutcome.PSI_PLUS)
        np.testing.assert_allclose(res.state.amplitudes, [1, 0], atol=1e-12)

    def test_rejects_circular(self):
        with pytest.raises(StateError):
            teleport_oracle("~+", BellOutcome.PSI_MINUS)


class TestRecovery:
    def test_phi_z(self):
        assert recovery_operation(BellOutcome.PHI_MINUS, "Z") is PauliOp.I_SIGMA_Y
        assert recovery_operation(BellOutcome.PHI_PLUS, "Z") is PauliOp.I_SIGMA_Y

    def test_psi_minus_z(self):
        assert recovery_operation(BellOutcome.PSI_MINUS, "Z") is PauliOp.I

    def test_full_table(self):
        # brute force over {I, i sigma_y} against the table above
        for basis, labels in (("Z", "01"), ("X", "+-")):
            for col, outcome in enumerate(COLUMNS):
                chosen = None
                for op in (PauliOp.I, PauliOp.I_SIGMA_Y):
                    ok = all(
                        abs(abs(np.vdot(VECTORS[b], op.matrix @ (TABLE[b][col][0] * np.array(VECTORS[TABLE[b][col][1]])))) - 1) < 1e-12
                        for b in labels
                    )
                    if ok:
                        chosen = op
                        break
                assert recovery_operation(outcome, basis) is chosen

    def test_soundness(self):
        for basis, labels in (("Z", "01"), ("X", "+-")):
            for outcome in BellOutcome:
                op = recovery_operation(outcome, basis)
                for lbl in labels:
                    out = apply_pauli(op, teleport_oracle(lbl, outcome).state)
                    assert out.equals_up_to_phase(prepare_state(lbl))

    def test_y_basis_rejected(self):
        with pytest.raises(StateError):
            recovery_operation(BellOutcome.PSI_MINUS, "Y")
