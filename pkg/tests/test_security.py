import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmqc.channel import ModelError, binary_entropy
from spmqc.security import (
    delta_constraint_epsilon,
    eigenvalues,
    ensemble_entropy,
    ensemble_vectors,
    gram_from_deltas,
    gram_matrix,
    holevo_bound,
)


def jacobi_eigenvalues(a, sweeps=100):
    """Cyclic Jacobi rotations; slow but independent of LAPACK."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off < 1e-15:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-18:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                r = np.eye(n)
                r[p, p] = r[q, q] = c
                r[p, q], r[q, p] = s, -s
                a = r.T @ a @ r
    return np.sort(np.diag(a))[::-1]


epsilons = st.floats(0.0, 0.5)


@st.composite
def delta_vectors(draw):
    raw = np.array([draw(st.floats(0.0, 1.0)) for _ in range(4)])
    if raw.sum() < 1e-6:
        raw = np.array([1.0, 0, 0, 0])
    d = raw / raw.sum()
    d[-1] = max(0.0, 1.0 - d[:3].sum())
    return d / d.sum()


class TestGram:
    def test_maximal_error(self):
        np.testing.assert_allclose(gram_matrix("X", 0.5), np.eye(4) / 4)

    def test_noiseless_offdiagonal(self):
        g = gram_matrix("X", 0.0)
        off = g[~np.eye(4, dtype=bool)]
        assert np.max(np.abs(off)) == pytest.approx(0.25)

    def test_z_spectrum(self):
        np.testing.assert_allclose(eigenvalues(gram_matrix("Z", 0.1)), [0.45, 0.45, 0.05, 0.05], atol=1e-12)

    @pytest.mark.parametrize("eps", [0.5000001, 0.7, -0.1])
    def test_rejects_epsilon(self, eps):
        with pytest.raises(ModelError):
            gram_matrix("X", eps)

    def test_rejects_y(self):
        with pytest.raises(ModelError):
            gram_matrix("Y", 0.1)

    @given(epsilons, st.sampled_from(["X", "Z"]))
    def test_psd_unit_trace(self, eps, basis):
        g = gram_matrix(basis, eps)
        assert np.trace(g) == pytest.approx(1.0)
        assert np.allclose(g, g.T)
        assert eigenvalues(g).min() > -1e-10

    @given(epsilons, st.sampled_from(["X", "Z"]))
    def test_two_distinct_doubly_degenerate(self, eps, basis):
        lam = eigenvalues(gram_matrix(basis, eps))
        assert abs(lam[0] - lam[1]) < 1e-10 and abs(lam[2] - lam[3]) < 1e-10
        np.testing.assert_allclose(lam, 0.25 * np.array([2 - 2 * eps, 2 - 2 * eps, 2 * eps, 2 * eps]), atol=1e-12)


class TestEigen:
    def test_identity(self):
        np.testing.assert_allclose(eigenvalues(np.eye(4) / 4), [0.25] * 4)

    def test_rejects_asymmetric(self):
        m = np.eye(4) / 4
        m[0, 1] = 0.1
        with pytest.raises(ModelError):
            eigenvalues(m)

    @given(delta_vectors(), st.sampled_from(["X", "Z"]))
    def test_matches_jacobi(self, deltas, basis):
        g = gram_from_deltas(basis, deltas)
        assert np.max(np.abs(eigenvalues(g) - jacobi_eigenvalues(g))) < 1e-10

    def test_jacobi_oracle_sanity(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4))
        a = a + a.T
        np.testing.assert_allclose(jacobi_eigenvalues(a), np.sort(np.linalg.eigvals(a).real)[::-1], atol=1e-10)


class TestEntropy:
    def test_uniform(self):
        assert ensemble_entropy([0.25] * 4) == pytest.approx(2.0)

    def test_pure(self):
        assert ensemble_entropy([1, 0, 0, 0]) == 0.0

    @pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 0.25])
    def test_closed_form_points(self, eps):
        s = ensemble_entropy(eigenvalues(gram_matrix("X", eps)))
        assert abs(s - (1 + binary_entropy(eps))) < 1e-12

    def test_rejects(self):
        with pytest.raises(ModelError):
            ensemble_entropy([0.6, 0.6, -0.2, 0.0])
        with pytest.raises(ModelError):
            ensemble_entropy([0.5, 0.4, 0.0, 0.0])

    def test_two_hundred_random(self):
        rng = np.random.default_rng(17)
        worst = max(
            abs(holevo_bound(u, e) - binary_entropy(e)) for e in rng.uniform(0, 0.5, 200) for u in ("X", "Z")
        )
        assert worst < 1e-12


class TestHolevo:
    def test_examples(self):
        assert holevo_bound("X", 0.0) == pytest.approx(0.0, abs=1e-12)
        assert holevo_bound("Z", 0.5) == pytest.approx(1.0, abs=1e-12)
        assert holevo_bound("X", 0.0613) == pytest.approx(binary_entropy(0.0613), abs=1e-12)

    @given(epsilons, st.sampled_from(["X", "Z"]))
    def test_equals_entropy(self, eps, basis):
        assert abs(holevo_bound(basis, eps) - binary_entropy(eps)) < 1e-12


class TestDeltaConsistency:
    @given(delta_vectors(), st.sampled_from(["X", "Z"]))
    def test_gram_from_deltas(self, deltas, basis):
        eps = delta_constraint_epsilon(basis, deltas)
        if eps > 0.5:
            return
        assert np.max(np.abs(gram_from_deltas(basis, deltas) - gram_matrix(basis, eps))) < 1e-12

    @given(delta_vectors(), st.sampled_from(["X", "Z"]))
    def test_vectors_normalized(self, deltas, basis):
        v = ensemble_vectors(basis, deltas)
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-12)

    def test_constraints(self):
        d = (0.1, 0.2, 0.3, 0.4)
        assert -d[0] + d[1] - d[2] + d[3] == pytest.approx(-(1 - 2 * delta_constraint_epsilon("X", d)))
        assert d[0] + d[1] - d[2] - d[3] == pytest.approx(1 - 2 * delta_constraint_epsilon("Z", d))

    def test_rejects_bad_deltas(self):
        with pytest.raises(ModelError):
            ensemble_vectors("X", (0.5, 0.5, 0.5, 0.0))
