"""Holevo bound on the eavesdropper's information from the Alice-Eve Gram matrix.

Eve's ancilla states |E_1>..|E_4> are modeled as an orthonormal basis.
Only the X and Z checks are derived; Y is assumed to behave as X.
"""

from __future__ import annotations

import numpy as np

from .channel import Basis, ModelError

EIG_TOL = 1e-10


def _checked_epsilon(epsilon: float) -> float:
    eps = float(epsilon)
    if not 0.0 <= eps <= 0.5:
        raise ModelError(f"epsilon must lie in [0, 1/2], got {epsilon!r}")
    return eps


def _checked_basis(basis) -> Basis:
    b = Basis.parse(basis)
    if b is Basis.Y:
        raise ModelError("the Gram-matrix derivation is available for X and Z only")
    return b


def gram_matrix(basis, epsilon: float) -> np.ndarray:
    """4x4 Gram matrix of the ensemble {phi_1, phi_2, phi_1', phi_2'} with weights 1/4."""
    b = _checked_basis(basis)
    c = 1.0 - 2.0 * _checked_epsilon(epsilon)
    g = np.eye(4)
    if b is Basis.X:
        g[0, 3] = g[3, 0] = -c
        g[1, 2] = g[2, 1] = -c
    else:
        g[0, 2] = g[2, 0] = -c
        g[1, 3] = g[3, 1] = c
    return g / 4.0


def delta_constraint_epsilon(basis, deltas) -> float:
    """The DBER implied by an attack decomposition delta_1..delta_4."""
    d1, d2, d3, d4 = deltas
    if _checked_basis(basis) is Basis.X:
        return (1.0 + (-d1 + d2 - d3 + d4)) / 2.0
    return (1.0 - (d1 + d2 - d3 - d4)) / 2.0


def ensemble_vectors(basis, deltas) -> np.ndarray:
    """Rows are phi_1, phi_2, phi_1', phi_2' in the 8-dim space A (x) E."""
    b = _checked_basis(basis)
    d = np.asarray(deltas, dtype=float)
    if d.shape != (4,) or np.any(d < 0) or abs(d.sum() - 1.0) > 1e-12:
        raise ModelError(f"deltas must be four non-negative numbers summing to 1, got {deltas!r}")
    s1, s2, s3, s4 = np.sqrt(d)
    e = np.eye(4)
    a0 = s3 * e[2] + s4 * e[3]
    a1 = s2 * e[1] - s1 * e[0]
    b0 = s1 * e[0] + s2 * e[1]
    b1 = s4 * e[3] - s3 * e[2]
    phi1 = np.concatenate([a0, a1])
    phi2 = np.concatenate([b0, b1])
    if b is Basis.X:  # sigma_x swaps the |0>_A and |1>_A blocks
        phi1p = np.concatenate([a1, a0])
        phi2p = np.concatenate([b1, b0])
    else:  # sigma_z flips the sign of the |1>_A block
        phi1p = np.concatenate([a0, -a1])
        phi2p = np.concatenate([b0, -b1])
    return np.stack([phi1, phi2, phi1p, phi2p])


def gram_from_deltas(basis, deltas) -> np.ndarray:
    vecs = ensemble_vectors(basis, deltas)
    return 0.25 * vecs @ vecs.T


def eigenvalues(g) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix, sorted descending."""
    m = np.asarray(g, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ModelError("square matrix required")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
        raise ModelError("Gram matrix must be symmetric")
    return np.linalg.eigvalsh(m)[::-1]


def ensemble_entropy(eigs) -> float:
    """Von Neumann entropy (bits) from a spectrum, with 0 log 0 = 0."""
    lam = np.asarray(eigs, dtype=float)
    if np.any(lam < -EIG_TOL):
        raise ModelError(f"negative eigenvalue {lam.min()!r}")
    if abs(lam.sum() - 1.0) > EIG_TOL:
        raise ModelError(f"eigenvalues sum to {lam.sum()!r}, expected 1")
    lam = lam[lam > 0]
    return float(-(lam * np.log2(lam)).sum())


def holevo_bound(basis, epsilon: float) -> float:
    """Upper bound on I(A:E): ensemble entropy minus the average conditional entropy (1 bit)."""
    return ensemble_entropy(eigenvalues(gram_matrix(basis, epsilon))) - 1.0
