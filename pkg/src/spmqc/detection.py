"""First-principles click model of Charlie's linear-optics Bell analyzer.

A 50:50 beam splitter maps Alice's input mode to (c + d)/sqrt2 and Bob's to
(c - d)/sqrt2; a polarizing beam splitter behind each output sends H and V to
separate detectors:

    D1 = c_H, D2 = c_V, D3 = d_H, D4 = d_V

Coincidences on (1,4) or (2,3) herald psi-, on (1,2) or (3,4) psi+.

Nothing here reads the tabulated closed forms in :mod:`spmqc.channel`; the
two are compared against each other in the test suite.
"""

from __future__ import annotations

from math import comb

import numpy as np

PAIRS = ((1, 4), (2, 3), (1, 2), (3, 4))

_S = 1.0 / np.sqrt(2.0)
POLARIZATIONS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([_S, _S], dtype=complex),
    "-": np.array([_S, -_S], dtype=complex),
    "~+": np.array([_S, 1j * _S], dtype=complex),
    "~-": np.array([_S, -1j * _S], dtype=complex),
}


def _polarization(pol) -> np.ndarray:
    if isinstance(pol, str):
        return POLARIZATIONS[pol]
    vec = np.asarray(pol, dtype=complex)
    return vec / np.linalg.norm(vec)


def single_photon_landing(pol) -> np.ndarray:
    """Probability that a lone photon entering from either port hits D1..D4."""
    a = _polarization(pol)
    w = np.abs(a) ** 2 / 2.0
    return np.array([w[0], w[1], w[0], w[1]])


def two_photon_patterns(pol_a, pol_b) -> tuple[np.ndarray, np.ndarray]:
    """Detection statistics when both photons reach the beam splitter.

    Returns ``(split, bunch)``: ``split[m, n]`` (m < n) is the probability of
    one photon at detector m+1 and one at n+1, ``bunch[m]`` the probability
    that both photons land on detector m+1.
    """
    a = _polarization(pol_a)
    b = _polarization(pol_b)
    ua = np.array([a[0], a[1], a[0], a[1]]) * _S
    ub = np.array([b[0], b[1], -b[0], -b[1]]) * _S
    amp = np.outer(ua, ub)
    sym = amp + amp.T
    split = np.triu(np.abs(sym) ** 2, k=1)
    bunch = 2.0 * np.abs(np.diag(amp)) ** 2
    return split, bunch


def conditional_click(pair, pol_a, pol_b, k_a: int, k_b: int, p_d: float) -> float:
    """Probability of a clean two-fold click on ``pair`` given k_a, k_b arriving photons.

    Only the two detectors of the pair may fire; dark counts fire each
    detector independently with probability ``p_d``.
    """
    i, j = pair
    quiet = (1.0 - p_d) ** 2  # the two detectors outside the pair stay silent
    if k_a == 0 and k_b == 0:
        return p_d**2 * quiet
    if k_a + k_b == 1:
        land = single_photon_landing(pol_a if k_a else pol_b)
        return (land[i - 1] + land[j - 1]) * p_d * quiet
    if k_a == 1 and k_b == 1:
        split, bunch = two_photon_patterns(pol_a, pol_b)
        return (split[i - 1, j - 1] + p_d * (bunch[i - 1] + bunch[j - 1])) * quiet
    raise ValueError("single-photon model: at most one photon per side")


def binomial_click_prob(pair, pol_a, pol_b, eta_c: float, p_d: float, n_a: int = 1, n_b: int = 1) -> float:
    """Sum over arrived photon numbers weighted by binomial channel loss."""
    total = 0.0
    for k_a in range(n_a + 1):
        w_a = comb(n_a, k_a) * eta_c**k_a * (1.0 - eta_c) ** (n_a - k_a)
        for k_b in range(n_b + 1):
            w_b = comb(n_b, k_b) * eta_c**k_b * (1.0 - eta_c) ** (n_b - k_b)
            total += w_a * w_b * conditional_click(pair, pol_a, pol_b, k_a, k_b, p_d)
    return total


def click_distribution(pol_a, pol_b, eta_c: float, p_d: float) -> np.ndarray:
    """Probabilities of a valid coincidence on each pair in PAIRS, then of no valid event."""
    probs = np.array([binomial_click_prob(pr, pol_a, pol_b, eta_c, p_d) for pr in PAIRS])
    return np.append(probs, 1.0 - probs.sum())
