"""Per-event Monte Carlo kernels.

Each kernel has a numba loop and a vectorized numpy twin. Randomness is
drawn by the caller and passed in as uniforms, so both paths return
identical arrays for identical inputs; ``BACKEND`` names the active one.
"""

from __future__ import annotations

import numpy as np

from .._accel import HAVE_NUMBA, njit

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# -- categorical draw from per-row cumulative tables --------------------------


def sample_categories_numpy(rows, cum, u):
    """Category index for each event: first k with u < cum[row, k].

    ``cum`` holds cumulative probabilities with the last column equal to 1;
    the returned index runs from 0 to cum.shape[1] - 1.
    """
    c = cum[rows]
    out = (u[:, None] >= c).sum(axis=1)
    return np.minimum(out, cum.shape[1] - 1).astype(np.int8)


@njit
def _sample_categories_nb(rows, cum, u):  # pragma: no cover - compiled
    n = u.shape[0]
    k_max = cum.shape[1] - 1
    out = np.empty(n, dtype=np.int8)
    for t in range(n):
        r = rows[t]
        k = 0
        while k < k_max and u[t] >= cum[r, k]:
            k += 1
        out[t] = k
    return out


# -- Step-5 click resolution ---------------------------------------------------


def resolve_clicks_numpy(ideal, u_signal, u_error, p_signal, e_det, e0):
    """Measured bit for each registered click.

    A click is a real photon with probability ``p_signal`` (error rate
    ``e_det``), else a dark count (error rate ``e0``).
    """
    signal = u_signal < p_signal
    err = np.where(signal, u_error < e_det, u_error < e0)
    return (ideal ^ err).astype(np.uint8), err


@njit
def _resolve_clicks_nb(ideal, u_signal, u_error, p_signal, e_det, e0):  # pragma: no cover
    n = ideal.shape[0]
    out = np.empty(n, dtype=np.uint8)
    err = np.empty(n, dtype=np.bool_)
    for t in range(n):
        if u_signal[t] < p_signal:
            e = u_error[t] < e_det
        else:
            e = u_error[t] < e0
        err[t] = e
        out[t] = ideal[t] ^ np.uint8(e)
    return out, err


# -- majority decoding ------------------------------------------------------------


def majority_vote_numpy(bits, n):
    blocks = bits.reshape(-1, n).astype(np.int64)
    return (2 * blocks.sum(axis=1) > n).astype(np.uint8)


@njit
def _majority_vote_nb(bits, n):  # pragma: no cover
    m = bits.shape[0] // n
    out = np.empty(m, dtype=np.uint8)
    for i in range(m):
        s = 0
        for j in range(n):
            s += bits[i * n + j]
        out[i] = 1 if 2 * s > n else 0
    return out


# -- dispatch -----------------------------------------------------------------------


def sample_categories(rows, cum, u):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cum = np.ascontiguousarray(cum, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    if _sample_categories_nb is not None:
        return _sample_categories_nb(rows, cum, u)
    return sample_categories_numpy(rows, cum, u)


def resolve_clicks(ideal, u_signal, u_error, p_signal, e_det, e0):
    ideal = np.ascontiguousarray(ideal, dtype=np.uint8)
    u_signal = np.ascontiguousarray(u_signal, dtype=np.float64)
    u_error = np.ascontiguousarray(u_error, dtype=np.float64)
    if _resolve_clicks_nb is not None:
        return _resolve_clicks_nb(ideal, u_signal, u_error, float(p_signal), float(e_det), float(e0))
    return resolve_clicks_numpy(ideal, u_signal, u_error, p_signal, e_det, e0)


def majority_vote(bits, n):
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if bits.size % n:
        raise ValueError(f"{bits.size} bits is not a multiple of the block length {n}")
    if _majority_vote_nb is not None:
        return _majority_vote_nb(bits, int(n))
    return majority_vote_numpy(bits, n)
