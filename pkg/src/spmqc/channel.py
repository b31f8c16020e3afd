"""Analytic performance model: gains, error rates and secrecy capacity vs. distance."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import optimize


class ModelError(ValueError):
    """Raised for out-of-range inputs or points where a rate is undefined."""


class Basis(str, enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"

    @classmethod
    def parse(cls, value) -> "Basis":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ModelError(f"unknown basis {value!r}") from None


BASES = (Basis.X, Basis.Y, Basis.Z)

# Polarization labels per basis, ordered (bit 0, bit 1).
POLARIZATION_LABELS = {Basis.Z: ("H", "V"), Basis.X: ("+", "-"), Basis.Y: ("~+", "~-")}
_LABEL_BASIS = {lbl: b for b, pair in POLARIZATION_LABELS.items() for lbl in pair}

PAIRS = ((1, 4), (2, 3), (1, 2), (3, 4))
PSI_MINUS_PAIRS = frozenset({(1, 4), (2, 3)})


@dataclass(frozen=True)
class ChannelParams:
    """Fiber and detector parameters; defaults are the published simulation settings."""

    delta: float = 0.2  # dB/km
    eta_d: float = 0.6
    e0: float = 0.5
    e_det: float = 0.0131
    p_d: float = 1e-6
    e_d: float = 0.015

    def __post_init__(self):
        if not self.delta >= 0:
            raise ModelError(f"delta must be >= 0, got {self.delta!r}")
        for name in ("eta_d", "e0", "e_det", "p_d", "e_d"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ModelError(f"{name} must lie in [0, 1], got {value!r}")

    def with_(self, **changes) -> "ChannelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_CHANNEL = ChannelParams()


def transmittance(params: ChannelParams, d):
    """eta_c = eta_d * 10**(-delta*d/10)."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise ModelError("distance must be non-negative")
    out = params.eta_d * 10.0 ** (-params.delta * d_arr / 10.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Two-fold click probabilities for single-photon inputs.


def _background(eta_c, p_d):
    q = (1.0 - p_d) ** 2
    return (1.0 - eta_c) ** 2 * p_d**2 * q + (1.0 - eta_c) * eta_c * p_d * q


def _p_orthogonal(eta_c, p_d):
    return _background(eta_c, p_d) + 0.25 * eta_c**2 * (1.0 - p_d) ** 2


def _p_parallel(eta_c, p_d):
    return _background(eta_c, p_d) + 0.5 * eta_c**2 * p_d * (1.0 - p_d) ** 2


def _p_suppressed(eta_c, p_d):
    return _background(eta_c, p_d) + 0.25 * eta_c**2 * p_d * (1.0 - p_d) ** 2


def _p_heralded(eta_c, p_d):
    return _background(eta_c, p_d) + 0.25 * eta_c**2 * (p_d + 1.0) * (1.0 - p_d) ** 2


def label_basis(label: str) -> Basis:
    try:
        return _LABEL_BASIS[label]
    except KeyError:
        raise ModelError(f"unknown polarization label {label!r}") from None


def click_prob(pair, pol_a: str, pol_b: str, eta_c, p_d):
    """Closed-form probability of a two-fold click on ``pair``.

    Circular (Y) labels use the diagonal-basis expressions one-for-one.
    """
    pair = tuple(pair)
    if pair not in PAIRS:
        raise ModelError(f"detector pair {pair} is not a Bell-measurement coincidence")
    basis = label_basis(pol_a)
    if label_basis(pol_b) is not basis:
        raise ModelError(f"polarizations {pol_a!r}, {pol_b!r} belong to different bases")
    same = pol_a == pol_b
    if basis is Basis.Z:
        return _p_parallel(eta_c, p_d) if same else _p_orthogonal(eta_c, p_d)
    heralds_psi_minus = pair in PSI_MINUS_PAIRS
    if heralds_psi_minus != same:
        return _p_heralded(eta_c, p_d)
    return _p_suppressed(eta_c, p_d)


def is_wrong_click(basis: Basis, same_label: bool, pair) -> bool:
    """Error classification of a check-round coincidence."""
    if basis is Basis.Z:
        return same_label
    return (tuple(pair) in PSI_MINUS_PAIRS) == same_label


def _combos(basis: Basis):
    z1, z2 = POLARIZATION_LABELS[basis]
    return ((z1, z2), (z2, z1), (z1, z1), (z2, z2))


def gain(basis, eta_c, p_d):
    """G_u: quarter-weighted sum of click probabilities over S and the four polarization pairs."""
    basis = Basis.parse(basis)
    return 0.25 * sum(click_prob(pr, a, b, eta_c, p_d) for pr in PAIRS for a, b in _combos(basis))


def dber_raw(basis, eta_c, p_d):
    """Detection error rate before the misalignment correction."""
    basis = Basis.parse(basis)
    g = gain(basis, eta_c, p_d)
    if np.any(np.asarray(g) <= 0):
        raise ModelError("zero gain: DBER undefined")
    wrong = sum(
        click_prob(pr, a, b, eta_c, p_d)
        for pr in PAIRS
        for a, b in _combos(basis)
        if is_wrong_click(basis, a == b, pr)
    )
    return wrong / (4.0 * g)


def misalignment_correct(raw, e_d):
    return e_d * (1.0 - 2.0 * raw) + raw


def dber(basis, params: ChannelParams, eta_c):
    return misalignment_correct(dber_raw(basis, eta_c, params.p_d), params.e_d)


def click_rate_1(check_basis, eta_c, p_d):
    """Charlie's Step-2 click rate: (eta_c/3) times the gains of the two other bases."""
    check_basis = Basis.parse(check_basis)
    return eta_c / 3.0 * sum(gain(b, eta_c, p_d) for b in BASES if b is not check_basis)


def click_rate_2(eta_c, p_d):
    return eta_c + (1.0 - eta_c) * p_d


def qber(params: ChannelParams, eta_c):
    den = click_rate_2(eta_c, params.p_d)
    if np.any(np.asarray(den) <= 0):
        raise ModelError("no clicks at eta_c = p_d = 0: QBER undefined")
    return (params.e0 * params.p_d + params.e_det * eta_c) / den


def binary_entropy(p):
    """h(p) in bits with h(0) = h(1) = 0."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ModelError(f"binary entropy needs p in [0, 1], got {p!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -arr * np.log2(arr) - (1.0 - arr) * np.log2(1.0 - arr)
    h = np.where((arr == 0) | (arr == 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


def eve_gain_factor(eta_c, incum: bool):
    """g = 1/eta_c without masking, 1 with masking."""
    return 1.0 if incum else 1.0 / eta_c


def capacity_from_rates(big_q, e, eps, g):
    """C_s = Q [1 - h(e) - g h(eps)], unclamped."""
    return big_q * (1.0 - binary_entropy(e) - g * binary_entropy(eps))


@dataclass(frozen=True)
class PerformancePoint:
    """Every model quantity at one distance.

    Maps are keyed by basis name ("X", "Y", "Z"); the capacity maps use the
    security-check basis as key. ``capacity`` and ``capacity_incum`` are
    clamped at zero, the ``*_raw`` variants are not.
    """

    distance: float
    params: ChannelParams
    eta_c: float
    gains: dict
    q_c1: dict
    q_c2: float
    big_q: dict
    qber: float
    dber_raw: dict
    dber: dict
    capacity_raw: dict
    capacity_incum_raw: dict
    capacity: dict = field(init=False)
    capacity_incum: dict = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "capacity", {k: max(0.0, v) for k, v in self.capacity_raw.items()})
        object.__setattr__(self, "capacity_incum", {k: max(0.0, v) for k, v in self.capacity_incum_raw.items()})

    def g(self, incum: bool) -> float:
        return eve_gain_factor(self.eta_c, incum)

    def capacity_for(self, basis, incum: bool, clamp: bool = True) -> float:
        key = Basis.parse(basis).value
        table = (self.capacity_incum_raw if incum else self.capacity_raw)
        value = table[key]
        return max(0.0, value) if clamp else value


def performance_point(params: ChannelParams, d: float) -> PerformancePoint:
    eta_c = transmittance(params, d)
    p_d = params.p_d
    gains = {b.value: gain(b, eta_c, p_d) for b in BASES}
    q_c1 = {b.value: eta_c / 3.0 * sum(gains[o.value] for o in BASES if o is not b) for b in BASES}
    q_c2 = click_rate_2(eta_c, p_d)
    big_q = {k: v * q_c2 for k, v in q_c1.items()}
    e = qber(params, eta_c)
    raw = {b.value: dber_raw(b, eta_c, p_d) for b in BASES}
    eps = {k: misalignment_correct(v, params.e_d) for k, v in raw.items()}
    cap = {k: float(capacity_from_rates(big_q[k], e, eps[k], 1.0 / eta_c)) for k in big_q}
    cap_m = {k: float(capacity_from_rates(big_q[k], e, eps[k], 1.0)) for k in big_q}
    return PerformancePoint(
        distance=float(d),
        params=params,
        eta_c=eta_c,
        gains=gains,
        q_c1=q_c1,
        q_c2=q_c2,
        big_q=big_q,
        qber=e,
        dber_raw=raw,
        dber=eps,
        capacity_raw=cap,
        capacity_incum_raw=cap_m,
    )


def secrecy_capacity(params: ChannelParams, d: float, basis, incum: bool = False, clamp: bool = True) -> float:
    return performance_point(params, d).capacity_for(basis, incum, clamp=clamp)


def secrecy_fraction(params: ChannelParams, d: float, basis, incum: bool = False) -> float:
    """C_s / Q: the bracket of the capacity formula. Shares the sign of C_s."""
    eta_c = transmittance(params, d)
    eps = dber(basis, params, eta_c)
    return float(1.0 - binary_entropy(qber(params, eta_c)) - eve_gain_factor(eta_c, incum) * binary_entropy(eps))


def capacity_cutoff(params: ChannelParams, basis, incum: bool = False, d_max: float = 2000.0, xtol: float = 1e-9) -> float:
    """Distance where the secrecy capacity reaches zero, by bisection.

    Returns 0.0 if the capacity is already non-positive at d = 0 and ``inf``
    if it stays positive up to ``d_max``.
    """
    f = lambda d: secrecy_fraction(params, d, basis, incum)  # noqa: E731
    if f(0.0) <= 0:
        return 0.0
    if f(d_max) > 0:
        return math.inf
    return float(optimize.bisect(f, 0.0, d_max, xtol=xtol))


def distance_grid(d_min: float = 0.0, d_max: float = 120.0, d_step: float = 0.5) -> np.ndarray:
    if d_step <= 0 or d_min > d_max or d_min < 0:
        raise ModelError(f"bad distance range [{d_min}, {d_max}] step {d_step}")
    n = int(math.floor((d_max - d_min) / d_step + 1e-9))
    return d_min + d_step * np.arange(n + 1)
