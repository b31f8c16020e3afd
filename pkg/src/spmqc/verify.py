"""Cross-module oracle checks run by ``spmqc verify``.

Each check returns a :class:`CheckResult` with the measured deviation and
the tolerance it was judged against. The Monte Carlo checks sample with
``sim_params`` but compare against the analytic model evaluated at the
reference parameters, so a perturbed simulator shows up as a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    BASES,
    PAIRS,
    DEFAULT_CHANNEL,
    ChannelParams,
    binary_entropy,
    click_prob,
    performance_point,
)
from .detection import binomial_click_prob
from .protocol.events import sample_check_events, sample_step5
from .qcore import BellOutcome, PauliOp, apply_pauli, prepare_state, recovery_operation, teleport_oracle
from .security import eigenvalues, ensemble_entropy, gram_matrix

# Bob's initial state -> (psi-, psi+, phi-, phi+) -> (sign, retained label)
TELEPORT_TABLE = {
    "0": ((-1, "0"), (1, "0"), (-1, "1"), (-1, "1")),
    "1": ((-1, "1"), (-1, "1"), (-1, "0"), (1, "0")),
    "+": ((-1, "+"), (1, "-"), (-1, "+"), (1, "-")),
    "-": ((-1, "-"), (1, "+"), (1, "-"), (-1, "+")),
}
TELEPORT_ORDER = (BellOutcome.PSI_MINUS, BellOutcome.PSI_PLUS, BellOutcome.PHI_MINUS, BellOutcome.PHI_PLUS)

_POL_PAIRS = (("H", "V"), ("H", "H"), ("+", "-"), ("+", "+"))


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status}  {self.name:<28} deviation={self.deviation:.3e}  tolerance={self.tolerance:.3e}{extra}"


def _result(name, deviation, tolerance, detail=""):
    return CheckResult(name, float(deviation), float(tolerance), bool(deviation <= tolerance), detail)


def check_teleport_table(tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for bob, row in TELEPORT_TABLE.items():
        for outcome, (sign, label) in zip(TELEPORT_ORDER, row):
            res = teleport_oracle(bob, outcome)
            expected = sign * prepare_state(label).amplitudes
            worst = max(worst, float(np.max(np.abs(res.state.amplitudes - expected))))
    return _result("teleport_table", worst, tol, "16 cells, amplitudes with sign")


def check_recovery(tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for basis, labels in (("Z", ("0", "1")), ("X", ("+", "-"))):
        for outcome in BellOutcome:
            op = recovery_operation(outcome, basis)
            assert op in (PauliOp.I, PauliOp.I_SIGMA_Y)
            for lbl in labels:
                fixed = apply_pauli(op, teleport_oracle(lbl, outcome).state)
                worst = max(worst, abs(1.0 - abs(fixed.overlap(prepare_state(lbl)))))
    return _result("recovery", worst, tol, "overlap magnitude")


def check_holevo(n: int = 200, seed: int = 2024, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    grid = np.concatenate([[0.0, 0.5, 0.01, 0.05, 0.1, 0.25], rng.uniform(0.0, 0.5, n)])
    worst = 0.0
    for basis in ("X", "Z"):
        for eps in grid:
            s = ensemble_entropy(eigenvalues(gram_matrix(basis, eps)))
            worst = max(worst, abs(s - (1.0 + binary_entropy(eps))))
    return _result("holevo", worst, tol, f"max |S - (1+h(eps))| over {grid.size} eps x 2 bases")


def check_click_expansion(n: int = 100, seed: int = 2025, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        eta, p_d = rng.uniform(0.0, 1.0), 10.0 ** rng.uniform(-8.0, -1.0)
        for pol_a, pol_b in _POL_PAIRS:
            for pair in PAIRS:
                closed = click_prob(pair, pol_a, pol_b, eta, p_d)
                expanded = binomial_click_prob(pair, pol_a, pol_b, eta, p_d)
                worst = max(worst, abs(closed - expanded))
    return _result("click_expansion", worst, tol, f"{n} random (eta_c, p_d) points")


def check_dber_ordering(params: ChannelParams = DEFAULT_CHANNEL) -> CheckResult:
    worst = -math.inf
    for d in np.arange(0.5, 120.0 + 1e-9, 0.5):
        pt = performance_point(params, d)
        worst = max(worst, pt.dber["X"] - pt.dber["Z"], abs(pt.dber["X"] - pt.dber["Y"]) - 1e-15)
    return CheckResult("dber_ordering", worst, 0.0, worst < 0.0, "max(e_X - e_Z) over 0.5..120 km")


def _sigma(p, n):
    return math.sqrt(max(p * (1.0 - p), 1e-300) / n) if n else math.inf


def check_dber_monte_carlo(
    sim_params: ChannelParams = DEFAULT_CHANNEL,
    reference: ChannelParams = DEFAULT_CHANNEL,
    distances=(10.0, 30.0, 50.0),
    n_rounds: int = 100_000,
    seed: int = 7,
) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for d in distances:
        ref = performance_point(reference, d)
        sim = performance_point(sim_params, d)
        for b in BASES:
            events = sample_check_events(n_rounds, [b.value], sim.eta_c, sim_params, rng)
            wrong, valid = events.counts(b)
            z = abs(wrong / valid - ref.dber[b.value]) / _sigma(ref.dber[b.value], valid)
            if z > worst:
                worst, where = z, f"d={d:g} basis={b.value}"
    return _result("dber_monte_carlo", worst, 3.0, f"max |z| at {where}")


def check_qber_monte_carlo(
    sim_params: ChannelParams = DEFAULT_CHANNEL,
    reference: ChannelParams = DEFAULT_CHANNEL,
    distances=(10.0, 30.0, 50.0),
    n_rounds: int = 100_000,
    seed: int = 11,
) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for d in distances:
        e_ref = performance_point(reference, d).qber
        sample = sample_step5(n_rounds, performance_point(sim_params, d).eta_c, sim_params, rng)
        n = int(sample.valid.sum())
        e_hat = float(sample.error[sample.valid].mean())
        z = abs(e_hat - e_ref) / _sigma(e_ref, n)
        if z > worst:
            worst, where = z, f"d={d:g} delta={e_hat - e_ref:+.4e}"
    return _result("qber_monte_carlo", worst, 3.0, f"max |z| at {where}")


def run_checks(sim_params: ChannelParams = DEFAULT_CHANNEL, reference: ChannelParams = DEFAULT_CHANNEL) -> list[CheckResult]:
    return [
        check_teleport_table(),
        check_recovery(),
        check_holevo(),
        check_click_expansion(),
        check_dber_ordering(reference),
        check_dber_monte_carlo(sim_params, reference),
        check_qber_monte_carlo(sim_params, reference),
    ]
