"""Dense-matrix oracles for the symbolic algebra, the expansions and the fermion blocks."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, logm

from ..errors import ResourceLimitError, ValidationError
from .agp import VariationalAgp
from .expand import BCH_WORDS, OperatorBasis, bch_generator, magnus_generator
from .fermions import QAOA, fermion_evolve, fermion_objective
from .matching import AngleSet
from .model import build_ising_ring, build_maxcut, build_two_level
from .pauli import PauliSum, PauliTerm, commutator, multiply, to_matrix, trace_product
from .schedule import Schedule
from .settings import DENSE_QUBIT_CAP
from .sim import approximation_ratio, qaoa_state

logger = logging.getLogger(__name__)

BCH_STEPS = (0.12, 0.096, 0.077, 0.061, 0.049)
MAGNUS_STEPS = (0.2, 0.1)
SLOPE_TOLERANCE = 0.3
HALVING_SLACK = 0.75
SUITES = ("trace", "bch", "magnus", "fermion")


@dataclass
class OracleResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "name": self.name, "passed": self.passed,
                "detail": self.detail, "metrics": self.metrics}


def _random_hermitian(rng: np.random.Generator, n: int, terms: int = 6) -> PauliSum:
    picks = [
        (PauliTerm(n, int(rng.integers(1 << n)), int(rng.integers(1 << n))), float(rng.normal()))
        for _ in range(terms)
    ]
    return PauliSum(n, picks)


def _dense_norm(m: np.ndarray) -> float:
    return float(np.sqrt(np.real(np.trace(m.conj().T @ m)) / m.shape[0]))


def _traceless(m: np.ndarray) -> np.ndarray:
    return m - np.trace(m) / m.shape[0] * np.eye(m.shape[0])


def trace_suite(qubits: int = 4, seed: int = 7, trials: int = 20) -> list[OracleResult]:
    """trace_product and commutator against dense matrices; multiply associativity."""
    rng = np.random.default_rng(seed)
    worst_trace = worst_comm = worst_jacobi = 0.0
    assoc_ok = True
    for _ in range(trials):
        a, b, c = (_random_hermitian(rng, qubits) for _ in range(3))
        ma, mb = to_matrix(a), to_matrix(b)
        dense = np.trace(ma @ mb) / ma.shape[0]
        worst_trace = max(worst_trace, abs(trace_product(a, b) - dense))
        worst_comm = max(worst_comm, float(np.max(np.abs(to_matrix(commutator(a, b)) - (ma @ mb - mb @ ma)))))
        jacobi = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
        worst_jacobi = max(worst_jacobi, max((abs(v) for v in jacobi.terms.values()), default=0.0))
        ta, tb, tc = (next(iter(x.terms)) for x in (a, b, c))
        ab, ph_ab = multiply(ta, tb)
        left, ph_left = multiply(ab, tc)
        bc, ph_bc = multiply(tb, tc)
        right, ph_right = multiply(ta, bc)
        assoc_ok &= left == right and abs(ph_ab * ph_left - ph_bc * ph_right) < 1e-15
    return [
        OracleResult("trace", "trace_product", worst_trace <= 1e-12, metrics={"max_error": float(worst_trace)}),
        OracleResult("trace", "commutator", worst_comm <= 1e-12, metrics={"max_error": worst_comm}),
        OracleResult("trace", "jacobi", worst_jacobi <= 1e-12, metrics={"max_error": float(worst_jacobi)}),
        OracleResult("trace", "associativity", bool(assoc_ok)),
    ]


def _suspect_words(degree: int, words: Sequence[tuple[int, str, float]]) -> list[str]:
    reference = {(d, w): c for d, w, c in BCH_WORDS}
    given = {(d, w): c for d, w, c in words}
    changed = [w for (d, w), c in given.items() if d == degree and abs(reference.get((d, w), 0.0) - c) > 1e-15]
    missing = [w for (d, w) in reference if d == degree and (d, w) not in given]
    return changed + missing or [w for d, w, _ in words if d == degree]


def bch_suite(
    orders: Sequence[int] = (1, 2, 3, 4, 5),
    words: Sequence[tuple[int, str, float]] = BCH_WORDS,
    steps: Sequence[float] = BCH_STEPS,
    qubits: int = 3,
) -> list[OracleResult]:
    """BCH truncation residual against ``-i logm(expm(i beta H_S) expm(i gamma H_T))``.

    The residual of order k must scale as h^(k+1). Runs on a path graph
    of ``qubits`` vertices.
    """
    inst = build_maxcut([(i, i + 1) for i in range(qubits - 1)])
    basis = OperatorBasis(inst)
    mt, ms = to_matrix(inst.h_target), to_matrix(inst.h_simple)
    results = []
    for order in orders:
        residuals = []
        for h in steps:
            gamma, beta = 0.6 * h, 0.4 * h
            exact = _traceless(-1j * logm(expm(1j * beta * ms) @ expm(1j * gamma * mt)))
            z = to_matrix(bch_generator(inst, gamma, beta, order, words=words, basis=basis).total)
            residuals.append(_dense_norm(z - exact))
        slope = float(np.polyfit(np.log(steps), np.log(residuals), 1)[0])
        passed = abs(slope - (order + 1)) <= SLOPE_TOLERANCE
        detail = "" if passed else (
            f"residual exponent {slope:.2f}, expected {order + 1}; suspect terms: "
            + ", ".join(_suspect_words(_first_bad_degree(slope, order), words))
        )
        results.append(OracleResult("bch", f"order{order}", passed, detail,
                                    {"slope": slope, "residuals": residuals}))
    return results


def _first_bad_degree(slope: float, order: int) -> int:
    # a residual scaling as h^d means the degree-d terms are wrong
    return int(min(max(round(slope), 1), order))


def _time_ordered(matrices: Callable[[float], np.ndarray], t0: float, tau: float, steps: int = 1000) -> np.ndarray:
    """RK4 for dU/dt = i H(t) U over ``[t0, t0 + tau]``."""
    h = tau / steps
    u = np.eye(matrices(t0).shape[0], dtype=complex)
    for i in range(steps):
        t = t0 + i * h
        k1 = 1j * matrices(t) @ u
        k2 = 1j * matrices(t + 0.5 * h) @ (u + 0.5 * h * k1)
        k3 = 1j * matrices(t + 0.5 * h) @ (u + 0.5 * h * k2)
        k4 = 1j * matrices(t + h) @ (u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


def magnus_suite(orders: Sequence[int] = (1, 2, 3), t0: float = 0.3,
                 steps: Sequence[float] = MAGNUS_STEPS) -> list[OracleResult]:
    """Magnus truncation residual against a dense time-ordered propagator.

    Halving tau must shrink the order-k residual by at least
    ``0.75 * 2^(k+1)``.
    """
    inst = build_two_level()
    sched = Schedule.linear(1.0)
    alpha = VariationalAgp(inst)
    basis = OperatorBasis(inst)
    mt, ms, mk = to_matrix(inst.h_target), to_matrix(inst.h_simple), to_matrix(1j * inst.comm)

    def hamiltonian(t):
        lam = float(sched.lam(t))
        kappa = float(sched.s(t)) + float(sched.lam_dot(t)) * alpha(lam)
        return lam * mt + (1.0 - lam) * ms + kappa * mk

    exact = {tau: _traceless(-1j * logm(_time_ordered(hamiltonian, t0, tau))) for tau in steps}
    results = []
    previous = None
    for order in orders:
        residuals = [
            _dense_norm(to_matrix(magnus_generator(inst, sched, alpha, t0, tau, order, basis=basis).total) - exact[tau])
            for tau in steps
        ]
        ratio = residuals[0] / max(residuals[-1], 1e-300)
        needed = HALVING_SLACK * 2.0 ** (order + 1)
        passed = ratio >= needed
        if previous is not None and order >= 2:
            passed &= residuals[-1] < 0.2 * previous
        detail = "" if passed else f"halving ratio {ratio:.2f} below {needed:.2f}"
        results.append(OracleResult("magnus", f"order{order}", bool(passed), detail,
                                    {"halving_ratio": ratio, "residuals": residuals}))
        previous = residuals[-1]
    return results


def fermion_suite(n_sites: int = 8, seed: int = 11, p: int = 3) -> list[OracleResult]:
    """Free-fermion blocks against the statevector on random QAOA angles."""
    rng = np.random.default_rng(seed)
    inst = build_ising_ring(n_sites)
    angles = AngleSet(rng.uniform(0, np.pi, p).tolist(), rng.uniform(0, np.pi / 2, p).tolist())
    vector_ratio = approximation_ratio(inst, qaoa_state(inst, angles))
    modes = fermion_evolve(n_sites, angles=angles, mode=QAOA)
    mode_ratio = fermion_objective(modes) / inst.obj_max
    diff = abs(vector_ratio - mode_ratio)
    return [OracleResult("fermion", f"qaoa_N{n_sites}", diff <= 1e-8, metrics={"difference": diff})]


def run_oracles(
    suites: Sequence[str] = SUITES,
    qubits: int = 4,
    words: Sequence[tuple[int, str, float]] = BCH_WORDS,
    fermion_sites: int = 8,
    cap: int = DENSE_QUBIT_CAP,
) -> list[OracleResult]:
    """Run the requested suites; ``qubits`` above the dense cap is refused."""
    unknown = sorted(set(suites) - set(SUITES))
    if unknown:
        raise ValidationError("unknown oracle suites", unknown=unknown, known=list(SUITES))
    if qubits > cap:
        raise ResourceLimitError(f"{qubits} qubits exceeds the dense cap of {cap}", n_qubits=qubits, cap=cap)
    results: list[OracleResult] = []
    if "trace" in suites:
        results += trace_suite(qubits)
    if "bch" in suites:
        results += bch_suite(words=words, qubits=min(qubits, 3))
    if "magnus" in suites:
        results += magnus_suite()
    if "fermion" in suites:
        results += fermion_suite(fermion_sites)
    for result in results:
        log = logger.info if result.passed else logger.error
        log("oracle %s/%s: %s %s", result.suite, result.name, "pass" if result.passed else "FAIL", result.detail)
    return results
