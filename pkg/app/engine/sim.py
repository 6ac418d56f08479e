"""Statevector simulation: QAOA circuits, continuous CD evolution, ratios.

All evolutions use dpsi/dt = +i H psi, matching the ``e^{i gamma H_T}``
ansatz. The initial state is the maximal eigenstate of H_S, ``|+>^n``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize
from scipy.sparse.linalg import expm_multiply

from ..errors import ContractError, InstanceError, ResourceLimitError, StepUnderflowError, UnknownOptimumError, ValidationError
from .agp import VariationalAgp
from .expand import AlphaFn
from .matching import AngleSet
from .model import SINGLE_SPIN, TWO_LEVEL, ProblemInstance
from .pauli import PauliSum, PauliTerm, to_sparse
from .schedule import Schedule
from .settings import (
    GRADIENT_MAX_ITER,
    GRADIENT_STEP,
    GRADIENT_TOLERANCE,
    NORM_DRIFT,
    RK4_MAX_STEPS,
    RK4_STEPS,
    RK4_TOLERANCE,
    STATEVECTOR_QUBIT_CAP,
)

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValidationError("amplitude vector does not match the qubit count",
                                  n_qubits=self.n_qubits, size=int(self.amplitudes.size))
        drift = abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0)
        if drift > NORM_TOLERANCE:
            raise ContractError("state is not normalized", drift=drift)

    def expectation(self, op: PauliSum) -> float:
        return float(np.vdot(self.amplitudes, to_sparse(op, cap=self.n_qubits) @ self.amplitudes).real)

    def expectation_diagonal(self, values: np.ndarray) -> float:
        return float(np.dot(np.abs(self.amplitudes) ** 2, values))

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


def _check_cap(inst: ProblemInstance, cap: int) -> None:
    if inst.n_qubits > cap:
        raise ResourceLimitError(f"{inst.n_qubits} qubits exceeds the statevector cap of {cap}",
                                 n_qubits=inst.n_qubits, cap=cap)


def plus_state(n_qubits: int) -> StateVector:
    dim = 1 << n_qubits
    return StateVector(n_qubits, np.full(dim, 1.0 / np.sqrt(dim), dtype=complex))


def _apply_mixer(psi: np.ndarray, n_qubits: int, beta: float) -> np.ndarray:
    """``prod_j exp(i beta X_j)`` applied qubit by qubit."""
    c, s = np.cos(beta), 1j * np.sin(beta)
    for j in range(n_qubits):
        view = psi.reshape(-1, 2, 1 << j)
        psi = (c * view + s * view[:, ::-1, :]).reshape(-1)
    return psi


def qaoa_state(inst: ProblemInstance, angles: AngleSet, cap: int = STATEVECTOR_QUBIT_CAP) -> StateVector:
    """``prod_q e^{i beta_q H_S} e^{i gamma_q H_T} |+>^n``."""
    _check_cap(inst, cap)
    n = inst.n_qubits
    psi = plus_state(n).amplitudes.copy()
    diagonal_target = all(term.is_diagonal for term in inst.h_target.terms)
    target = inst.target_diagonal if diagonal_target else to_sparse(inst.h_target, cap)
    mixer = None if inst.mixer_is_transverse_field else to_sparse(inst.h_simple, cap)
    for gamma, beta in zip(angles.gammas, angles.betas):
        if diagonal_target:
            psi = np.exp(1j * gamma * target) * psi
        else:
            psi = expm_multiply(1j * gamma * target, psi)
        if mixer is None:
            psi = _apply_mixer(psi, n, beta)
        else:
            psi = expm_multiply(1j * beta * mixer, psi)
    return StateVector(n, psi / np.linalg.norm(psi))


class _Rk4:
    """Fixed-step RK4 for dpsi/dt = i (a(t) A + b(t) B + c(t) C) psi."""

    def __init__(self, ops, coefficients, total_time: float):
        self.ops = ops
        self.coefficients = coefficients
        self.total_time = total_time

    def _rhs(self, psi, coeffs):
        out = np.zeros_like(psi)
        for op, c in zip(self.ops, coeffs):
            if c != 0.0:
                out += c * (op @ psi)
        return 1j * out

    def run(self, psi0: np.ndarray, n_steps: int) -> np.ndarray:
        h = self.total_time / n_steps
        t = np.arange(n_steps) * h
        grid = [self.coefficients(t), self.coefficients(t + 0.5 * h), self.coefficients(t + h)]
        psi = psi0.copy()
        for i in range(n_steps):
            c0 = [g[i] for g in grid[0]]
            cm = [g[i] for g in grid[1]]
            c1 = [g[i] for g in grid[2]]
            k1 = self._rhs(psi, c0)
            k2 = self._rhs(psi + 0.5 * h * k1, cm)
            k3 = self._rhs(psi + 0.5 * h * k2, cm)
            k4 = self._rhs(psi + h * k3, c1)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return psi


def integrate(
    rk4: _Rk4,
    psi0: np.ndarray,
    steps: int = RK4_STEPS,
    tolerance: float = RK4_TOLERANCE,
    max_steps: int = RK4_MAX_STEPS,
    norm_drift: float = NORM_DRIFT,
) -> tuple[np.ndarray, int, float]:
    """Run at n and n/2 steps, doubling n until the Richardson estimate meets ``tolerance``."""
    n = max(int(steps), 2)
    coarse = rk4.run(psi0, n // 2)
    while True:
        fine = rk4.run(psi0, n)
        estimate = float(np.linalg.norm(fine - coarse)) / 15.0
        drift = abs(float(np.linalg.norm(fine)) - 1.0)
        if estimate <= tolerance and drift <= norm_drift:
            return fine / np.linalg.norm(fine), n, estimate
        if 2 * n > max_steps:
            raise StepUnderflowError("RK4 did not reach its tolerance", steps=n, estimate=estimate, drift=drift)
        logger.debug("RK4 at %d steps: estimate %.3g, drift %.3g; doubling", n, estimate, drift)
        coarse, n = fine, 2 * n


def _schedule_coefficients(sched: Schedule, alpha_fn: AlphaFn | None, include_s: bool):
    def coefficients(t):
        lam = np.asarray(sched.lam(t), dtype=float)
        kappa = np.asarray(sched.s(t), dtype=float) if include_s else np.zeros_like(lam)
        if alpha_fn is not None:
            kappa = kappa + np.asarray(sched.lam_dot(t)) * np.asarray(alpha_fn(np.clip(lam, 0.0, 1.0)))
        return lam, 1.0 - lam, kappa
    return coefficients


def cd_evolve(
    inst: ProblemInstance,
    sched: Schedule,
    include_cd: bool = True,
    include_s: bool = True,
    alpha_fn: AlphaFn | None = None,
    steps: int = RK4_STEPS,
    tolerance: float = RK4_TOLERANCE,
    max_steps: int = RK4_MAX_STEPS,
    cap: int = STATEVECTOR_QUBIT_CAP,
) -> StateVector:
    """Evolve ``|+>^n`` under the CD Hamiltonian over ``[0, T]``.

    ``include_cd=False, include_s=False`` is the adiabatic-only baseline.
    """
    _check_cap(inst, cap)
    if include_cd and alpha_fn is None:
        alpha_fn = VariationalAgp(inst)
    ops = (to_sparse(inst.h_target, cap), to_sparse(inst.h_simple, cap), to_sparse(1j * inst.comm, cap))
    rk4 = _Rk4(ops, _schedule_coefficients(sched, alpha_fn if include_cd else None, include_s), sched.total_time)
    psi, n, estimate = integrate(rk4, plus_state(inst.n_qubits).amplitudes, steps, tolerance, max_steps)
    logger.debug("cd_evolve %s T=%.4g cd=%s s=%s: %d steps, error %.2g",
                 inst.label, sched.total_time, include_cd, include_s, n, estimate)
    return StateVector(inst.n_qubits, psi)


def approximation_ratio(inst: ProblemInstance, state) -> float:
    """``<objective> / obj_max``."""
    if inst.obj_max is None:
        raise UnknownOptimumError("the optimum of this instance is unknown", instance=inst.label)
    from .fermions import FermionModes, fermion_objective

    if isinstance(state, FermionModes):
        if state.n_sites != inst.n_qubits:
            raise ValidationError("mode count does not match the instance", N=state.n_sites)
        return fermion_objective(state) / inst.obj_max
    return state.expectation_diagonal(inst.objective_diagonal) / inst.obj_max


def _bloch_operators(inst: ProblemInstance) -> tuple[PauliSum, PauliSum, PauliSum]:
    n = inst.n_qubits
    if inst.kind == SINGLE_SPIN:
        return tuple(PauliSum.from_labels({letter: 1.0}) for letter in "XYZ")
    if inst.kind == TWO_LEVEL:
        x = PauliSum.from_labels({"XI": 0.5, "IX": 0.5})
        y = PauliSum.from_labels({"YZ": 0.5, "ZY": 0.5})
        z = PauliSum.from_term(PauliTerm.from_label("ZZ"))
        return x, y, z
    raise InstanceError("Bloch trajectories exist only for the two-level instances", instance=inst.label, n=n)


def bloch_trajectory(inst: ProblemInstance, angles: AngleSet, samples: int = 25) -> list[tuple[float, float, float]]:
    """Effective-spin Bloch vector sampled inside every unitary of the circuit."""
    ops = _bloch_operators(inst)
    if samples < 2:
        raise ValidationError("need at least two samples per unitary", samples=samples)
    n = inst.n_qubits
    mats = [to_sparse(op, cap=n) for op in ops]
    target = inst.target_diagonal
    psi = plus_state(n).amplitudes.copy()

    def point(vec):
        return tuple(float(np.vdot(vec, m @ vec).real) for m in mats)

    points = [point(psi)]
    fractions = np.linspace(0.0, 1.0, samples)[1:]
    for gamma, beta in zip(angles.gammas, angles.betas):
        if gamma != 0.0:
            points.extend(point(np.exp(1j * f * gamma * target) * psi) for f in fractions)
            psi = np.exp(1j * gamma * target) * psi
        if beta != 0.0:
            points.extend(point(_apply_mixer(psi, n, f * beta)) for f in fractions)
            psi = _apply_mixer(psi, n, beta)
    return points


class OptimizationResult(NamedTuple):
    angles: AngleSet
    ratio: float
    iterations: int
    gradient_norm: float


def _objective_fn(inst: ProblemInstance, cap: int):
    scale = inst.obj_max or 1.0
    values = inst.objective_diagonal

    def value(theta: np.ndarray) -> float:
        p = theta.size // 2
        state = qaoa_state(inst, AngleSet(theta[:p], theta[p:]), cap)
        return state.expectation_diagonal(values) / scale

    return value


def optimize_angles(
    inst: ProblemInstance,
    angles0: AngleSet,
    step: float = GRADIENT_STEP,
    tolerance: float = GRADIENT_TOLERANCE,
    max_iter: int = GRADIENT_MAX_ITER,
    learning_rate: float = 0.1,
    cap: int = STATEVECTOR_QUBIT_CAP,
) -> OptimizationResult:
    """Gradient ascent on the statevector objective with central differences and backtracking."""
    _check_cap(inst, cap)
    value = _objective_fn(inst, cap)
    theta = np.concatenate([angles0.gammas, angles0.betas]).astype(float)
    current = value(theta)
    rate = learning_rate
    grad_norm = float("inf")
    iteration = 0
    for iteration in range(1, max_iter + 1):
        grad = np.empty_like(theta)
        for i in range(theta.size):
            shift = np.zeros_like(theta)
            shift[i] = step
            grad[i] = (value(theta + shift) - value(theta - shift)) / (2.0 * step)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < tolerance:
            break
        while rate > 1e-12:
            trial = theta + rate * grad
            trial_value = value(trial)
            if trial_value > current:
                theta, current = trial, trial_value
                rate *= 1.5
                break
            rate *= 0.5
        else:
            logger.info("line search stalled at iteration %d", iteration)
            break
    p = theta.size // 2
    logger.info("optimized p=%d angles on %s: ratio %.6f after %d iterations (|g|=%.2g)",
                p, inst.label, current, iteration, grad_norm)
    return OptimizationResult(AngleSet(theta[:p].tolist(), theta[p:].tolist()), current, iteration, grad_norm)


class ScanResult(NamedTuple):
    gamma: float
    beta: float
    ratio: float


def scan_p1(inst: ProblemInstance, grid: int = 24, refine: bool = True, cap: int = STATEVECTOR_QUBIT_CAP) -> ScanResult:
    """Best p=1 angles on a (gamma, beta) grid, optionally polished by Nelder-Mead."""
    if grid < 2:
        raise ValidationError("scan grid needs at least two points per axis", grid=grid)
    value = _objective_fn(inst, cap)
    gammas = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    betas = np.linspace(0.0, np.pi, grid, endpoint=False)
    best = max(((value(np.array([g, b])), g, b) for g in gammas for b in betas))
    ratio, gamma, beta = best
    if refine:
        result = minimize(lambda x: -value(x), np.array([gamma, beta]), method="Nelder-Mead",
                          options={"xatol": 1e-9, "fatol": 1e-12, "maxfev": 2000})
        if -result.fun > ratio:
            ratio = -float(result.fun)
            gamma, beta = (float(v) for v in result.x)
    return ScanResult(float(gamma), float(beta), float(ratio))
