"""Free-fermion simulation of the transverse-field Ising ring.

After Jordan-Wigner (X_i = 1 - 2 n_i) the ring Hamiltonian

    a sum Z_i Z_{i+1} + b sum X_i + c sum (Y_i Z_{i+1} + Z_i Y_{i+1})

splits into independent 2x2 blocks, one per antiperiodic momentum
k = (2m - 1) pi / N, m = 1..N/2, acting on (|0>, c+_k c+_-k |0>). The
fermion vacuum is |+>^N, the maximal eigenstate of sum X_i.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ContractError, InstanceError, ValidationError
from .agp import VariationalAgp
from .expand import AlphaFn
from .matching import AngleSet
from .model import build_ising_ring
from .schedule import Schedule
from .settings import RK4_MAX_STEPS, RK4_STEPS, RK4_TOLERANCE
from .sim import _Rk4, integrate

logger = logging.getLogger(__name__)

CONTINUOUS = "continuous"
QAOA = "qaoa"
NORM_TOLERANCE = 1e-10


def _check_sites(n_sites: int) -> int:
    if not isinstance(n_sites, (int, np.integer)) or n_sites < 4 or n_sites % 2:
        raise InstanceError("the free-fermion ring needs an even number of sites >= 4", N=n_sites)
    return int(n_sites)


def ring_momenta(n_sites: int) -> np.ndarray:
    n = _check_sites(n_sites)
    return (2.0 * np.arange(1, n // 2 + 1) - 1.0) * np.pi / n


def mode_blocks(momenta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-mode images of sum ZZ, sum X and sum (YZ + ZY), each of shape (M, 2, 2)."""
    sin, cos = np.sin(momenta), np.cos(momenta)
    m = momenta.size
    zz = np.zeros((m, 2, 2), dtype=complex)
    zz[:, 0, 1] = 2j * sin
    zz[:, 1, 0] = -2j * sin
    zz[:, 1, 1] = 4.0 * cos
    x = np.zeros((m, 2, 2), dtype=complex)
    x[:, 0, 0] = 2.0
    x[:, 1, 1] = -2.0
    yz = np.zeros((m, 2, 2), dtype=complex)
    yz[:, 0, 1] = -4.0 * sin
    yz[:, 1, 0] = -4.0 * sin
    return zz, x, yz


def mode_hamiltonians(momenta: np.ndarray, a: float, b: float, c: float) -> np.ndarray:
    zz, x, yz = mode_blocks(momenta)
    return a * zz + b * x + c * yz


@dataclass(frozen=True)
class FermionModes:
    n_sites: int
    momenta: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (self.n_sites // 2, 2):
            raise ValidationError("need one two-component amplitude per momentum", N=self.n_sites)
        norms = np.sum(np.abs(self.amplitudes) ** 2, axis=1)
        drift = float(np.max(np.abs(norms - 1.0)))
        if drift > NORM_TOLERANCE:
            raise ContractError("fermion mode is not normalized", drift=drift)

    @classmethod
    def vacuum(cls, n_sites: int) -> "FermionModes":
        momenta = ring_momenta(n_sites)
        amplitudes = np.zeros((momenta.size, 2), dtype=complex)
        amplitudes[:, 0] = 1.0
        return cls(int(n_sites), momenta, amplitudes)

    def zz_expectation(self) -> float:
        zz, _, _ = mode_blocks(self.momenta)
        psi = self.amplitudes
        return float(np.einsum("ki,kij,kj->", psi.conj(), zz, psi).real)


def fermion_objective(modes: FermionModes) -> float:
    """Expected cut ``N/2 - <sum Z_i Z_{i+1}>/2``."""
    return 0.5 * modes.n_sites - 0.5 * modes.zz_expectation()


def _mode_exponential(blocks: np.ndarray, angle: float) -> np.ndarray:
    """``exp(i angle H_k)`` for every block."""
    w, v = np.linalg.eigh(blocks)
    return np.einsum("kij,kj,klj->kil", v, np.exp(1j * angle * w), v.conj())


class _BlockOp:
    """Block-diagonal operator acting on the flattened mode amplitudes."""

    def __init__(self, blocks: np.ndarray):
        self.blocks = blocks

    def __matmul__(self, psi: np.ndarray) -> np.ndarray:
        return np.einsum("kij,kj->ki", self.blocks, psi.reshape(-1, 2)).reshape(-1)


@lru_cache(maxsize=1)
def ring_alpha() -> VariationalAgp:
    """Gauge-potential coefficient of the ring; independent of N."""
    return VariationalAgp(build_ising_ring(8))


def fermion_evolve(
    n_sites: int,
    schedule: Schedule | None = None,
    angles: AngleSet | None = None,
    mode: str = CONTINUOUS,
    include_cd: bool = True,
    include_s: bool = True,
    alpha_fn: AlphaFn | None = None,
    steps: int = RK4_STEPS,
    tolerance: float = RK4_TOLERANCE,
    max_steps: int = RK4_MAX_STEPS,
) -> FermionModes:
    """Evolve the vacuum under a QAOA circuit or a continuous CD protocol."""
    modes = FermionModes.vacuum(n_sites)
    zz, x, yz = mode_blocks(modes.momenta)
    if mode == QAOA:
        if angles is None:
            raise ValidationError("QAOA mode needs an angle set")
        target = -0.5 * zz
        psi = modes.amplitudes.copy()
        for gamma, beta in zip(angles.gammas, angles.betas):
            psi = np.einsum("kij,kj->ki", _mode_exponential(target, gamma), psi)
            psi[:, 0] *= np.exp(2j * beta)
            psi[:, 1] *= np.exp(-2j * beta)
        psi /= np.linalg.norm(psi, axis=1, keepdims=True)
        return FermionModes(modes.n_sites, modes.momenta, psi)
    if mode != CONTINUOUS:
        raise ValidationError(f"unknown fermion mode {mode!r}", known=[CONTINUOUS, QAOA])
    if schedule is None:
        raise ValidationError("continuous mode needs a schedule")
    if include_cd and alpha_fn is None:
        alpha_fn = ring_alpha()

    def coefficients(t):
        lam = np.asarray(schedule.lam(t), dtype=float)
        kappa = np.asarray(schedule.s(t), dtype=float) if include_s else np.zeros_like(lam)
        if include_cd:
            kappa = kappa + np.asarray(schedule.lam_dot(t)) * np.asarray(alpha_fn(np.clip(lam, 0.0, 1.0)))
        # H_T = -ZZ/2, H_S = X, i[H_T, H_S] = YZ + ZY
        return -0.5 * lam, 1.0 - lam, kappa

    count = modes.momenta.size
    rk4 = _Rk4((_BlockOp(zz), _BlockOp(x), _BlockOp(yz)), coefficients, schedule.total_time)
    psi0 = modes.amplitudes.reshape(-1) / np.sqrt(count)
    flat, n, estimate = integrate(rk4, psi0, steps, tolerance, max_steps)
    psi = flat.reshape(-1, 2)
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    logger.debug("fermion_evolve N=%d T=%.4g: %d steps, error %.2g", n_sites, schedule.total_time, n, estimate)
    return FermionModes(modes.n_sites, modes.momenta, psi)
