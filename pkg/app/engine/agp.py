"""First-order variational adiabatic gauge potential.

With H = lam H_T + (1 - lam) H_S and the ansatz A = alpha i[H_T, H_S], the
action minimum is

    alpha(lam) = ||C||^2 / ||lam P + (1 - lam) Q||^2,
    C = [H_T, H_S],  P = [H_T, C],  Q = [H_S, C].

The numerator is the (negative) square of an anti-Hermitian operator, so
alpha is never positive. Only four traces depend on the instance;
``VariationalAgp`` caches them.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, DegenerateCommutatorError, InstanceError, TriangleWarning, ValidationError
from .model import ISING_RING, MAXCUT, SINGLE_SPIN, TWO_LEVEL, ProblemInstance
from .pauli import commutator, norm_sq, trace_product

logger = logging.getLogger(__name__)

DEGENERACY_CUT = 1e-14
INTEGRAL_NODES = 16

NUMERIC = "numeric"
CLOSED_TWO_LEVEL = "closed_two_level"
CLOSED_SINGLE_SPIN = "closed_single_spin"
CLOSED_CHAIN = "closed_chain"
CLOSED_REGULAR = "closed_regular"

_CLOSED_KINDS = ("two_level", "single_spin", "chain", "regular")


def _check_lambda(lam) -> np.ndarray:
    values = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValidationError("lambda must be finite")
    if np.any(values < -1e-12) or np.any(values > 1.0 + 1e-12):
        raise ValidationError("lambda must lie in [0, 1]", lam=np.asarray(lam).tolist())
    return values


class VariationalAgp:
    """alpha(lam) for one instance as a rational function of lam.

    Instances are callable on scalars or arrays. ``integral(la, lb)`` is the
    exact-to-quadrature ``int alpha dlam``, the counterdiabatic weight a
    schedule accumulates while lam moves from ``la`` to ``lb``.
    """

    def __init__(self, inst: ProblemInstance):
        self.inst = inst
        comm = inst.comm
        p_op = commutator(inst.h_target, comm)
        q_op = commutator(inst.h_simple, comm)
        self.n_c = norm_sq(comm)
        self.n_p = norm_sq(p_op)
        self.n_q = norm_sq(q_op)
        self.n_pq = float(trace_product(p_op, q_op).real)
        if abs(self.n_c) < DEGENERACY_CUT:
            raise DegenerateCommutatorError(
                "[H_T, H_S] vanishes; there is no counterdiabatic direction", instance=inst.label
            )
        self._nodes, self._weights = np.polynomial.legendre.leggauss(INTEGRAL_NODES)
        logger.debug(
            "variational AGP for %s: |C|^2=%.6g |P|^2=%.6g |Q|^2=%.6g <P,Q>=%.6g",
            inst.label, self.n_c, self.n_p, self.n_q, self.n_pq,
        )

    def denominator(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam * lam * self.n_p + 2.0 * lam * (1.0 - lam) * self.n_pq + (1.0 - lam) ** 2 * self.n_q

    def __call__(self, lam):
        denom = self.denominator(lam)
        if np.any(np.abs(denom) < DEGENERACY_CUT):
            raise DegenerateCommutatorError("gauge-potential denominator vanishes", lam=np.asarray(lam).tolist())
        values = self.n_c / denom
        return float(values) if np.ndim(values) == 0 else values

    def integral(self, la, lb):
        """``int_la^lb alpha(lam) dlam``; vectorized over the bounds."""
        la = np.asarray(la, dtype=float)
        lb = np.asarray(lb, dtype=float)
        half = 0.5 * (lb - la)
        mid = 0.5 * (lb + la)
        pts = mid[..., None] + half[..., None] * self._nodes
        values = half * np.sum(self._weights * (self.n_c / self.denominator(pts)), axis=-1)
        return float(values) if np.ndim(values) == 0 else values

    def __repr__(self) -> str:
        return f"<VariationalAgp {self.inst.label}>"


def alpha_numeric(inst: ProblemInstance, lam: float) -> float:
    """alpha(lam) built literally from the operators at this lam."""
    lam = float(_check_lambda(lam))
    h = lam * inst.h_target + (1.0 - lam) * inst.h_simple
    dh = inst.h_target - inst.h_simple
    first = commutator(h, dh)
    second = commutator(first, h)
    denom = norm_sq(second)
    if abs(denom) < DEGENERACY_CUT:
        raise DegenerateCommutatorError("[[H, dH], H] vanishes", lam=lam, instance=inst.label)
    return norm_sq(first) / denom


def _two_level(lam):
    return -1.0 / (16.0 * (1.0 - lam) ** 2 + lam**2)


def _single_spin(lam):
    return -1.0 / (4.0 * (lam**2 + (1.0 - lam) ** 2))


def _regular_derived(lam, nu):
    return -1.0 / ((3.0 * nu - 2.0) * lam**2 + 16.0 * (1.0 - lam) ** 2)


def _chain_printed(lam):
    a = (1.0 - lam) ** 2
    b = lam**2
    return (-a - b) / (8.0 * (a + b) ** 2 + 8.0 * a * b)


def _regular_printed(lam, nu):
    a = (1.0 - lam) ** 2
    b = lam**2
    num = -32.0 * a - 8.0 * (3.0 * nu - 2.0) * b
    den = (
        256.0 * (a + 4.0 * (3.0 * nu - 2.0) * b) ** 2
        + 256.0 * b * a * (nu - 1.0)
        + 96.0 * (nu - 1.0) * (nu - 2.0) * b * b
    )
    return num / den


def alpha_closed(kind: str, lam, nu: int | None = None, printed: bool = True):
    """Closed-form alpha(lam).

    ``printed=True`` evaluates the published expressions; ``printed=False``
    the ones that follow from the commutator ansatz with this package's
    Hamiltonians. The two agree for the two-level pair and at lam = 1/2 on
    the chain, and differ by a lam-dependent factor elsewhere.
    """
    lam = _check_lambda(lam)
    if kind == "two_level":
        values = _two_level(lam)
    elif kind == "single_spin":
        values = _single_spin(lam)
    elif kind == "chain":
        values = _chain_printed(lam) if printed else _regular_derived(lam, 2)
    elif kind == "regular":
        if nu is None or nu < 1:
            raise ValidationError("the regular closed form needs a degree nu >= 1", nu=nu)
        values = _regular_printed(lam, nu) if printed else _regular_derived(lam, nu)
    else:
        raise ValidationError(f"no closed form for {kind!r}", known=list(_CLOSED_KINDS))
    return float(values) if np.ndim(values) == 0 else values


def closed_kind(inst: ProblemInstance) -> tuple[str, int | None] | None:
    """Closed-form family of an instance, or None when it has none."""
    if inst.kind == TWO_LEVEL:
        return "two_level", None
    if inst.kind == SINGLE_SPIN:
        return "single_spin", None
    if inst.kind == ISING_RING:
        return "chain", 2
    if inst.kind == MAXCUT and inst.degree is not None:
        return "regular", inst.degree
    return None


def alpha_closed_for(inst: ProblemInstance, lam, printed: bool = True):
    family = closed_kind(inst)
    if family is None:
        raise InstanceError("no closed-form alpha for an irregular graph", instance=inst.label)
    kind, nu = family
    if kind == "regular" and inst.has_triangles:
        message = f"{inst.label} has triangles; the regular closed form assumes none"
        logger.warning(message)
        warnings.warn(message, TriangleWarning, stacklevel=2)
    return alpha_closed(kind, lam, nu=nu, printed=printed)


@dataclass
class AlphaProfile:
    """Sampled alpha(lam) for one instance."""

    instance: str
    method: str
    grid: list[tuple[float, float]] = field(default_factory=list)
    nu: int | None = None

    def __post_init__(self):
        lams = [lam for lam, _ in self.grid]
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValidationError("alpha grid must be strictly increasing in lambda")
        if lams and (lams[0] < 0.0 or lams[-1] > 1.0):
            raise ValidationError("alpha grid must lie in [0, 1]")
        positive = [(lam, a) for lam, a in self.grid if a > 1e-15]
        if positive:
            raise ContractError("gauge-potential coefficient must be non-positive", samples=positive[:3])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([lam for lam, _ in self.grid])

    @property
    def values(self) -> np.ndarray:
        return np.array([a for _, a in self.grid])

    def to_dict(self) -> dict:
        return {"instance": self.instance, "method": self.method, "nu": self.nu,
                "grid": [[lam, a] for lam, a in self.grid]}


def default_grid(points: int = 11) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def alpha_profile(inst: ProblemInstance, grid=None, method: str = NUMERIC, printed: bool = False) -> AlphaProfile:
    lams = default_grid() if grid is None else np.asarray(grid, dtype=float)
    nu = None
    if method == NUMERIC:
        values = VariationalAgp(inst)(lams)
    else:
        family = closed_kind(inst)
        if family is None:
            raise InstanceError("no closed-form alpha for this instance", instance=inst.label)
        kind, nu = family
        expected = {"two_level": CLOSED_TWO_LEVEL, "single_spin": CLOSED_SINGLE_SPIN,
                    "chain": CLOSED_CHAIN, "regular": CLOSED_REGULAR}[kind]
        if method != expected:
            raise ValidationError(f"method {method!r} does not apply to {inst.label}", expected=expected)
        values = alpha_closed_for(inst, lams, printed=printed)
    values = np.atleast_1d(values)
    return AlphaProfile(inst.label, method, [(float(l), float(a)) for l, a in zip(lams, values)], nu=nu)
