"""Effective step generators and the matching error.

One QAOA step ``e^{i beta H_S} e^{i gamma H_T}`` is written ``e^{iZ}`` and
the CD evolution over ``[t0, t0 + tau]`` is written ``e^{i Omega}``. Both
generators are linear combinations of right-nested commutators of three
Hermitian operators:

    T = H_T,  S = H_S,  K = i [H_T, H_S]

A basis key such as ``"STK"`` stands for ``[S, [T, K]]``. The identity part
of H_T is a global phase and is dropped everywhere, so two generators are
compared modulo the identity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import ScheduleError, ValidationError
from .model import ProblemInstance
from .pauli import PauliSum, commutator, norm_sq, pauli_sum_sum, trace_product
from .schedule import Schedule
from .settings import BCH_ORDER, MAGNUS_ORDER, MAX_BCH_ORDER, MAX_MAGNUS_ORDER, QUADRATURE_NODES

logger = logging.getLogger(__name__)

AlphaFn = Callable[[np.ndarray], np.ndarray]

# log(e^X e^Y) with X = i beta H_S and Y = i gamma H_T; a word w1 w2 ... wk
# is the right-nested commutator [w1, [w2, [..., wk]]].
BCH_WORDS: tuple[tuple[int, str, float], ...] = (
    (1, "X", 1.0),
    (1, "Y", 1.0),
    (2, "XY", 1.0 / 2.0),
    (3, "XXY", 1.0 / 12.0),
    (3, "YYX", 1.0 / 12.0),
    (4, "YXXY", -1.0 / 24.0),
    (5, "YYYYX", -1.0 / 720.0),
    (5, "XXXXY", -1.0 / 720.0),
    (5, "XYYYX", 1.0 / 360.0),
    (5, "YXXXY", 1.0 / 360.0),
    (5, "YXYXY", 1.0 / 120.0),
    (5, "XYXYX", 1.0 / 120.0),
)

_LETTER = {"X": "S", "Y": "T"}
_CHANNELS = ("T", "S", "K")


def _check_order(order: int, top: int, name: str) -> None:
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= top:
        raise ValidationError(f"{name} order must be in 1..{top}", order=order)


class OperatorBasis:
    """Memoized nested commutators and their Gram matrix for one instance."""

    def __init__(self, inst: ProblemInstance):
        self.inst = inst
        self._ops: dict[str, PauliSum] = {
            "T": inst.h_target.without_identity(),
            "S": inst.h_simple.without_identity(),
            "K": 1j * inst.comm,
        }
        self._traces: dict[tuple[str, str], complex] = {}

    def op(self, key: str) -> PauliSum:
        cached = self._ops.get(key)
        if cached is not None:
            return cached
        if not key or any(ch not in _CHANNELS for ch in key):
            raise ValidationError(f"bad basis key {key!r}")
        value = commutator(self.op(key[0]), self.op(key[1:]))
        self._ops[key] = value
        return value

    def trace(self, a: str, b: str) -> complex:
        pair = (a, b) if a <= b else (b, a)
        if pair not in self._traces:
            self._traces[pair] = trace_product(self.op(a), self.op(b))
        return self._traces[pair]

    def gram(self, keys: Sequence[str]) -> np.ndarray:
        g = np.empty((len(keys), len(keys)), dtype=complex)
        for i, a in enumerate(keys):
            for j in range(i, len(keys)):
                g[i, j] = g[j, i] = self.trace(a, keys[j])
        return g

    def combine(self, coefficients: Mapping[str, complex]) -> PauliSum:
        parts = [coeff * self.op(key) for key, coeff in coefficients.items() if coeff != 0]
        return pauli_sum_sum(parts, self.inst.n_qubits)


@dataclass
class GeneratorSeries:
    """Per-order generator terms; ``total`` is their exact sum."""

    terms_by_order: list[PauliSum]
    total: PauliSum
    order: int
    coefficients: list[dict[str, complex]] = field(default_factory=list)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return all(term.is_hermitian(atol) for term in self.terms_by_order)

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "terms_by_order": [term.to_json() for term in self.terms_by_order],
            "total": self.total.to_json(),
        }


def _series(basis: OperatorBasis, coefficients: list[dict[str, complex]]) -> GeneratorSeries:
    terms = [basis.combine(c) for c in coefficients]
    total = pauli_sum_sum(terms, basis.inst.n_qubits)
    return GeneratorSeries(terms, total, len(coefficients), coefficients)


def bch_coefficients(
    gamma: float, beta: float, order: int = BCH_ORDER, words: Sequence[tuple[int, str, float]] = BCH_WORDS
) -> list[dict[str, complex]]:
    """Coefficients of Z on basis keys, one dict per order.

    A word of length k with m letters X contributes
    ``-i c i^k beta^m gamma^(k-m)`` to the key obtained by X -> S, Y -> T.
    """
    _check_order(order, MAX_BCH_ORDER, "BCH")
    if not (math.isfinite(gamma) and math.isfinite(beta)):
        raise ValidationError("angles must be finite", gamma=gamma, beta=beta)
    by_order: list[dict[str, complex]] = [{} for _ in range(order)]
    for degree, word, coeff in words:
        if degree > order:
            continue
        m = word.count("X")
        value = -1j * coeff * (1j**degree) * beta**m * gamma ** (degree - m)
        key = "".join(_LETTER[ch] for ch in word)
        bucket = by_order[degree - 1]
        bucket[key] = bucket.get(key, 0j) + value
    return by_order


def bch_generator(
    inst: ProblemInstance,
    gamma: float,
    beta: float,
    order: int = BCH_ORDER,
    words: Sequence[tuple[int, str, float]] = BCH_WORDS,
    basis: OperatorBasis | None = None,
) -> GeneratorSeries:
    """Z(gamma, beta) with ``e^{i beta H_S} e^{i gamma H_T} = e^{iZ}`` to ``order``."""
    basis = basis or OperatorBasis(inst)
    return _series(basis, bch_coefficients(gamma, beta, order, words))


class _Quadrature:
    """Gauss-Legendre on the unit simplex via t1 = x1, t2 = x1 x2, t3 = x1 x2 x3."""

    def __init__(self, nodes: int):
        xi, w = np.polynomial.legendre.leggauss(nodes)
        self.x = 0.5 * (xi + 1.0)
        self.w = 0.5 * w
        x, wt = self.x, self.w
        self.u1 = x
        self.u2 = x[:, None] * x[None, :]
        self.u3 = self.u2[:, :, None] * x[None, None, :]
        self.w1 = wt
        self.w2 = (wt * x)[:, None] * wt[None, :]
        self.w3 = (wt * x * x)[:, None, None] * (wt * x)[None, :, None] * wt[None, None, :]


_QUADRATURES: dict[int, _Quadrature] = {}


def _quadrature(nodes: int) -> _Quadrature:
    if nodes not in _QUADRATURES:
        _QUADRATURES[nodes] = _Quadrature(nodes)
    return _QUADRATURES[nodes]


def _channels(sched: Schedule, alpha_fn: AlphaFn | None, t: np.ndarray) -> np.ndarray:
    """Coefficients of (T, S, K) in H(t), stacked on a new leading axis."""
    lam = np.asarray(sched.lam(t), dtype=float)
    kappa = np.asarray(sched.s(t), dtype=float)
    if alpha_fn is not None:
        kappa = kappa + np.asarray(sched.lam_dot(t)) * np.asarray(alpha_fn(np.clip(lam, 0.0, 1.0)))
    return np.stack([lam, 1.0 - lam, kappa])


def magnus_coefficients(
    sched: Schedule,
    alpha_fn: AlphaFn | None,
    t0: float,
    tau: float,
    order: int = MAGNUS_ORDER,
    nodes: int = QUADRATURE_NODES,
    allow_overrun: bool = False,
) -> list[dict[str, complex]]:
    """Coefficients of Omega on basis keys, one dict per order.

    ``alpha_fn=None`` switches the gauge-potential term off; s(t) stays.
    """
    _check_order(order, MAX_MAGNUS_ORDER, "Magnus")
    if not tau > 0:
        raise ScheduleError("step duration must be positive", tau=tau)
    end = t0 + tau
    T = sched.total_time
    if t0 < -1e-12 or t0 > T + 1e-12 or (not allow_overrun and end > T * (1.0 + 1e-12)):
        raise ScheduleError("interval outside the schedule", t0=t0, tau=tau, T=T)
    quad = _quadrature(nodes)

    f1 = _channels(sched, alpha_fn, t0 + tau * quad.u1)
    first = tau * np.einsum("i,ai->a", quad.w1, f1)
    if alpha_fn is not None and hasattr(alpha_fn, "integral"):
        # the CD weight is int alpha dlam over the interval
        lam_a, lam_b = float(sched.lam(t0)), float(sched.lam(end))
        s_part = tau * float(np.dot(quad.w1, np.asarray(sched.s(t0 + tau * quad.u1))))
        first[2] = s_part + float(alpha_fn.integral(lam_a, lam_b))
    result: list[dict[str, complex]] = [
        {ch: complex(first[a]) for a, ch in enumerate(_CHANNELS)}
    ]
    if order >= 2:
        f2 = _channels(sched, alpha_fn, t0 + tau * quad.u2)
        m2 = tau**2 * np.einsum("ij,ai,bij->ab", quad.w2, f1, f2)
        second: dict[str, complex] = {}
        for a in range(3):
            for b in range(a + 1, 3):
                second[_CHANNELS[a] + _CHANNELS[b]] = 0.5j * (m2[a, b] - m2[b, a])
        result.append(second)
    if order >= 3:
        f3 = _channels(sched, alpha_fn, t0 + tau * quad.u3)
        m3 = tau**3 * np.einsum("ijl,ai,bij,cijl->abc", quad.w3, f1, f2, f3)
        sym = m3 + np.transpose(m3, (2, 1, 0))
        third: dict[str, complex] = {}
        for a in range(3):
            for b in range(3):
                for c in range(b + 1, 3):
                    third[_CHANNELS[a] + _CHANNELS[b] + _CHANNELS[c]] = complex(
                        -(sym[a, b, c] - sym[a, c, b]) / 6.0
                    )
        result.append(third)
    return result


def magnus_generator(
    inst: ProblemInstance,
    sched: Schedule,
    alpha_fn: AlphaFn | None,
    t0: float,
    tau: float,
    order: int = MAGNUS_ORDER,
    nodes: int = QUADRATURE_NODES,
    allow_overrun: bool = False,
    basis: OperatorBasis | None = None,
) -> GeneratorSeries:
    """Omega(t0, tau) with ``T exp(i int H dt) = e^{i Omega}`` to ``order``."""
    basis = basis or OperatorBasis(inst)
    return _series(basis, magnus_coefficients(sched, alpha_fn, t0, tau, order, nodes, allow_overrun))


def _flatten(coefficients: list[dict[str, complex]]) -> dict[str, complex]:
    flat: dict[str, complex] = {}
    for bucket in coefficients:
        for key, value in bucket.items():
            flat[key] = flat.get(key, 0j) + value
    return flat


def step_error(
    inst: ProblemInstance,
    gamma: float,
    beta: float,
    sched: Schedule,
    alpha_fn: AlphaFn | None,
    t0: float,
    tau: float,
    orders: tuple[int, int] = (BCH_ORDER, MAGNUS_ORDER),
    allow_overrun: bool = False,
    basis: OperatorBasis | None = None,
) -> float:
    """``sqrt(|tr((Z - Omega)^2)| / 2^n) / tau`` on explicit Pauli sums."""
    if not tau > 0:
        raise ScheduleError("step duration must be positive", tau=tau)
    basis = basis or OperatorBasis(inst)
    z = bch_generator(inst, gamma, beta, orders[0], basis=basis).total
    omega = magnus_generator(inst, sched, alpha_fn, t0, tau, orders[1], allow_overrun=allow_overrun, basis=basis).total
    return math.sqrt(abs(norm_sq(z - omega))) / tau


class StepMatcher:
    """Matching error in coefficient space for a fixed instance and orders.

    ``error_sq`` never builds a Pauli sum: Z and Omega are coefficient
    vectors on a shared key list and ``tr((Z - Omega)^2)`` is ``c^T G c``.
    """

    def __init__(
        self,
        inst: ProblemInstance,
        orders: tuple[int, int] = (BCH_ORDER, MAGNUS_ORDER),
        nodes: int = QUADRATURE_NODES,
        basis: OperatorBasis | None = None,
        words: Sequence[tuple[int, str, float]] = BCH_WORDS,
    ):
        bch_order, magnus_order = orders
        _check_order(bch_order, MAX_BCH_ORDER, "BCH")
        _check_order(magnus_order, MAX_MAGNUS_ORDER, "Magnus")
        self.inst = inst
        self.orders = (int(bch_order), int(magnus_order))
        self.nodes = nodes
        self.words = tuple(words)
        self.basis = basis or OperatorBasis(inst)
        bch_keys = _flatten(bch_coefficients(0.3, 0.7, bch_order, self.words)).keys()
        magnus_keys = [ch for ch in _CHANNELS]
        if magnus_order >= 2:
            magnus_keys += [a + b for i, a in enumerate(_CHANNELS) for b in _CHANNELS[i + 1:]]
        if magnus_order >= 3:
            magnus_keys += [a + b + c for a in _CHANNELS for i, b in enumerate(_CHANNELS) for c in _CHANNELS[i + 1:]]
        self.keys = list(dict.fromkeys([*bch_keys, *magnus_keys]))
        self._index = {key: i for i, key in enumerate(self.keys)}
        self.gram = self.basis.gram(self.keys)
        logger.debug("step matcher on %s: %d basis keys, orders %s", inst.label, len(self.keys), self.orders)

    def _vector(self, coefficients: list[dict[str, complex]]) -> np.ndarray:
        vec = np.zeros(len(self.keys), dtype=complex)
        for bucket in coefficients:
            for key, value in bucket.items():
                vec[self._index[key]] += value
        return vec

    def bch_vector(self, gamma: float, beta: float) -> np.ndarray:
        return self._vector(bch_coefficients(gamma, beta, self.orders[0], self.words))

    def magnus_vector(self, sched: Schedule, alpha_fn: AlphaFn | None, t0: float, tau: float) -> np.ndarray:
        return self._vector(
            magnus_coefficients(sched, alpha_fn, t0, tau, self.orders[1], self.nodes, allow_overrun=True)
        )

    def residual_sq(self, z: np.ndarray, omega: np.ndarray) -> float:
        diff = z - omega
        return abs(complex(diff @ self.gram @ diff).real)

    def error_sq(self, gamma: float, beta: float, sched: Schedule, alpha_fn: AlphaFn | None,
                 t0: float, tau: float) -> float:
        """e^2 for one step."""
        omega = self.magnus_vector(sched, alpha_fn, t0, tau)
        return self.residual_sq(self.bch_vector(gamma, beta), omega) / tau**2

    def error(self, gamma: float, beta: float, sched: Schedule, alpha_fn: AlphaFn | None,
              t0: float, tau: float) -> float:
        return math.sqrt(self.error_sq(gamma, beta, sched, alpha_fn, t0, tau))
