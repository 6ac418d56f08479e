"""Exact algebra over sums of Pauli strings.

A term is stored as two bit masks over ``n_qubits``: bit ``j`` of ``x_mask``
puts an X factor on qubit ``j`` and bit ``j`` of ``z_mask`` a Z factor. A
qubit present in both masks carries the Hermitian Y, so every term is a
Hermitian Pauli string and products pick up a phase in {1, i, -1, -i}.
The phase convention is ZX = iY (equivalently XY = iZ, YZ = iX).

Traces are normalized, ``tr(A B) / 2**n``, which keeps coefficients such as
the gauge-potential ratio independent of system size.
"""
from __future__ import annotations

import logging
from contextlib import contextmanager
from contextvars import ContextVar, Token
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy import sparse

from ..errors import ContractError, DimensionError, ResourceLimitError, ValidationError
from .settings import DENSE_QUBIT_CAP, PRUNE_THRESHOLD, STATEVECTOR_QUBIT_CAP

logger = logging.getLogger(__name__)

_PHASES = (1 + 0j, 1j, -1 + 0j, -1j)
_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {letter: bits for bits, letter in _LETTERS.items()}

_prune_threshold: ContextVar[float] = ContextVar("prune_threshold", default=PRUNE_THRESHOLD)


def set_prune_threshold(value: float) -> Token:
    """Set the coefficient cut applied after every arithmetic pass.

    The cut lives in a context variable, so a run (or a worker thread started
    from a copied context) only sees its own value.
    """
    if not value >= 0.0:
        raise ValidationError("prune threshold must be non-negative", value=value)
    return _prune_threshold.set(float(value))


@contextmanager
def pruning(value: float) -> Iterator[None]:
    token = set_prune_threshold(value)
    try:
        yield
    finally:
        _prune_threshold.reset(token)


def prune_threshold() -> float:
    return _prune_threshold.get()


@dataclass(frozen=True, slots=True)
class PauliTerm:
    """A Hermitian Pauli string on ``n_qubits`` qubits."""

    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("a Pauli term needs at least one qubit")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise DimensionError(
                f"masks do not fit in {self.n_qubits} qubits",
                x_mask=self.x_mask,
                z_mask=self.z_mask,
            )

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliTerm":
        return cls(n_qubits)

    @classmethod
    def from_label(cls, label: str) -> "PauliTerm":
        """Build from a string such as ``"XIZY"``; character ``j`` is qubit ``j``."""
        x_mask = z_mask = 0
        for qubit, letter in enumerate(label.upper()):
            try:
                x_bit, z_bit = _BITS[letter]
            except KeyError:
                raise ValidationError(f"unknown Pauli letter {letter!r} in {label!r}") from None
            x_mask |= x_bit << qubit
            z_mask |= z_bit << qubit
        return cls(len(label), x_mask, z_mask)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliTerm":
        if not 0 <= qubit < n_qubits:
            raise DimensionError(f"qubit {qubit} outside 0..{n_qubits - 1}")
        x_bit, z_bit = _BITS[letter.upper()]
        return cls(n_qubits, x_bit << qubit, z_bit << qubit)

    @classmethod
    def product_of(cls, n_qubits: int, factors: Mapping[int, str]) -> "PauliTerm":
        """Tensor product of single-qubit letters, e.g. ``{0: "Y", 3: "Z"}``."""
        x_mask = z_mask = 0
        for qubit, letter in factors.items():
            term = cls.single(n_qubits, qubit, letter)
            x_mask |= term.x_mask
            z_mask |= term.z_mask
        return cls(n_qubits, x_mask, z_mask)

    @property
    def label(self) -> str:
        return "".join(
            _LETTERS[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)]
            for q in range(self.n_qubits)
        )

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def is_diagonal(self) -> bool:
        return self.x_mask == 0

    @property
    def weight(self) -> int:
        return (self.x_mask | self.z_mask).bit_count()

    def commutes_with(self, other: "PauliTerm") -> bool:
        overlap = (self.x_mask & other.z_mask).bit_count() + (self.z_mask & other.x_mask).bit_count()
        return overlap % 2 == 0

    def __repr__(self) -> str:
        return f"PauliTerm({self.label})"


def _check_same_size(a, b) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(
            f"operands act on {a.n_qubits} and {b.n_qubits} qubits",
        )


def multiply(a: PauliTerm, b: PauliTerm) -> tuple[PauliTerm, complex]:
    """Product of two terms as ``(term, phase)`` with ``a b = phase * term``."""
    _check_same_size(a, b)
    x_mask = a.x_mask ^ b.x_mask
    z_mask = a.z_mask ^ b.z_mask
    # P(x, z) = i^{|x&z|} X^x Z^z, and moving X^{x_b} left past Z^{z_a} costs (-1)^{|z_a&x_b|}.
    exponent = (
        (a.x_mask & a.z_mask).bit_count()
        + (b.x_mask & b.z_mask).bit_count()
        - (x_mask & z_mask).bit_count()
        + 2 * (a.z_mask & b.x_mask).bit_count()
    )
    return PauliTerm(a.n_qubits, x_mask, z_mask), _PHASES[exponent % 4]


class PauliSum:
    """Immutable finite linear combination of Pauli terms."""

    __slots__ = ("n_qubits", "_terms")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[PauliTerm, complex] | Iterable[tuple[PauliTerm, complex]] = (),
        prune: float | None = None,
    ):
        if n_qubits < 1:
            raise ValidationError("a Pauli sum needs at least one qubit")
        cut = _prune_threshold.get() if prune is None else prune
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[PauliTerm, complex] = {}
        for term, coeff in items:
            if term.n_qubits != n_qubits:
                raise DimensionError(
                    f"term {term.label} acts on {term.n_qubits} qubits, sum on {n_qubits}"
                )
            acc[term] = acc.get(term, 0j) + complex(coeff)
        self.n_qubits = n_qubits
        self._terms = {t: c for t, c in acc.items() if abs(c) > cut}

    # construction helpers

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, [(PauliTerm.identity(n_qubits), coeff)])

    @classmethod
    def from_term(cls, term: PauliTerm, coeff: complex = 1.0) -> "PauliSum":
        return cls(term.n_qubits, [(term, coeff)])

    @classmethod
    def from_labels(cls, labels: Mapping[str, complex]) -> "PauliSum":
        """``{"XZ": 1.0, "ZX": 0.5}`` style constructor; all labels share one length."""
        if not labels:
            raise ValidationError("from_labels needs at least one label")
        parsed = [(PauliTerm.from_label(label), coeff) for label, coeff in labels.items()]
        sizes = {term.n_qubits for term, _ in parsed}
        if len(sizes) != 1:
            raise DimensionError("labels of different lengths", lengths=sorted(sizes))
        return cls(sizes.pop(), parsed)

    # mapping view

    @property
    def terms(self) -> Mapping[PauliTerm, complex]:
        return MappingProxyType(self._terms)

    def coefficient(self, term: PauliTerm | str) -> complex:
        if isinstance(term, str):
            term = PauliTerm.from_label(term)
        return self._terms.get(term, 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[PauliTerm, complex]]:
        return iter(self._terms.items())

    def __bool__(self) -> bool:
        return bool(self._terms)

    # linear structure

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        _check_same_size(self, other)
        merged = dict(self._terms)
        for term, coeff in other._terms.items():
            merged[term] = merged.get(term, 0j) + coeff
        return PauliSum(self.n_qubits, merged)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self + (-1.0) * other

    def __neg__(self) -> "PauliSum":
        return (-1.0) * self

    def __mul__(self, scalar: complex) -> "PauliSum":
        if isinstance(scalar, PauliSum):
            return product(self, scalar)
        try:
            factor = complex(scalar)
        except TypeError:
            return NotImplemented
        return PauliSum(self.n_qubits, {t: c * factor for t, c in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return product(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    __hash__ = None

    def isclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        _check_same_size(self, other)
        keys = self._terms.keys() | other._terms.keys()
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol for k in keys)

    def dagger(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {t: c.conjugate() for t, c in self._terms.items()})

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= atol for c in self._terms.values())

    def is_anti_hermitian(self, atol: float = 1e-12) -> bool:
        return all(abs(c.real) <= atol for c in self._terms.values())

    def without_identity(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {t: c for t, c in self._terms.items() if not t.is_identity})

    # serialization

    def to_json(self) -> list[dict]:
        return [
            {"paulis": term.label, "re": coeff.real, "im": coeff.imag}
            for term, coeff in sorted(self._terms.items(), key=lambda item: item[0].label)
        ]

    @classmethod
    def from_json(cls, payload: list[dict], n_qubits: int | None = None) -> "PauliSum":
        if not payload:
            if n_qubits is None:
                raise ValidationError("empty Pauli sum needs an explicit qubit count")
            return cls(n_qubits)
        parsed = []
        for entry in payload:
            try:
                term = PauliTerm.from_label(entry["paulis"])
                coeff = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"malformed Pauli sum entry: {entry!r}") from exc
            parsed.append((term, coeff))
        size = n_qubits or parsed[0][0].n_qubits
        return cls(size, parsed)

    def __repr__(self) -> str:
        if not self._terms:
            return f"PauliSum({self.n_qubits}, 0)"
        body = " + ".join(f"({c:.6g})*{t.label}" for t, c in list(self._terms.items())[:8])
        more = "" if len(self._terms) <= 8 else f" + ... [{len(self._terms)} terms]"
        return f"PauliSum({body}{more})"


def product(a: PauliSum, b: PauliSum) -> PauliSum:
    """Operator product ``a b``."""
    _check_same_size(a, b)
    acc: dict[PauliTerm, complex] = {}
    for ta, ca in a._terms.items():
        for tb, cb in b._terms.items():
            term, phase = multiply(ta, tb)
            acc[term] = acc.get(term, 0j) + phase * ca * cb
    return PauliSum(a.n_qubits, acc)


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """``a b - b a``; only anticommuting term pairs contribute, each twice."""
    _check_same_size(a, b)
    acc: dict[PauliTerm, complex] = {}
    for ta, ca in a._terms.items():
        for tb, cb in b._terms.items():
            if ta.commutes_with(tb):
                continue
            term, phase = multiply(ta, tb)
            acc[term] = acc.get(term, 0j) + 2.0 * phase * ca * cb
    return PauliSum(a.n_qubits, acc)


def nested_commutator(a: PauliSum, b: PauliSum, depth: int) -> PauliSum:
    """``[a, [a, ... [a, b]]]`` with ``depth`` commutators."""
    if depth < 1:
        raise ValidationError("nested commutator depth must be at least 1", depth=depth)
    result = b
    for _ in range(depth):
        result = commutator(a, result)
    return result


def trace_product(a: PauliSum, b: PauliSum) -> complex:
    """Normalized trace ``tr(a b) / 2**n``.

    Distinct Pauli strings are trace-orthogonal and every string squares to
    the identity with phase +1, so only shared terms contribute.
    """
    _check_same_size(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    return sum((c * large._terms[t] for t, c in small._terms.items() if t in large._terms), 0j)


def norm_sq(a: PauliSum, atol: float = 1e-12) -> float:
    """Signed squared norm ``tr(a a) / 2**n``: >= 0 Hermitian, <= 0 anti-Hermitian."""
    scale = max((abs(c) for c in a._terms.values()), default=0.0)
    tol = atol * max(scale, 1.0)
    if not (a.is_hermitian(tol) or a.is_anti_hermitian(tol)):
        raise ContractError("norm_sq needs a Hermitian or anti-Hermitian operator")
    return float(trace_product(a, a).real)


def norm(a: PauliSum) -> float:
    """``sqrt(|norm_sq(a)|)``."""
    return float(np.sqrt(abs(norm_sq(a))))


def _parity(basis: np.ndarray, mask: int) -> np.ndarray:
    bits = np.zeros_like(basis)
    q = 0
    while mask >> q:
        if (mask >> q) & 1:
            bits ^= (basis >> q) & 1
        q += 1
    return bits


def _check_cap(a: PauliSum, cap: int) -> None:
    if a.n_qubits > cap:
        raise ResourceLimitError(
            f"{a.n_qubits} qubits exceeds the cap of {cap}", n_qubits=a.n_qubits, cap=cap
        )


def to_sparse(a: PauliSum, cap: int = STATEVECTOR_QUBIT_CAP) -> sparse.csr_matrix:
    """Sparse ``2**n x 2**n`` matrix; basis index bit ``j`` is qubit ``j``."""
    _check_cap(a, cap)
    dim = 1 << a.n_qubits
    basis = np.arange(dim, dtype=np.int64)
    rows, cols, data = [], [], []
    for term, coeff in a._terms.items():
        signs = 1 - 2 * _parity(basis, term.z_mask)
        phase = _PHASES[(term.x_mask & term.z_mask).bit_count() % 4]
        rows.append(basis ^ term.x_mask)
        cols.append(basis)
        data.append(coeff * phase * signs)
    if not data:
        return sparse.csr_matrix((dim, dim), dtype=complex)
    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
        dtype=complex,
    )
    return matrix.tocsr()


def to_matrix(a: PauliSum, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    """Dense matrix for oracles, refused above ``cap`` qubits."""
    _check_cap(a, cap)
    return to_sparse(a, cap=cap).toarray()


def diagonal(a: PauliSum, cap: int = STATEVECTOR_QUBIT_CAP) -> np.ndarray:
    """Diagonal of a sum of Z-type strings as a length ``2**n`` vector."""
    _check_cap(a, cap)
    if any(not term.is_diagonal for term in a._terms):
        raise ValidationError("operator is not diagonal in the computational basis")
    basis = np.arange(1 << a.n_qubits, dtype=np.int64)
    values = np.zeros(basis.shape, dtype=complex)
    for term, coeff in a._terms.items():
        values += coeff * (1 - 2 * _parity(basis, term.z_mask))
    return values


def pauli_sum_sum(parts: Iterable[PauliSum], n_qubits: int) -> PauliSum:
    """Sum of many sums in one pass."""
    acc: dict[PauliTerm, complex] = {}
    for part in parts:
        if part.n_qubits != n_qubits:
            raise DimensionError(f"sum on {part.n_qubits} qubits, expected {n_qubits}")
        for term, coeff in part._terms.items():
            acc[term] = acc.get(term, 0j) + coeff
    return PauliSum(n_qubits, acc)
