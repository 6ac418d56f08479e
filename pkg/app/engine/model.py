"""Problem instances: the two-level pair, the Ising ring and MaxCut graphs."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from ..errors import InstanceError, ScheduleError
from .pauli import PauliSum, PauliTerm, commutator, diagonal, norm, pauli_sum_sum

logger = logging.getLogger(__name__)

TWO_LEVEL = "two_level"
SINGLE_SPIN = "single_spin"
ISING_RING = "ising_ring"
MAXCUT = "maxcut"

KINDS = (TWO_LEVEL, SINGLE_SPIN, ISING_RING, MAXCUT)
BRUTE_FORCE_LIMIT = 24


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """H_S, H_T, their commutator and the objective used for the approximation ratio.

    ``comm`` is always ``[h_target, h_simple]``. ``obj_max`` is None when the
    optimum is unknown (graphs above the brute-force limit).
    """

    kind: str
    n_qubits: int
    h_simple: PauliSum
    h_target: PauliSum
    comm: PauliSum
    objective: PauliSum
    obj_max: float | None
    edges: tuple[tuple[int, int], ...] = ()
    spec: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.kind == ISING_RING:
            return f"ising_ring(N={self.n_qubits})"
        if self.kind == MAXCUT:
            return f"maxcut(n={self.n_qubits}, m={len(self.edges)})"
        return self.kind

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_qubits))
        g.add_edges_from(self.edges)
        return g

    @cached_property
    def degree(self) -> int | None:
        """Common vertex degree, or None for irregular graphs and the single spin."""
        if not self.edges:
            return None
        degrees = {d for _, d in self.graph.degree()}
        return degrees.pop() if len(degrees) == 1 else None

    @cached_property
    def has_triangles(self) -> bool:
        return bool(self.edges) and any(nx.triangles(self.graph).values())

    @cached_property
    def mixer_is_transverse_field(self) -> bool:
        """True when H_S is exactly sum_i X_i, which the statevector applies qubit by qubit."""
        expected = {PauliTerm.single(self.n_qubits, q, "X") for q in range(self.n_qubits)}
        return set(self.h_simple.terms) == expected and all(
            abs(c - 1.0) < 1e-15 for c in self.h_simple.terms.values()
        )

    @cached_property
    def target_diagonal(self) -> np.ndarray:
        return diagonal(self.h_target).real

    @cached_property
    def objective_diagonal(self) -> np.ndarray:
        return diagonal(self.objective).real

    @cached_property
    def norms(self) -> tuple[float, float, float]:
        """``(||H_T||, ||H_S||, ||[H_T,H_S]||)`` in the normalized trace norm, identity dropped."""
        return (
            norm(self.h_target.without_identity()),
            norm(self.h_simple.without_identity()),
            norm(self.comm),
        )

    def to_spec(self) -> dict:
        return dict(self.spec)

    def __repr__(self) -> str:
        return f"<ProblemInstance {self.label}>"


def _transverse_field(n: int) -> PauliSum:
    return PauliSum(n, [(PauliTerm.single(n, q, "X"), 1.0) for q in range(n)])


def _zz_sum(n: int, edges: Iterable[tuple[int, int]], coeff: float) -> PauliSum:
    return PauliSum(n, [(PauliTerm.product_of(n, {i: "Z", j: "Z"}), coeff) for i, j in edges])


def _cut_objective(n: int, edges: Sequence[tuple[int, int]]) -> PauliSum:
    """``(1/2) sum_<ij> (1 - Z_i Z_j)``."""
    return PauliSum.identity(n, 0.5 * len(edges)) + _zz_sum(n, edges, -0.5)


def _make(kind, h_simple, h_target, objective, obj_max, edges=(), spec=None) -> ProblemInstance:
    inst = ProblemInstance(
        kind=kind,
        n_qubits=h_simple.n_qubits,
        h_simple=h_simple,
        h_target=h_target,
        comm=commutator(h_target, h_simple),
        objective=objective,
        obj_max=obj_max,
        edges=tuple(edges),
        spec=spec or {"kind": kind},
    )
    logger.debug("built %s with %d commutator terms", inst.label, len(inst.comm))
    return inst


def build_two_level(reduced: bool = False) -> ProblemInstance:
    """Two-site Ising pair, or its symmetric-sector effective spin.

    The pair has H_S = X0 + X1, H_T = -Z0 Z1 / 2 and objective (1 - Z0 Z1)/2.
    ``reduced=True`` gives one qubit with H_S = X, H_T = Z and objective
    (1 + Z)/2, the normalization in which exact p=1 angles are gamma = beta = pi/4.
    """
    if reduced:
        h_simple = PauliSum.from_labels({"X": 1.0})
        h_target = PauliSum.from_labels({"Z": 1.0})
        objective = PauliSum.from_labels({"I": 0.5, "Z": 0.5})
        return _make(SINGLE_SPIN, h_simple, h_target, objective, 1.0,
                     spec={"kind": TWO_LEVEL, "reduced": True})

    edges = ((0, 1),)
    return _make(
        TWO_LEVEL,
        _transverse_field(2),
        _zz_sum(2, edges, -0.5),
        _cut_objective(2, edges),
        1.0,
        edges=edges,
        spec={"kind": TWO_LEVEL, "reduced": False},
    )


def build_ising_ring(n_sites: int) -> ProblemInstance:
    """Periodic transverse-field Ising ring (ring of disagrees)."""
    if not isinstance(n_sites, (int, np.integer)) or n_sites < 4 or n_sites % 2:
        raise InstanceError("the Ising ring needs an even number of sites >= 4", N=n_sites)
    n = int(n_sites)
    edges = tuple((i, (i + 1) % n) for i in range(n))
    return _make(
        ISING_RING,
        _transverse_field(n),
        _zz_sum(n, edges, -0.5),
        _cut_objective(n, edges),
        float(n),
        edges=edges,
        spec={"kind": ISING_RING, "N": n},
    )


def normalize_edges(edges: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    """Validate an undirected simple edge list and return it with i < j."""
    seen: set[tuple[int, int]] = set()
    ordered = []
    for raw in edges:
        try:
            i, j = (int(v) for v in raw)
        except (TypeError, ValueError):
            raise InstanceError(f"malformed edge {raw!r}") from None
        if i < 0 or j < 0:
            raise InstanceError(f"negative vertex in edge {raw!r}")
        if i == j:
            raise InstanceError(f"self-loop on vertex {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise InstanceError(f"duplicate edge {key}")
        seen.add(key)
        ordered.append(key)
    if not ordered:
        raise InstanceError("edge list is empty")
    return tuple(ordered)


def max_cut_value(n: int, edges: Sequence[tuple[int, int]], chunk_bits: int = 20) -> int:
    """Exhaustive MaxCut; vertex n-1 is pinned to one side."""
    if n > BRUTE_FORCE_LIMIT:
        raise InstanceError(f"exhaustive cut search is limited to {BRUTE_FORCE_LIMIT} vertices")
    free = max(n - 1, 0)
    total = 1 << free
    chunk = 1 << min(chunk_bits, free)
    best = 0
    for start in range(0, total, chunk):
        cuts = np.arange(start, min(start + chunk, total), dtype=np.int64)
        count = np.zeros(cuts.shape, dtype=np.int16)
        for i, j in edges:
            count += (((cuts >> i) ^ (cuts >> j)) & 1).astype(np.int16)
        best = max(best, int(count.max()))
    return best


def build_maxcut(edges: Iterable[Sequence[int]], n_vertices: int | None = None) -> ProblemInstance:
    """MaxCut with H_T = objective = (1/2) sum (1 - Z_i Z_j) and H_S = sum X_i."""
    normalized = normalize_edges(edges)
    n = max(max(e) for e in normalized) + 1
    if n_vertices is not None:
        if n_vertices < n:
            raise InstanceError("edge list references vertices beyond n_vertices", n_vertices=n_vertices)
        n = int(n_vertices)
    graph = nx.Graph(normalized)
    graph.add_nodes_from(range(n))
    if not nx.is_connected(graph):
        raise InstanceError("MaxCut graphs must be connected")

    obj_max = float(max_cut_value(n, normalized)) if n <= BRUTE_FORCE_LIMIT else None
    if obj_max is None:
        logger.warning("MaxCut optimum unknown for n=%d; approximation ratios unavailable", n)
    objective = _cut_objective(n, normalized)
    return _make(
        MAXCUT,
        _transverse_field(n),
        objective,
        objective,
        obj_max,
        edges=normalized,
        spec={"kind": MAXCUT, "edges": [list(e) for e in normalized], "n": n},
    )


def random_regular_edges(
    degree: int, n_vertices: int, seed: int | None = None, triangle_free: bool = False, attempts: int = 200
) -> tuple[tuple[int, int], ...]:
    """Connected random regular graph, optionally rejecting graphs with triangles."""
    if degree < 1 or n_vertices <= degree or (degree * n_vertices) % 2:
        raise InstanceError("no regular graph with these parameters", degree=degree, n=n_vertices)
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        graph = nx.random_regular_graph(degree, n_vertices, seed=int(rng.integers(2**31)))
        if not nx.is_connected(graph):
            continue
        if triangle_free and any(nx.triangles(graph).values()):
            continue
        return normalize_edges(graph.edges())
    raise InstanceError("could not sample a suitable regular graph", degree=degree, n=n_vertices)


def instance_from_spec(spec: dict) -> ProblemInstance:
    """Build an instance from its JSON form (see ``ProblemInstance.to_spec``)."""
    kind = spec.get("kind")
    if kind == TWO_LEVEL:
        return build_two_level(reduced=bool(spec.get("reduced", False)))
    if kind == SINGLE_SPIN:
        return build_two_level(reduced=True)
    if kind == ISING_RING:
        return build_ising_ring(spec.get("N"))
    if kind == MAXCUT:
        return build_maxcut(spec.get("edges") or [], spec.get("n"))
    if kind == "regular":
        edges = random_regular_edges(
            int(spec.get("degree", 3)),
            int(spec.get("n", 14)),
            seed=spec.get("seed"),
            triangle_free=bool(spec.get("triangle_free", False)),
        )
        inst = build_maxcut(edges)
        inst.spec.update({"degree": int(spec.get("degree", 3)), "seed": spec.get("seed")})
        return inst
    raise InstanceError(f"unknown instance kind {kind!r}", known=list(KINDS) + ["regular"])


def cd_hamiltonian(inst: ProblemInstance, lam: float, lam_dot: float, s: float, alpha: float) -> PauliSum:
    """``lam H_T + (1 - lam) H_S + i (s + lam_dot alpha) [H_T, H_S]``."""
    for name, value in (("lambda", lam), ("lambda_dot", lam_dot), ("s", s), ("alpha", alpha)):
        if not math.isfinite(value):
            raise ScheduleError(f"{name} must be finite", value=value)
    if not -1e-12 <= lam <= 1.0 + 1e-12:
        raise ScheduleError("lambda must lie in [0, 1]", value=lam)
    kappa = s + lam_dot * alpha
    return pauli_sum_sum(
        (lam * inst.h_target, (1.0 - lam) * inst.h_simple, (1j * kappa) * inst.comm),
        inst.n_qubits,
    )
