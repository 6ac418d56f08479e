import numpy as np
import pytest

from app.engine.model import (
    ISING_RING,
    MAXCUT,
    SINGLE_SPIN,
    TWO_LEVEL,
    build_ising_ring,
    build_maxcut,
    build_two_level,
    cd_hamiltonian,
    instance_from_spec,
    max_cut_value,
    normalize_edges,
    random_regular_edges,
)
from app.engine.pauli import PauliSum, commutator, to_matrix
from app.errors import InstanceError, ScheduleError


class TestInstances:

    def test_pair(self, pair):
        assert pair.kind == TWO_LEVEL
        assert pair.n_qubits == 2
        assert pair.obj_max == 1.0
        assert pair.h_target.coefficient("ZZ") == pytest.approx(-0.5)
        assert pair.h_simple.coefficient("XI") == 1.0
        assert pair.mixer_is_transverse_field

    def test_single_spin(self, spin):
        assert spin.kind == SINGLE_SPIN
        assert spin.n_qubits == 1
        # [Z, X] = 2iY
        assert spin.comm.isclose(PauliSum.from_labels({"Y": 2j}))
        assert instance_from_spec(spin.to_spec()).kind == SINGLE_SPIN

    def test_commutator_is_target_then_simple(self, pair, ring6):
        for inst in (pair, ring6):
            assert inst.comm.isclose(commutator(inst.h_target, inst.h_simple))
            assert inst.comm.is_anti_hermitian()

    def test_ring(self, ring6):
        assert ring6.kind == ISING_RING
        assert ring6.obj_max == 6.0
        assert ring6.degree == 2
        assert not ring6.has_triangles
        assert len(ring6.edges) == 6
        assert (5, 0) in ring6.edges

    @pytest.mark.parametrize("n", [3, 5, 2, 0, "6"])
    def test_ring_rejects_bad_sizes(self, n):
        with pytest.raises(InstanceError):
            build_ising_ring(n)

    def test_ring_objective_counts_disagreements(self, ring6):
        diag = ring6.objective_diagonal
        # alternating assignment 010101 cuts every edge
        assert diag[0b010101] == pytest.approx(6.0)
        assert diag[0] == pytest.approx(0.0)
        assert diag.max() == pytest.approx(ring6.obj_max)

    def test_maxcut_known_optima(self, square, cube):
        assert square.obj_max == 4.0
        assert cube.obj_max == 12.0
        assert cube.degree == 3
        assert not cube.has_triangles
        assert cube.kind == MAXCUT

    def test_triangle_graph(self):
        triangle = build_maxcut([(0, 1), (1, 2), (2, 0)])
        assert triangle.has_triangles
        assert triangle.obj_max == 2.0

    def test_max_cut_value_matches_diagonal(self, cube):
        assert max_cut_value(8, cube.edges) == int(cube.objective_diagonal.max().round())

    def test_norms(self, pair):
        t, s, c = pair.norms
        assert t == pytest.approx(0.5)
        assert s == pytest.approx(np.sqrt(2.0))
        # [-ZZ/2, X0 + X1] = -i(YZ + ZY), squared norm 2
        assert c == pytest.approx(np.sqrt(2.0))


class TestEdgeValidation:

    def test_normalizes_order(self):
        assert normalize_edges([(2, 1), (0, 2)]) == ((1, 2), (0, 2))

    @pytest.mark.parametrize("edges", [
        [(0, 0)],
        [(0, 1), (1, 0)],
        [(0, -1)],
        [("a", 1)],
        [],
    ])
    def test_rejects(self, edges):
        with pytest.raises(InstanceError):
            normalize_edges(edges)

    def test_disconnected_graph(self):
        with pytest.raises(InstanceError):
            build_maxcut([(0, 1), (2, 3)])

    def test_isolated_vertex_via_count(self):
        with pytest.raises(InstanceError):
            build_maxcut([(0, 1)], n_vertices=3)


class TestRegularGraphs:

    def test_seeded_sampling_is_reproducible(self):
        a = random_regular_edges(3, 10, seed=7)
        b = random_regular_edges(3, 10, seed=7)
        assert a == b
        degrees = np.bincount(np.array(a).ravel(), minlength=10)
        assert set(degrees) == {3}

    def test_triangle_free(self):
        edges = random_regular_edges(3, 12, seed=1, triangle_free=True)
        assert not build_maxcut(edges).has_triangles

    def test_impossible_parameters(self):
        with pytest.raises(InstanceError):
            random_regular_edges(3, 7)

    def test_spec(self):
        inst = instance_from_spec({"kind": "regular", "degree": 3, "n": 8, "seed": 4})
        assert inst.degree == 3
        assert inst.spec["seed"] == 4
        again = instance_from_spec(inst.to_spec())
        assert again.edges == inst.edges

    def test_unknown_kind(self):
        with pytest.raises(InstanceError):
            instance_from_spec({"kind": "hypercube"})


class TestCdHamiltonian:

    def test_endpoints(self, pair):
        assert cd_hamiltonian(pair, 0.0, 0.0, 0.0, -0.5).isclose(pair.h_simple)
        assert cd_hamiltonian(pair, 1.0, 0.0, 0.0, -0.5).isclose(pair.h_target)

    def test_is_hermitian(self, ring6):
        h = cd_hamiltonian(ring6, 0.3, 0.7, 0.1, -0.2)
        assert h.is_hermitian()
        dense = to_matrix(h)
        np.testing.assert_allclose(dense, dense.conj().T, atol=1e-12)

    def test_rejects_lambda_outside_unit_interval(self, pair):
        with pytest.raises(ScheduleError):
            cd_hamiltonian(pair, 1.2, 0.0, 0.0, 0.0)
        with pytest.raises(ScheduleError):
            cd_hamiltonian(pair, 0.5, float("nan"), 0.0, 0.0)
