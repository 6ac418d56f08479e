import math

import numpy as np
import pytest

from app.engine.matching import AngleSet
from app.engine.model import ProblemInstance
from app.engine.pauli import PauliSum
from app.engine.schedule import Schedule
from app.engine.sim import (
    StateVector,
    approximation_ratio,
    bloch_trajectory,
    cd_evolve,
    optimize_angles,
    plus_state,
    qaoa_state,
    scan_p1,
)
from app.errors import ContractError, InstanceError, ResourceLimitError, UnknownOptimumError, ValidationError

PAIR_EXACT = AngleSet([math.pi / 2], [math.pi / 8])
SPIN_EXACT = AngleSet([math.pi / 4], [math.pi / 4])


class TestStateVector:

    def test_plus_state(self, pair):
        state = plus_state(2)
        assert state.expectation(pair.h_simple) == pytest.approx(2.0)
        assert approximation_ratio(pair, state) == pytest.approx(0.5)

    def test_must_be_normalized(self):
        with pytest.raises(ContractError):
            StateVector(1, np.array([1.0, 1.0], dtype=complex))

    def test_shape_must_match(self):
        with pytest.raises(ValidationError):
            StateVector(2, np.array([1.0, 0.0], dtype=complex))

    def test_fidelity(self):
        zero = StateVector(1, np.array([1.0, 0.0], dtype=complex))
        assert plus_state(1).fidelity(zero) == pytest.approx(0.5)


class TestQaoa:

    def test_pair_exact_angles(self, pair):
        assert approximation_ratio(pair, qaoa_state(pair, PAIR_EXACT)) == pytest.approx(1.0)

    def test_spin_exact_angles(self, spin):
        state = qaoa_state(spin, SPIN_EXACT)
        assert approximation_ratio(spin, state) == pytest.approx(1.0)
        assert state.expectation(spin.h_target) == pytest.approx(1.0)

    def test_zero_angles_leave_plus_state(self, ring6):
        state = qaoa_state(ring6, AngleSet([0.0, 0.0], [0.0, 0.0]))
        assert state.fidelity(plus_state(6)) == pytest.approx(1.0)

    def test_mixer_matches_sparse_exponential(self, square):
        # the qubit-by-qubit mixer and expm on the full H_S give the same circuit
        angles = AngleSet([0.3, 0.7], [0.2, 0.5])
        fast = qaoa_state(square, angles)
        generic = ProblemInstance(
            kind="maxcut", n_qubits=4, h_simple=square.h_simple + PauliSum.identity(4, 1e-9),
            h_target=square.h_target, comm=square.comm, objective=square.objective, obj_max=square.obj_max,
            edges=square.edges,
        )
        assert not generic.mixer_is_transverse_field
        assert qaoa_state(generic, angles).fidelity(fast) == pytest.approx(1.0, abs=1e-9)

    def test_ring_p1_optimum(self, ring6):
        result = scan_p1(ring6, grid=16)
        assert result.ratio == pytest.approx(0.75, abs=1e-6)

    def test_cap(self, ring6):
        with pytest.raises(ResourceLimitError):
            qaoa_state(ring6, SPIN_EXACT, cap=4)

    def test_unknown_optimum(self, square):
        unknown = ProblemInstance(
            kind="maxcut", n_qubits=4, h_simple=square.h_simple, h_target=square.h_target, comm=square.comm,
            objective=square.objective, obj_max=None, edges=square.edges,
        )
        with pytest.raises(UnknownOptimumError):
            approximation_ratio(unknown, plus_state(4))


class TestOptimize:

    def test_climbs_to_exact_spin_angles(self, spin):
        result = optimize_angles(spin, AngleSet([0.6], [0.9]))
        assert result.ratio > 0.9999
        assert result.ratio >= approximation_ratio(spin, qaoa_state(spin, AngleSet([0.6], [0.9])))

    def test_never_decreases(self, square):
        start = AngleSet([0.4, 0.6], [0.5, 0.3])
        before = approximation_ratio(square, qaoa_state(square, start))
        result = optimize_angles(square, start, max_iter=20)
        assert result.ratio >= before
        assert result.angles.p == 2


class TestBloch:

    def test_spin_trajectory_ends_at_target(self, spin):
        points = bloch_trajectory(spin, SPIN_EXACT, samples=9)
        assert len(points) == 1 + 2 * 8
        assert points[0] == pytest.approx((1.0, 0.0, 0.0))
        assert points[-1] == pytest.approx((0.0, 0.0, 1.0), abs=1e-12)
        assert all(abs(np.linalg.norm(p) - 1.0) < 1e-12 for p in points)

    def test_pair_trajectory(self, pair):
        points = bloch_trajectory(pair, PAIR_EXACT)
        assert points[0] == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)
        assert points[-1][2] == pytest.approx(-1.0)

    def test_only_two_level(self, ring6):
        with pytest.raises(InstanceError):
            bloch_trajectory(ring6, SPIN_EXACT)

    def test_samples(self, spin):
        with pytest.raises(ValidationError):
            bloch_trajectory(spin, SPIN_EXACT, samples=1)


class TestContinuousEvolution:

    def test_cd_is_exact_for_one_spin(self, spin):
        state = cd_evolve(spin, Schedule.linear(1.0), steps=2000)
        assert approximation_ratio(spin, state) > 0.999

    def test_cd_beats_adiabatic(self, spin, pair):
        for inst in (spin, pair):
            sched = Schedule.linear(1.0)
            cd = approximation_ratio(inst, cd_evolve(inst, sched, steps=2000))
            plain = approximation_ratio(inst, cd_evolve(inst, sched, include_cd=False, include_s=False, steps=2000))
            assert cd > plain

    def test_long_adiabatic_run_converges(self, spin):
        state = cd_evolve(spin, Schedule.linear(40.0), include_cd=False, steps=4000)
        assert approximation_ratio(spin, state) > 0.99
