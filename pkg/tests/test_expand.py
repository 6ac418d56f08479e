import numpy as np
import pytest
from scipy import linalg

from app.engine.agp import VariationalAgp
from app.engine.expand import (
    OperatorBasis,
    StepMatcher,
    bch_coefficients,
    bch_generator,
    magnus_coefficients,
    magnus_generator,
    step_error,
)
from app.engine.pauli import commutator, to_matrix
from app.engine.schedule import Schedule
from app.errors import ScheduleError, ValidationError


def traceless(m):
    return m - np.trace(m) / m.shape[0] * np.eye(m.shape[0])


def qaoa_step(inst, gamma, beta):
    hs = to_matrix(inst.h_simple)
    ht = to_matrix(inst.h_target)
    return linalg.expm(1j * beta * hs) @ linalg.expm(1j * gamma * ht)


def time_ordered(inst, sched, t0, tau, slices=2000):
    dt = tau / slices
    u = np.eye(1 << inst.n_qubits, dtype=complex)
    hs = to_matrix(inst.h_simple)
    ht = to_matrix(inst.h_target)
    for k in range(slices):
        lam = sched.lam(t0 + (k + 0.5) * dt)
        u = linalg.expm(1j * dt * (lam * ht + (1 - lam) * hs)) @ u
    return u


class TestOperatorBasis:

    def test_nested_keys(self, pair):
        basis = OperatorBasis(pair)
        expected = commutator(basis.op("S"), commutator(basis.op("T"), basis.op("K")))
        assert basis.op("STK").isclose(expected)

    def test_identity_dropped(self, cube):
        basis = OperatorBasis(cube)
        assert basis.op("T").coefficient("I" * 8) == 0
        assert cube.h_target.coefficient("I" * 8) != 0

    def test_bad_key(self, pair):
        with pytest.raises(ValidationError):
            OperatorBasis(pair).op("TQ")

    def test_gram_is_symmetric(self, ring6):
        g = OperatorBasis(ring6).gram(["T", "S", "K", "TS", "SK"])
        np.testing.assert_allclose(g, g.T)


class TestBch:

    def test_terms_are_hermitian(self, ring6):
        series = bch_generator(ring6, 0.4, 0.3, order=5)
        assert series.is_hermitian()
        assert series.order == 5
        assert len(series.terms_by_order) == 5

    def test_first_order_is_the_sum(self):
        (first,) = bch_coefficients(0.3, 0.2, order=1)
        assert set(first) == {"S", "T"}
        assert first["S"] == pytest.approx(0.2)
        assert first["T"] == pytest.approx(0.3)

    @pytest.mark.parametrize("fixture", ["spin", "pair", "square"])
    def test_matches_matrix_logarithm(self, fixture, request):
        inst = request.getfixturevalue(fixture)
        gamma, beta = 0.03, 0.02
        exact = traceless(-1j * linalg.logm(qaoa_step(inst, gamma, beta)))
        series = bch_generator(inst, gamma, beta, order=5)
        np.testing.assert_allclose(traceless(to_matrix(series.total)), exact, atol=1e-7)

    def test_error_shrinks_with_order(self, pair):
        gamma, beta = 0.2, 0.15
        exact = traceless(-1j * linalg.logm(qaoa_step(pair, gamma, beta)))
        errors = [
            np.linalg.norm(traceless(to_matrix(bch_generator(pair, gamma, beta, order=k).total)) - exact)
            for k in (1, 2, 3, 5)
        ]
        assert errors == sorted(errors, reverse=True)

    @pytest.mark.parametrize("order", [0, 6])
    def test_order_range(self, pair, order):
        with pytest.raises(ValidationError):
            bch_generator(pair, 0.1, 0.1, order=order)

    def test_rejects_nonfinite_angles(self, pair):
        with pytest.raises(ValidationError):
            bch_generator(pair, float("inf"), 0.1)


class TestMagnus:

    def test_first_order_is_the_integral(self):
        coeffs = magnus_coefficients(Schedule.linear(2.0), None, 0.0, 2.0, order=1)
        assert coeffs[0]["T"] == pytest.approx(1.0)
        assert coeffs[0]["S"] == pytest.approx(1.0)
        assert coeffs[0]["K"] == pytest.approx(0.0)

    @pytest.mark.parametrize("fixture", ["spin", "pair"])
    def test_matches_time_ordered_propagator(self, fixture, request):
        inst = request.getfixturevalue(fixture)
        sched = Schedule.linear(1.0)
        t0, tau = 0.3, 0.05
        exact = traceless(-1j * linalg.logm(time_ordered(inst, sched, t0, tau)))
        omega = magnus_generator(inst, sched, None, t0, tau, order=3)
        np.testing.assert_allclose(traceless(to_matrix(omega.total)), exact, atol=5e-6)

    def test_cd_weight_uses_exact_integral(self, spin):
        agp = VariationalAgp(spin)
        sched = Schedule.linear(2.0)
        coeffs = magnus_coefficients(sched, agp, 0.0, 2.0, order=1)
        assert coeffs[0]["K"].real == pytest.approx(agp.integral(0.0, 1.0))

    def test_interval_checks(self, pair):
        sched = Schedule.linear(1.0)
        with pytest.raises(ScheduleError):
            magnus_generator(pair, sched, None, 0.8, 0.5)
        with pytest.raises(ScheduleError):
            magnus_generator(pair, sched, None, 0.2, 0.0)
        overrun = magnus_generator(pair, sched, None, 0.8, 0.5, allow_overrun=True)
        assert overrun.is_hermitian()

    def test_order_range(self, pair):
        with pytest.raises(ValidationError):
            magnus_generator(pair, Schedule.linear(1.0), None, 0.0, 0.5, order=4)


class TestStepError:

    def test_matcher_agrees_with_pauli_sums(self, pair):
        agp = VariationalAgp(pair)
        sched = Schedule.linear(2.0, s0=0.1)
        matcher = StepMatcher(pair, orders=(4, 3))
        for gamma, beta, t0, tau in [(0.2, 0.3, 0.5, 0.5), (0.05, 0.4, 0.0, 0.45), (0.3, 0.1, 1.2, 0.4)]:
            direct = step_error(pair, gamma, beta, sched, agp, t0, tau, orders=(4, 3))
            assert matcher.error(gamma, beta, sched, agp, t0, tau) == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_without_gauge_potential(self, ring6):
        sched = Schedule.linear(3.0)
        matcher = StepMatcher(ring6, orders=(3, 2))
        direct = step_error(ring6, 0.1, 0.2, sched, None, 0.5, 0.3, orders=(3, 2))
        assert matcher.error(0.1, 0.2, sched, None, 0.5, 0.3) == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_first_order_step_is_exact_for_matching_integrals(self, spin):
        sched = Schedule.linear(1.0)
        # first-order Omega over the whole run is 0.5 T + 0.5 S
        assert step_error(spin, 0.5, 0.5, sched, None, 0.0, 1.0, orders=(1, 1)) == pytest.approx(0.0, abs=1e-12)

    def test_nonpositive_tau(self, pair):
        with pytest.raises(ScheduleError):
            step_error(pair, 0.1, 0.1, Schedule.linear(1.0), None, 0.0, 0.0)
