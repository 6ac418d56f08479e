import math

import numpy as np
import pytest
from scipy.optimize import brentq

from app.engine.agp import VariationalAgp
from app.engine.expand import StepMatcher
from app.engine.matching import (
    REVERSE,
    AngleSet,
    OptimizerConfig,
    Validity,
    angle_budget,
    closed_form_step,
    conjectured_ring_ratio,
    derive_angles,
    effective_schedule,
    fit_power_law,
    interval_averages,
    reverse_protocol,
    validity_check,
)
from app.engine.schedule import LinearRamp, Schedule, SplineDrive
from app.errors import (
    DegenerateStepError,
    EdgeSingularityError,
    InfeasibleDepthError,
    MonotoneClampWarning,
    NoMatchingError,
    NonSmoothAnglesWarning,
    ValidationError,
)


def two_level_low_order_solution():
    """Single-step match of the effective spin at BCH order 3, Magnus order 2.

    With gamma = beta = g the coefficient equations reduce to
    g - g^3/3 = (1/4 + pi/8) T and g^2 = pi/4 - T^2/6.
    """
    slope = 0.25 + math.pi / 8

    def residual(T):
        g = math.sqrt(math.pi / 4 - T * T / 6)
        return g - g**3 / 3 - slope * T

    T = brentq(residual, 0.5, 1.5)
    return T, math.sqrt(math.pi / 4 - T * T / 6)


class TestAngleSet:

    def test_properties(self):
        angles = AngleSet([0.1, 0.2], [0.3, 0.4], taus=[0.4, 0.6], step_errors=[1e-3, 2e-3])
        assert angles.p == 2
        assert angles.equivalent_T == pytest.approx(1.0)
        assert angles.csv_rows()[1] == [2, 0.2, 0.4, 0.6, 2e-3]
        assert angles.without_taus().taus is None

    def test_from_dict(self):
        angles = AngleSet.from_dict({"gammas": [0.5], "betas": [0.25]})
        assert angles.equivalent_T is None
        assert angles.to_dict()["p"] == 1
        with pytest.raises(ValidationError):
            AngleSet.from_dict({"gammas": [0.5]})

    @pytest.mark.parametrize("kwargs", [
        {"gammas": [0.1, 0.2], "betas": [0.1]},
        {"gammas": [float("nan")], "betas": [0.1]},
        {"gammas": [0.1], "betas": [0.1], "taus": [0.1, 0.2]},
        {"gammas": [0.1], "betas": [0.1], "taus": [0.0]},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValidationError):
            AngleSet(**kwargs)


class TestClosedFormStep:

    def test_midpoint(self):
        tau, gamma, beta = closed_form_step(0.5, 1.0, 0.0, -0.5)
        assert tau == pytest.approx(4.0)
        assert gamma == pytest.approx(2.0)
        assert beta == pytest.approx(2.0)

    def test_angles_split_by_lambda(self):
        tau, gamma, beta = closed_form_step(0.25, 0.5, -0.01, -0.2)
        assert gamma + beta == pytest.approx(tau)
        assert gamma / tau == pytest.approx(0.25)

    def test_edges(self):
        with pytest.raises(EdgeSingularityError):
            closed_form_step(0.0005, 1.0, 0.0, -0.5)
        with pytest.raises(EdgeSingularityError):
            closed_form_step(1.0, 1.0, 0.0, -0.5)

    def test_wrong_sign(self):
        with pytest.raises(NoMatchingError):
            closed_form_step(0.5, 1.0, 0.6, -0.5)


class TestIntervalAverages:

    def test_linear_schedule(self, spin):
        sched = Schedule.linear(2.0)
        lam_bar, lam_dot, s_bar, alpha_bar = interval_averages(sched, None, 0.5, 1.0)
        assert lam_bar == pytest.approx(0.5)
        assert lam_dot == pytest.approx(0.5)
        assert s_bar == pytest.approx(0.0)
        assert alpha_bar == 0.0

    def test_alpha_average_is_exact(self, spin):
        agp = VariationalAgp(spin)
        sched = Schedule.linear(1.0)
        _, lam_dot, _, alpha_bar = interval_averages(sched, agp, 0.0, 1.0)
        assert lam_dot * alpha_bar == pytest.approx(-math.pi / 8)


class TestValidity:

    def test_small_steps_are_valid(self, spin):
        assert validity_check(0.05, 0.05, 0.5, 0.1, -0.01, 0.0, spin) == Validity(True, True)

    def test_edge_step_fails_bch(self, spin):
        assert not validity_check(0.05, 0.05, 0.0, 0.1, -0.01, 0.0, spin).bch_ok

    def test_large_angles_fail(self, spin):
        assert not validity_check(2.0, 2.0, 0.5, 0.1, -0.01, 0.0, spin).bch_ok

    def test_matched_duration_drives_magnus_flag(self, spin):
        assert validity_check(0.05, 0.05, 0.5, 0.1, -0.01, 0.0, spin, tau=0.1).magnus_ok
        assert not validity_check(0.05, 0.05, 0.5, 0.1, -0.01, 0.0, spin, tau=10.0).magnus_ok


class TestForwardMatching:

    def test_low_order_two_level_point(self):
        T, g = two_level_low_order_solution()
        assert T == pytest.approx(0.9746, abs=5e-4)
        assert g / math.pi == pytest.approx(0.2521, abs=5e-4)

    def test_low_order_point_has_zero_step_error(self, spin):
        T, g = two_level_low_order_solution()
        matcher = StepMatcher(spin, orders=(3, 2))
        error = matcher.error(g, g, Schedule.linear(T), VariationalAgp(spin), 0.0, T)
        assert error == pytest.approx(0.0, abs=1e-4)

    @pytest.mark.slow
    def test_derive_single_step_two_level(self, spin):
        report = derive_angles(spin, Schedule.linear(), 1, orders=(3, 2))
        T, g = two_level_low_order_solution()
        assert report.angles.p == 1
        assert report.equivalent_T == pytest.approx(T, rel=1e-2)
        assert report.angles.gammas[0] == pytest.approx(g, rel=1e-2)
        assert report.angles.betas[0] == pytest.approx(g, rel=1e-2)
        assert report.total_error < 1e-3

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["pair", "ring6"])
    @pytest.mark.parametrize("p", [2, 4, 8])
    def test_derive_reaches_depth(self, request, name, p):
        inst = request.getfixturevalue(name)
        report = derive_angles(inst, Schedule.linear(), p, orders=(3, 2))
        assert report.angles.p == p
        assert len(report.validity) == p
        assert all(tau > 0 for tau in report.angles.taus)
        # the last step is pinned to end at the searched T
        assert report.equivalent_T == pytest.approx(report.search_T, rel=1e-9)
        assert report.schedule.total_time == pytest.approx(report.search_T)

    @pytest.mark.slow
    def test_step_errors_shrink_with_depth(self, pair):
        shallow = derive_angles(pair, Schedule.linear(), 2, orders=(3, 2))
        deep = derive_angles(pair, Schedule.linear(), 8, orders=(3, 2))
        assert deep.total_error / 8 < shallow.total_error / 2
        assert deep.equivalent_T > shallow.equivalent_T

    @pytest.mark.slow
    def test_lowest_orders_reduce_to_closed_form(self, pair):
        report = derive_angles(pair, Schedule.linear(), 4, orders=(2, 1))
        agp = VariationalAgp(pair)
        angles = report.angles
        t0 = 0.0
        for q in range(angles.p - 1):
            tau = angles.taus[q]
            expected = closed_form_step(*interval_averages(report.schedule, agp, t0, tau))
            assert (tau, angles.gammas[q], angles.betas[q]) == pytest.approx(expected, rel=1e-4)
            assert angles.step_errors[q] < 1e-6
            t0 += tau
        eff = effective_schedule(angles)
        assert np.all(np.diff(eff["lam_eff"]) > 0)

    @pytest.mark.slow
    def test_forward_reverse_forward(self, pair):
        forward = derive_angles(pair, Schedule.linear(), 4, orders=(2, 1))
        back = reverse_protocol(pair, forward.angles.without_taus(), orders=(2, 1))
        assert back.equivalent_T == pytest.approx(forward.equivalent_T, rel=1e-2)

        T = back.equivalent_T
        t = np.linspace(0.0, T, 41)
        np.testing.assert_allclose(back.schedule.lam(t), t / T, atol=0.02)

        again = derive_angles(pair, back.schedule, 4, orders=(2, 1))
        np.testing.assert_allclose(again.angles.gammas, forward.angles.gammas, atol=1e-2)
        np.testing.assert_allclose(again.angles.betas, forward.angles.betas, atol=1e-2)

    @pytest.mark.slow
    def test_total_time_grows_like_root_of_depth(self, ring6):
        depths = [2, 4, 8]
        times = [derive_angles(ring6, Schedule.linear(), p, orders=(2, 1)).equivalent_T for p in depths]
        assert times[0] < times[1] < times[2]
        exponent, _ = fit_power_law(depths, times)
        assert 0.3 < exponent < 0.9

    def test_infeasible_bracket(self, spin):
        with pytest.raises(InfeasibleDepthError):
            derive_angles(spin, Schedule.linear(), 3, orders=(2, 1), config=OptimizerConfig(t_bracket=(0.01, 0.02)))

    def test_rejects_bad_depth(self, spin):
        with pytest.raises(ValidationError):
            derive_angles(spin, Schedule.linear(), 0)

    def test_rejects_schedule_with_open_endpoints(self, spin):
        class Offset(LinearRamp):
            def value(self, u):
                return 0.1 + 0.9 * np.asarray(u, dtype=float)

        with pytest.raises(ValidationError):
            derive_angles(spin, Schedule(1.0, Offset(), SplineDrive([[0.5, 0.0]])), 1)

    def test_optimizer_config(self):
        with pytest.raises(ValidationError):
            OptimizerConfig(t_bracket=(2.0, 1.0))
        with pytest.raises(ValidationError):
            OptimizerConfig(t_scan_points=1)
        config = OptimizerConfig(t_bracket=(0.5, 10))
        assert config.to_dict()["t_bracket"] == [0.5, 10.0]


class TestReverse:

    def test_builds_schedule(self, pair):
        angles = AngleSet([0.1, 0.3, 0.5, 0.7], [0.7, 0.5, 0.3, 0.1])
        report = reverse_protocol(pair, angles, orders=(3, 2))
        assert report.direction == REVERSE
        assert report.equivalent_T == pytest.approx(3.2)
        assert report.schedule.total_time == pytest.approx(3.2)
        report.schedule.check_endpoints()
        lam = report.schedule.lam(np.linspace(0.0, 3.2, 50))
        assert np.all(np.diff(lam) >= -1e-12)
        assert len(report.validity) == 4
        assert len(report.angles.step_errors) == 4
        assert not report.warnings
        payload = report.to_dict()
        assert payload["seed"] is None
        assert payload["config_digest"] is None

    def test_degenerate_step(self, pair):
        with pytest.raises(DegenerateStepError) as info:
            reverse_protocol(pair, AngleSet([0.2, -0.3], [0.1, 0.2]))
        assert info.value.context["steps"] == [2]

    def test_monotone_clamp(self, pair):
        with pytest.warns(MonotoneClampWarning):
            report = reverse_protocol(pair, AngleSet([0.5, 0.2], [0.3, 0.6]), orders=(2, 1))
        assert any("monotone" in w for w in report.warnings)

    def test_non_smooth_angles(self, pair):
        with pytest.warns(NonSmoothAnglesWarning):
            reverse_protocol(pair, AngleSet([0.1, 0.9], [0.9, 0.1]), orders=(2, 1))

    def test_without_cd(self, pair):
        report = reverse_protocol(pair, AngleSet([0.2, 0.4], [0.4, 0.2]), include_cd=False, orders=(2, 1))
        assert report.equivalent_T == pytest.approx(1.2)


class TestHelpers:

    def test_effective_schedule(self):
        eff = effective_schedule(AngleSet([0.2, 0.6], [0.6, 0.2]))
        np.testing.assert_allclose(eff["tau"], [0.8, 0.8])
        np.testing.assert_allclose(eff["lam_eff"], [0.25, 0.75])
        np.testing.assert_allclose(eff["cd_strength"], [-0.15, -0.15])
        with pytest.raises(DegenerateStepError):
            effective_schedule(AngleSet([0.1], [-0.1]))

    def test_angle_budget(self):
        assert angle_budget(AngleSet([0.1, -0.2], [0.3, 0.4])) == pytest.approx(1.0)

    def test_fit_power_law(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        exponent, prefactor = fit_power_law(x, 3.0 * x**-0.5)
        assert exponent == pytest.approx(-0.5)
        assert prefactor == pytest.approx(3.0)
        with pytest.raises(ValidationError):
            fit_power_law([1.0], [1.0])
        with pytest.raises(ValidationError):
            fit_power_law([1.0, 2.0], [1.0, -1.0])

    def test_conjectured_ring_ratio(self):
        assert conjectured_ring_ratio(1) == pytest.approx(0.75)
        assert conjectured_ring_ratio(3) == pytest.approx(7 / 8)
