import numpy as np
import pytest

from app.engine.schedule import (
    LAMBDA_FORMS,
    PchipShape,
    PinnedCubicDrive,
    PowerLawRamp,
    Schedule,
    SineDrive,
    SmoothStep,
    SplineDrive,
)
from app.errors import ScheduleError


class TestShapes:

    @pytest.mark.parametrize("form", sorted(LAMBDA_FORMS))
    def test_endpoints_and_monotone(self, form):
        shape = LAMBDA_FORMS[form]()
        u = np.linspace(0.0, 1.0, 201)
        values = shape.value(u)
        assert values[0] == pytest.approx(0.0, abs=1e-12)
        assert values[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(values) >= -1e-12)

    @pytest.mark.parametrize("shape", [SmoothStep(), PowerLawRamp(2.0), PinnedCubicDrive(0.3, -0.2), SineDrive(0.4)])
    def test_derivative_matches_finite_difference(self, shape):
        u = np.array([0.12, 0.3, 0.47, 0.63, 0.88])
        h = 1e-6
        numeric = (shape.value(u + h) - shape.value(u - h)) / (2 * h)
        np.testing.assert_allclose(shape.derivative(u), numeric, rtol=1e-5, atol=1e-7)

    def test_power_law_needs_positive_exponent(self):
        with pytest.raises(ScheduleError):
            PowerLawRamp(0.0)

    def test_pchip_stays_monotone(self):
        shape = PchipShape([[0.0, 0.0], [0.2, 0.5], [0.5, 0.55], [1.0, 1.0]])
        values = shape.value(np.linspace(0.0, 1.0, 500))
        assert np.all(np.diff(values) >= -1e-12)

    @pytest.mark.parametrize("knots", [
        [[0.0, 0.0]],
        [[0.0, 0.0], [0.5, 0.7], [0.4, 0.8], [1.0, 1.0]],
        [[0.0, 0.1], [1.0, 1.0]],
        [[0.0, 0.0], [0.5, 0.8], [0.7, 0.6], [1.0, 1.0]],
    ])
    def test_pchip_rejects(self, knots):
        with pytest.raises(ScheduleError):
            PchipShape(knots)

    def test_spline_drive_is_pinned(self):
        drive = SplineDrive([[0.3, 0.2], [0.6, -0.1]])
        assert float(drive.value(0.0)) == pytest.approx(0.0)
        assert float(drive.value(1.0)) == pytest.approx(0.0)
        assert float(drive.value(0.3)) == pytest.approx(0.2)


class TestSchedule:

    def test_linear(self):
        sched = Schedule.linear(4.0)
        assert sched.lam(1.0) == pytest.approx(0.25)
        assert sched.lam_dot(1.0) == pytest.approx(0.25)
        assert sched.s(2.0) == 0.0
        assert isinstance(sched.lam(1.0), float)

    def test_held_past_total_time(self):
        sched = Schedule.linear(2.0, s0=0.5)
        t = np.array([2.5, 3.0])
        np.testing.assert_array_equal(sched.lam(t), [1.0, 1.0])
        np.testing.assert_array_equal(sched.lam_dot(t), [0.0, 0.0])
        np.testing.assert_array_equal(sched.s(t), [0.0, 0.0])

    def test_sine_drive_peak(self):
        sched = Schedule.linear(2.0, s0=0.5)
        assert sched.s(1.0) == pytest.approx(0.5)

    @pytest.mark.parametrize("T", [0.0, -1.0, float("inf")])
    def test_rejects_bad_total_time(self, T):
        with pytest.raises(ScheduleError):
            Schedule.linear(T)

    def test_dict_round_trip(self):
        payload = {"T": 3.0, "lambda": {"form": "power_law", "params": {"r": 0.5}},
                   "s": {"form": "pinned_cubic", "params": {"a": 0.2, "b": 0.1}}}
        sched = Schedule.from_dict(payload)
        assert sched.to_dict() == payload

    def test_from_dict_override_total_time(self):
        sched = Schedule.from_dict({"T": 3.0}, total_time=5.0)
        assert sched.total_time == 5.0
        assert sched.lam(2.5) == pytest.approx(0.5)

    @pytest.mark.parametrize("payload", [
        {"lambda": {"form": "cosine"}},
        {"s": {"form": "square"}},
        {"lambda": {"form": "power_law", "params": {"q": 1}}},
        {"T": "soon"},
    ])
    def test_from_dict_rejects(self, payload):
        with pytest.raises(ScheduleError):
            Schedule.from_dict(payload)

    def test_endpoint_checks(self):
        Schedule(1.0, SmoothStep(), SineDrive(0.2)).check_endpoints()
        Schedule(1.0, SmoothStep(), SplineDrive([[0.5, 0.1]])).check_endpoints()
        with pytest.raises(ScheduleError):
            Schedule.from_dict({"lambda": {"knots": [[0.0, 0.0], [1.0, 0.9]]}})
