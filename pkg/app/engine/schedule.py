"""Continuous annealing protocols (T, lambda(t), s(t)).

Shapes are written on unit time u = t/T; ``Schedule`` rescales them to a
total time. Past T the protocol is held at its endpoint (lambda = 1,
lambda_dot = 0, s = 0), which the matcher relies on when a final step
overshoots.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from ..errors import ScheduleError

ENDPOINT_TOLERANCE = 1e-9


def _as_output(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values


class LambdaShape(ABC):
    """Monotone ramp lambda(u) with lambda(0) = 0 and lambda(1) = 1."""

    form: ClassVar[str]

    @abstractmethod
    def value(self, u):
        ...

    @abstractmethod
    def derivative(self, u):
        """d lambda / d u."""

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"form": self.form, "params": self.params()}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params()})"


class LinearRamp(LambdaShape):
    form = "linear"

    def value(self, u):
        return np.asarray(u, dtype=float) * 1.0

    def derivative(self, u):
        return np.ones_like(np.asarray(u, dtype=float))


class SmoothStep(LambdaShape):
    form = "smoothstep"

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return u * u * (3.0 - 2.0 * u)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        return 6.0 * u * (1.0 - u)


class SinSquared(LambdaShape):
    form = "sin_squared"

    def value(self, u):
        return np.sin(0.5 * np.pi * np.asarray(u, dtype=float)) ** 2

    def derivative(self, u):
        return 0.5 * np.pi * np.sin(np.pi * np.asarray(u, dtype=float))


class PowerLawRamp(LambdaShape):
    """|lambda - 1/2| = |u - 1/2|^r scaled to hit both endpoints; r < 1 slows the edges."""

    form = "power_law"

    def __init__(self, r: float = 0.5):
        if not r > 0:
            raise ScheduleError("power-law exponent must be positive", r=r)
        self.r = float(r)

    def value(self, u):
        x = 2.0 * np.asarray(u, dtype=float) - 1.0
        return 0.5 + 0.5 * np.sign(x) * np.abs(x) ** self.r

    def derivative(self, u):
        x = np.abs(2.0 * np.asarray(u, dtype=float) - 1.0)
        return self.r * np.maximum(x, 1e-12) ** (self.r - 1.0)

    def params(self) -> dict:
        return {"r": self.r}


class PchipShape(LambdaShape):
    """Monotone piecewise-cubic interpolant through (u, lambda) knots."""

    form = "pchip"

    def __init__(self, knots: Sequence[Sequence[float]]):
        pts = np.asarray(knots, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ScheduleError("lambda knots must be a list of [u, lambda] pairs")
        u, lam = pts[:, 0], pts[:, 1]
        if np.any(np.diff(u) <= 0):
            raise ScheduleError("lambda knots must have strictly increasing u")
        if abs(u[0]) > ENDPOINT_TOLERANCE or abs(u[-1] - 1.0) > ENDPOINT_TOLERANCE:
            raise ScheduleError("lambda knots must span u in [0, 1]")
        if abs(lam[0]) > ENDPOINT_TOLERANCE or abs(lam[-1] - 1.0) > ENDPOINT_TOLERANCE:
            raise ScheduleError("lambda knots must start at 0 and end at 1")
        if np.any(np.diff(lam) < -ENDPOINT_TOLERANCE):
            raise ScheduleError("lambda knots must be nondecreasing")
        self.knots = pts
        self._interp = PchipInterpolator(u, lam)
        self._slope = self._interp.derivative()

    def value(self, u):
        return self._interp(np.clip(u, 0.0, 1.0))

    def derivative(self, u):
        return self._slope(np.clip(u, 0.0, 1.0))

    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist()}


class DriveShape(ABC):
    """Auxiliary field s(u) with s(0) = s(1) = 0."""

    form: ClassVar[str]

    @abstractmethod
    def value(self, u):
        ...

    @abstractmethod
    def derivative(self, u):
        ...

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"form": self.form, "params": self.params()}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params()})"


class ZeroDrive(DriveShape):
    form = "zero"

    def value(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def derivative(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))


class SineDrive(DriveShape):
    """s(u) = s0 sin(pi u)."""

    form = "sine"

    def __init__(self, s0: float):
        self.s0 = float(s0)

    def value(self, u):
        return self.s0 * np.sin(np.pi * np.asarray(u, dtype=float))

    def derivative(self, u):
        return self.s0 * np.pi * np.cos(np.pi * np.asarray(u, dtype=float))

    def params(self) -> dict:
        return {"s0": self.s0}


class PinnedCubicDrive(DriveShape):
    """s(u) = u (1 - u) (a + b u)."""

    form = "pinned_cubic"

    def __init__(self, a: float, b: float = 0.0):
        self.a = float(a)
        self.b = float(b)

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return u * (1.0 - u) * (self.a + self.b * u)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        return self.a * (1.0 - 2.0 * u) + self.b * u * (2.0 - 3.0 * u)

    def params(self) -> dict:
        return {"a": self.a, "b": self.b}


class SplineDrive(DriveShape):
    """Natural cubic spline through (u, s) knots pinned to zero at both ends."""

    form = "spline"

    def __init__(self, knots: Sequence[Sequence[float]]):
        pts = np.asarray(knots, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ScheduleError("s knots must be a list of [u, s] pairs")
        inner = pts[(pts[:, 0] > 0.0) & (pts[:, 0] < 1.0)]
        full = np.vstack([[0.0, 0.0], inner, [1.0, 0.0]])
        if np.any(np.diff(full[:, 0]) <= 0):
            raise ScheduleError("s knots must have strictly increasing u")
        self.knots = full
        self._spline = CubicSpline(full[:, 0], full[:, 1], bc_type="natural")

    def value(self, u):
        return self._spline(np.clip(u, 0.0, 1.0))

    def derivative(self, u):
        return self._spline(np.clip(u, 0.0, 1.0), 1)

    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist()}


LAMBDA_FORMS: dict[str, type[LambdaShape]] = {
    cls.form: cls for cls in (LinearRamp, SmoothStep, SinSquared, PowerLawRamp)
}
DRIVE_FORMS: dict[str, type[DriveShape]] = {
    cls.form: cls for cls in (ZeroDrive, SineDrive, PinnedCubicDrive)
}


@dataclass(frozen=True)
class Schedule:
    """Protocol of total time T. All evaluators accept scalars or arrays of t."""

    total_time: float
    shape: LambdaShape
    drive: DriveShape

    def __post_init__(self):
        if not (math.isfinite(self.total_time) and self.total_time > 0):
            raise ScheduleError("total time must be positive", T=self.total_time)

    @classmethod
    def linear(cls, total_time: float = 1.0, s0: float = 0.0) -> "Schedule":
        drive = SineDrive(s0) if s0 else ZeroDrive()
        return cls(total_time, LinearRamp(), drive)

    def with_total_time(self, total_time: float) -> "Schedule":
        return Schedule(float(total_time), self.shape, self.drive)

    def _unit(self, t):
        u = np.asarray(t, dtype=float) / self.total_time
        return u, u > 1.0

    def lam(self, t):
        u, past = self._unit(t)
        values = np.where(past, 1.0, self.shape.value(np.clip(u, 0.0, 1.0)))
        return _as_output(values, t)

    def lam_dot(self, t):
        u, past = self._unit(t)
        values = np.where(past, 0.0, self.shape.derivative(np.clip(u, 0.0, 1.0)) / self.total_time)
        return _as_output(values, t)

    def s(self, t):
        u, past = self._unit(t)
        values = np.where(past, 0.0, self.drive.value(np.clip(u, 0.0, 1.0)))
        return _as_output(values, t)

    def s_dot(self, t):
        u, past = self._unit(t)
        values = np.where(past, 0.0, self.drive.derivative(np.clip(u, 0.0, 1.0)) / self.total_time)
        return _as_output(values, t)

    def check_endpoints(self) -> None:
        if abs(float(self.shape.value(0.0))) > ENDPOINT_TOLERANCE or abs(float(self.shape.value(1.0)) - 1.0) > ENDPOINT_TOLERANCE:
            raise ScheduleError("lambda must run from 0 to 1", shape=repr(self.shape))
        if abs(float(self.drive.value(0.0))) > ENDPOINT_TOLERANCE or abs(float(self.drive.value(1.0))) > ENDPOINT_TOLERANCE:
            raise ScheduleError("s must vanish at both endpoints", drive=repr(self.drive))

    def to_dict(self) -> dict:
        return {"T": self.total_time, "lambda": self.shape.to_dict(), "s": self.drive.to_dict()}

    @classmethod
    def from_dict(cls, payload: dict, total_time: float | None = None) -> "Schedule":
        T = total_time if total_time is not None else payload.get("T", payload.get("total_time", 1.0))
        try:
            T = float(T)
        except (TypeError, ValueError):
            raise ScheduleError("schedule T must be a number", T=T) from None
        sched = cls(T, _shape_from_dict(payload.get("lambda") or {"form": "linear"}),
                    _drive_from_dict(payload.get("s") or {"form": "zero"}))
        sched.check_endpoints()
        return sched


def _shape_from_dict(payload: dict) -> LambdaShape:
    if "knots" in payload:
        return PchipShape(payload["knots"])
    form = payload.get("form", "linear")
    cls = LAMBDA_FORMS.get(form)
    if cls is None:
        raise ScheduleError(f"unknown lambda form {form!r}", known=sorted(LAMBDA_FORMS))
    try:
        return cls(**(payload.get("params") or {}))
    except TypeError as exc:
        raise ScheduleError(f"bad parameters for lambda form {form!r}: {exc}") from None


def _drive_from_dict(payload: dict) -> DriveShape:
    if "knots" in payload:
        return SplineDrive(payload["knots"])
    form = payload.get("form", "zero")
    cls = DRIVE_FORMS.get(form)
    if cls is None:
        raise ScheduleError(f"unknown s form {form!r}", known=sorted(DRIVE_FORMS))
    try:
        return cls(**(payload.get("params") or {}))
    except TypeError as exc:
        raise ScheduleError(f"bad parameters for s form {form!r}: {exc}") from None
