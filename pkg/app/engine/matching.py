"""Forward and reverse maps between continuous CD protocols and QAOA angles.

Forward: march through a schedule step by step, fixing (gamma, beta, tau)
for each step by minimizing the matching error, and search the total time
T at which p steps exactly cover the schedule. The last step is pinned to
end at T. Reverse: read interval averages of
lambda and s off each angle pair and fit a schedule through them.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from ..errors import (
    DegenerateStepError,
    DivergenceWarning,
    EdgeSingularityError,
    InfeasibleDepthError,
    MonotoneClampWarning,
    NoMatchingError,
    NonSmoothAnglesWarning,
    StepUnderflowError,
    ValidationError,
)
from .agp import VariationalAgp
from .expand import AlphaFn, StepMatcher
from .model import ProblemInstance
from .schedule import PchipShape, PinnedCubicDrive, Schedule
from .settings import (
    BCH_ORDER,
    EDGE_EPSILON,
    MAGNUS_ORDER,
    NM_FATOL,
    NM_MAXFEV,
    NM_XATOL,
    QUADRATURE_NODES,
    SEED_CLAMP,
    SMOOTHNESS_THRESHOLD,
    STEP_ERROR_CEILING,
    T_BRACKET,
    T_RTOL,
    T_SCAN_POINTS,
    VALIDITY_MARGIN,
)

logger = logging.getLogger(__name__)

FORWARD = "forward"
REVERSE = "reverse"
_PENALTY = 1e6


@dataclass
class AngleSet:
    gammas: list[float]
    betas: list[float]
    taus: list[float] | None = None
    step_errors: list[float] | None = None

    def __post_init__(self):
        self.gammas = [float(g) for g in self.gammas]
        self.betas = [float(b) for b in self.betas]
        if len(self.gammas) != len(self.betas):
            raise ValidationError("gammas and betas differ in length",
                                  gammas=len(self.gammas), betas=len(self.betas))
        if not all(math.isfinite(v) for v in (*self.gammas, *self.betas)):
            raise ValidationError("angles must be finite")
        for name in ("taus", "step_errors"):
            values = getattr(self, name)
            if values is None:
                continue
            values = [float(v) for v in values]
            if len(values) != self.p:
                raise ValidationError(f"{name} must have one entry per step", expected=self.p, got=len(values))
            setattr(self, name, values)
        if self.taus is not None and any(t <= 0 for t in self.taus):
            raise ValidationError("matched step durations must be positive")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @property
    def equivalent_T(self) -> float | None:
        return None if self.taus is None else float(math.fsum(self.taus))

    def without_taus(self) -> "AngleSet":
        return AngleSet(list(self.gammas), list(self.betas))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "gammas": self.gammas,
            "betas": self.betas,
            "taus": self.taus,
            "step_errors": self.step_errors,
            "T": self.equivalent_T,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AngleSet":
        try:
            return cls(payload["gammas"], payload["betas"], payload.get("taus"), payload.get("step_errors"))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed angle set: {exc}") from None

    def csv_rows(self) -> list[list]:
        rows = []
        for q in range(self.p):
            rows.append([
                q + 1,
                self.gammas[q],
                self.betas[q],
                None if self.taus is None else self.taus[q],
                None if self.step_errors is None else self.step_errors[q],
            ])
        return rows


class Validity(NamedTuple):
    bch_ok: bool
    magnus_ok: bool


@dataclass
class OptimizerConfig:
    xatol: float = NM_XATOL
    fatol: float = NM_FATOL
    maxfev: int = NM_MAXFEV
    t_bracket: tuple[float, float] = T_BRACKET
    t_rtol: float = T_RTOL
    t_scan_points: int = T_SCAN_POINTS
    step_error_ceiling: float = STEP_ERROR_CEILING
    seed_clamp: tuple[float, float] = SEED_CLAMP
    edge_epsilon: float = EDGE_EPSILON
    nodes: int = QUADRATURE_NODES
    validity_margin: float = VALIDITY_MARGIN

    def __post_init__(self):
        lo, hi = self.t_bracket
        if not 0 < lo < hi:
            raise ValidationError("T bracket must satisfy 0 < lo < hi", bracket=list(self.t_bracket))
        if self.t_scan_points < 2:
            raise ValidationError("the T scan needs at least two points", t_scan_points=self.t_scan_points)
        self.t_bracket = (float(lo), float(hi))
        self.seed_clamp = tuple(float(v) for v in self.seed_clamp)

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["t_bracket"] = list(self.t_bracket)
        payload["seed_clamp"] = list(self.seed_clamp)
        return payload


@dataclass
class MatchReport:
    angles: AngleSet
    schedule: Schedule
    direction: str
    validity: list[Validity]
    total_error: float
    orders: tuple[int, int] = (BCH_ORDER, MAGNUS_ORDER)
    optimizer: OptimizerConfig | None = None
    warnings: list[str] = field(default_factory=list)
    search_T: float | None = None
    seed: int | None = None
    config_digest: str | None = None

    @property
    def equivalent_T(self) -> float:
        return self.angles.equivalent_T

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "angles": self.angles.to_dict(),
            "T": self.equivalent_T,
            "search_T": self.search_T,
            "schedule": self.schedule.to_dict(),
            "validity": [v._asdict() for v in self.validity],
            "total_error": self.total_error,
            "orders": {"bch": self.orders[0], "magnus": self.orders[1]},
            "optimizer": self.optimizer.to_dict() if self.optimizer else None,
            "warnings": list(self.warnings),
            "seed": self.seed,
            "config_digest": self.config_digest,
        }


def _warn(report_warnings: list[str], message: str, category) -> None:
    logger.warning(message)
    warnings.warn(message, category, stacklevel=3)
    report_warnings.append(message)


def closed_form_step(
    lam_bar: float, lam_dot: float, s_bar: float, alpha_bar: float, epsilon: float = EDGE_EPSILON
) -> tuple[float, float, float]:
    """Lowest-order matching: ``(tau, gamma, beta)``.

    Equating first-order Magnus with second-order BCH gives
    ``tau = -2 (s + lam_dot alpha) / (lam (1 - lam))``.
    """
    if not epsilon <= lam_bar <= 1.0 - epsilon:
        raise EdgeSingularityError("closed-form step is singular at the schedule edges", lam_bar=lam_bar)
    kappa = s_bar + lam_dot * alpha_bar
    if kappa >= 0:
        raise NoMatchingError("s + lam_dot alpha must be negative for a positive step", kappa=kappa)
    tau = -2.0 * kappa / (lam_bar * (1.0 - lam_bar))
    return tau, tau * lam_bar, tau * (1.0 - lam_bar)


def interval_averages(
    sched: Schedule, alpha_fn: AlphaFn | None, t0: float, tau: float, nodes: int = QUADRATURE_NODES
) -> tuple[float, float, float, float]:
    """``(lam_bar, lam_dot_bar, s_bar, alpha_bar)`` over ``[t0, t0 + tau]``.

    ``lam_dot_bar * alpha_bar`` equals the interval average of
    ``lam_dot alpha`` exactly.
    """
    xi, w = np.polynomial.legendre.leggauss(nodes)
    t = t0 + 0.5 * tau * (xi + 1.0)
    lam_bar = 0.5 * float(np.dot(w, sched.lam(t)))
    s_bar = 0.5 * float(np.dot(w, sched.s(t)))
    lam_a, lam_b = float(sched.lam(t0)), float(sched.lam(t0 + tau))
    lam_dot = (lam_b - lam_a) / tau
    if alpha_fn is None:
        return lam_bar, lam_dot, s_bar, 0.0
    if abs(lam_b - lam_a) > 1e-12 and hasattr(alpha_fn, "integral"):
        alpha_bar = float(alpha_fn.integral(lam_a, lam_b)) / (lam_b - lam_a)
    else:
        alpha_bar = float(alpha_fn(min(max(lam_bar, 0.0), 1.0)))
    return lam_bar, lam_dot, s_bar, alpha_bar


def validity_check(
    gamma: float,
    beta: float,
    lam_bar: float,
    lam_dot: float,
    s_bar: float,
    alpha_bar: float,
    inst: ProblemInstance,
    margin: float = VALIDITY_MARGIN,
    tau: float | None = None,
) -> Validity:
    """Perturbative-regime flags for one step.

    ``tau`` is the step duration; it defaults to ``|gamma| + |beta|``, which
    is all a bare angle pair carries.

    BCH: the third-order terms must be small against the second-order one,
    both in angle form and in terms of the commutator coefficient.
    Magnus: the leading second-order term must be small against the first.
    """
    angle_ok = abs(gamma * gamma * beta) / 12.0 + abs(beta * beta * gamma) / 12.0 < margin * abs(gamma * beta / 2.0)
    kappa = s_bar + lam_dot * alpha_bar
    if 0.0 < lam_bar < 1.0:
        kappa_ok = abs(kappa / (3.0 * (1.0 - lam_bar))) + abs(kappa / (3.0 * lam_bar)) < margin
    else:
        kappa_ok = False
    if tau is None:
        tau = abs(gamma) + abs(beta)
    norm_t, norm_s, norm_c = inst.norms
    magnus_ok = abs(lam_dot) * tau**3 * norm_c / 12.0 < margin * tau * (norm_t + norm_s)
    return Validity(bool(angle_ok and kappa_ok), bool(magnus_ok))


@dataclass
class _Step:
    gamma: float
    beta: float
    tau: float
    error: float


class _Marcher:
    """One forward-matching problem; ``march(T)`` results are memoized."""

    def __init__(self, inst, shape: Schedule, p: int, matcher: StepMatcher, alpha_fn, config: OptimizerConfig):
        self.inst = inst
        self.shape = shape
        self.p = p
        self.matcher = matcher
        self.alpha_fn = alpha_fn
        self.config = config
        self._cache: dict[float, list[_Step]] = {}

    def _split_seed(self, sched: Schedule, t0: float, tau: float):
        lam_bar = interval_averages(sched, self.alpha_fn, t0, tau, self.config.nodes)[0]
        return tau * lam_bar, tau * (1.0 - lam_bar), tau

    def _closed_form_seed(self, sched: Schedule, t0: float, tau: float):
        lo, hi = self.config.seed_clamp
        for _ in range(30):
            lam_bar, lam_dot, s_bar, alpha_bar = interval_averages(sched, self.alpha_fn, t0, tau, self.config.nodes)
            try:
                new_tau, _, _ = closed_form_step(min(max(lam_bar, lo), hi), lam_dot, s_bar, alpha_bar,
                                                 self.config.edge_epsilon)
            except (NoMatchingError, EdgeSingularityError):
                return None
            if abs(new_tau - tau) <= 1e-10 * tau:
                break
            tau = math.sqrt(new_tau * tau)
        lam_bar = min(max(interval_averages(sched, self.alpha_fn, t0, tau, self.config.nodes)[0], lo), hi)
        return tau * lam_bar, tau * (1.0 - lam_bar), tau

    def _minimize(self, objective, seeds):
        options = {"xatol": self.config.xatol, "fatol": self.config.fatol, "maxfev": self.config.maxfev}
        scores = [objective(np.asarray(s, dtype=float)) for s in seeds]
        # seeds come in order of preference; ties go to the earlier one
        best = min(scores)
        start = next(s for s, score in zip(seeds, scores) if score <= best + 1e-14)
        result = minimize(objective, np.asarray(start, dtype=float), method="Nelder-Mead", options=options)
        # restart from the first answer with a fresh simplex
        again = minimize(objective, result.x, method="Nelder-Mead", options=options)
        return again if again.fun <= result.fun else result

    def _solve_step(self, sched: Schedule, t0: float, remaining: int, previous: _Step | None) -> _Step:
        def objective(x):
            if x[2] <= 1e-9:
                return _PENALTY
            return self.matcher.error_sq(x[0], x[1], sched, self.alpha_fn, t0, x[2])

        uniform = max(sched.total_time - t0, 1e-6) / remaining
        guesses = [uniform, 0.5 * uniform]
        if previous is not None:
            guesses.append(previous.tau)
        seeds = []
        for tau in guesses:
            seeds.append(self._split_seed(sched, t0, tau))
            fixed = self._closed_form_seed(sched, t0, tau)
            if fixed is not None:
                seeds.append(fixed)
        if previous is not None:
            seeds.append((previous.gamma, previous.beta, previous.tau))
        result = self._minimize(objective, seeds)
        gamma, beta, tau = (float(v) for v in result.x)
        return _Step(gamma, beta, tau, math.sqrt(max(float(result.fun), 0.0)))

    def _solve_pinned(self, sched: Schedule, t0: float, tau: float, natural: _Step | None) -> _Step:
        """Best (gamma, beta) for a step of fixed length ``tau``."""
        def objective(x):
            return self.matcher.error_sq(x[0], x[1], sched, self.alpha_fn, t0, tau)

        seeds = [self._split_seed(sched, t0, tau)[:2]]
        if natural is not None:
            scale = tau / natural.tau
            seeds.append((natural.gamma * scale, natural.beta * scale))
        result = self._minimize(objective, seeds)
        gamma, beta = (float(v) for v in result.x)
        return _Step(gamma, beta, tau, math.sqrt(max(float(result.fun), 0.0)))

    def march(self, T: float) -> list[_Step]:
        """Free steps from t=0 until T is covered, at most p + 1 of them."""
        if T in self._cache:
            return self._cache[T]
        sched = self.shape.with_total_time(T)
        steps: list[_Step] = []
        t0 = 0.0
        while t0 < T * (1.0 - 1e-12) and len(steps) <= self.p:
            remaining = max(self.p - len(steps), 1)
            step = self._solve_step(sched, t0, remaining, steps[-1] if steps else None)
            logger.debug("T=%.6g step %d: t0=%.6g tau=%.6g gamma=%.6g beta=%.6g e=%.3g",
                         T, len(steps) + 1, t0, step.tau, step.gamma, step.beta, step.error)
            steps.append(step)
            t0 += step.tau
        self._cache[T] = steps
        return steps

    def coverage(self, T: float) -> float:
        """Steps needed to cover [0, T], the last one counted fractionally.

        A march capped at p + 1 steps that still falls short counts as p + 1.
        """
        steps = self.march(T)
        t_prev = math.fsum(s.tau for s in steps[:-1])
        last = steps[-1]
        if t_prev + last.tau < T:
            return float(len(steps))
        return len(steps) - 1 + (T - t_prev) / last.tau

    def pinned(self, T: float) -> list[_Step]:
        """The first p - 1 free steps at T, then one step ending exactly at T."""
        natural = self.march(T)
        steps = list(natural[: self.p - 1])
        t0 = math.fsum(s.tau for s in steps)
        tau = T - t0
        if tau <= 1e-9 * T:
            raise StepUnderflowError("the first p - 1 steps already cover the schedule", p=self.p, T=T)
        hint = natural[self.p - 1] if len(natural) >= self.p else None
        steps.append(self._solve_pinned(self.shape.with_total_time(T), t0, tau, hint))
        return steps


def _refine_total_time(count, a: float, b: float, rtol: float) -> float:
    """Root of ``count`` in log T, given ``count(a) < 0 <= count(b)``.

    Where the count jumps the root lands on the jump; if that side is short
    of p - 1 full steps the bracket end ``b`` is returned instead.
    """
    root = math.exp(brentq(lambda x: count(math.exp(x)), math.log(a), math.log(b), xtol=math.log1p(rtol)))
    return root if count(root) >= -0.5 else b


def derive_angles(
    inst: ProblemInstance,
    shape: Schedule,
    p: int,
    orders: tuple[int, int] = (BCH_ORDER, MAGNUS_ORDER),
    config: OptimizerConfig | None = None,
    alpha_fn: AlphaFn | None = None,
    include_cd: bool = True,
    matcher: StepMatcher | None = None,
) -> MatchReport:
    """Depth-p QAOA angles that mimic the CD protocol ``shape``.

    ``shape`` supplies lambda and s on unit time; its own total time is
    ignored and replaced by the searched T. The step count is a staircase
    in T, so the search runs on the fractional count from ``coverage``:
    a geometric scan over the bracket finds the first T needing p steps,
    then Brent's method closes in on it.
    """
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise ValidationError("p must be a positive integer", p=p)
    shape.check_endpoints()
    config = config or OptimizerConfig()
    if include_cd and alpha_fn is None:
        alpha_fn = VariationalAgp(inst)
    if not include_cd:
        alpha_fn = None
    matcher = matcher or StepMatcher(inst, orders, nodes=config.nodes)
    marcher = _Marcher(inst, shape, int(p), matcher, alpha_fn, config)

    def count(T: float) -> float:
        return marcher.coverage(T) - p

    lo, hi = config.t_bracket
    below = None
    for T in np.geomspace(lo, hi, config.t_scan_points):
        T = float(T)
        if count(T) >= 0:
            break
        below = T
    else:
        raise InfeasibleDepthError("the T bracket is too short for this depth",
                                   p=int(p), steps_at_hi=marcher.coverage(hi), bracket=[lo, hi])
    if below is None:
        raise InfeasibleDepthError("the shortest T in the bracket already needs more steps",
                                   p=int(p), steps_at_lo=marcher.coverage(lo), bracket=[lo, hi])
    T = _refine_total_time(count, below, T, config.t_rtol)
    steps = marcher.pinned(T)

    sched = shape.with_total_time(T)
    report_warnings: list[str] = []
    validity = []
    t0 = 0.0
    for q, step in enumerate(steps):
        lam_bar, lam_dot, s_bar, alpha_bar = interval_averages(sched, alpha_fn, t0, step.tau, config.nodes)
        validity.append(validity_check(step.gamma, step.beta, lam_bar, lam_dot, s_bar, alpha_bar, inst,
                                       config.validity_margin, tau=step.tau))
        if step.error > config.step_error_ceiling:
            _warn(report_warnings, f"step {q + 1} matching error {step.error:.3g} exceeds "
                  f"{config.step_error_ceiling:g}", DivergenceWarning)
        t0 += step.tau

    angles = AngleSet(
        [s.gamma for s in steps], [s.beta for s in steps], [s.tau for s in steps], [s.error for s in steps]
    )
    total_error = float(sum(s.error for s in steps))
    logger.info("derived p=%d angles on %s: T=%.6g, total error %.3g", p, inst.label, angles.equivalent_T, total_error)
    return MatchReport(angles, sched, FORWARD, validity, total_error, matcher.orders, config, report_warnings, T)


def _average_pinned_basis(ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Interval averages of u(1-u) and u^2(1-u)."""
    def f1(u):
        return u**2 / 2.0 - u**3 / 3.0

    def f2(u):
        return u**3 / 3.0 - u**4 / 4.0

    width = ub - ua
    return np.column_stack([(f1(ub) - f1(ua)) / width, (f2(ub) - f2(ua)) / width])


def reverse_protocol(
    inst: ProblemInstance,
    angles: AngleSet,
    orders: tuple[int, int] = (BCH_ORDER, MAGNUS_ORDER),
    alpha_fn: AlphaFn | None = None,
    include_cd: bool = True,
    smoothness_threshold: float = SMOOTHNESS_THRESHOLD,
    matcher: StepMatcher | None = None,
) -> MatchReport:
    """Continuous protocol whose CD evolution the given angles approximate."""
    gammas = np.asarray(angles.gammas, dtype=float)
    betas = np.asarray(angles.betas, dtype=float)
    if gammas.size == 0:
        raise ValidationError("angle set is empty")
    taus = gammas + betas
    bad = np.flatnonzero(taus <= 0)
    if bad.size:
        raise DegenerateStepError("gamma + beta must be positive for every step", steps=(bad + 1).tolist())
    if include_cd and alpha_fn is None:
        alpha_fn = VariationalAgp(inst)
    if not include_cd:
        alpha_fn = None

    report_warnings: list[str] = []
    if gammas.size > 1:
        jump = float(max(np.max(np.abs(np.diff(gammas))), np.max(np.abs(np.diff(betas)))))
        if jump > smoothness_threshold:
            _warn(report_warnings, f"adjacent angles jump by {jump:.3g}; the fitted schedule may be poor",
                  NonSmoothAnglesWarning)

    T = float(math.fsum(taus))
    ends = np.cumsum(taus)
    starts = ends - taus
    mids = 0.5 * (starts + ends) / T
    lam_raw = np.clip(gammas / taus, 0.0, 1.0)
    lam_fit = np.maximum.accumulate(lam_raw)
    if np.any(lam_fit - lam_raw > 1e-12):
        _warn(report_warnings, "implied lambda is not monotone; clamped to its running maximum", MonotoneClampWarning)
    knots = np.column_stack([np.concatenate([[0.0], mids, [1.0]]), np.concatenate([[0.0], lam_fit, [1.0]])])
    shape = PchipShape(knots)

    kappa = -gammas * betas / (2.0 * taus)
    ua, ub = starts / T, np.minimum(ends / T, 1.0)
    if alpha_fn is not None:
        lam_a, lam_b = shape.value(ua), shape.value(ub)
        if hasattr(alpha_fn, "integral"):
            cd = np.asarray(alpha_fn.integral(lam_a, lam_b), dtype=float) / taus
        else:
            cd = np.asarray(alpha_fn(lam_fit), dtype=float) * (lam_b - lam_a) / taus
    else:
        cd = np.zeros_like(kappa)
    s_bar = kappa - cd
    coeffs, *_ = np.linalg.lstsq(_average_pinned_basis(ua, ub), s_bar, rcond=None)
    sched = Schedule(T, shape, PinnedCubicDrive(float(coeffs[0]), float(coeffs[1])))

    matcher = matcher or StepMatcher(inst, orders)
    errors, validity = [], []
    for q in range(gammas.size):
        t0, tau = float(starts[q]), float(taus[q])
        errors.append(matcher.error(float(gammas[q]), float(betas[q]), sched, alpha_fn, t0, tau))
        lam_bar, lam_dot, s_avg, alpha_bar = interval_averages(sched, alpha_fn, t0, tau)
        validity.append(validity_check(float(gammas[q]), float(betas[q]), lam_bar, lam_dot, s_avg, alpha_bar, inst,
                                       tau=tau))

    result = AngleSet(gammas.tolist(), betas.tolist(), taus.tolist(), errors)
    total_error = float(sum(errors))
    logger.info("reversed p=%d angles on %s: T=%.6g, s=(%.4g, %.4g), residual %.3g",
                angles.p, inst.label, T, coeffs[0], coeffs[1], total_error)
    return MatchReport(result, sched, REVERSE, validity, total_error, matcher.orders, None, report_warnings, T)


def effective_schedule(angles: AngleSet) -> dict[str, np.ndarray]:
    """Per step: length gamma+beta, lam_eff = gamma/(gamma+beta), CD strength -gamma beta/(gamma+beta)."""
    gammas = np.asarray(angles.gammas, dtype=float)
    betas = np.asarray(angles.betas, dtype=float)
    taus = gammas + betas
    if np.any(taus <= 0):
        raise DegenerateStepError("gamma + beta must be positive for every step")
    return {"tau": taus, "lam_eff": gammas / taus, "cd_strength": -gammas * betas / taus}


def angle_budget(angles: AngleSet) -> float:
    return float(np.sum(np.abs(angles.gammas)) + np.sum(np.abs(angles.betas)))


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """``y ~ prefactor * x**exponent`` by least squares in log-log; returns ``(exponent, prefactor)``."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.size < 2 or xs.size != ys.size:
        raise ValidationError("a power-law fit needs at least two matching points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValidationError("a power-law fit needs positive data")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(np.exp(intercept))


def conjectured_ring_ratio(p: int) -> float:
    return (2 * p + 1) / (2 * p + 2)
