"""Parked-car behaviour: arrival hour, parked duration and departure risk.

Arrival hours follow a Weibull law truncated to one day.  The time a car
stays parked follows a two-component gamma mixture whose parameters depend
on the integer hour the car arrived.  From the duration law we get the
conditional probability that a car which has already been parked for some
time stays at least ``n`` more hours, and from that the probability that a
relay leaves inside a communication window ``tau``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import specfun

__all__ = [
    "ConfigError",
    "DegenerateConditionError",
    "WeibullArrival",
    "DualGammaHourParams",
    "ParkingModel",
    "Relay",
    "arrival_pdf",
    "arrival_cdf",
    "arrival_quantile",
    "sample_arrival",
    "arrival_mean",
    "duration_pdf",
    "duration_sf",
    "duration_mean",
    "survival_probability",
    "survival_probability_printed",
    "leave_probability",
    "sample_duration",
    "load_parking_model",
    "parse_parking_model",
    "default_parking_model",
    "exponential_parking_model",
    "DAY_HOURS",
]

DAY_HOURS = 24.0
_WEIGHT_TOL = 1e-9
_EXTINCT = 1e-300


class ConfigError(ValueError):
    """Invalid configuration or parameter-table content."""


class DegenerateConditionError(ArithmeticError):
    """The conditioning event has (numerically) zero probability."""


@dataclass(frozen=True)
class WeibullArrival:
    alpha: float = 0.9831
    beta: float = 16.8

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError(f"weibull alpha and beta must be > 0, got {self.alpha}, {self.beta}")


@dataclass(frozen=True)
class DualGammaHourParams:
    """Short-stay / long-stay gamma mixture for one arrival hour."""

    kappa_s: float
    theta_s: float
    kappa_l: float
    theta_l: float
    d1: float
    d2: float

    def __post_init__(self) -> None:
        for name in ("kappa_s", "theta_s", "kappa_l", "theta_l"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        for name in ("kappa_s", "kappa_l"):
            if getattr(self, name) > specfun.S_MAX:
                raise ConfigError(f"{name} must be <= {specfun.S_MAX:g}")
        for name in ("d1", "d2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be a non-negative number, got {v!r}")
        if abs(self.d1 + self.d2 - 1.0) > _WEIGHT_TOL:
            raise ConfigError(f"d1 + d2 must equal 1 (got {self.d1 + self.d2!r})")

    @property
    def mean(self) -> float:
        return self.d1 * self.kappa_s * self.theta_s + self.d2 * self.kappa_l * self.theta_l


@dataclass(frozen=True)
class ParkingModel:
    arrival: WeibullArrival
    duration_table: tuple[DualGammaHourParams, ...]
    description: str = ""

    def __post_init__(self) -> None:
        if len(self.duration_table) != 24:
            raise ConfigError(f"duration table must cover 24 hours, got {len(self.duration_table)}")

    def params(self, hour: int) -> DualGammaHourParams:
        return self.duration_table[int(hour) % 24]


@dataclass
class Relay:
    """A parked car acting as relay.

    ``arrival_time`` is the continuous hour-of-day of arrival; the duration
    parameters are keyed to its integer part.  ``planned_duration`` is
    simulation ground truth and never read by the analytical code.
    """

    arrival_hour: int
    elapsed_parked: float
    planned_duration: float | None = None
    arrival_time: float | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not 0 <= int(self.arrival_hour) <= 23:
            raise ValueError(f"arrival_hour must be in 0..23, got {self.arrival_hour}")
        if self.elapsed_parked < 0:
            raise ValueError(f"elapsed_parked must be >= 0, got {self.elapsed_parked}")
        if self.planned_duration is not None and self.planned_duration <= 0:
            raise ValueError("planned_duration must be > 0 when set")


# -- arrival ------------------------------------------------------------------

def arrival_pdf(model: WeibullArrival, t: float) -> float:
    """Untruncated Weibull density at hour ``t``.

    At t = 0 with alpha < 1 the density is unbounded; the value returned is
    the formula evaluated at the point (``inf``).
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    a, b = model.alpha, model.beta
    if t == 0.0:
        if a < 1:
            return math.inf
        return a / b if a == 1 else 0.0
    z = t / b
    return (a / b) * z ** (a - 1) * math.exp(-(z**a))


def arrival_cdf(model: WeibullArrival, t: float) -> float:
    if t <= 0:
        return 0.0
    return -math.expm1(-((t / model.beta) ** model.alpha))


def arrival_quantile(model: WeibullArrival, u: np.ndarray | float) -> np.ndarray | float:
    """Inverse CDF of the Weibull truncated to [0, 24)."""
    mass = arrival_cdf(model, DAY_HOURS)
    u = np.asarray(u, dtype=float)
    t = model.beta * (-np.log1p(-u * mass)) ** (1.0 / model.alpha)
    # u -> 1 lands exactly on the boundary in floating point.
    t = np.minimum(t, np.nextafter(DAY_HOURS, 0.0))
    return t if t.ndim else float(t)


def sample_arrival(model: WeibullArrival, rng: np.random.Generator, size: int | None = None):
    """Draw arrival hours-of-day in [0, 24)."""
    return arrival_quantile(model, rng.random(size))


def arrival_mean(model: WeibullArrival) -> float:
    """Mean arrival hour of the Weibull truncated to [0, 24)."""
    a, b = model.alpha, model.beta
    z = (DAY_HOURS / b) ** a
    return b * specfun.lower_incomplete_gamma(1.0 + 1.0 / a, z) / arrival_cdf(model, DAY_HOURS)


# -- duration -----------------------------------------------------------------

def _gamma_pdf(x: float, k: float, theta: float) -> float:
    return math.exp((k - 1) * math.log(x) - x / theta - math.lgamma(k) - k * math.log(theta))


def duration_pdf(params: DualGammaHourParams, x: float) -> float:
    if x <= 0:
        raise ValueError(f"duration x must be > 0, got {x}")
    p = params
    return p.d1 * _gamma_pdf(x, p.kappa_s, p.theta_s) + p.d2 * _gamma_pdf(x, p.kappa_l, p.theta_l)


def duration_sf(params: DualGammaHourParams, x: float) -> float:
    """P[X > x] for the mixture, accurate in the far tail."""
    p = params
    if x <= 0:
        return p.d1 + p.d2
    return p.d1 * specfun.gammainc_upper(p.kappa_s, x / p.theta_s) + p.d2 * specfun.gammainc_upper(
        p.kappa_l, x / p.theta_l
    )


def duration_mean(params: DualGammaHourParams) -> float:
    return params.mean


def survival_probability(params: DualGammaHourParams, t_a: float, n: float) -> float:
    """P[X > t_a + n | X > t_a].

    Written with regularized upper incomplete gammas.  Multiplying numerator
    and denominator by -Gamma(k_s) Gamma(k_l) gives back the lower-gamma
    expression of ``survival_probability_printed``; this orientation avoids
    the cancellation that expression suffers once the tail is small.
    """
    if t_a < 0 or n < 0:
        raise ValueError(f"t_a and n must be >= 0, got t_a={t_a}, n={n}")
    if n == 0:
        return 1.0
    den = duration_sf(params, t_a)
    if den < _EXTINCT:
        raise DegenerateConditionError(
            f"P[X > {t_a}] = {den:.3g} is numerically zero; survival is undefined"
        )
    num = duration_sf(params, t_a + n)
    return min(1.0, max(0.0, num / den))


def survival_probability_printed(params: DualGammaHourParams, t_a: float, n: float) -> float:
    """The lower-incomplete-gamma ratio exactly as usually written.

    Kept for cross-checking; loses precision when P[X > t_a] is small.
    """
    p = params
    gs, gl = math.gamma(p.kappa_s), math.gamma(p.kappa_l)

    def part(x: float) -> float:
        return (
            p.d1 * specfun.lower_incomplete_gamma(p.kappa_s, x / p.theta_s) * gl
            + p.d2 * specfun.lower_incomplete_gamma(p.kappa_l, x / p.theta_l) * gs
            - gl * gs
        )

    return part(t_a + n) / part(t_a)


def leave_probability(params: DualGammaHourParams, t_dur: float, tau: float) -> float:
    """Probability that a car parked for ``t_dur`` hours leaves within ``tau``."""
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if t_dur < 0:
        raise ValueError(f"t_dur must be >= 0, got {t_dur}")
    if t_dur == 0:
        # Direct CDF keeps precision for tiny tau.
        p = params
        return p.d1 * specfun.gammainc_lower(p.kappa_s, tau / p.theta_s) + p.d2 * specfun.gammainc_lower(
            p.kappa_l, tau / p.theta_l
        )
    return 1.0 - survival_probability(params, t_dur, tau)


def sample_duration(params: DualGammaHourParams, rng: np.random.Generator, size: int | None = None):
    """Draw parked durations (hours) from the mixture."""
    p = params
    short = rng.random(size) < p.d1
    xs = rng.gamma(p.kappa_s, p.theta_s, size)
    xl = rng.gamma(p.kappa_l, p.theta_l, size)
    out = np.where(short, xs, xl)
    return out if size is not None else float(out)


# -- parameter tables ---------------------------------------------------------

_HOUR_FIELDS = ("kappa_s", "theta_s", "kappa_l", "theta_l", "d1", "d2")


def parse_parking_model(doc: Mapping[str, Any], source: str = "<table>") -> ParkingModel:
    """Build a ParkingModel from the decoded table document.

    Layout::

        {"weibull": {"alpha": .., "beta": ..},
         "hours": [{"hour": 0, "kappa_s": .., "theta_s": .., "kappa_l": ..,
                    "theta_l": .., "d1": .., "d2": ..}, ... 24 records]}
    """
    errors: list[str] = []
    if not isinstance(doc, Mapping):
        raise ConfigError(f"{source}: top level must be an object")

    wb = doc.get("weibull")
    arrival = None
    if not isinstance(wb, Mapping):
        errors.append("weibull: missing or not an object")
    else:
        vals = {}
        for key in ("alpha", "beta"):
            v = wb.get(key)
            if not _is_number(v) or v <= 0:
                errors.append(f"weibull.{key}: expected a positive number, got {v!r}")
            vals[key] = v
        if len(errors) == 0:
            arrival = WeibullArrival(float(vals["alpha"]), float(vals["beta"]))

    hours = doc.get("hours")
    table: list[DualGammaHourParams | None] = [None] * 24
    if not isinstance(hours, list):
        errors.append("hours: missing or not a list")
    else:
        for i, rec in enumerate(hours):
            where = f"hours[{i}]"
            if not isinstance(rec, Mapping):
                errors.append(f"{where}: not an object")
                continue
            h = rec.get("hour", i)
            if not isinstance(h, int) or isinstance(h, bool) or not 0 <= h <= 23:
                errors.append(f"{where}.hour: expected an integer in 0..23, got {h!r}")
                continue
            if table[h] is not None:
                errors.append(f"{where}.hour: duplicate record for hour {h}")
                continue
            bad = False
            for key in _HOUR_FIELDS:
                v = rec.get(key)
                if not _is_number(v):
                    errors.append(f"{where}.{key}: expected a number, got {v!r}")
                    bad = True
            if bad:
                continue
            try:
                table[h] = DualGammaHourParams(*(float(rec[k]) for k in _HOUR_FIELDS))
            except ConfigError as exc:
                errors.append(f"{where}: {exc}")
        missing = [h for h, v in enumerate(table) if v is None]
        if missing and len(errors) == 0:
            errors.append(f"hours: no record for hour(s) {missing}")

    if errors:
        raise ConfigError(f"{source}: invalid parking table:\n  " + "\n  ".join(errors))
    return ParkingModel(arrival, tuple(table), str(doc.get("description", "")))


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def load_parking_model(path: str | Path) -> ParkingModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read parking table ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_parking_model(doc, str(path))


def default_table_document() -> dict:
    text = resources.files("parkrelay").joinpath("data/synthetic_parking_table.json").read_text()
    return json.loads(text)


def default_parking_model() -> ParkingModel:
    """The shipped SYNTHETIC table (not survey-fitted values)."""
    return parse_parking_model(default_table_document(), "synthetic_parking_table.json")


def exponential_parking_model(theta: float = 4.0, arrival: WeibullArrival | None = None) -> ParkingModel:
    """Memoryless control: every hour uses the same exponential duration."""
    p = DualGammaHourParams(1.0, theta, 1.0, theta, 0.5, 0.5)
    return ParkingModel(arrival or WeibullArrival(), (p,) * 24, "exponential control")
