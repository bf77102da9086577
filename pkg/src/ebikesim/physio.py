"""Rider physiology: heart-rate dynamics, ventilation and inhaled dose.

Heart rate follows a discrete recurrence driven by rider power with a
fast linear term, a slow training-duration term and two threshold terms
that accumulate time spent above/below the anaerobic threshold.
Ventilation is an affine proxy of heart rate; inhaled pollutant dose
integrates ventilation times ambient concentration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class StateError(RuntimeError):
    """Physiology state used before initialisation."""


@dataclass(frozen=True)
class HeartRateParams:
    """Heart-rate recurrence constants.

    k2 is the one-step memory of the rate delta, so the step response
    time constant is roughly sample_time / (1 - k2). Defaults are tuned
    for a 5 Hz sample stream; scenarios at other rates should retune.
    k4 acts on accumulated time above the anaerobic threshold (usually
    <= 0), k5 on time below it after the first crossing.
    """

    resting_hr: float = 70.0
    anaerobic_threshold_hr: float = 185.0
    k1: float = 0.0096
    k2: float = 0.99004983374916811
    k3: float = 0.00234
    k4: float = -1e-5
    k5: float = 1e-5
    time_constant: float = 60.0
    sample_time: float = 0.2
    max_hr: float = 220.0

    def __post_init__(self) -> None:
        if self.resting_hr <= 0:
            raise ValueError("resting_hr must be > 0")
        if self.anaerobic_threshold_hr <= self.resting_hr:
            raise ValueError("anaerobic threshold must exceed resting HR")
        if self.sample_time <= 0 or self.time_constant <= 0:
            raise ValueError("sample_time and time_constant must be > 0")


@dataclass(frozen=True)
class VentilationCalibration:
    """Affine map from heart rate to minute ventilation through two anchors."""

    hr_low: float = 70.0
    ve_low: float = 25.0
    hr_high: float = 120.0
    ve_high: float = 65.0
    ve_floor: float = 6.0

    def __post_init__(self) -> None:
        if not self.hr_high > self.hr_low:
            raise ValueError("anchor heart rates must be increasing")
        if not self.ve_high > self.ve_low:
            raise ValueError("anchor ventilation values must be increasing")
        if self.ve_floor < 0:
            raise ValueError("ventilation floor must be >= 0")


@dataclass
class RiderPhysioState:
    """Evolving physiology of one simulated rider.

    Owns the heart-rate history and the running threshold accumulators,
    the current ventilation and the cumulative inhaled dose.
    """

    step_index: int = 0
    hr_history: list[float] = field(default_factory=list)
    k_on: int | None = None
    ventilation: float = 0.0
    cumulative_dose: float = 0.0
    _above_accum: float = 0.0
    _below_accum: float = 0.0

    @classmethod
    def initial(cls, params: HeartRateParams, cal: VentilationCalibration | None = None) -> "RiderPhysioState":
        state = cls(hr_history=[params.resting_hr])
        state.ventilation = ventilation_from_hr(params.resting_hr, cal or VentilationCalibration())
        return state

    @property
    def heart_rate(self) -> float:
        if not self.hr_history:
            raise StateError("physiology state not initialised")
        return self.hr_history[-1]


def unit_step(x: float) -> int:
    """1 for x >= 0, else 0."""
    return 1 if x >= 0 else 0


def hr_step(state: RiderPhysioState, power: float, p: HeartRateParams) -> float:
    """Advance heart rate one sample under rider power (W) and return it.

    The threshold sums are carried as running accumulators (left-to-right
    addition order, matching a literal re-summation of the history). The
    output is clamped to [0.8 * resting, max_hr] as a plausibility guard.
    """
    if not state.hr_history:
        raise StateError("physiology state not initialised; use RiderPhysioState.initial")
    k = state.step_index + 1
    prev_delta = state.hr_history[-1] - p.resting_hr
    delta = (
        p.k1 * power
        + p.k2 * prev_delta
        + p.k3 * (1.0 - math.exp(-p.sample_time * k / p.time_constant)) * power
        + p.k4 * state._above_accum
        + p.k5 * state._below_accum
    )
    hr = p.resting_hr + delta
    hr = min(max(hr, 0.8 * p.resting_hr), p.max_hr)
    state.step_index = k
    state.hr_history.append(hr)
    if state.k_on is None and hr > p.anaerobic_threshold_hr:
        state.k_on = k
    above = hr - p.anaerobic_threshold_hr
    if above >= 0:
        state._above_accum += p.sample_time * above
    if state.k_on is not None:
        below = p.anaerobic_threshold_hr - hr
        if below >= 0:
            state._below_accum += p.sample_time * below
    return hr


def minute_ventilation(breath_rate: float, tidal_volume: float) -> float:
    """Minute ventilation (L/min) = breathing frequency * tidal volume."""
    if breath_rate < 0 or tidal_volume < 0:
        raise ValueError("breath rate and tidal volume must be >= 0")
    return breath_rate * tidal_volume


def ventilation_from_hr(hr: float, cal: VentilationCalibration) -> float:
    """Minute ventilation proxied affinely from heart rate, floored below."""
    slope = (cal.ve_high - cal.ve_low) / (cal.hr_high - cal.hr_low)
    return max(cal.ve_low + slope * (hr - cal.hr_low), cal.ve_floor)


def inhaled_dose_step(ventilation: float, concentration: float, dt: float) -> float:
    """Dose increment (ug) from breathing at VE (L/min) in C (ug/m^3) for dt (s)."""
    if ventilation < 0 or concentration < 0:
        raise ValueError("ventilation and concentration must be >= 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    return ventilation * (dt / 60.0) * 1e-3 * concentration


def first_order_lag(target: float, previous: float, dt: float, tau: float) -> float:
    """One explicit step of a first-order lag; tau = 0 passes through."""
    if tau < 0:
        raise ValueError("lag time constant must be >= 0")
    return previous + (dt / (tau + dt)) * (target - previous)
