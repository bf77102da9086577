"""Static energy model of the pedal-assist drivetrain.

Covers the integer command codecs (raw 0-255 request <-> 1-16 assist
level), the human and motor wheel-power approximations, the power-share
variable m, speed-sector classification, and the least-squares fit of
the no-load power line.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Y_MIN = 90
Y_MAX = 165
YTILDE_MIN = 1
YTILDE_MAX = 16


class CommandTooLow(ValueError):
    """Raw request below the valid motor band (motor current too small)."""


class CommandTooHigh(ValueError):
    """Raw request above the valid motor band (over rated power)."""


class FitError(ValueError):
    """No-load fit is rank deficient (fewer than two distinct levels)."""


class DegenerateSweep(ValueError):
    """Sweep never satisfies a sector boundary condition."""


class Sector(enum.Enum):
    HUMAN_FREEWHEEL = "human_freewheel"
    SHARED = "shared"
    MOTOR_FREEWHEEL = "motor_freewheel"


@dataclass(frozen=True)
class PowerSplitParams:
    """Drivetrain model constants.

    torque_bias is the pedal torque floor below which the rider adds no
    wheel power; noload_slope/intercept give the wheel-side no-load loss
    as a line in the assist level.
    """

    torque_bias: float = 45.0
    crank_efficiency: float = 0.90
    scaling: float = 1.5
    motor_efficiency: float = 0.80
    noload_slope: float = 3.0
    noload_intercept: float = 5.0

    def __post_init__(self) -> None:
        if self.torque_bias < 0:
            raise ValueError("torque_bias must be >= 0")
        if not 0 < self.crank_efficiency <= 1:
            raise ValueError("crank_efficiency must be in (0, 1]")
        if not 0 < self.motor_efficiency <= 1:
            raise ValueError("motor_efficiency must be in (0, 1]")
        if self.scaling <= 0:
            raise ValueError("scaling must be > 0")
        if self.noload_slope < 0 or self.noload_intercept < 0:
            raise ValueError("no-load line coefficients must be >= 0")

    def noload_loss(self, y_tilde: int) -> float:
        """Wheel-side no-load loss (W) at an assist level."""
        return self.noload_slope * y_tilde + self.noload_intercept


@dataclass(frozen=True)
class PowerSplit:
    """Per-step decomposition of wheel power into human and motor parts.

    m is the human share P_Hw / (P_Hw + P_Mw); it is undefined (and the
    `defined` flag False) when no power reaches the wheel.
    """

    human_wheel_power: float
    motor_wheel_power: float
    wheel_power: float
    share: float
    defined: bool


@dataclass(frozen=True)
class SectorBounds:
    """Wheel speeds (km/h) bounding the shared-power sector."""

    s1: float
    s2: float

    def __post_init__(self) -> None:
        if not self.s1 < self.s2:
            raise ValueError("require s1 < s2")


def y_to_ytilde(y: int) -> int:
    """Translate a raw 0-255 request to the 1-16 assist level (Y/5 - 17)."""
    if y < Y_MIN:
        raise CommandTooLow(f"request {y} below valid band [{Y_MIN}, {Y_MAX}]")
    if y > Y_MAX:
        raise CommandTooHigh(f"request {y} above valid band [{Y_MIN}, {Y_MAX}]")
    return min(max(round(y / 5 - 17), YTILDE_MIN), YTILDE_MAX)


def ytilde_to_y(y_tilde: int) -> int:
    """Inverse assist-level translation, 5*(Y~ + 17)."""
    if not YTILDE_MIN <= y_tilde <= YTILDE_MAX:
        raise ValueError(f"assist level {y_tilde} outside [{YTILDE_MIN}, {YTILDE_MAX}]")
    return 5 * (y_tilde + 17)


def pedal_power(torque: float, pedal_speed: float) -> float:
    """Raw rider power at the pedals, torque (Nm) times cadence (rad/s)."""
    if pedal_speed < 0:
        raise ValueError("pedal speed must be >= 0")
    return torque * pedal_speed


def human_wheel_power(
    torque: float,
    pedal_speed: float,
    p: PowerSplitParams,
    motor_active: bool = True,
) -> float:
    """Human power reaching the wheel: scaling * eta_C * (tau - bias) * w, floored at 0.

    The motor_active flag mirrors the guard under which the bias model
    was identified; it is always true for this drivetrain but kept for
    future regenerative extensions.
    """
    if pedal_speed < 0:
        raise ValueError("pedal speed must be >= 0")
    if not motor_active:
        return max(p.crank_efficiency * torque * pedal_speed, 0.0)
    return max(p.scaling * p.crank_efficiency * (torque - p.torque_bias) * pedal_speed, 0.0)


def motor_wheel_power(electrical_power: float, y_tilde: int, p: PowerSplitParams) -> float:
    """Motor power reaching the wheel: eta_M * P_Me minus the no-load loss.

    Clamped at zero: a free-wheeling hub motor cannot absorb power in
    this model.
    """
    if electrical_power < 0:
        raise ValueError("electrical power must be >= 0")
    return max(electrical_power * p.motor_efficiency - p.noload_loss(y_tilde), 0.0)


def electrical_power(battery_voltage: float, motor_current: float) -> float:
    """Electrical power into the motor, V * I."""
    if battery_voltage <= 0:
        raise ValueError("battery voltage must be > 0")
    if motor_current < 0:
        raise ValueError("motor current must be >= 0")
    return battery_voltage * motor_current


def power_split(human_w: float, motor_w: float) -> PowerSplit:
    """Combine wheel powers into a PowerSplit with the share m.

    m = 0 when the motor provides everything, 1 when the human does;
    undefined when total wheel power is zero.
    """
    if human_w < 0 or motor_w < 0:
        raise ValueError("wheel powers must be >= 0")
    total = human_w + motor_w
    if total > 0:
        return PowerSplit(human_w, motor_w, total, human_w / total, True)
    return PowerSplit(human_w, motor_w, total, 0.0, False)


def fit_noload_params(
    samples: Iterable[tuple[float, float]],
    motor_efficiency: float = 1.0,
) -> tuple[float, float]:
    """Least-squares line through (assist level, no-load power) points.

    Each sample is (y_tilde, no_load_electrical_power); the power values
    are scaled by motor_efficiency before fitting, so pass 1.0 when they
    are already wheel-side. Returns (slope, intercept).
    """
    pts = list(samples)
    if len(pts) < 2:
        raise FitError("need at least two samples")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float) * motor_efficiency
    if np.all(x == x[0]):
        raise FitError("all samples at one assist level; line is underdetermined")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def sector_bounds(sweep: Sequence[tuple[float, float, float]]) -> SectorBounds:
    """Locate the shared-power sector in a (wheel speed, P_Hw, P_Mw) sweep.

    s1 is the lowest wheel speed with positive human wheel power, s2 the
    lowest speed at or above s1 with zero motor wheel power. The sweep
    must be sorted by wheel speed.
    """
    if not sweep:
        raise DegenerateSweep("empty sweep")
    s1 = None
    for speed, human_w, _ in sweep:
        if human_w > 0:
            s1 = speed
            break
    if s1 is None:
        raise DegenerateSweep("human wheel power never positive")
    s2 = None
    for speed, _, motor_w in sweep:
        if speed >= s1 and motor_w == 0:
            s2 = speed
            break
    if s2 is None:
        raise DegenerateSweep("motor wheel power never reaches zero")
    if s1 >= s2:
        raise DegenerateSweep(f"degenerate sector bounds s1={s1} s2={s2}")
    return SectorBounds(s1, s2)


def classify_sector(wheel_speed: float, bounds: SectorBounds) -> Sector:
    """Assign a wheel speed to a power sector; boundaries count as shared."""
    if wheel_speed < bounds.s1:
        return Sector.HUMAN_FREEWHEEL
    if wheel_speed > bounds.s2:
        return Sector.MOTOR_FREEWHEEL
    return Sector.SHARED
