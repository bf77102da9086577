"""Resistive-force and required-power model of a cyclist plus bicycle.

All forces are in newtons, speeds in m/s, powers in watts. The sign
convention for air resistance is: positive opposes forward motion when
the relative airspeed (bike speed + headwind) is positive, so a strong
tailwind yields a negative (propulsive) drag force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DRAFT_A0 = 0.62
DRAFT_A1 = -0.0104
DRAFT_A2 = 0.0452


@dataclass(frozen=True)
class EnvironmentParams:
    """Ambient and road conditions plus drivetrain efficiency.

    road_gradient is rise over run (dimensionless), wind_speed is a
    scalar headwind in m/s (negative values are tailwinds).
    """

    air_density: float = 1.225
    drag_coefficient: float = 1.0
    frontal_area: float = 0.5
    rolling_coefficient: float = 0.005
    road_gradient: float = 0.0
    gravity: float = 9.81
    mechanical_efficiency: float = 0.95
    wind_speed: float = 0.0

    def __post_init__(self) -> None:
        if self.air_density <= 0:
            raise ValueError("air_density must be > 0")
        if self.frontal_area <= 0:
            raise ValueError("frontal_area must be > 0")
        if not 0 < self.mechanical_efficiency <= 1:
            raise ValueError("mechanical_efficiency must be in (0, 1]")
        if self.rolling_coefficient < 0:
            raise ValueError("rolling_coefficient must be >= 0")
        if self.gravity <= 0:
            raise ValueError("gravity must be > 0")


@dataclass(frozen=True)
class MassParams:
    rider_mass: float = 75.0
    bike_mass: float = 25.0

    def __post_init__(self) -> None:
        if self.rider_mass <= 0 or self.bike_mass <= 0:
            raise ValueError("masses must be > 0")

    @property
    def total(self) -> float:
        return self.rider_mass + self.bike_mass


def air_resistance(v_b: float, env: EnvironmentParams) -> float:
    """Aerodynamic drag force 0.5*rho*c_d*A_p*(v_b+v_W)^2, signed."""
    rel = v_b + env.wind_speed
    return 0.5 * env.air_density * env.drag_coefficient * env.frontal_area * rel * abs(rel)


def drafting_factor(d_w: float) -> float:
    """Drag reduction factor for a following rider at wheel gap d_w (m).

    The quadratic fit is only valid for close following; it is clamped
    at 1.0 because drafting can never increase drag.
    """
    if d_w < 0:
        raise ValueError("wheel gap must be >= 0")
    return min(DRAFT_A0 + DRAFT_A1 * d_w + DRAFT_A2 * d_w * d_w, 1.0)


def rolling_resistance(mass: MassParams, env: EnvironmentParams) -> float:
    """Rolling drag c_R*(M_c+M_b)*g*cos(arctan(G_R))."""
    slope = math.atan(env.road_gradient)
    return env.rolling_coefficient * mass.total * env.gravity * math.cos(slope)


def gravity_force(mass: MassParams, env: EnvironmentParams) -> float:
    """Grade force (M_c+M_b)*g*sin(arctan(G_R)); negative on descents."""
    slope = math.atan(env.road_gradient)
    return mass.total * env.gravity * math.sin(slope)


def acceleration_force(mass: MassParams, a: float) -> float:
    """Inertial force (M_c+M_b)*a for speed variation a (m/s^2)."""
    return mass.total * a


def total_resistive_force(v_b: float, mass: MassParams, env: EnvironmentParams) -> float:
    """Sum of drag, rolling and grade forces at speed v_b (no inertia)."""
    return air_resistance(v_b, env) + rolling_resistance(mass, env) + gravity_force(mass, env)


def leader_power(v_b: float, a: float, mass: MassParams, env: EnvironmentParams) -> float:
    """Rider input power of a lead (non-drafting) cyclist at speed v_b."""
    forces = total_resistive_force(v_b, mass, env) + acceleration_force(mass, a)
    return forces * v_b / env.mechanical_efficiency


def drafting_power(v_b: float, a: float, d_w: float, mass: MassParams, env: EnvironmentParams) -> float:
    """Rider input power when following at wheel gap d_w (m)."""
    forces = (
        air_resistance(v_b, env) * drafting_factor(d_w)
        + rolling_resistance(mass, env)
        + gravity_force(mass, env)
        + acceleration_force(mass, a)
    )
    return forces * v_b / env.mechanical_efficiency
