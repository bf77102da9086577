"""Scenario configuration: schema, defaults and the sectioned file parser.

Scenario files are plain text with bracketed sections and key = value
lines; [zone] sections repeat, one per route zone in order. Unknown
sections or keys are rejected so typos fail loudly rather than silently
falling back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .control import ControllerConfig
from .physics import EnvironmentParams, MassParams
from .physio import HeartRateParams, VentilationCalibration
from .powersplit import YTILDE_MAX, YTILDE_MIN, PowerSplitParams
from .route import RampShape, Route, ZoneKind, build_route, validate_route


class ConfigError(ValueError):
    """Scenario file unreadable, malformed or inconsistent."""


# Electrical power (W) commanded at each assist level 1..16, measured at
# full motor load. Strictly increasing and capped near the 250 W rating.
DEFAULT_MOTOR_TABLE = (
    40.0, 75.0, 107.0, 145.0, 167.0, 182.0, 193.0, 203.0,
    211.0, 218.0, 224.0, 230.0, 236.0, 241.0, 246.0, 250.0,
)
MOTOR_RATED_W = 250.0
MOTOR_RATED_TOLERANCE = 1.1


@dataclass(frozen=True)
class RiderBehavior:
    """Speed-holding rider: torque feedforward plus proportional correction.

    feedforward_torque should clear the drivetrain torque bias so the
    rider contributes wheel power when pushing at target speed.
    """

    target_speed_kmh: float = 25.0
    feedforward_torque: float = 50.0
    torque_gain: float = 50.0
    max_torque: float = 90.0
    torque_noise: float = 0.0
    gear_ratio: float = 0.4
    wheel_radius: float = 0.35

    def __post_init__(self) -> None:
        if self.target_speed_kmh <= 0:
            raise ValueError("target speed must be > 0")
        if self.wheel_radius <= 0 or self.gear_ratio <= 0:
            raise ValueError("gear ratio and wheel radius must be > 0")
        if self.max_torque <= 0 or self.torque_noise < 0:
            raise ValueError("max_torque must be > 0 and torque_noise >= 0")


@dataclass(frozen=True)
class BatteryParams:
    capacity_ah: float = 7.8
    nominal_voltage: float = 36.0

    def __post_init__(self) -> None:
        if self.capacity_ah <= 0 or self.nominal_voltage <= 0:
            raise ValueError("battery parameters must be > 0")


@dataclass(frozen=True)
class MotorResponse:
    """Speed-dependent unloading of the commanded electrical draw.

    The draw holds its commanded level below the unload band and falls
    linearly to the no-load level across it. The band rises with the
    assist level; this is what lets a fast-pedalling rider spin the
    motor down to free-wheeling.
    """

    unload_start_kmh: float = -0.85
    unload_slope_kmh: float = 1.21
    unload_width_kmh: float = 26.0

    def band(self, y_tilde: int) -> tuple[float, float]:
        start = self.unload_start_kmh + self.unload_slope_kmh * y_tilde
        return start, start + self.unload_width_kmh

    def load_fraction(self, y_tilde: int, wheel_speed_kmh: float) -> float:
        start, end = self.band(y_tilde)
        if wheel_speed_kmh <= start:
            return 1.0
        if wheel_speed_kmh >= end:
            return 0.0
        return (end - wheel_speed_kmh) / self.unload_width_kmh


@dataclass(frozen=True)
class ScenarioConfig:
    environment: EnvironmentParams = field(default_factory=EnvironmentParams)
    mass: MassParams = field(default_factory=MassParams)
    powersplit: PowerSplitParams = field(default_factory=PowerSplitParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    closed_loop: bool = True
    fixed_target: float | None = None
    initial_y_tilde: int = 1
    policy: dict[ZoneKind, int] = field(default_factory=dict)
    route: Route | None = None
    rider: RiderBehavior = field(default_factory=RiderBehavior)
    hr_params: HeartRateParams = field(default_factory=HeartRateParams)
    ventilation: VentilationCalibration = field(default_factory=VentilationCalibration)
    ventilation_lag: float = 0.0
    battery: BatteryParams = field(default_factory=BatteryParams)
    telemetry_rate_hz: int = 5
    duration_s: float | None = None
    max_duration_s: float = 3600.0
    plant_lag_s: float = 1.0
    speed_floor: float = 0.5
    substeps: int = 1
    motor_table: tuple[float, ...] = DEFAULT_MOTOR_TABLE
    motor_response: MotorResponse = field(default_factory=MotorResponse)
    seed: int | None = None

    @property
    def dt(self) -> float:
        return 1.0 / self.telemetry_rate_hz

    def validate(self) -> None:
        """Raise ConfigError on any inconsistency, before any stepping."""
        problems: list[str] = []
        if self.telemetry_rate_hz not in (1, 5):
            problems.append(f"telemetry rate {self.telemetry_rate_hz} Hz not in {{1, 5}}")
        if self.route is None:
            problems.append("no route configured (need at least one [zone])")
        else:
            problems.extend(validate_route(self.route))
        if len(self.motor_table) != YTILDE_MAX - YTILDE_MIN + 1:
            problems.append(f"motor table needs {YTILDE_MAX - YTILDE_MIN + 1} entries")
        else:
            if any(b <= a for a, b in zip(self.motor_table, self.motor_table[1:])):
                problems.append("motor table must be strictly increasing")
            if self.motor_table[-1] > MOTOR_RATED_W * MOTOR_RATED_TOLERANCE:
                problems.append(
                    f"motor table exceeds rated power {MOTOR_RATED_W} W beyond tolerance"
                )
        if not YTILDE_MIN <= self.initial_y_tilde <= YTILDE_MAX:
            problems.append(f"initial assist level {self.initial_y_tilde} out of range")
        if self.fixed_target is not None and not 0 < self.fixed_target <= 1:
            problems.append("fixed target share must be in (0, 1]")
        if not self.closed_loop and self.route is not None:
            kinds = {zone.kind for zone in self.route.zones}
            missing = [k.value for k in kinds if k not in self.policy]
            if missing:
                problems.append(f"open-loop policy missing zone kinds: {', '.join(sorted(missing))}")
        if self.duration_s is not None and self.duration_s < 0:
            problems.append("duration must be >= 0")
        if self.substeps < 1:
            problems.append("substeps must be >= 1")
        if self.rider.feedforward_torque < self.powersplit.torque_bias:
            problems.append("rider feedforward torque below the drivetrain torque bias")
        if problems:
            raise ConfigError("; ".join(problems))


def default_closed_loop_scenario(laps: int = 2, fixed_target: float | None = None) -> ScenarioConfig:
    """Two-lap closed-loop reference scenario on the zoned pollution route.

    The rider holds 25 km/h; the target share schedule is 0.9 in clean
    air, ramping to 0.3 through each transient ahead of the polluted
    stretch. fixed_target overrides the schedule (the controller then
    tracks one constant share, the no-scheduling baseline).
    """
    route = build_route(
        [
            (ZoneKind.NON_POLLUTED, 1200.0, 0.0, 0.9),
            (ZoneKind.TRANSIENT, 200.0, 50.0, None),
            (ZoneKind.POLLUTED, 1000.0, 100.0, 0.3),
            (ZoneKind.TRANSIENT, 200.0, 50.0, None),
        ],
        laps=laps,
    )
    return ScenarioConfig(route=route, fixed_target=fixed_target)


def default_open_loop_scenario() -> ScenarioConfig:
    """Single-pass open-loop zone scenario at a constant 20 km/h.

    Minimal assistance in clean air (the rider does essentially all the
    work), then a fixed assist level chosen to carry the rider through
    transient and polluted zones with a near-zero human share.
    """
    route = build_route(
        [
            (ZoneKind.NON_POLLUTED, 1200.0, 0.0, 0.9),
            (ZoneKind.TRANSIENT, 200.0, 50.0, None),
            (ZoneKind.POLLUTED, 800.0, 100.0, 0.3),
        ],
        laps=1,
    )
    return ScenarioConfig(
        route=route,
        closed_loop=False,
        policy={ZoneKind.NON_POLLUTED: 1, ZoneKind.TRANSIENT: 9, ZoneKind.POLLUTED: 9},
        rider=RiderBehavior(target_speed_kmh=20.0),
    )


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_float(text: str) -> float | None:
    return None if text == "" else float(text)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part.strip()) for part in text.split(","))


_SCHEMA: dict[str, dict[str, object]] = {
    "environment": {
        "air_density": float, "drag_coefficient": float, "frontal_area": float,
        "rolling_coefficient": float, "road_gradient": float, "gravity": float,
        "mechanical_efficiency": float, "wind_speed": float,
    },
    "mass": {"rider": float, "bike": float},
    "powersplit": {
        "torque_bias": float, "crank_efficiency": float, "scaling": float,
        "motor_efficiency": float, "noload_slope": float, "noload_intercept": float,
    },
    "controller": {
        "mode": str, "gain": float, "sample_period": float, "human_window": int,
        "motor_window": int, "tolerance": float, "initial_y_tilde": int,
        "fixed_target": _parse_optional_float,
        "policy_non_polluted": int, "policy_transient": int, "policy_polluted": int,
    },
    "route": {"laps": int, "ramp_shape": str, "exit_ramp_length": float},
    "zone": {"kind": str, "length": float, "concentration": float, "target_share": float},
    "rider": {
        "target_speed": float, "feedforward_torque": float, "torque_gain": float,
        "max_torque": float, "torque_noise": float, "gear_ratio": float,
        "wheel_radius": float,
    },
    "physio": {
        "resting_hr": float, "anaerobic_threshold_hr": float,
        "k1": float, "k2": float, "k3": float, "k4": float, "k5": float,
        "time_constant": float, "max_hr": float,
        "hr_anchor_low": float, "ve_anchor_low": float,
        "hr_anchor_high": float, "ve_anchor_high": float,
        "ve_floor": float, "ve_lag": float,
    },
    "battery": {"capacity_ah": float, "nominal_voltage": float},
    "sim": {
        "telemetry_rate": int, "duration": _parse_optional_float,
        "max_duration": float, "plant_lag": float, "speed_floor": float,
        "substeps": int, "motor_table": _parse_float_list,
        "unload_start": float, "unload_slope": float, "unload_width": float,
    },
}

_POLICY_KEYS = {
    "policy_non_polluted": ZoneKind.NON_POLLUTED,
    "policy_transient": ZoneKind.TRANSIENT,
    "policy_polluted": ZoneKind.POLLUTED,
}


def parse_scenario_text(text: str, name: str = "<string>") -> ScenarioConfig:
    """Parse scenario file contents into a validated ScenarioConfig."""
    sections: dict[str, dict[str, str]] = {}
    zones_raw: list[dict[str, str]] = []
    current: dict[str, str] | None = None
    current_name = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current_name = line[1:-1].strip().lower()
            if current_name not in _SCHEMA:
                raise ConfigError(f"{name}:{lineno}: unknown section [{current_name}]")
            if current_name == "zone":
                current = {}
                zones_raw.append(current)
            else:
                if current_name in sections:
                    raise ConfigError(f"{name}:{lineno}: duplicate section [{current_name}]")
                current = sections.setdefault(current_name, {})
            continue
        if "=" not in line or current is None:
            raise ConfigError(f"{name}:{lineno}: expected 'key = value' inside a section")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key not in _SCHEMA[current_name]:
            raise ConfigError(f"{name}:{lineno}: unknown key {key!r} in [{current_name}]")
        if key in current:
            raise ConfigError(f"{name}:{lineno}: duplicate key {key!r} in [{current_name}]")
        current[key] = value.strip()
    return _build_config(sections, zones_raw, name)


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read scenario file {path}: {err}") from err
    return parse_scenario_text(text, name=str(path))


def _convert(section: str, data: dict[str, str], name: str) -> dict[str, object]:
    out: dict[str, object] = {}
    for key, value in data.items():
        parser = _SCHEMA[section][key]
        try:
            out[key] = parser(value)  # type: ignore[operator]
        except ValueError as err:
            raise ConfigError(f"{name}: [{section}] {key} = {value!r}: {err}") from err
    return out


def _build_config(
    sections: dict[str, dict[str, str]],
    zones_raw: list[dict[str, str]],
    name: str,
) -> ScenarioConfig:
    def section(key: str) -> dict[str, object]:
        return _convert(key, sections.get(key, {}), name)

    env_kw = section("environment")
    mass_kw = section("mass")
    split_kw = section("powersplit")
    ctrl_kw = section("controller")
    route_kw = section("route")
    rider_kw = section("rider")
    physio_kw = section("physio")
    battery_kw = section("battery")
    sim_kw = section("sim")

    try:
        env = EnvironmentParams(**env_kw)
        mass = MassParams(
            rider_mass=float(mass_kw.get("rider", 75.0)),
            bike_mass=float(mass_kw.get("bike", 25.0)),
        )
        split = PowerSplitParams(**split_kw)

        mode = str(ctrl_kw.pop("mode", "closed_loop")).lower()
        if mode not in ("closed_loop", "open_loop"):
            raise ConfigError(f"{name}: controller mode must be closed_loop or open_loop")
        policy = {
            kind: int(ctrl_kw.pop(key))
            for key, kind in _POLICY_KEYS.items()
            if key in ctrl_kw
        }
        for level in policy.values():
            if not YTILDE_MIN <= level <= YTILDE_MAX:
                raise ConfigError(f"{name}: policy assist level {level} out of range")
        initial_y = int(ctrl_kw.pop("initial_y_tilde", 1))
        fixed_target = ctrl_kw.pop("fixed_target", None)
        controller = ControllerConfig(**ctrl_kw)

        zones = []
        for i, zone_kw_raw in enumerate(zones_raw):
            zone_kw = _convert("zone", zone_kw_raw, name)
            if "kind" not in zone_kw or "length" not in zone_kw:
                raise ConfigError(f"{name}: [zone] {i} needs kind and length")
            try:
                kind = ZoneKind(str(zone_kw["kind"]).lower())
            except ValueError:
                raise ConfigError(f"{name}: unknown zone kind {zone_kw['kind']!r}") from None
            zones.append(
                (
                    kind,
                    float(zone_kw["length"]),
                    float(zone_kw.get("concentration", 0.0)),
                    float(zone_kw["target_share"]) if "target_share" in zone_kw else None,
                )
            )
        route = None
        if zones:
            shape_text = str(route_kw.get("ramp_shape", "linear")).lower()
            try:
                shape = RampShape(shape_text)
            except ValueError:
                raise ConfigError(f"{name}: unknown ramp shape {shape_text!r}") from None
            route = build_route(
                zones,
                laps=int(route_kw.get("laps", 1)),
                ramp_shape=shape,
                exit_ramp_length=float(route_kw.get("exit_ramp_length", 200.0)),
            )

        rider_map = {
            "target_speed": "target_speed_kmh",
            "feedforward_torque": "feedforward_torque",
            "torque_gain": "torque_gain",
            "max_torque": "max_torque",
            "torque_noise": "torque_noise",
            "gear_ratio": "gear_ratio",
            "wheel_radius": "wheel_radius",
        }
        rider = RiderBehavior(**{rider_map[k]: v for k, v in rider_kw.items()})

        hr_map = {
            "resting_hr": "resting_hr", "anaerobic_threshold_hr": "anaerobic_threshold_hr",
            "k1": "k1", "k2": "k2", "k3": "k3", "k4": "k4", "k5": "k5",
            "time_constant": "time_constant", "max_hr": "max_hr",
        }
        hr_kw = {hr_map[k]: v for k, v in physio_kw.items() if k in hr_map}
        hr = HeartRateParams(**hr_kw)

        vent = VentilationCalibration(
            hr_low=float(physio_kw.get("hr_anchor_low", 70.0)),
            ve_low=float(physio_kw.get("ve_anchor_low", 25.0)),
            hr_high=float(physio_kw.get("hr_anchor_high", 120.0)),
            ve_high=float(physio_kw.get("ve_anchor_high", 65.0)),
            ve_floor=float(physio_kw.get("ve_floor", 6.0)),
        )
        ve_lag = float(physio_kw.get("ve_lag", 0.0))

        battery = BatteryParams(
            capacity_ah=float(battery_kw.get("capacity_ah", 7.8)),
            nominal_voltage=float(battery_kw.get("nominal_voltage", 36.0)),
        )

        rate = int(sim_kw.get("telemetry_rate", 5))
        motor_table = sim_kw.get("motor_table", DEFAULT_MOTOR_TABLE)
        response = MotorResponse(
            unload_start_kmh=float(sim_kw.get("unload_start", MotorResponse.unload_start_kmh)),
            unload_slope_kmh=float(sim_kw.get("unload_slope", MotorResponse.unload_slope_kmh)),
            unload_width_kmh=float(sim_kw.get("unload_width", MotorResponse.unload_width_kmh)),
        )

        cfg = ScenarioConfig(
            environment=env,
            mass=mass,
            powersplit=split,
            controller=controller,
            closed_loop=(mode == "closed_loop"),
            fixed_target=fixed_target,
            initial_y_tilde=initial_y,
            policy=policy,
            route=route,
            rider=rider,
            hr_params=replace(hr, sample_time=1.0 / rate),
            ventilation=vent,
            ventilation_lag=ve_lag,
            battery=battery,
            telemetry_rate_hz=rate,
            duration_s=sim_kw.get("duration"),
            max_duration_s=float(sim_kw.get("max_duration", 3600.0)),
            plant_lag_s=float(sim_kw.get("plant_lag", 1.0)),
            speed_floor=float(sim_kw.get("speed_floor", 0.5)),
            substeps=int(sim_kw.get("substeps", 1)),
            motor_table=tuple(motor_table),
            motor_response=response,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{name}: {err}") from err
    cfg.validate()
    return cfg
