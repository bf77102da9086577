"""Deterministic discrete-time engine coupling rider, plant and controller.

Each telemetry tick advances rider torque, the power split, an explicit
Euler speed/position update, physiology and the battery; on controller
ticks the assist level is updated from the smoothed share error and run
through input arbitration. Identical configurations produce bit
identical session logs.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import physics, powersplit
from .control import (
    ControllerState,
    RiderInputs,
    arbitrate,
    open_loop_command,
    p_step,
    smoothed_split,
    tracking_error,
)
from .physio import (
    RiderPhysioState,
    first_order_lag,
    hr_step,
    inhaled_dose_step,
    ventilation_from_hr,
)
from .powersplit import PowerSplit, y_to_ytilde, ytilde_to_y
from .route import ZoneKind, target_m, zone_at
from .scenario import ConfigError, ScenarioConfig
from .telemetry import TelemetryFrame

MPS_PER_KMH = 1.0 / 3.6


class CalibError(KeyError):
    """Assist level missing from the motor calibration table."""


LOG_COLUMNS = (
    "t", "position", "zone", "v", "tau_p", "p_hp", "p_me", "p_hw", "p_mw",
    "m", "m_star", "m_bar", "e", "y_tilde", "request", "hr", "ve", "dose",
    "battery_ah",
)


@dataclass
class LogRecord:
    t: float
    position: float
    zone: str
    v: float
    tau_p: float
    p_hp: float
    p_me: float
    p_hw: float
    p_mw: float
    m: float | None
    m_star: float
    m_bar: float | None
    e: float | None
    y_tilde: int
    request: int
    hr: float
    ve: float
    dose: float
    battery_ah: float

    def row(self) -> list[str]:
        out = []
        for name in LOG_COLUMNS:
            value = getattr(self, name)
            out.append("" if value is None else repr(value) if isinstance(value, float) else str(value))
        return out


@dataclass
class SessionLog:
    records: list[LogRecord] = field(default_factory=list)
    events: list[str] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_COLUMNS)
            for record in self.records:
                writer.writerow(record.row())


@dataclass
class SimState:
    time: float = 0.0
    position: float = 0.0
    speed: float = 0.0
    pedal_torque: float = 0.0
    pedal_speed: float = 0.0
    electrical_power: float = 0.0
    split: PowerSplit | None = None
    controller: ControllerState | None = None
    physio: RiderPhysioState | None = None
    battery_ah: float = 0.0
    tick: int = 0
    m_bar: float | None = None
    error: float | None = None
    request: int = 0
    battery_empty: bool = False


def rider_torque(behavior, v: float, v_target: float, noise: float = 0.0) -> float:
    """Speed-holding pedal torque: feedforward plus proportional correction."""
    if v_target <= 0:
        raise ValueError("target speed must be > 0")
    raw = behavior.feedforward_torque + behavior.torque_gain * (v_target - v) + noise
    return min(max(raw, 0.0), behavior.max_torque)


def motor_lag(command_w: float, previous_w: float, dt: float, tau: float) -> float:
    """First-order response of delivered electrical power toward the command."""
    return first_order_lag(command_w, previous_w, dt, tau)


def command_to_electrical_power(y_tilde: int, table) -> float:
    """Commanded steady electrical level for an assist level (table lookup)."""
    if isinstance(table, dict):
        if y_tilde not in table:
            raise CalibError(f"no calibration entry for assist level {y_tilde}")
        return float(table[y_tilde])
    index = y_tilde - powersplit.YTILDE_MIN
    if not 0 <= index < len(table):
        raise CalibError(f"no calibration entry for assist level {y_tilde}")
    return float(table[index])


def battery_update(ah: float, electrical_w: float, voltage: float, dt: float) -> float:
    """Remaining charge after drawing electrical_w for dt seconds, floored at 0."""
    if voltage <= 0:
        raise ValueError("voltage must be > 0")
    return max(ah - (electrical_w / voltage) * dt / 3600.0, 0.0)


def _noload_draw(cfg: ScenarioConfig, y_tilde: int) -> float:
    """Electrical draw of a free-wheeling motor at an assist level.

    Nudged down so that draw * motor_efficiency never exceeds the
    wheel-side no-load loss in floating point: an unloaded motor must
    contribute exactly zero wheel power for any configured loss line.
    """
    loss = cfg.powersplit.noload_loss(y_tilde)
    draw = loss / cfg.powersplit.motor_efficiency
    while draw * cfg.powersplit.motor_efficiency > loss:
        draw = math.nextafter(draw, 0.0)
    return draw


def _electrical_target(cfg: ScenarioConfig, y_tilde: int, wheel_speed_kmh: float) -> float:
    """Steady electrical draw at this speed: command level derated to no-load."""
    command = command_to_electrical_power(y_tilde, cfg.motor_table)
    noload = _noload_draw(cfg, y_tilde)
    fraction = cfg.motor_response.load_fraction(y_tilde, wheel_speed_kmh)
    return noload + max(command - noload, 0.0) * fraction


def _request_to_level(request: int) -> int | None:
    """Assist level for an arbitrated 0-255 request.

    Requests below the valid band switch the motor off; above it the
    controller current-limits at the top level. None means motor off.
    """
    if request < powersplit.Y_MIN:
        return None
    if request > powersplit.Y_MAX:
        return powersplit.YTILDE_MAX
    return y_to_ytilde(request)


def initial_state(cfg: ScenarioConfig) -> SimState:
    state = SimState()
    state.controller = ControllerState.initial(cfg.controller, cfg.initial_y_tilde)
    state.physio = RiderPhysioState.initial(cfg.hr_params, cfg.ventilation)
    state.battery_ah = cfg.battery.capacity_ah
    state.request = ytilde_to_y(cfg.initial_y_tilde)
    return state


def _zone_target(cfg: ScenarioConfig, position: float) -> float:
    if cfg.fixed_target is not None:
        return cfg.fixed_target
    return target_m(position, cfg.route)


def step(state: SimState, cfg: ScenarioConfig, rng: random.Random | None = None) -> SimState:
    """Advance the simulation one telemetry tick in place and return it."""
    dt = cfg.dt
    env, mass, split_p = cfg.environment, cfg.mass, cfg.powersplit
    rider = cfg.rider
    v_target = rider.target_speed_kmh * MPS_PER_KMH

    noise = rng.gauss(0.0, rider.torque_noise) if rng is not None and rider.torque_noise > 0 else 0.0
    tau_p = rider_torque(rider, state.speed, v_target, noise)
    omega_p = state.speed * rider.gear_ratio / rider.wheel_radius
    p_hp = powersplit.pedal_power(tau_p, omega_p)
    p_hw = powersplit.human_wheel_power(tau_p, omega_p, split_p)

    wheel_kmh = state.speed * 3.6
    level = _request_to_level(state.request)
    if state.battery_empty:
        p_me = 0.0  # dead battery unpowers the controller outright
    else:
        target_w = _electrical_target(cfg, level, wheel_kmh) if level is not None else 0.0
        p_me = motor_lag(target_w, state.electrical_power, dt, cfg.plant_lag_s)
    p_mw = powersplit.motor_wheel_power(p_me, level if level is not None else state.controller.y_tilde, split_p)
    split = powersplit.power_split(p_hw, p_mw)

    sub_dt = dt / cfg.substeps
    v = state.speed
    pos = state.position
    for _ in range(cfg.substeps):
        drive = split.wheel_power / max(v, cfg.speed_floor)
        accel = (drive - physics.total_resistive_force(v, mass, env)) / mass.total
        v = max(v + accel * sub_dt, 0.0)
        pos += v * sub_dt
    state.speed = v
    state.position = pos
    state.time += dt
    state.tick += 1
    state.pedal_torque = tau_p
    state.pedal_speed = omega_p
    state.electrical_power = p_me
    state.split = split

    zone = zone_at(state.position, cfg.route)
    exertion = max(tau_p - split_p.torque_bias, 0.0) * omega_p
    hr = hr_step(state.physio, exertion, cfg.hr_params)
    ve_target = ventilation_from_hr(hr, cfg.ventilation)
    state.physio.ventilation = first_order_lag(
        ve_target, state.physio.ventilation, dt, cfg.ventilation_lag
    )
    state.physio.cumulative_dose += inhaled_dose_step(
        state.physio.ventilation, zone.concentration, dt
    )

    state.battery_ah = battery_update(state.battery_ah, p_me, cfg.battery.nominal_voltage, dt)
    if state.battery_ah <= 0.0 and not state.battery_empty:
        state.battery_empty = True

    state.controller.observe(p_hw, p_mw)
    ticks_per_control = max(int(round(cfg.controller.sample_period / dt)), 1)
    if state.tick % ticks_per_control == 0:
        m_bar = smoothed_split(state.controller)
        state.m_bar = m_bar
        if cfg.closed_loop:
            m_star = _zone_target(cfg, state.position)
            error = tracking_error(m_star, m_bar) if m_bar is not None else None
            state.error = error
            new_level = p_step(state.controller, error, cfg.controller)
            state.controller.last_error = error
        else:
            state.error = None
            new_level = open_loop_command(zone.kind, cfg.policy)
        analytics = ytilde_to_y(new_level)
        state.request = arbitrate(RiderInputs(), analytics)
        state.controller.y_tilde = new_level
    return state


def run(cfg: ScenarioConfig) -> SessionLog:
    """Run a scenario to completion and return its session log.

    Stops after the configured duration when one is set, otherwise after
    the route's lap count (with a hard time cap as a stall guard).
    """
    cfg.validate()
    if cfg.route is None:
        raise ConfigError("scenario has no route")
    rng = random.Random(cfg.seed) if cfg.seed is not None else None
    state = initial_state(cfg)
    log = SessionLog()
    dt = cfg.dt
    if cfg.duration_s is not None:
        total_ticks = int(round(cfg.duration_s / dt))
        target_distance = None
    else:
        total_ticks = int(round(cfg.max_duration_s / dt))
        target_distance = cfg.route.total_length * cfg.route.laps

    was_empty = False
    for _ in range(total_ticks):
        step(state, cfg, rng)
        zone = zone_at(state.position, cfg.route)
        m_star = _zone_target(cfg, state.position) if cfg.closed_loop else target_m(state.position, cfg.route)
        is_control_tick = state.tick % max(int(round(cfg.controller.sample_period / dt)), 1) == 0
        log.records.append(
            LogRecord(
                t=state.time,
                position=state.position,
                zone=zone.kind.value,
                v=state.speed,
                tau_p=state.pedal_torque,
                p_hp=state.pedal_speed * state.pedal_torque,
                p_me=state.electrical_power,
                p_hw=state.split.human_wheel_power,
                p_mw=state.split.motor_wheel_power,
                m=state.split.share if state.split.defined else None,
                m_star=m_star,
                m_bar=state.m_bar if is_control_tick else None,
                e=state.error if is_control_tick else None,
                y_tilde=state.controller.y_tilde,
                request=state.request,
                hr=state.physio.heart_rate,
                ve=state.physio.ventilation,
                dose=state.physio.cumulative_dose,
                battery_ah=state.battery_ah,
            )
        )
        if state.battery_empty and not was_empty:
            log.events.append(f"battery empty at t={state.time:.1f}s; motor power forced to zero")
            was_empty = True
        if target_distance is not None and state.position >= target_distance:
            break
    return log


def frame_for_tick(record: LogRecord, voltage: float) -> TelemetryFrame:
    """Sensor frame equivalent of one log record (wire-format replay aid)."""
    rpm = record.p_hp / record.tau_p * 60.0 / (2.0 * math.pi) if record.tau_p > 0 else 0.0
    return TelemetryFrame(
        battery_voltage=voltage,
        motor_current=round(record.p_me / voltage, 3),
        wheel_speed=round(record.v * 3.6, 3),
        motor_temperature=round(25.0 + record.p_me / 50.0, 3),
        pedal_speed=round(rpm, 3),
        pedal_torque=round(record.tau_p, 3),
        received_at=record.t,
    )


@dataclass(frozen=True)
class SweepRow:
    y_tilde: int
    wheel_speed_kmh: float
    pedal_rpm: float
    p_hp: float
    p_me: float
    p_hw: float
    p_mw: float


SWEEP_COLUMNS = ("y_tilde", "s_w_kmh", "pedal_rpm", "p_hp", "p_me", "p_hw", "p_mw")


def _motor_only_speed(cfg: ScenarioConfig, y_tilde: int) -> float:
    """Steady speed the motor alone sustains on the flat (bisection).

    Root of wheel power balance: derated motor wheel power equals the
    resistive power at that speed.
    """
    env, mass, split_p = cfg.environment, cfg.mass, cfg.powersplit

    def surplus(v: float) -> float:
        p_me = _electrical_target(cfg, y_tilde, v * 3.6)
        p_mw = powersplit.motor_wheel_power(p_me, y_tilde, split_p)
        return p_mw - physics.total_resistive_force(v, mass, env) * v

    lo, hi = 0.0, cfg.motor_response.band(y_tilde)[1] / 3.6 + 1.0
    if surplus(lo) <= 0:
        return 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if surplus(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep_experiment(
    cfg: ScenarioConfig,
    y_tilde: int,
    max_rpm: float = 140.0,
    rpm_step: float = 0.25,
    freewheel_torque: float = 3.0,
) -> list[SweepRow]:
    """Quasi-static pedal-speed ramp at a fixed assist level.

    The rider slowly raises cadence from zero; below the motor's driven
    speed the pedals free-wheel (token torque, no wheel power), beyond
    it the drivetrain engages and the rider supplies whatever the
    derated motor cannot. Emits one row per cadence sample.
    """
    if not powersplit.YTILDE_MIN <= y_tilde <= powersplit.YTILDE_MAX:
        raise ValueError(f"assist level {y_tilde} out of range")
    env, mass, split_p = cfg.environment, cfg.mass, cfg.powersplit
    rider = cfg.rider
    v_motor = _motor_only_speed(cfg, y_tilde)
    rows: list[SweepRow] = []
    steps = int(max_rpm / rpm_step)
    for i in range(steps + 1):
        rpm = i * rpm_step
        omega = rpm * 2.0 * math.pi / 60.0
        v_geared = omega * rider.wheel_radius / rider.gear_ratio
        if v_geared <= v_motor:
            v = v_motor
            tau = freewheel_torque
            p_hw = 0.0
        else:
            v = v_geared
            required = physics.total_resistive_force(v, mass, env) * v
            p_me_here = _electrical_target(cfg, y_tilde, v * 3.6)
            p_mw_here = powersplit.motor_wheel_power(p_me_here, y_tilde, split_p)
            p_hw = max(required - p_mw_here, 0.0)
            tau = split_p.torque_bias + p_hw / (split_p.scaling * split_p.crank_efficiency * omega)
        p_me = _electrical_target(cfg, y_tilde, v * 3.6)
        p_mw = powersplit.motor_wheel_power(p_me, y_tilde, split_p)
        rows.append(
            SweepRow(
                y_tilde=y_tilde,
                wheel_speed_kmh=v * 3.6,
                pedal_rpm=rpm,
                p_hp=tau * omega,
                p_me=p_me,
                p_hw=p_hw,
                p_mw=p_mw,
            )
        )
    return rows


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow(
                [r.y_tilde, repr(r.wheel_speed_kmh), repr(r.pedal_rpm), repr(r.p_hp),
                 repr(r.p_me), repr(r.p_hw), repr(r.p_mw)]
            )


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    rows: list[SweepRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SWEEP_COLUMNS:
            raise ConfigError(f"sweep csv {path} has wrong header")
        for row in reader:
            rows.append(
                SweepRow(
                    y_tilde=int(row["y_tilde"]),
                    wheel_speed_kmh=float(row["s_w_kmh"]),
                    pedal_rpm=float(row["pedal_rpm"]),
                    p_hp=float(row["p_hp"]),
                    p_me=float(row["p_me"]),
                    p_hw=float(row["p_hw"]),
                    p_mw=float(row["p_mw"]),
                )
            )
    return rows
