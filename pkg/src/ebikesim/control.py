"""Share-tracking P controller, open-loop policy and input arbitration.

The closed-loop controller works on a smoothed share estimate built from
moving averages of the human and motor wheel powers, applies an integer
proportional step to the assist level with a deadband, and the final
request to the motor passes through a brake > throttle > analytics
priority chain.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .powersplit import YTILDE_MAX, YTILDE_MIN
from .route import ZoneKind


class NotWarmedUp(RuntimeError):
    """Controller asked for a smoothed share before any samples arrived."""


class PolicyError(KeyError):
    """Open-loop policy has no entry for the current zone kind."""


THROTTLE_V_LOW = 1.0
THROTTLE_V_HIGH = 4.0
REQUEST_MAX = 255


@dataclass(frozen=True)
class ControllerConfig:
    gain: float = 20.0
    sample_period: float = 1.0
    human_window: int = 20
    motor_window: int = 5
    tolerance: float = 0.05
    y_tilde_min: int = YTILDE_MIN
    y_tilde_max: int = YTILDE_MAX

    def __post_init__(self) -> None:
        if self.gain <= 0:
            raise ValueError("gain must be > 0")
        if self.sample_period <= 0:
            raise ValueError("sample_period must be > 0")
        if self.human_window < 1 or self.motor_window < 1:
            raise ValueError("window lengths must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


@dataclass
class ControllerState:
    """Current assist level plus the power buffers behind the share estimate."""

    y_tilde: int
    human_buffer: deque[float]
    motor_buffer: deque[float]
    last_error: float | None = None

    @classmethod
    def initial(cls, cfg: ControllerConfig, y_tilde: int = YTILDE_MIN) -> "ControllerState":
        return cls(
            y_tilde=y_tilde,
            human_buffer=deque(maxlen=cfg.human_window),
            motor_buffer=deque(maxlen=cfg.motor_window),
        )

    def observe(self, human_wheel_w: float, motor_wheel_w: float) -> None:
        self.human_buffer.append(human_wheel_w)
        self.motor_buffer.append(motor_wheel_w)


@dataclass(frozen=True)
class RiderInputs:
    left_brake: bool = False
    right_brake: bool = False
    throttle_voltage: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.throttle_voltage <= 5.0:
            raise ValueError("throttle voltage must be within [0, 5] V")


def smoothed_split(state: ControllerState) -> float | None:
    """Moving-average share: mean(P_Hw) / (mean(P_Hw) + mean(P_Mw)).

    Returns None when the averaged total power is zero (share undefined).
    """
    if not state.human_buffer or not state.motor_buffer:
        raise NotWarmedUp("power buffers are empty")
    human = sum(state.human_buffer) / len(state.human_buffer)
    motor = sum(state.motor_buffer) / len(state.motor_buffer)
    total = human + motor
    if total <= 0:
        return None
    return human / total


def tracking_error(m_star: float, m_bar: float) -> float:
    """Share tracking error, target minus smoothed estimate."""
    return m_star - m_bar


def p_step(state: ControllerState, error: float | None, cfg: ControllerConfig) -> int:
    """One proportional update of the assist level.

    Applies level - gain * error, rounded to the integer grid and
    clamped to the valid band. Holds the current level inside the
    deadband |error| <= tolerance or when the share is undefined
    (error None): there is no information to act on.
    """
    if error is None or abs(error) <= cfg.tolerance:
        return state.y_tilde
    raw = state.y_tilde - cfg.gain * error
    return min(max(round(raw), cfg.y_tilde_min), cfg.y_tilde_max)


def open_loop_command(zone_kind: ZoneKind, policy: dict[ZoneKind, int]) -> int:
    """Fixed assist level for a zone kind from an open-loop policy table."""
    try:
        return policy[zone_kind]
    except KeyError:
        raise PolicyError(f"no policy entry for zone kind {zone_kind.value!r}") from None


def throttle_to_request(voltage: float) -> int:
    """Map the hand-throttle 1-4 V active range linearly onto 0-255.

    Clamped outside the active range; rounds half away from zero.
    """
    if not 0.0 <= voltage <= 5.0:
        raise ValueError("throttle voltage must be within [0, 5] V")
    span = THROTTLE_V_HIGH - THROTTLE_V_LOW
    raw = (voltage - THROTTLE_V_LOW) / span * REQUEST_MAX
    return min(max(int(raw + 0.5) if raw >= 0 else 0, 0), REQUEST_MAX)


def arbitrate(inputs: RiderInputs, analytics_request: int) -> int:
    """Final 0-255 motor request under brake > throttle > analytics priority.

    Any engaged brake forces 0; an active throttle (above 1 V) overrides
    the analytics value.
    """
    if not 0 <= analytics_request <= REQUEST_MAX:
        raise ValueError("analytics request must be within [0, 255]")
    if inputs.left_brake or inputs.right_brake:
        return 0
    if inputs.throttle_voltage > THROTTLE_V_LOW:
        return throttle_to_request(inputs.throttle_voltage)
    return analytics_request
