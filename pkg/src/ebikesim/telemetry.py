"""Bit-exact codecs for the sensor-frame and motor-command wire formats.

A sensor frame is six tab-separated decimal numbers, newline terminated,
in fixed order: battery voltage, motor current, wheel speed, motor
temperature, pedal speed, pedal torque. Motor commands are the decimal
digits of a 0-255 request followed by '!'. The PWM helpers map the
0-255 duty range onto the 0-5 V analog output of the filtered pin.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

FRAME_FIELDS = (
    "battery_voltage",
    "motor_current",
    "wheel_speed",
    "motor_temperature",
    "pedal_speed",
    "pedal_torque",
)

# Plain decimal syntax only: optional sign, digits, optional fraction.
_NUMBER_RE = re.compile(r"[+-]?\d+(\.\d+)?\Z")
_MAX_COMMAND = 255
_MAX_DIGITS = 64


class FrameError(ValueError):
    """Malformed sensor frame; kind is one of Empty, CountMismatch, BadNumber."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class CommandError(ValueError):
    """Motor command value outside 0-255."""


class EncodeError(ValueError):
    """Frame field not encodable (non-finite)."""


class StreamError(ValueError):
    """Command-stream violation; kind is one of Empty, Range, BadByte."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class TelemetryFrame:
    battery_voltage: float
    motor_current: float
    wheel_speed: float
    motor_temperature: float
    pedal_speed: float
    pedal_torque: float
    received_at: float = 0.0

    def values(self) -> tuple[float, ...]:
        return (
            self.battery_voltage,
            self.motor_current,
            self.wheel_speed,
            self.motor_temperature,
            self.pedal_speed,
            self.pedal_torque,
        )


@dataclass(frozen=True)
class MotorCommand:
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= _MAX_COMMAND:
            raise CommandError(f"command {self.value} outside 0-{_MAX_COMMAND}")


def parse_frame(line: str, received_at: float = 0.0) -> TelemetryFrame:
    """Parse one tab-separated sensor record (optionally newline terminated)."""
    if line.endswith("\n"):
        line = line[:-1]
    if line.strip() == "":
        raise FrameError("Empty", "empty frame line")
    fields = line.split("\t")
    if len(fields) != len(FRAME_FIELDS):
        raise FrameError(
            "CountMismatch",
            f"expected {len(FRAME_FIELDS)} fields, got {len(fields)}",
        )
    numbers = []
    for name, text in zip(FRAME_FIELDS, fields):
        if _NUMBER_RE.match(text) is None:
            raise FrameError("BadNumber", f"field {name!r} is not a plain decimal: {text!r}")
        numbers.append(float(text))
    return TelemetryFrame(*numbers, received_at=received_at)


def _render(value: float) -> str:
    if value != value or value in (float("inf"), float("-inf")):
        raise EncodeError(f"cannot encode non-finite value {value!r}")
    text = repr(value)
    if text.endswith(".0"):
        text = text[:-2]
    if "e" in text or "E" in text:
        # Exact decimal expansion; the wire format has no exponent form.
        text = format(Decimal(value), "f")
    return text


def encode_frame(frame: TelemetryFrame) -> str:
    """Render a frame to its wire line; parse_frame round-trips the values."""
    return "\t".join(_render(v) for v in frame.values()) + "\n"


def encode_command(cmd: MotorCommand | int) -> str:
    """Render a 0-255 request as its terminated command string, e.g. '110!'."""
    value = cmd.value if isinstance(cmd, MotorCommand) else cmd
    if not isinstance(value, int) or not 0 <= value <= _MAX_COMMAND:
        raise CommandError(f"command {value!r} outside 0-{_MAX_COMMAND}")
    return f"{value}!"


class CommandStreamParser:
    """Incremental parser for '!'-terminated command bytes.

    Digits accumulate across chunks until a terminator; any other byte
    resets the buffer. push() raises on violations with the state
    already reset, feed() collects (commands, errors) for a whole chunk
    so results are independent of how the byte stream is partitioned.
    """

    def __init__(self) -> None:
        self._buffer = ""

    def reset(self) -> None:
        self._buffer = ""

    def push(self, byte: int) -> MotorCommand | None:
        ch = chr(byte)
        if ch.isdigit() and ch.isascii():
            self._buffer += ch
            if len(self._buffer) > _MAX_DIGITS:
                self._buffer = ""
                raise StreamError("Range", "digit run exceeds any encodable command")
            return None
        if ch == "!":
            text, self._buffer = self._buffer, ""
            if not text:
                raise StreamError("Empty", "terminator with no digits buffered")
            value = int(text)
            if value > _MAX_COMMAND:
                raise StreamError("Range", f"command {value} exceeds {_MAX_COMMAND}")
            return MotorCommand(value)
        self._buffer = ""
        raise StreamError("BadByte", f"unexpected byte {byte:#04x} in command stream")

    def feed(self, data: bytes | str) -> tuple[list[MotorCommand], list[StreamError]]:
        if isinstance(data, str):
            data = data.encode("ascii")
        commands: list[MotorCommand] = []
        errors: list[StreamError] = []
        for byte in data:
            try:
                cmd = self.push(byte)
            except StreamError as err:
                errors.append(err)
            else:
                if cmd is not None:
                    commands.append(cmd)
        return commands, errors


def parse_command_stream(chunks) -> tuple[list[MotorCommand], list[StreamError]]:
    """Parse an iterable of byte chunks with a fresh stream parser."""
    parser = CommandStreamParser()
    commands: list[MotorCommand] = []
    errors: list[StreamError] = []
    for chunk in chunks:
        got, errs = parser.feed(chunk)
        commands.extend(got)
        errors.extend(errs)
    return commands, errors


def pwm_to_voltage(duty: int) -> float:
    """Ideal filtered analog output for a 0-255 PWM duty value."""
    if not isinstance(duty, int) or not 0 <= duty <= 255:
        raise ValueError(f"duty {duty!r} outside 0-255")
    return duty / 255 * 5.0


def voltage_to_pwm(voltage: float) -> int:
    """Nearest 0-255 duty for a 0-5 V level; rounds half away from zero."""
    if not 0.0 <= voltage <= 5.0:
        raise ValueError(f"voltage {voltage!r} outside [0, 5] V")
    return min(int(voltage / 5.0 * 255 + 0.5), 255)
