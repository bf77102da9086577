"""Smart e-bike simulation and control library.

Physics plant, pedal-assist power-split model, rider physiology,
zoned pollution routes, share-tracking control and the telemetry wire
codecs, driven by a deterministic discrete-time engine.
"""

from .control import ControllerConfig, ControllerState, RiderInputs
from .physics import EnvironmentParams, MassParams
from .physio import HeartRateParams, RiderPhysioState, VentilationCalibration
from .powersplit import PowerSplit, PowerSplitParams, SectorBounds
from .route import Route, Zone, ZoneKind, build_route
from .scenario import ScenarioConfig, load_scenario, parse_scenario_text
from .sim import SessionLog, SimState, run, sweep_experiment
from .telemetry import MotorCommand, TelemetryFrame

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig",
    "ControllerState",
    "EnvironmentParams",
    "HeartRateParams",
    "MassParams",
    "MotorCommand",
    "PowerSplit",
    "PowerSplitParams",
    "RiderInputs",
    "RiderPhysioState",
    "Route",
    "ScenarioConfig",
    "SectorBounds",
    "SessionLog",
    "SimState",
    "TelemetryFrame",
    "VentilationCalibration",
    "Zone",
    "ZoneKind",
    "build_route",
    "load_scenario",
    "parse_scenario_text",
    "run",
    "sweep_experiment",
    "__version__",
]
