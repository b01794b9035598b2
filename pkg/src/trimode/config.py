"""Run-configuration parsing and validation.

Configurations are single TOML files with one table per concern
(``[system]``, ``[sequence]``, ``[detection]``, ``[integrator]``,
``[output]``, ``[sweep]``).  Validation happens before any integration
starts and every violation is reported with the path of the offending
field.  The full key reference lives in the README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from .detection import DetectionConfig
from .dynamics import IntegratorOptions
from .errors import ConfigError
from .model import SystemParams, make_params
from .sequence import (
    LABELS,
    PulseSequence,
    Stage,
    preset_dark_decay,
    preset_interference,
    preset_two_mode,
)

PRESETS = ("two-mode", "interference", "dark-decay")

_SYSTEM_KEYS = {
    "omega_m1_hz", "omega_m2_hz", "gamma1_hz", "gamma2_hz", "kappa_hz",
    "kappa_ext_hz", "Delta_hz", "delta_hz", "g1_hz", "g2_hz", "c1", "c2",
    "g12_hz", "g21_hz", "rho", "variant",
}
_SEQUENCE_KEYS = {
    "preset", "theta1", "theta2", "phi1", "phi1_dark", "tau_s",
    "t_signal_s", "t_decay_s", "t_measure_s", "signal_amplitude", "stages",
}
_DETECTION_KEYS = {"beat", "lo_paths", "lo_weights", "filter_bandwidth_hz"}
_INTEGRATOR_KEYS = {"dt_s", "method", "record_stride", "adiabatic", "adaptive_tol"}
_OUTPUT_KEYS = {"decimation"}
_SWEEP_KEYS = {
    "phi_points", "tau_values_s", "tau_max_s", "tau_points",
    "energy_window_s", "detuning_span_hz", "detuning_points",
    "mode_offsets_hz",
}


@dataclass(frozen=True)
class OutputOptions:
    decimation: int = 100


@dataclass(frozen=True)
class SweepOptions:
    phi_points: int = 24
    tau_values: tuple[float, ...] = tuple(5e-5 * k for k in range(9))
    energy_window: float = 4e-4
    detuning_span_hz: float = 4e6
    detuning_points: int = 401
    mode_offsets_hz: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    sequence: PulseSequence
    detection: DetectionConfig
    integrator: IntegratorOptions
    output: OutputOptions = OutputOptions()
    sweep: SweepOptions = SweepOptions()
    preset: dict | None = None  # preset name + raw arguments, for sweeps


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _complex(value, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(value[0], value[1])
    raise ConfigError(path, f"expected a number or [re, im] pair, got {value!r}")


def _check_keys(table: dict, allowed: set, path: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}", "required key missing")
    return table[key]


def _system_params(table: dict) -> SystemParams:
    path = "system"
    _check_keys(table, _SYSTEM_KEYS, path)
    kwargs = {}
    for key in ("omega_m1_hz", "omega_m2_hz", "gamma1_hz", "gamma2_hz", "kappa_hz"):
        kwargs[key] = _number(_require(table, key, path), f"{path}.{key}")
    for key in ("kappa_ext_hz", "Delta_hz", "delta_hz", "g12_hz", "g21_hz", "rho"):
        if key in table:
            kwargs[key] = _number(table[key], f"{path}.{key}")
    for drive, g_key, c_key in ((1, "g1_hz", "c1"), (2, "g2_hz", "c2")):
        has_g, has_c = g_key in table, c_key in table
        if has_g == has_c:
            raise ConfigError(
                f"{path}.{g_key}", f"drive {drive} needs exactly one of {g_key} or {c_key}"
            )
        key = g_key if has_g else c_key
        kwargs[key] = _number(table[key], f"{path}.{key}")
    if "variant" in table:
        if not isinstance(table["variant"], str):
            raise ConfigError(f"{path}.variant", "expected a string")
        kwargs["variant"] = table["variant"]
    try:
        return make_params(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _stage(table: dict, path: str) -> Stage:
    allowed = {"duration_s", "signal_amplitude", "phases", "scales", "label"}
    _check_keys(table, allowed, path)
    duration = _number(_require(table, "duration_s", path), f"{path}.duration_s")
    amp = _complex(table.get("signal_amplitude", 0.0), f"{path}.signal_amplitude")
    phases = table.get("phases", [0.0, 0.0])
    scales = table.get("scales", [1.0, 1.0])
    for name, seq_val in (("phases", phases), ("scales", scales)):
        if not isinstance(seq_val, list) or len(seq_val) != 2:
            raise ConfigError(f"{path}.{name}", "expected a list of two numbers")
    phases = tuple(_number(v, f"{path}.phases") for v in phases)
    scales = tuple(_number(v, f"{path}.scales") for v in scales)
    label = table.get("label", "custom")
    if label not in LABELS:
        raise ConfigError(f"{path}.label", f"must be one of {LABELS}")
    try:
        return Stage(duration, amp, phases, scales, label)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _sequence(table: dict) -> tuple[PulseSequence, dict | None]:
    path = "sequence"
    _check_keys(table, _SEQUENCE_KEYS, path)
    if ("preset" in table) == ("stages" in table):
        raise ConfigError(path, "provide exactly one of 'preset' or 'stages'")
    if "stages" in table:
        stages = table["stages"]
        if not isinstance(stages, list) or not stages:
            raise ConfigError(f"{path}.stages", "expected a non-empty stage list")
        built = tuple(_stage(s, f"{path}.stages[{i}]") for i, s in enumerate(stages))
        try:
            return PulseSequence(built), None
        except ValueError as exc:
            raise ConfigError(f"{path}.stages", str(exc)) from exc

    name = table["preset"]
    if name not in PRESETS:
        raise ConfigError(f"{path}.preset", f"must be one of {PRESETS}")
    get = lambda key, default=None: table.get(key, default)
    amp = _complex(get("signal_amplitude", 1.0), f"{path}.signal_amplitude")
    theta1 = _number(get("theta1", 0.0), f"{path}.theta1")
    try:
        if name == "two-mode":
            t_sig = _number(_require(table, "t_signal_s", path), f"{path}.t_signal_s")
            t_dec = _number(_require(table, "t_decay_s", path), f"{path}.t_decay_s")
            seq = preset_two_mode(theta1, t_sig, t_dec, amp)
            args = {"name": name, "theta1": theta1, "t_signal": t_sig,
                    "t_decay": t_dec, "signal_amplitude": amp}
        elif name == "interference":
            theta2 = _number(get("theta2", 0.0), f"{path}.theta2")
            phi1 = _number(get("phi1", theta1), f"{path}.phi1")
            t_sig = _number(_require(table, "t_signal_s", path), f"{path}.t_signal_s")
            t_dec = _number(_require(table, "t_decay_s", path), f"{path}.t_decay_s")
            seq = preset_interference(theta1, theta2, phi1, t_sig, t_dec, amp)
            args = {"name": name, "theta1": theta1, "theta2": theta2, "phi1": phi1,
                    "t_signal": t_sig, "t_decay": t_dec, "signal_amplitude": amp}
        else:
            theta2 = _number(get("theta2", 0.0), f"{path}.theta2")
            phi1_dark = _number(get("phi1_dark", theta1 + math.pi), f"{path}.phi1_dark")
            tau = _number(get("tau_s", 0.0), f"{path}.tau_s")
            t_sig = _number(_require(table, "t_signal_s", path), f"{path}.t_signal_s")
            t_meas = _number(_require(table, "t_measure_s", path), f"{path}.t_measure_s")
            seq = preset_dark_decay(theta1, theta2, phi1_dark, tau, t_sig, t_meas, amp)
            args = {"name": name, "theta1": theta1, "theta2": theta2,
                    "phi1_dark": phi1_dark, "tau": tau, "t_signal": t_sig,
                    "t_measure": t_meas, "signal_amplitude": amp}
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc
    return seq, args


def _detection(table: dict) -> DetectionConfig:
    path = "detection"
    _check_keys(table, _DETECTION_KEYS, path)
    kwargs = {}
    if "beat" in table:
        kwargs["beat"] = table["beat"]
    if "lo_paths" in table:
        paths = table["lo_paths"]
        if not isinstance(paths, list):
            raise ConfigError(f"{path}.lo_paths", "expected a list")
        kwargs["lo_paths"] = tuple(paths)
    if "lo_weights" in table:
        weights = table["lo_weights"]
        if not isinstance(weights, list):
            raise ConfigError(f"{path}.lo_weights", "expected a list")
        kwargs["lo_weights"] = tuple(
            _complex(w, f"{path}.lo_weights") for w in weights
        )
    elif "lo_paths" in table:
        kwargs["lo_weights"] = (1.0,) * len(kwargs["lo_paths"])
    if "filter_bandwidth_hz" in table:
        kwargs["filter_bandwidth"] = _number(
            table["filter_bandwidth_hz"], f"{path}.filter_bandwidth_hz"
        )
    try:
        return DetectionConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _integrator(table: dict) -> IntegratorOptions:
    path = "integrator"
    _check_keys(table, _INTEGRATOR_KEYS, path)
    kwargs = {}
    if "dt_s" in table:
        kwargs["dt"] = _number(table["dt_s"], f"{path}.dt_s")
    if "method" in table:
        kwargs["method"] = table["method"]
    if "record_stride" in table:
        kwargs["record_stride"] = _integer(table["record_stride"], f"{path}.record_stride")
    if "adiabatic" in table:
        if not isinstance(table["adiabatic"], bool):
            raise ConfigError(f"{path}.adiabatic", "expected a boolean")
        kwargs["adiabatic"] = table["adiabatic"]
    if "adaptive_tol" in table:
        kwargs["adaptive_tol"] = _number(table["adaptive_tol"], f"{path}.adaptive_tol")
    try:
        return IntegratorOptions(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _output(table: dict) -> OutputOptions:
    path = "output"
    _check_keys(table, _OUTPUT_KEYS, path)
    decimation = _integer(table.get("decimation", 100), f"{path}.decimation")
    if decimation < 1:
        raise ConfigError(f"{path}.decimation", "must be >= 1")
    return OutputOptions(decimation)


def _sweep(table: dict) -> SweepOptions:
    path = "sweep"
    _check_keys(table, _SWEEP_KEYS, path)
    kwargs = {}
    if "phi_points" in table:
        n = _integer(table["phi_points"], f"{path}.phi_points")
        if n < 5:
            raise ConfigError(f"{path}.phi_points", "need at least 5 phase points")
        kwargs["phi_points"] = n
    if "tau_values_s" in table:
        values = table["tau_values_s"]
        if not isinstance(values, list):
            raise ConfigError(f"{path}.tau_values_s", "expected a list")
        kwargs["tau_values"] = tuple(
            _number(v, f"{path}.tau_values_s") for v in values
        )
    elif "tau_max_s" in table or "tau_points" in table:
        tau_max = _number(table.get("tau_max_s", 4e-4), f"{path}.tau_max_s")
        n = _integer(table.get("tau_points", 9), f"{path}.tau_points")
        if n < 2 or tau_max <= 0:
            raise ConfigError(f"{path}.tau_points", "need tau_points >= 2 and tau_max_s > 0")
        kwargs["tau_values"] = tuple(tau_max * k / (n - 1) for k in range(n))
    if "energy_window_s" in table:
        window = _number(table["energy_window_s"], f"{path}.energy_window_s")
        if window <= 0:
            raise ConfigError(f"{path}.energy_window_s", "must be positive")
        kwargs["energy_window"] = window
    if "detuning_span_hz" in table:
        kwargs["detuning_span_hz"] = _number(
            table["detuning_span_hz"], f"{path}.detuning_span_hz"
        )
    if "detuning_points" in table:
        n = _integer(table["detuning_points"], f"{path}.detuning_points")
        if n < 2:
            raise ConfigError(f"{path}.detuning_points", "need at least 2 points")
        kwargs["detuning_points"] = n
    if "mode_offsets_hz" in table:
        offsets = table["mode_offsets_hz"]
        if not isinstance(offsets, list) or len(offsets) != 2:
            raise ConfigError(f"{path}.mode_offsets_hz", "expected a list of two numbers")
        kwargs["mode_offsets_hz"] = tuple(
            _number(v, f"{path}.mode_offsets_hz") for v in offsets
        )
    tau = kwargs.get("tau_values")
    if tau is not None:
        if len(tau) < 5:
            raise ConfigError(f"{path}.tau_values_s", "need at least 5 tau points")
        if any(v < 0 for v in tau):
            raise ConfigError(f"{path}.tau_values_s", "tau values must be non-negative")
    return SweepOptions(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    """Validate a parsed configuration mapping into a :class:`RunConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a table")
    allowed = {"system", "sequence", "detection", "integrator", "output", "sweep"}
    for key in data:
        if key not in allowed:
            raise ConfigError(key, "unknown table")
    for key in ("system", "sequence"):
        if key not in data:
            raise ConfigError(key, "required table missing")
    params = _system_params(data["system"])
    sequence, preset = _sequence(data["sequence"])
    detection = _detection(data.get("detection", {}))
    try:
        detection.validate_against(params)
    except ValueError as exc:
        raise ConfigError("detection.filter_bandwidth_hz", str(exc)) from exc
    integrator = _integrator(data.get("integrator", {}))
    output = _output(data.get("output", {}))
    sweep = _sweep(data.get("sweep", {}))
    return RunConfig(params, sequence, detection, integrator, output, sweep, preset)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a TOML run configuration."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(str(p), "configuration file not found")
    try:
        data = _toml.loads(p.read_text(encoding="utf-8"))
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(str(p), f"TOML parse error: {exc}") from exc
    return config_from_dict(data)
