"""Command-line front end: simulate, sweep-phase, dark-decay, spectrum, selftest.

Every command takes ``--config <path>`` and ``--out <dir>`` and writes CSV
files plus a ``summary.txt`` of ``key = value`` lines.  Outputs are
deterministic: the same configuration produces byte-identical files.
Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 selftest failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import (
    fit_exponential,
    fit_exponential_samples,
    fit_fringe,
    fit_ring_in,
    omit_spectrum,
    suppression_metric,
)
from .config import RunConfig, load_config
from .detection import (
    Trace,
    beat_envelope,
    energy_in_window,
    guard_time,
    intensity,
    period_average,
)
from .dynamics import StateVector, _channels, integrate
from .errors import (
    AdiabaticApplicabilityError,
    ConfigError,
    DivergenceError,
    FitConvergenceError,
    FitRejectedError,
    FringeRankError,
    StabilityError,
)
from .sequence import preset_dark_decay, preset_interference

TWO_PI = 2.0 * math.pi


# ----------------------------------------------------------------------
# output helpers

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _write_summary(path: Path, entries) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in entries:
            if value is None:
                continue
            fh.write(f"{key} = {_fmt(value)}\n")


def _print_summary(entries) -> None:
    for key, value in entries:
        if value is not None:
            print(f"{key} = {_fmt(value)}")


# ----------------------------------------------------------------------
# shared pieces

def _detect(tr, cfg: RunConfig):
    alpha = Trace(tr.t0, tr.dt_sample, tr.alpha)
    env = beat_envelope(alpha, cfg.params, cfg.detection)
    return env, intensity(env)


def _active_gamma_mean(cfg: RunConfig):
    """Mean bare damping rate of the modes that any stage drives."""
    active = set()
    for stage in cfg.sequence.stages:
        for j, _g, _d, _p in _channels(cfg.params, stage.drive_phase, stage.drive_scale):
            active.add(j)
    if not active:
        return None
    return sum(cfg.params.gamma(j) for j in sorted(active)) / len(active)


def _beat_period(cfg: RunConfig):
    """Mode-splitting beat period; rate fits average over it to reject
    the cross-converted sidebands that pass the one-pole filter."""
    if cfg.params.delta_m == 0.0:
        return None
    return TWO_PI / abs(cfg.params.delta_m)


def _fit_decay(inten, window, period):
    data = inten if period is None else period_average(inten, period)
    clamped = (max(window[0], data.t0), min(window[1], data.t_end))
    return fit_exponential(data, clamped)


def _stage_fits(tr, env, inten, cfg: RunConfig):
    """Per-stage rate extraction: ring-in fits on signal stages (deviation
    of the envelope from its stage steady state), plain intensity decay
    fits on signal-off stages.  Failures are recorded, not raised."""
    guard = guard_time(cfg.detection.filter_bandwidth)
    period = _beat_period(cfg)
    results = []
    for i, stage in enumerate(cfg.sequence.stages):
        w0, w1 = tr.stage_window(i)
        window = (w0 + guard, w1)
        kind = "ring_in" if abs(stage.signal_amplitude) > 0.0 else "decay"
        entry = {"index": i, "label": stage.label, "kind": kind, "fit": None, "note": None}
        if window[1] - window[0] < 20 * tr.dt_sample:
            entry["note"] = "stage too short to fit"
            results.append(entry)
            continue
        try:
            if kind == "ring_in":
                entry["fit"] = fit_ring_in(env, window, average_period=period)
            else:
                entry["fit"] = _fit_decay(inten, window, period)
        except (FitRejectedError, FitConvergenceError, ValueError) as exc:
            entry["note"] = str(exc)
        results.append(entry)
    return results


def _map_ordered(func, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


def _require_preset(cfg: RunConfig, name: str, command: str) -> dict:
    if cfg.preset is None or cfg.preset["name"] != name:
        raise ConfigError("sequence.preset", f"{command} requires the '{name}' preset")
    return cfg.preset


def _signal_off_energy(cfg: RunConfig, tr, inten, stage_index: int) -> float:
    """Windowed emission energy starting one guard after a stage edge."""
    guard = guard_time(cfg.detection.filter_bandwidth)
    start = tr.stage_window(stage_index)[0] + guard
    end = start + cfg.sweep.energy_window
    if end > tr.stage_window(stage_index)[1] + 1e-12:
        raise ConfigError(
            "sweep.energy_window_s",
            "energy window plus settling guard exceeds the stage duration",
        )
    return energy_in_window(inten, start, end)


# ----------------------------------------------------------------------
# commands

def run_simulate(cfg: RunConfig, out_dir: Path):
    tr = integrate(cfg.sequence, cfg.params, StateVector(), cfg.integrator)
    env, inten = _detect(tr, cfg)
    fits = _stage_fits(tr, env, inten, cfg)

    dec = cfg.output.decimation
    times = tr.times()
    _write_csv(
        out_dir / "state.csv",
        ["t_s", "re_alpha", "im_alpha", "re_b1", "im_b1", "re_b2", "im_b2"],
        (
            (times[i], tr.alpha[i].real, tr.alpha[i].imag,
             tr.beta1[i].real, tr.beta1[i].imag, tr.beta2[i].real, tr.beta2[i].imag)
            for i in range(0, len(times), dec)
        ),
    )
    _write_csv(
        out_dir / "intensity.csv",
        ["t_s", "intensity"],
        ((times[i], float(np.real(inten.samples[i]))) for i in range(0, len(times), dec)),
    )

    entries = [("command", "simulate"), ("variant", cfg.params.variant)]
    ring_rate = None
    decay_rate = None
    decay_rms = None
    for entry in fits:
        i = entry["index"]
        entries.append((f"stage{i}_label", entry["label"]))
        entries.append((f"stage{i}_fit", entry["kind"]))
        if entry["fit"] is not None:
            fit = entry["fit"]
            entries.append((f"stage{i}_rate_hz", fit.rate_hz))
            entries.append((f"stage{i}_rms_residual", fit.rms_residual))
            if entry["kind"] == "ring_in" and ring_rate is None:
                ring_rate = fit.rate
            if entry["kind"] == "decay" and decay_rate is None:
                decay_rate = fit.rate
                decay_rms = fit.rms_residual
        else:
            entries.append((f"stage{i}_note", entry["note"]))
    if decay_rate is not None:
        entries.append(("fitted_rate_hz", decay_rate / TWO_PI))
        entries.append(("rms_residual", decay_rms))
    if ring_rate is not None:
        entries.append(("ring_in_rate_hz", ring_rate / TWO_PI))
    gamma_mean = _active_gamma_mean(cfg)
    headline = ring_rate if ring_rate is not None else decay_rate
    if gamma_mean and headline is not None:
        entries.append(("cooperativity_effective", headline / gamma_mean - 1.0))
    _write_summary(out_dir / "summary.txt", entries)
    _print_summary(entries)
    return entries


def _phase_point(task) -> float:
    cfg, phi = task
    a = cfg.preset
    seq = preset_interference(
        a["theta1"], a["theta2"], phi, a["t_signal"], a["t_decay"], a["signal_amplitude"]
    )
    tr = integrate(seq, cfg.params, StateVector(), cfg.integrator)
    _env, inten = _detect(tr, cfg)
    return _signal_off_energy(cfg, tr, inten, 1)


def run_sweep_phase(cfg: RunConfig, out_dir: Path, workers: int):
    _require_preset(cfg, "interference", "sweep-phase")
    n = cfg.sweep.phi_points
    if n < 5:
        raise ConfigError("sweep.phi_points", "need at least 5 phase points")
    phis = [TWO_PI * k / n for k in range(n)]
    energies = _map_ordered(_phase_point, [(cfg, phi) for phi in phis], workers)
    _write_csv(out_dir / "fringe.csv", ["phi_rad", "energy"], zip(phis, energies))

    fringe = fit_fringe(np.array(phis), np.array(energies))
    entries = [
        ("command", "sweep-phase"),
        ("variant", cfg.params.variant),
        ("phi_points", n),
        ("fringe_mean", fringe.mean),
        ("fringe_contrast", fringe.contrast),
        ("visibility", fringe.visibility),
        ("phi0_rad", fringe.phi0 if fringe.phi0_defined else None),
        ("phi0_defined", fringe.phi0_defined),
        ("rms_residual", fringe.rms_residual),
    ]
    _write_summary(out_dir / "summary.txt", entries)
    _print_summary(entries)
    return entries


def _tau_point(task) -> float:
    cfg, tau = task
    a = cfg.preset
    seq = preset_dark_decay(
        a["theta1"], a["theta2"], a["phi1_dark"], tau,
        a["t_signal"], a["t_measure"], a["signal_amplitude"],
    )
    tr = integrate(seq, cfg.params, StateVector(), cfg.integrator)
    _env, inten = _detect(tr, cfg)
    return _signal_off_energy(cfg, tr, inten, len(seq.stages) - 1)


def run_dark_decay(cfg: RunConfig, out_dir: Path, workers: int):
    preset = _require_preset(cfg, "dark-decay", "dark-decay")
    taus = cfg.sweep.tau_values
    if len(taus) < 5:
        raise ConfigError("sweep.tau_values_s", "need at least 5 tau points")
    energies = _map_ordered(_tau_point, [(cfg, tau) for tau in taus], workers)
    _write_csv(out_dir / "dark_decay.csv", ["tau_s", "energy"], zip(taus, energies))

    dark_fit = fit_exponential_samples(np.array(taus), np.array(energies), min_samples=5)

    # bright-mode reference: same drives, no phase slip; the coupling-stage
    # emission decay gives the bright superposition's energy damping rate
    guard = guard_time(cfg.detection.filter_bandwidth)
    bright_seq = preset_interference(
        preset["theta1"], preset["theta2"], preset["theta1"],
        preset["t_signal"], preset["t_measure"], preset["signal_amplitude"],
    )
    bright_tr = integrate(bright_seq, cfg.params, StateVector(), cfg.integrator)
    _env_b, inten_b = _detect(bright_tr, cfg)
    w0, w1 = bright_tr.stage_window(1)
    bright_rate = None
    suppression = None
    try:
        bright_fit = _fit_decay(inten_b, (w0 + guard, w1), _beat_period(cfg))
        bright_rate = bright_fit.rate
        suppression = suppression_metric(
            bright_rate, dark_fit.rate, cfg.params.gamma1, cfg.params.gamma2
        )
    except (FitRejectedError, FitConvergenceError, ValueError):
        pass

    entries = [
        ("command", "dark-decay"),
        ("variant", cfg.params.variant),
        ("tau_points", len(taus)),
        ("gamma_D_hz", dark_fit.rate_hz),
        ("rms_residual", dark_fit.rms_residual),
        ("gamma_B_hz", None if bright_rate is None else bright_rate / TWO_PI),
        ("suppression_fraction", suppression),
    ]
    _write_summary(out_dir / "summary.txt", entries)
    _print_summary(entries)
    return entries


def run_spectrum(cfg: RunConfig, out_dir: Path):
    span = cfg.sweep.detuning_span_hz
    n = cfg.sweep.detuning_points
    grid_hz = np.linspace(-0.5 * span, 0.5 * span, n)
    offsets = tuple(TWO_PI * v for v in cfg.sweep.mode_offsets_hz)
    try:
        response = omit_spectrum(cfg.params, TWO_PI * grid_hz, offsets)
    except ValueError as exc:
        raise ConfigError("system.variant", str(exc)) from exc
    _write_csv(out_dir / "spectrum.csv", ["detuning_hz", "response"], zip(grid_hz, response))
    print(f"wrote {out_dir / 'spectrum.csv'} ({n} points)")


# ----------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trimode",
        description="Three-mode optomechanical interference simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (
        ("simulate", True),
        ("sweep-phase", True),
        ("dark-decay", True),
        ("spectrum", True),
        ("selftest", False),
    ):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--workers", type=int, default=None,
                       help="sweep worker processes (default: CPU count)")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; the model is deterministic")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    try:
        if args.command == "selftest":
            from .selftest import run_all

            return 0 if run_all() else 4
        cfg = load_config(args.config)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            run_simulate(cfg, out_dir)
        elif args.command == "sweep-phase":
            run_sweep_phase(cfg, out_dir, workers)
        elif args.command == "dark-decay":
            run_dark_decay(cfg, out_dir, workers)
        elif args.command == "spectrum":
            run_spectrum(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (StabilityError, DivergenceError, FitRejectedError, FitConvergenceError,
            FringeRankError, AdiabaticApplicabilityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
