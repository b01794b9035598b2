"""Piecewise-constant pulse protocols.

A protocol is an ordered list of stages; within a stage the signal
amplitude, the drive phases and the drive on/off scales are constant, and
they jump instantaneously at stage boundaries while the dynamical state
stays continuous.  Phase slips between stages are how the bright and dark
superpositions get addressed.
"""

from __future__ import annotations

from dataclasses import dataclass

LABELS = ("excitation", "coupling", "measurement", "custom")


@dataclass(frozen=True)
class Stage:
    """One constant-coefficient segment of a pulse protocol.

    ``signal_amplitude`` is the injected signal tone amplitude A_s,
    normalized so |A_s|^2 is a photon flux.  ``drive_phase`` holds one
    phase per drive (rad); ``drive_scale`` multiplies the configured
    coupling rates (0 = drive off, 1 = full strength).
    """

    duration: float
    signal_amplitude: complex = 0j
    drive_phase: tuple[float, float] = (0.0, 0.0)
    drive_scale: tuple[float, float] = (1.0, 1.0)
    label: str = "custom"

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ValueError("stage duration must be positive")
        if len(self.drive_phase) != 2 or len(self.drive_scale) != 2:
            raise ValueError("drive_phase and drive_scale need one entry per drive")
        if any(not 0.0 <= s <= 1.0 for s in self.drive_scale):
            raise ValueError("drive_scale entries must lie in [0, 1]")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")


@dataclass(frozen=True)
class PulseSequence:
    """Contiguous, non-overlapping stages starting at t = 0."""

    stages: tuple[Stage, ...]

    def __post_init__(self):
        if not self.stages:
            raise ValueError("sequence needs at least one stage")
        object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.stages)

    @property
    def boundaries(self) -> tuple[float, ...]:
        """Stage end times, cumulative from t = 0 (last entry = total)."""
        out, t = [], 0.0
        for s in self.stages:
            t += s.duration
            out.append(t)
        return tuple(out)

    def stage_index_at(self, t: float) -> int:
        """Index of the stage active at time t; boundaries resolve to the
        later stage (right-continuous), t = total maps to the last stage."""
        total = self.total_duration
        if t < 0.0 or t > total:
            raise ValueError(f"t = {t!r} outside the sequence [0, {total!r}]")
        acc = 0.0
        for i, s in enumerate(self.stages):
            acc += s.duration
            if t < acc:
                return i
        return len(self.stages) - 1

    def coefficients_at(self, t: float):
        """(A_s, drive phases, drive scales) of the stage active at t."""
        s = self.stages[self.stage_index_at(t)]
        return s.signal_amplitude, s.drive_phase, s.drive_scale


def preset_two_mode(
    theta1: float,
    t_signal: float,
    t_decay: float,
    a_s: complex,
) -> PulseSequence:
    """Two-mode (single drive) protocol: signal + drive 1, then drive 1 alone.

    Drive 2 stays off throughout; the drive-1 phase is held at ``theta1``
    in both stages since the single-drive outcome carries no phase
    dependence.
    """
    return PulseSequence(
        (
            Stage(t_signal, complex(a_s), (theta1, 0.0), (1.0, 0.0), "excitation"),
            Stage(t_decay, 0j, (theta1, 0.0), (1.0, 0.0), "coupling"),
        )
    )


def preset_interference(
    theta1: float,
    theta2: float,
    phi1: float,
    t_signal: float,
    t_decay: float,
    a_s: complex,
) -> PulseSequence:
    """Two-drive protocol with a drive-1 phase slip at signal switch-off.

    Excitation runs at phases (theta1, theta2) with the signal on; the
    coupling stage runs at (phi1, theta2) with the signal off, carrying
    drive 2's phase through unchanged.  phi1 = theta1 addresses the
    bright superposition; with equal couplings, phi1 = theta1 + pi
    addresses the dark one.
    """
    return PulseSequence(
        (
            Stage(t_signal, complex(a_s), (theta1, theta2), (1.0, 1.0), "excitation"),
            Stage(t_decay, 0j, (phi1, theta2), (1.0, 1.0), "coupling"),
        )
    )


def preset_dark_decay(
    theta1: float,
    theta2: float,
    phi1_dark: float,
    tau: float,
    t_signal: float,
    t_measure: float,
    a_s: complex,
) -> PulseSequence:
    """Excitation / hold / measurement protocol for the dark-mode lifetime.

    After excitation at (theta1, theta2), drive 1 slips to ``phi1_dark``
    for a hold time ``tau`` and then back to ``theta1`` for the
    measurement stage, which converts whatever survived the hold back to
    the optically bright superposition.  ``tau = 0`` skips the hold stage.
    """
    if tau < 0.0:
        raise ValueError("tau must be non-negative")
    stages = [Stage(t_signal, complex(a_s), (theta1, theta2), (1.0, 1.0), "excitation")]
    if tau > 0.0:
        stages.append(Stage(tau, 0j, (phi1_dark, theta2), (1.0, 1.0), "coupling"))
    stages.append(Stage(t_measure, 0j, (theta1, theta2), (1.0, 1.0), "measurement"))
    return PulseSequence(tuple(stages))
