"""Extraction of decay rates, fringe parameters and derived metrics.

Decay rates come from single-exponential least-squares fits, applied
even where the underlying signal is a mixture (standard practice for
this kind of measurement); the rms residual is carried along so callers
can see model mismatch.  Ring-ins (approach of the detected envelope to
a stage's steady state) are fitted on the squared deviation from that
steady state, whose decay rate is the transient's energy rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .detection import Trace, period_average
from .errors import FitConvergenceError, FitRejectedError, FringeRankError
from .model import SystemParams, cooperativity

MAX_ITERATIONS = 200
RELATIVE_TOL = 1e-9


@dataclass(frozen=True)
class FitResult:
    """Parameters of the model a + b * exp(-rate * (t - t0))."""

    rate: float
    amplitude: float
    baseline: float
    rms_residual: float
    window: tuple[float, float]
    iterations: int

    @property
    def rate_hz(self) -> float:
        return self.rate / (2.0 * math.pi)


@dataclass(frozen=True)
class FringeResult:
    """Sinusoidal fringe E(phi) = mean + contrast * cos(phi - phi0)."""

    mean: float
    contrast: float
    phi0: float
    phi0_defined: bool
    rms_residual: float

    @property
    def visibility(self) -> float:
        return self.contrast / self.mean


def _exp_fit_core(tau: np.ndarray, y: np.ndarray, window, min_samples: int) -> FitResult:
    """Damped Gauss-Newton fit of a + b exp(-rate tau), tau >= 0."""
    if len(y) < min_samples:
        raise ValueError(f"fit window holds {len(y)} samples; need >= {min_samples}")
    if not np.all(np.isfinite(y)):
        raise ValueError("fit data must be finite")
    scale = float(np.max(np.abs(y)))
    if np.min(y) < -1e-9 * max(scale, 1.0):
        raise ValueError("fit data must be non-negative")

    # log-linear initialization on the decaying part
    base = float(np.min(y))
    pos = y - base
    top = float(np.max(pos))
    if top <= 0.0:
        raise FitRejectedError("data shows no decay (constant trace)")
    head = float(np.mean(y[: max(2, len(y) // 5)]))
    tail = float(np.mean(y[-max(2, len(y) // 5):]))
    if tail >= head:
        raise FitRejectedError("data shows no decay (non-decreasing trend)")
    mask = pos > 1e-3 * top
    if np.count_nonzero(mask) < 3:
        mask = pos > 0.0
    coeffs = np.polyfit(tau[mask], np.log(pos[mask]), 1)
    rate = -float(coeffs[0])
    amp = float(math.exp(min(coeffs[1], 700.0)))
    if not rate > 0.0:
        rate = 0.1 / max(tau[-1], 1e-300)
    p = np.array([base, amp, rate])

    span = float(tau[-1]) if tau[-1] > 0 else 1.0
    p_floor = np.array([1e-12 * max(scale, 1.0), 1e-12 * max(scale, 1.0), 1e-12 / span])
    residual_history = []
    iterations = 0
    # trial steps can overflow transiently before backtracking rejects
    # them; inf residuals compare correctly, so silence the warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for iterations in range(1, MAX_ITERATIONS + 1):
            e = np.exp(-np.clip(p[2] * tau, -700.0, 700.0))
            r = p[0] + p[1] * e - y
            sse = float(r @ r)
            residual_history.append(math.sqrt(sse / len(y)))
            jac = np.column_stack([np.ones_like(tau), e, -p[1] * tau * e])
            step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
            lam = 1.0
            for _ in range(40):
                cand = p + lam * step
                e_c = np.exp(-np.clip(cand[2] * tau, -700.0, 700.0))
                r_c = cand[0] + cand[1] * e_c - y
                sse_c = float(r_c @ r_c)
                if sse_c <= sse or lam < 1e-12:
                    break
                lam *= 0.5
            p_new = p + lam * step
            rel = np.max(np.abs(p_new - p) / np.maximum(np.abs(p), p_floor))
            p = p_new
            if rel < RELATIVE_TOL:
                break
        else:
            raise FitConvergenceError(
                f"exponential fit did not converge in {MAX_ITERATIONS} iterations",
                residual_history,
            )
    if not p[2] > 0.0:
        raise FitRejectedError(f"fitted rate {p[2]:.3e} rad/s is not a decay")
    e = np.exp(-np.clip(p[2] * tau, -700.0, 700.0))
    r = p[0] + p[1] * e - y
    rms = math.sqrt(float(r @ r) / len(y))
    return FitResult(float(p[2]), float(p[1]), float(p[0]), rms, window, iterations)


def fit_exponential(tr: Trace, window: tuple[float, float], min_samples: int = 20) -> FitResult:
    """Fit a + b exp(-rate (t - t_start)) to a real trace over ``window``.

    Raises :class:`FitRejectedError` for non-decaying data and
    :class:`FitConvergenceError` (with the residual history) when the
    damped Gauss-Newton iteration stalls.
    """
    i0, i1 = tr.window_indices(*window)
    y = np.real(np.asarray(tr.samples[i0:i1 + 1], dtype=complex))
    tau = tr.dt_sample * np.arange(len(y))
    return _exp_fit_core(tau, y, window, min_samples)


def fit_exponential_samples(x: np.ndarray, y: np.ndarray, min_samples: int = 5) -> FitResult:
    """Exponential fit on explicit (x, y) samples, e.g. energy versus hold time.

    Same model and iteration as :func:`fit_exponential`, but takes the
    abscissa directly (it need not be uniform) and accepts the short grids
    of sweep measurements.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if np.any(np.diff(x) <= 0.0):
        raise ValueError("x must be strictly increasing")
    return _exp_fit_core(x - x[0], y, (float(x[0]), float(x[-1])), min_samples)


def fit_ring_in(
    env: Trace,
    window: tuple[float, float],
    tail_fraction: float = 0.1,
    min_samples: int = 20,
    average_period: float | None = None,
) -> FitResult:
    """Fit the energy decay of a stage's transient toward steady state.

    The stage steady state is estimated as the complex mean of the
    envelope over the trailing ``tail_fraction`` of the window; the fit
    runs on |envelope - steady|^2, whose rate is the transient's energy
    decay rate (for a drive-plus-signal stage, (1 + C) gamma).

    ``average_period`` boxcar-averages the deviation over one beat period
    first; pass the mode-splitting period when the envelope carries the
    cross-converted sidebands, which would otherwise swamp the transient.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    i0, i1 = env.window_indices(*window)
    samples = np.asarray(env.samples[i0:i1 + 1], dtype=complex)
    n_tail = max(2, int(round(tail_fraction * len(samples))))
    steady = complex(np.mean(samples[-n_tail:]))
    dev = Trace(window[0], env.dt_sample, np.abs(samples - steady) ** 2)
    if average_period is not None:
        dev = period_average(dev, average_period)
    tau = dev.dt_sample * np.arange(len(dev.samples))
    return _exp_fit_core(tau, np.real(dev.samples), window, min_samples)


def fit_fringe(phis: np.ndarray, energies: np.ndarray) -> FringeResult:
    """Linear least-squares fit of E(phi) = A + Bc cos(phi) + Bs sin(phi).

    Returns the contrast B = hypot(Bc, Bs) and the offset phi0 in
    [0, 2 pi) placing the maximum at phi = phi0 (so the dark response sits
    at phi0 + pi).  A vanishing contrast leaves phi0 undefined, flagged
    rather than raised.
    """
    phis = np.asarray(phis, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if phis.shape != energies.shape or phis.ndim != 1:
        raise ValueError("phis and energies must be 1-D arrays of equal length")
    distinct = np.unique(np.mod(phis, 2.0 * math.pi))
    if len(distinct) < 5:
        raise ValueError("need at least 5 distinct phases")
    if np.max(phis) - np.min(phis) < math.pi:
        raise ValueError("phases must span at least pi")
    design = np.column_stack([np.ones_like(phis), np.cos(phis), np.sin(phis)])
    coeffs, _, rank, _ = np.linalg.lstsq(design, energies, rcond=None)
    if rank < 3:
        raise FringeRankError("phase grid is degenerate; fringe parameters undetermined")
    mean, b_c, b_s = (float(c) for c in coeffs)
    contrast = math.hypot(b_c, b_s)
    defined = contrast > 1e-12 * max(abs(mean), float(np.max(np.abs(energies))), 1e-300)
    phi0 = math.atan2(b_s, b_c) % (2.0 * math.pi) if defined else 0.0
    r = design @ coeffs - energies
    rms = math.sqrt(float(r @ r) / len(energies))
    return FringeResult(mean, contrast, phi0, defined, rms)


def suppression_metric(gamma_b: float, gamma_d: float, gamma1: float, gamma2: float) -> float:
    """Fractional reduction of the optically-induced damping,
    (gamma_B - gamma_D) / (gamma_B - gamma_bar) with gamma_bar the bare mean."""
    gamma_bar = 0.5 * (gamma1 + gamma2)
    if not gamma_b > gamma_bar:
        raise ValueError("gamma_B must exceed the bare mechanical mean rate")
    return (gamma_b - gamma_d) / (gamma_b - gamma_bar)


class DampingPrediction(NamedTuple):
    rate: float
    adiabatic_regime: bool


def predicted_total_damping(params: SystemParams, mode) -> DampingPrediction:
    """Adiabatic-limit total (energy) damping rate, rad/s.

    ``mode`` is 1 or 2 for a single resonant drive, giving
    gamma_j (1 + C_j), or ``"bright"`` for the two-drive bright
    superposition, giving gamma_bar (1 + C1 + C2) referenced to the mean
    mechanical rate.  The flag reports whether the cavity is fast enough
    (kappa >= 10 max(G, gamma)) for the prediction to hold.
    """
    g_max = max(g for row in params.G for g in row)
    adiabatic = params.kappa >= 10.0 * max(g_max, params.gamma1, params.gamma2)
    if mode in (1, 2):
        j = mode - 1
        gamma = params.gamma(j)
        rate = gamma * (1.0 + cooperativity(params.G[j][j], gamma, params.kappa))
    elif mode == "bright":
        gamma = params.gamma_mean
        c_total = cooperativity(params.G[0][0], gamma, params.kappa) + cooperativity(
            params.G[1][1], gamma, params.kappa
        )
        rate = gamma * (1.0 + c_total)
    else:
        raise ValueError("mode must be 1, 2 or 'bright'")
    return DampingPrediction(rate, adiabatic)


def steady_state_response(
    params: SystemParams,
    Delta: float,
    delta1: float,
    delta2: float,
    a_s: complex = 1.0,
) -> complex:
    """Closed-form steady state of the resonant-only equations under a
    continuous signal:

        alpha_ss = sqrt(kappa_ext) A_s /
                   [i Delta + kappa/2 + sum_j G_jj^2 / (gamma_j/2 - i delta_j)]

    The sign of the mechanical susceptibility follows the equations of
    motion (rotating each beta_j by exp(+i delta_j t) makes them
    autonomous with detuning +delta_j); it matches the time-domain steady
    state of :func:`trimode.dynamics.integrate` to numerical precision at
    any detuning.
    """
    denom = 1j * Delta + 0.5 * params.kappa
    for j, delta_j in ((0, delta1), (1, delta2)):
        g = params.G[j][j]
        if g > 0.0:
            denom += g * g / (0.5 * params.gamma(j) - 1j * delta_j)
    return math.sqrt(params.kappa_ext) * complex(a_s) / denom


def omit_spectrum(
    params: SystemParams,
    probe_detunings: np.ndarray,
    mode_offsets: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """|alpha_ss|^2 versus probe detuning (transparency-dip spectrum).

    The grid is the probe offset from the configured operating point
    (rad/s): sweeping the probe moves the cavity detuning opposite to the
    two-photon detunings, Delta(d) = Delta0 - (d - delta0) and
    delta_j(d) = d + mode_offsets[j].  Nonzero ``mode_offsets`` model
    drives parked away from their matched sidebands, e.g. offsets
    (0, -delta_m) place the two dips a mode splitting apart.  Unit signal
    amplitude; resonant-only closed form.
    """
    if params.variant != "resonant-only":
        raise ValueError("omit_spectrum uses the resonant-only closed form")
    out = np.empty(len(probe_detunings), dtype=float)
    for i, d in enumerate(np.asarray(probe_detunings, dtype=float)):
        alpha = steady_state_response(
            params,
            params.Delta - (d - params.delta),
            d + mode_offsets[0],
            d + mode_offsets[1],
        )
        out[i] = abs(alpha) ** 2
    return out
