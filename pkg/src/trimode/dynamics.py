"""Time integration of the semiclassical three-mode equations.

In the rotating frames of the signal tone (optical) and of each
mechanical resonance, the coupled-oscillator equations read

    dbeta_j/dt = -(gamma_j/2) beta_j
                 - i sum_k exp(-i(delta_jk t + phi_k)) s_k G[j][k] alpha
    dalpha/dt  = -(i Delta + kappa/2) alpha
                 - i sum_jk exp(+i(delta_jk t + phi_k)) s_k G[j][k] beta_j
                 + sqrt(kappa_ext) A_s

with per-channel two-photon detunings delta_jk = delta + (omega_mk -
omega_mj) and the stage drive scales s_k.  The ``resonant-only`` variant
keeps only the k = j channels (every delta_jj = delta); the ``full``
variant adds the two cross channels, which rotate at -/+ the mode
splitting and are what limits the dark mode's protection.

The integrator is a fixed-step classical RK4 on the six real dimensions,
with the time-dependent coefficients evaluated at the substep times.  The
sample grid is globally uniform; stage boundaries are snapped onto it so
no step ever mixes coefficients from two stages.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import AdiabaticApplicabilityError, DivergenceError, StabilityError
from .model import FULL, SystemParams
from .sequence import PulseSequence

#: dimensionless stability bound on dt * (fastest coefficient scale)
STABILITY_LIMIT = 0.3
#: default dt * (fastest coefficient scale)
DEFAULT_RESOLUTION = 0.1


@dataclass(frozen=True)
class StateVector:
    """Intracavity field and mechanical amplitudes at one instant."""

    alpha: complex = 0j
    beta1: complex = 0j
    beta2: complex = 0j

    @property
    def norm_sq(self) -> float:
        return abs(self.alpha) ** 2 + abs(self.beta1) ** 2 + abs(self.beta2) ** 2


@dataclass(frozen=True)
class IntegratorOptions:
    """Step control for :func:`integrate`.

    ``dt`` is the requested step (None picks the default resolution);
    ``method`` is ``fixed-rk4`` or ``adaptive`` (step halving until the
    Richardson estimate drops below ``adaptive_tol``); ``record_stride``
    stores every n-th step.
    """

    dt: float | None = None
    method: str = "fixed-rk4"
    adiabatic: bool = False
    record_stride: int = 1
    adaptive_tol: float = 1e-8

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.method not in ("fixed-rk4", "adaptive"):
            raise ValueError("method must be 'fixed-rk4' or 'adaptive'")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass(frozen=True)
class StateTrace:
    """Uniformly sampled state trajectory.

    ``stage_bounds`` holds the sample indices of the stage boundaries
    (first entry 0, last entry ``len - 1``), so analysis windows can be
    anchored to exact stage edges.
    """

    t0: float
    dt_sample: float
    alpha: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    stage_bounds: tuple[int, ...]

    def times(self) -> np.ndarray:
        return self.t0 + self.dt_sample * np.arange(len(self.alpha))

    def stage_window(self, stage: int) -> tuple[float, float]:
        """(start, end) times of a stage on the snapped sample grid."""
        i0, i1 = self.stage_bounds[stage], self.stage_bounds[stage + 1]
        return self.t0 + self.dt_sample * i0, self.t0 + self.dt_sample * i1

    def final_state(self) -> StateVector:
        return StateVector(complex(self.alpha[-1]), complex(self.beta1[-1]), complex(self.beta2[-1]))


def _channels(params: SystemParams, phases, scales):
    """Active (mode, coupling, detuning, phase) tuples for one stage."""
    out = []
    for j in (0, 1):
        for k in (0, 1):
            if j != k and params.variant != FULL:
                continue
            g = params.G[j][k] * scales[k]
            if g != 0.0:
                out.append((j, g, params.delta_jk(j, k), phases[k]))
    return tuple(out)


def derivative(state: StateVector, t: float, params: SystemParams, coeffs) -> StateVector:
    """Right-hand side of the equations of motion for one stage's coefficients.

    ``coeffs`` is the (A_s, phases, scales) triple as produced by
    :meth:`PulseSequence.coefficients_at`.
    """
    a_s, phases, scales = coeffs
    da = -(1j * params.Delta + 0.5 * params.kappa) * state.alpha
    da += math.sqrt(params.kappa_ext) * complex(a_s)
    db1 = -0.5 * params.gamma1 * state.beta1
    db2 = -0.5 * params.gamma2 * state.beta2
    for j, g, d, p in _channels(params, phases, scales):
        x = d * t + p
        w = g * complex(math.cos(x), math.sin(x))
        beta = state.beta1 if j == 0 else state.beta2
        da += -1j * w * beta
        if j == 0:
            db1 += -1j * w.conjugate() * state.alpha
        else:
            db2 += -1j * w.conjugate() * state.alpha
    return StateVector(da, db1, db2)


def default_timestep(params: SystemParams) -> float:
    """Step satisfying dt * max(kappa, |Delta|, |delta_m| + |delta|) = 0.1."""
    fast = max(params.kappa, abs(params.Delta), abs(params.delta_m) + abs(params.delta))
    if fast == 0.0:
        fast = max(params.gamma1, params.gamma2, *(g for row in params.G for g in row), 1.0)
    return DEFAULT_RESOLUTION / fast

def _fastest_scale(params: SystemParams) -> float:
    return max(params.kappa, abs(params.Delta) + 0.5 * params.kappa, abs(params.delta_m))


def _grid(total: float, dt: float, stride: int, boundaries) -> tuple[int, float, list[int]]:
    """Uniform step grid with stage boundaries snapped to recorded samples."""
    n_steps = stride * math.ceil(total / (dt * stride) - 1e-9)
    n_steps = max(n_steps, stride)
    h = total / n_steps
    snapped = [0]
    for t_b in boundaries[:-1]:
        k = stride * int(round(t_b / (h * stride)))
        snapped.append(k)
    snapped.append(n_steps)
    for a, b in zip(snapped, snapped[1:]):
        if b - a < stride:
            raise StabilityError(
                "stage too short for the sampling grid; reduce dt or record_stride"
            )
    return n_steps, h, snapped


def _stage_deriv(params: SystemParams, stage):
    """Specialized derivative closure for one stage (hot path)."""
    ka = 1j * params.Delta + 0.5 * params.kappa
    src = math.sqrt(params.kappa_ext) * complex(stage.signal_amplitude)
    gh1 = 0.5 * params.gamma1
    gh2 = 0.5 * params.gamma2
    channels = _channels(params, stage.drive_phase, stage.drive_scale)
    cos, sin = math.cos, math.sin

    def deriv(t, a, b1, b2):
        da = src - ka * a
        db1 = -gh1 * b1
        db2 = -gh2 * b2
        for j, g, d, p in channels:
            x = d * t + p
            w = g * complex(cos(x), sin(x))
            if j == 0:
                da -= 1j * w * b1
                db1 -= 1j * w.conjugate() * a
            else:
                da -= 1j * w * b2
                db2 -= 1j * w.conjugate() * a
        return da, db1, db2

    return deriv


def integrate(
    seq: PulseSequence,
    params: SystemParams,
    init: StateVector,
    opts: IntegratorOptions = IntegratorOptions(),
) -> StateTrace:
    """Integrate the full three-mode equations over a pulse sequence.

    Deterministic for fixed inputs.  Raises :class:`StabilityError` when
    the step does not resolve the fastest coefficient scale and
    :class:`DivergenceError` if the state stops being finite.
    """
    if opts.adiabatic:
        return integrate_adiabatic(seq, params, init, opts)
    if opts.method == "adaptive":
        return _integrate_adaptive(seq, params, init, opts)
    dt = opts.dt if opts.dt is not None else default_timestep(params)
    if dt * _fastest_scale(params) > STABILITY_LIMIT * (1.0 + 1e-12):
        raise StabilityError(
            f"dt = {dt:.3e} s does not resolve the fastest scale: "
            f"dt * max(kappa, |Delta|+kappa/2, |delta_m|) = "
            f"{dt * _fastest_scale(params):.3f} > {STABILITY_LIMIT}"
        )
    stride = opts.record_stride
    n_steps, h, snapped = _grid(seq.total_duration, dt, stride, seq.boundaries)

    n_rec = n_steps // stride
    alpha = np.empty(n_rec + 1, dtype=complex)
    beta1 = np.empty(n_rec + 1, dtype=complex)
    beta2 = np.empty(n_rec + 1, dtype=complex)
    a, b1, b2 = complex(init.alpha), complex(init.beta1), complex(init.beta2)
    alpha[0], beta1[0], beta2[0] = a, b1, b2

    half = 0.5 * h
    sixth = h / 6.0
    isfinite = cmath.isfinite
    for stage, k0, k1 in zip(seq.stages, snapped, snapped[1:]):
        deriv = _stage_deriv(params, stage)
        for i in range(k0, k1):
            t = i * h
            tm = t + half
            da1, db11, db21 = deriv(t, a, b1, b2)
            da2, db12, db22 = deriv(tm, a + half * da1, b1 + half * db11, b2 + half * db21)
            da3, db13, db23 = deriv(tm, a + half * da2, b1 + half * db12, b2 + half * db22)
            da4, db14, db24 = deriv(t + h, a + h * da3, b1 + h * db13, b2 + h * db23)
            a = a + sixth * (da1 + 2.0 * (da2 + da3) + da4)
            b1 = b1 + sixth * (db11 + 2.0 * (db12 + db13) + db14)
            b2 = b2 + sixth * (db21 + 2.0 * (db22 + db23) + db24)
            if (i + 1) % stride == 0:
                r = (i + 1) // stride
                alpha[r], beta1[r], beta2[r] = a, b1, b2
                if not (isfinite(a) and isfinite(b1) and isfinite(b2)):
                    raise DivergenceError((i + 1) * h)

    bounds = tuple(k // stride for k in snapped)
    return StateTrace(0.0, h * stride, alpha, beta1, beta2, bounds)


def _integrate_adaptive(seq, params, init, opts) -> StateTrace:
    """Halve the step until the Richardson estimate meets adaptive_tol."""
    dt = opts.dt if opts.dt is not None else default_timestep(params)
    for _ in range(8):
        err = convergence_report(seq, params, init, dt)
        if err < opts.adaptive_tol:
            return integrate(seq, params, init, IntegratorOptions(
                dt=0.5 * dt, record_stride=2 * opts.record_stride))
        dt *= 0.5
    raise StabilityError(
        f"adaptive stepping did not reach tol = {opts.adaptive_tol:.1e} within 8 halvings"
    )


def integrate_adiabatic(
    seq: PulseSequence,
    params: SystemParams,
    init: StateVector,
    opts: IntegratorOptions = IntegratorOptions(),
) -> StateTrace:
    """Mechanical-only integration with the cavity adiabatically eliminated.

    Valid when the cavity is much faster than everything else; the field
    is slaved to

        alpha_ss(t) = [-i sum_jk exp(+i(delta_jk t + phi_k)) s_k G[j][k] beta_j
                       + sqrt(kappa_ext) A_s] / (kappa/2)

    and only the two mechanical amplitudes are stepped.  This path is an
    independent oracle for the damping rates produced by the full
    integration: with a single resonant drive the amplitude decays at
    (gamma/2)(1 + C); with two equal resonant drives the bright and dark
    superpositions decay at (gamma/2)(1 + C1 + C2) and gamma/2.

    The returned trace carries the eliminated-field estimate alpha_ss in
    its ``alpha`` component.
    """
    if params.Delta != 0.0:
        raise AdiabaticApplicabilityError("adiabatic elimination requires Delta = 0")
    rates = [params.gamma1, params.gamma2]
    for stage in seq.stages:
        for _, g, d, _p in _channels(params, stage.drive_phase, stage.drive_scale):
            rates.append(g)
            rates.append(abs(d))
    if params.kappa < 10.0 * max(rates):
        raise AdiabaticApplicabilityError(
            "adiabatic elimination requires kappa >= 10 * max(G, gamma, |delta_jk|)"
        )

    fast = max(abs(params.delta_m) + abs(params.delta),
               params.gamma1 + 4.0 * (params.G[0][0] ** 2 + params.G[0][1] ** 2) / params.kappa,
               params.gamma2 + 4.0 * (params.G[1][0] ** 2 + params.G[1][1] ** 2) / params.kappa)
    dt = opts.dt if opts.dt is not None else DEFAULT_RESOLUTION / fast
    if dt * fast > STABILITY_LIMIT * (1.0 + 1e-12):
        raise StabilityError(
            f"dt = {dt:.3e} s does not resolve the mechanical scales "
            f"(dt * fastest = {dt * fast:.3f} > {STABILITY_LIMIT})"
        )
    stride = opts.record_stride
    n_steps, h, snapped = _grid(seq.total_duration, dt, stride, seq.boundaries)

    n_rec = n_steps // stride
    alpha = np.empty(n_rec + 1, dtype=complex)
    beta1 = np.empty(n_rec + 1, dtype=complex)
    beta2 = np.empty(n_rec + 1, dtype=complex)
    b1, b2 = complex(init.beta1), complex(init.beta2)

    half = 0.5 * h
    sixth = h / 6.0
    kappa_half = 0.5 * params.kappa
    gh1 = 0.5 * params.gamma1
    gh2 = 0.5 * params.gamma2
    cos, sin = math.cos, math.sin
    first = True
    for stage, k0, k1 in zip(seq.stages, snapped, snapped[1:]):
        channels = _channels(params, stage.drive_phase, stage.drive_scale)
        src = math.sqrt(params.kappa_ext) * complex(stage.signal_amplitude)

        def deriv(t, b1, b2, _ch=channels, _src=src):
            s = _src
            ws = []
            for j, g, d, p in _ch:
                x = d * t + p
                w = g * complex(cos(x), sin(x))
                ws.append((j, w))
                s -= 1j * w * (b1 if j == 0 else b2)
            a = s / kappa_half
            db1 = -gh1 * b1
            db2 = -gh2 * b2
            for j, w in ws:
                if j == 0:
                    db1 -= 1j * w.conjugate() * a
                else:
                    db2 -= 1j * w.conjugate() * a
            return a, db1, db2

        if first:
            alpha[0] = deriv(0.0, b1, b2)[0]
            beta1[0], beta2[0] = b1, b2
            first = False
        for i in range(k0, k1):
            t = i * h
            tm = t + half
            a1, db11, db21 = deriv(t, b1, b2)
            _, db12, db22 = deriv(tm, b1 + half * db11, b2 + half * db21)
            _, db13, db23 = deriv(tm, b1 + half * db12, b2 + half * db22)
            _, db14, db24 = deriv(t + h, b1 + h * db13, b2 + h * db23)
            b1 = b1 + sixth * (db11 + 2.0 * (db12 + db13) + db14)
            b2 = b2 + sixth * (db21 + 2.0 * (db22 + db23) + db24)
            if (i + 1) % stride == 0:
                r = (i + 1) // stride
                a_ss, _, _ = deriv((i + 1) * h, b1, b2)
                alpha[r], beta1[r], beta2[r] = a_ss, b1, b2
                if not (cmath.isfinite(b1) and cmath.isfinite(b2)):
                    raise DivergenceError((i + 1) * h)

    bounds = tuple(k // stride for k in snapped)
    return StateTrace(0.0, h * stride, alpha, beta1, beta2, bounds)


def convergence_report(
    seq: PulseSequence,
    params: SystemParams,
    init: StateVector,
    dt: float,
) -> float:
    """Max componentwise relative difference between runs at dt and dt/2.

    Both runs are compared on the coarse run's exact sample grid; the
    result is the worst relative deviation, each component normalized by
    its own peak magnitude on the fine run.
    """
    coarse = integrate(seq, params, init, IntegratorOptions(dt=dt, record_stride=1))
    fine = integrate(
        seq, params, init,
        IntegratorOptions(dt=0.5 * coarse.dt_sample, record_stride=2),
    )
    worst = 0.0
    for c, f in ((coarse.alpha, fine.alpha), (coarse.beta1, fine.beta1), (coarse.beta2, fine.beta2)):
        scale = float(np.max(np.abs(f)))
        if scale == 0.0:
            continue
        worst = max(worst, float(np.max(np.abs(c - f))) / scale)
    return worst
