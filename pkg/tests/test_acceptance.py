"""Acceptance tests: the toolkit's headline numbers, one test each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line
per criterion with the measured values.
"""

import math
import time

import numpy as np
import pytest

from trimode.analysis import (
    fit_exponential,
    fit_exponential_samples,
    fit_fringe,
    fit_ring_in,
    omit_spectrum,
    suppression_metric,
)
from trimode.cli import _phase_point, _tau_point, run_dark_decay
from trimode.config import config_from_dict
from trimode.detection import (
    DetectionConfig,
    Trace,
    beat_envelope,
    guard_time,
    intensity,
    period_average,
)
from trimode.dynamics import IntegratorOptions, StateVector, integrate, integrate_adiabatic
from trimode.model import (
    SuperpositionPair,
    bright_dark_compose,
    make_params,
)
from trimode.sequence import PulseSequence, Stage, preset_interference, preset_two_mode

TWO_PI = 2.0 * math.pi

# equal drive couplings giving total cooperativity 2.1 against the mean
# bare rate (gamma_mean/2pi = 3.55 kHz): g = sqrt(1.05 gamma_mean kappa)/2
G_EQUAL_HZ = math.sqrt(1.05 * 3.55e3 * 1.6e6) / 2.0


def detect_intensity(tr, params, det):
    env = beat_envelope(Trace(tr.t0, tr.dt_sample, tr.alpha), params, det)
    return env, intensity(env)


def fit_both_stages(tr, params, det):
    """Ring-in fit on the signal stage, decay fit on the post-signal stage."""
    env, inten = detect_intensity(tr, params, det)
    guard = guard_time(det.filter_bandwidth)
    w0 = tr.stage_window(0)
    w1 = tr.stage_window(1)
    ring = fit_ring_in(env, (w0[0] + guard, w0[1]))
    decay = fit_exponential(inten, (w1[0] + guard, w1[1]))
    return ring, decay


@pytest.fixture(scope="module")
def two_mode_setup():
    params = make_params(
        omega_m1_hz=69.48e6, omega_m2_hz=69.66e6,
        gamma1_hz=3.5e3, gamma2_hz=3.5e3, kappa_hz=1.6e6,
        c1=1.6, g2_hz=0.0, Delta_hz=0.0, delta_hz=0.0,
    )
    det = DetectionConfig(lo_paths=("drive1",), lo_weights=(1.0,))
    return params, det


@pytest.fixture(scope="module")
def two_mode_rates(two_mode_setup):
    params, det = two_mode_setup
    start = time.perf_counter()
    seq = preset_two_mode(0.0, 0.5e-3, 1.0e-3, 1.0)
    tr = integrate(seq, params, StateVector(), IntegratorOptions())
    ring, decay = fit_both_stages(tr, params, det)
    elapsed = time.perf_counter() - start
    return ring.rate, decay.rate, elapsed


def dark_decay_config(variant):
    return config_from_dict({
        "system": {
            "omega_m1_hz": 69.48e6, "omega_m2_hz": 69.66e6,
            "gamma1_hz": 3.5e3, "gamma2_hz": 3.6e3, "kappa_hz": 1.6e6,
            "g1_hz": G_EQUAL_HZ, "g2_hz": G_EQUAL_HZ, "variant": variant,
        },
        "sequence": {
            "preset": "dark-decay", "theta1": 0.0, "theta2": 0.0,
            "phi1_dark": math.pi, "t_signal_s": 5e-4, "t_measure_s": 5e-4,
        },
        "detection": {"lo_paths": ["drive1", "drive2"], "lo_weights": [1.0, 1.0]},
        "sweep": {"tau_max_s": 4e-4, "tau_points": 9, "energy_window_s": 4e-4},
    })


@pytest.fixture(scope="module")
def bright_rate_resonant():
    """Criterion 6 fit, reused for the criterion 7 suppression metric."""
    params = make_params(
        omega_m1_hz=69.48e6, omega_m2_hz=69.66e6,
        gamma1_hz=3.5e3, gamma2_hz=3.6e3, kappa_hz=1.6e6,
        g1_hz=G_EQUAL_HZ, g2_hz=G_EQUAL_HZ,
    )
    det = DetectionConfig(lo_paths=("drive1",), lo_weights=(1.0,))
    seq = preset_interference(0.0, 0.0, 0.0, 5e-4, 5e-4, 1.0)
    tr = integrate(seq, params, StateVector(), IntegratorOptions())
    _env, inten = detect_intensity(tr, params, det)
    guard = guard_time(det.filter_bandwidth)
    w1 = tr.stage_window(1)
    smooth = period_average(inten, TWO_PI / abs(params.delta_m))
    fit = fit_exponential(smooth, (max(w1[0] + guard, smooth.t0),
                                   min(w1[1], smooth.t_end)))
    return fit.rate


def test_c01_two_mode_decay_rates(two_mode_rates):
    ring_rate, decay_rate, elapsed = two_mode_rates
    target = TWO_PI * 9.1e3
    assert ring_rate == pytest.approx(target, rel=0.05)
    assert decay_rate == pytest.approx(target, rel=0.05)
    assert elapsed < 10.0
    print(f"\nPASS C1: ring-in {ring_rate / TWO_PI:.1f} Hz, post-signal "
          f"{decay_rate / TWO_PI:.1f} Hz (target 9100 +/- 5%), {elapsed:.1f} s")


def test_c02_phase_independence(two_mode_setup, two_mode_rates):
    params, det = two_mode_setup
    ring_ref, decay_ref, _ = two_mode_rates
    worst = 0.0
    for theta1, slip in ((0.0, 0.7), (math.pi / 3.0, -1.1), (math.pi, math.pi)):
        seq = PulseSequence((
            Stage(0.5e-3, 1.0, (theta1, 0.0), (1.0, 0.0), "excitation"),
            Stage(1.0e-3, 0j, (theta1 + slip, 0.0), (1.0, 0.0), "coupling"),
        ))
        tr = integrate(seq, params, StateVector(), IntegratorOptions())
        ring, decay = fit_both_stages(tr, params, det)
        worst = max(worst,
                    abs(ring.rate - ring_ref) / ring_ref,
                    abs(decay.rate - decay_ref) / decay_ref)
    assert worst < 0.005
    print(f"\nPASS C2: fitted rates move {100 * worst:.4f}% over theta1 and "
          f"phase slips (limit 0.5%)")


def test_c03_fringe_law():
    start = time.perf_counter()
    cfg = config_from_dict({
        "system": {
            "omega_m1_hz": 69.48e6, "omega_m2_hz": 69.66e6,
            "gamma1_hz": 3.5e3, "gamma2_hz": 3.5e3, "kappa_hz": 1.6e6,
            "c1": 1.15, "c2": 1.15, "variant": "resonant-only",
        },
        "sequence": {
            "preset": "interference", "theta1": 0.0, "theta2": 0.0, "phi1": 0.0,
            "t_signal_s": 5e-4, "t_decay_s": 5e-4,
        },
        "sweep": {"phi_points": 24, "energy_window_s": 4e-4},
    })
    n = cfg.sweep.phi_points
    phis = np.array([TWO_PI * k / n for k in range(n)])
    energies = np.array([_phase_point((cfg, phi)) for phi in phis])
    fringe = fit_fringe(phis, energies)
    elapsed = time.perf_counter() - start

    assert fringe.rms_residual < 0.01 * fringe.contrast
    assert fringe.visibility >= 0.99
    # maximum at theta1, dark response at phi0 + pi
    phi0 = fringe.phi0 % TWO_PI
    assert min(phi0, TWO_PI - phi0) < 1e-3
    dark_phi = (fringe.phi0 + math.pi) % TWO_PI
    assert phis[np.argmin(energies)] == pytest.approx(dark_phi, abs=TWO_PI / n / 2)
    assert elapsed < 120.0
    print(f"\nPASS C3: visibility {fringe.visibility:.6f} (>= 0.99), residual "
          f"{fringe.rms_residual / fringe.contrast:.2e} of contrast, minimum at "
          f"phi0 + pi, {elapsed:.0f} s")


def test_c04_dark_mode_decoupling():
    params = make_params(
        omega_m1_hz=69.48e6, omega_m2_hz=69.66e6,
        gamma1_hz=3.5e3, gamma2_hz=3.5e3, kappa_hz=1.6e6,
        g1_hz=G_EQUAL_HZ, g2_hz=G_EQUAL_HZ,
    )
    phi1, phi2 = 0.8, -0.5
    b1, b2 = bright_dark_compose(
        SuperpositionPair(0j, 1.0), phi1, phi2, params.G[0][0], params.G[1][1]
    )
    seq = PulseSequence((Stage(3e-4, 0j, (phi1, phi2), (1.0, 1.0), "coupling"),))
    tr = integrate(seq, params, StateVector(0j, b1, b2),
                   IntegratorOptions(record_stride=20))
    alpha_max = float(np.max(np.abs(tr.alpha)))
    amp = np.hypot(np.abs(tr.beta1), np.abs(tr.beta2))
    expected = np.exp(-0.5 * params.gamma1 * tr.times())
    worst = float(np.max(np.abs(amp - expected) / expected))
    assert alpha_max < 1e-8
    assert worst < 1e-4
    print(f"\nPASS C4: max|alpha| {alpha_max:.2e} (< 1e-8), |beta_D| follows "
          f"exp(-gamma t/2) within {worst:.2e} (< 1e-4)")


def test_c05_resonant_dark_damping(tmp_path):
    cfg = dark_decay_config("resonant-only")
    entries = dict(run_dark_decay(cfg, tmp_path, workers=1))
    gamma_d_hz = entries["gamma_D_hz"]
    assert abs(gamma_d_hz - 3.6e3) <= 0.2e3
    print(f"\nPASS C5: resonant-only gamma_D {gamma_d_hz:.1f} Hz "
          f"(target 3600 +/- 200)")


def test_c06_bright_mode_damping(bright_rate_resonant):
    assert bright_rate_resonant / TWO_PI == pytest.approx(11.0e3, rel=0.05)
    print(f"\nPASS C6: gamma_B {bright_rate_resonant / TWO_PI:.1f} Hz "
          f"(target 11000 +/- 5%)")


def test_c07_full_model_residual_damping(tmp_path, bright_rate_resonant):
    cfg = dark_decay_config("full")
    taus = np.array(cfg.sweep.tau_values)
    energies = np.array([_tau_point((cfg, tau)) for tau in taus])
    fit = fit_exponential_samples(taus, energies, min_samples=5)
    gamma_d = fit.rate
    gamma_bar = 0.5 * (cfg.params.gamma1 + cfg.params.gamma2)

    assert 6e3 <= gamma_d / TWO_PI <= 9e3
    suppression = suppression_metric(
        bright_rate_resonant, gamma_d, cfg.params.gamma1, cfg.params.gamma2
    )
    assert 0.30 <= suppression <= 0.60
    # the directional claim must hold strictly: the cross couplings damp
    # the dark state beyond its bare rate but below the bright rate
    assert gamma_bar < gamma_d < bright_rate_resonant
    print(f"\nPASS C7: full-model gamma_D {gamma_d / TWO_PI:.1f} Hz in [6000, 9000] "
          f"(reference 7800), suppression {suppression:.3f} in [0.30, 0.60] "
          f"(reference 0.43), ordering gamma_bar < gamma_D < gamma_B holds")


def test_c08_omit_consistency():
    results = []
    for c1 in (0.5, 1.6, 5.0):
        params = make_params(
            omega_m1_hz=69.48e6, omega_m2_hz=69.66e6,
            gamma1_hz=3.5e3, gamma2_hz=3.5e3, kappa_hz=1.6e6,
            c1=c1, g2_hz=0.0,
        )
        seq = PulseSequence((Stage(1.2e-3, 1.0, (0.0, 0.0), (1.0, 0.0), "excitation"),))
        tr = integrate(seq, params, StateVector(), IntegratorOptions(record_stride=100))
        time_domain = abs(tr.alpha[-1]) ** 2
        closed_form = omit_spectrum(params, np.array([0.0]))[0]
        rel = abs(time_domain - closed_form) / closed_form
        assert rel < 0.005
        results.append((c1, rel))
    detail = ", ".join(f"C={c}: {100 * r:.3f}%" for c, r in results)
    print(f"\nPASS C8: steady-state agreement within 0.5% ({detail})")


def test_c09_numerical_hygiene():
    params = make_params(
        omega_m1_hz=69.48e6, omega_m2_hz=69.66e6,
        gamma1_hz=3.5e3, gamma2_hz=3.6e3, kappa_hz=1.6e6,
        c1=1.3, c2=1.0, variant="full",
    )
    # RK4 order over three halvings against a dt/8 reference
    seq = PulseSequence((Stage(2e-5, 1.0, (0.3, 1.1), (1.0, 1.0), "excitation"),))
    init = StateVector(0.1 + 0.2j, 0.3, -0.2j)
    dt0 = 0.25 / params.kappa
    finals = []
    for k in range(4):
        tr = integrate(seq, params, init,
                       IntegratorOptions(dt=dt0 / 2**k, record_stride=2**k))
        finals.append(np.array([tr.alpha[-1], tr.beta1[-1], tr.beta2[-1]]))
    errors = [np.max(np.abs(f - finals[3])) for f in finals[:3]]
    orders = [math.log2(errors[0] / errors[1]), math.log2(errors[1] / errors[2])]
    assert min(orders) >= 3.7

    # adiabatic oracle against the full integration
    params_ad = make_params(
        omega_m1_hz=69.48e6, omega_m2_hz=69.66e6,
        gamma1_hz=3.5e3, gamma2_hz=3.5e3, kappa_hz=1.6e6,
        c1=1.6, g2_hz=0.0,
    )
    seq_d = PulseSequence((Stage(4e-4, 0j, (0.0, 0.0), (1.0, 0.0), "coupling"),))
    init_d = StateVector(beta1=1.0)
    rates = []
    for tr in (
        integrate(seq_d, params_ad, init_d, IntegratorOptions(record_stride=100)),
        integrate_adiabatic(seq_d, params_ad, init_d, IntegratorOptions()),
    ):
        t = tr.times()
        mask = t > 2e-5
        rates.append(-np.polyfit(t[mask], np.log(np.abs(tr.beta1[mask])), 1)[0])
    adiabatic_rel = abs(rates[0] - rates[1]) / rates[1]
    assert adiabatic_rel < 0.02

    # gauge invariance and linearity at 1e-9
    shift = 0.913
    seq_a = preset_interference(0.2, -0.4, 1.1, 1e-4, 1e-4, 1.0)
    seq_b = preset_interference(0.2 + shift, -0.4 + shift, 1.1 + shift, 1e-4, 1e-4, 1.0)
    opts = IntegratorOptions(record_stride=20)
    tr_a = integrate(seq_a, params, StateVector(), opts)
    tr_b = integrate(seq_b, params, StateVector(), opts)
    gauge = 0.0
    for x, y in ((tr_a.alpha, tr_b.alpha), (tr_a.beta1, tr_b.beta1), (tr_a.beta2, tr_b.beta2)):
        gauge = max(gauge, float(np.max(np.abs(np.abs(x) - np.abs(y)))) /
                    max(float(np.max(np.abs(x))), 1e-300))
    assert gauge < 1e-9

    lam = 0.6 - 1.1j
    seq_s = PulseSequence(tuple(
        Stage(s.duration, lam * s.signal_amplitude, s.drive_phase, s.drive_scale, s.label)
        for s in seq_a.stages
    ))
    tr_s = integrate(seq_s, params, StateVector(), opts)
    lin = 0.0
    for x, y in ((tr_a.alpha, tr_s.alpha), (tr_a.beta1, tr_s.beta1), (tr_a.beta2, tr_s.beta2)):
        lin = max(lin, float(np.max(np.abs(lam * x - y))) /
                  max(float(np.max(np.abs(y))), 1e-300))
    assert lin < 1e-9

    # the full invariant suite finishes quickly
    from trimode.selftest import run_all

    start = time.perf_counter()
    assert run_all(echo=lambda *_: None)
    selftest_s = time.perf_counter() - start
    assert selftest_s < 60.0
    print(f"\nPASS C9: RK4 orders {orders[0]:.2f}/{orders[1]:.2f} (>= 3.7), "
          f"adiabatic within {100 * adiabatic_rel:.2f}% (< 2%), gauge {gauge:.1e} "
          f"and linearity {lin:.1e} (< 1e-9), selftest {selftest_s:.1f} s (< 60)")


def test_c10_effective_cooperativity_recorded():
    params = make_params(
        omega_m1_hz=69.48e6, omega_m2_hz=69.66e6,
        gamma1_hz=3.5e3, gamma2_hz=3.6e3, kappa_hz=1.6e6,
        c1=1.3, c2=1.0, variant="full",
    )
    det = DetectionConfig(lo_paths=("drive1",), lo_weights=(1.0,))
    seq = preset_interference(0.0, 0.0, 0.0, 5e-4, 5e-4, 1.0)
    tr = integrate(seq, params, StateVector(), IntegratorOptions())
    env, _ = detect_intensity(tr, params, det)
    guard = guard_time(det.filter_bandwidth)
    w0 = tr.stage_window(0)
    fit = fit_ring_in(env, (w0[0] + guard, w0[1]),
                      average_period=TWO_PI / abs(params.delta_m))
    c_eff = fit.rate / params.gamma_mean - 1.0
    # recorded only: the operating conditions behind the reference value
    # 1.4 are ambiguous, so no tolerance is asserted
    assert math.isfinite(c_eff) and c_eff > 0.0
    print(f"\nPASS C10: simulated ring-in effective cooperativity {c_eff:.3f} "
          f"recorded (reference 1.4 not asserted; rms residual "
          f"{fit.rms_residual:.2e})")
