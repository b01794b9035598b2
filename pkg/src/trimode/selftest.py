"""Built-in invariant suite behind ``trimode selftest``.

Each check exercises one structural property of the implementation
(unitarity, gauge invariance, linearity, integrator order, filter
transfer function, fitter round-trips, ...) on a small deterministic
scenario and reports measured-versus-expected values on failure.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import analysis, detection, dynamics, model, sequence
from .config import config_from_dict
from .errors import ConfigError, StabilityError

TWO_PI = 2.0 * math.pi


class CheckFailure(Exception):
    pass


def _expect(ok: bool, name: str, measured, expected) -> None:
    if not ok:
        raise CheckFailure(f"{name}: measured {measured!r}, expected {expected!r}")


def _params(variant=model.RESONANT_ONLY, c1=1.6, c2=None, g2_hz=0.0, **kw):
    kwargs = dict(
        omega_m1_hz=69.48e6, omega_m2_hz=69.66e6,
        gamma1_hz=3.5e3, gamma2_hz=3.6e3, kappa_hz=1.6e6,
        c1=c1, variant=variant,
    )
    if c2 is None:
        kwargs["g2_hz"] = g2_hz
    else:
        kwargs["c2"] = c2
    kwargs.update(kw)
    return model.make_params(**kwargs)


def check_transform_unitarity() -> str:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        b1, b2 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        phi1, phi2 = rng.uniform(0, TWO_PI, 2)
        g1, g2 = rng.uniform(0.01, 2.0, 2)
        pair = model.bright_dark_decompose(b1, b2, phi1, phi2, g1, g2)
        norm_in = abs(b1) ** 2 + abs(b2) ** 2
        norm_out = abs(pair.beta_B) ** 2 + abs(pair.beta_D) ** 2
        worst = max(worst, abs(norm_out - norm_in) / norm_in)
        r1, r2 = model.bright_dark_compose(pair, phi1, phi2, g1, g2)
        worst = max(worst, abs(r1 - b1), abs(r2 - b2))
    _expect(worst < 1e-12, "unitarity/round-trip", worst, "< 1e-12")
    return f"worst deviation {worst:.2e}"


def check_cooperativity_roundtrip() -> str:
    worst = 0.0
    for c in (0.0, 0.3, 1.05, 1.6, 5.0, 40.0):
        g = model.coupling_from_cooperativity(c, 3.5e3, 1.6e6)
        back = model.cooperativity(g, 3.5e3, 1.6e6)
        worst = max(worst, abs(back - c))
    _expect(worst < 1e-12, "cooperativity round-trip", worst, "< 1e-12")
    return f"worst deviation {worst:.2e}"


def check_sequence_coefficients() -> str:
    seq = sequence.preset_dark_decay(0.1, 0.2, 0.1 + math.pi, 2e-4, 5e-4, 1e-3, 1.0)
    _expect(len(seq.stages) == 3, "stage count", len(seq.stages), 3)
    a_s, phases, _ = seq.coefficients_at(5e-4)
    _expect(a_s == 0j and phases[0] == 0.1 + math.pi,
            "right-continuity at boundary", (a_s, phases[0]), (0j, 0.1 + math.pi))
    a_end, phases_end, _ = seq.coefficients_at(seq.total_duration)
    _expect(phases_end[0] == 0.1, "closed right endpoint", phases_end[0], 0.1)
    return "boundaries right-continuous"


def check_free_cavity_decay() -> str:
    p = _params(g1_hz=0.0, c1=None)
    seq = sequence.PulseSequence(
        (sequence.Stage(2e-6, 0j, (0.0, 0.0), (0.0, 0.0), "custom"),)
    )
    tr = dynamics.integrate(seq, p, dynamics.StateVector(alpha=1.0),
                            dynamics.IntegratorOptions(record_stride=10))
    expected = np.exp(-0.5 * p.kappa * tr.times())
    err = float(np.max(np.abs(np.abs(tr.alpha) - expected) / expected))
    _expect(err < 1e-6, "free cavity |alpha| vs exp(-kappa t/2)", err, "< 1e-6")
    return f"max relative error {err:.2e}"


def check_rk4_order() -> str:
    p = _params(variant=model.FULL, c1=1.3, c2=1.0)
    seq = sequence.PulseSequence(
        (sequence.Stage(2e-5, 1.0, (0.3, 1.1), (1.0, 1.0), "excitation"),)
    )
    init = dynamics.StateVector(0.1 + 0.2j, 0.3 - 0.1j, -0.2 + 0.4j)
    dt0 = 0.25 / p.kappa
    finals = []
    for k in range(4):
        tr = dynamics.integrate(
            seq, p, init,
            dynamics.IntegratorOptions(dt=dt0 / 2**k, record_stride=2**k),
        )
        finals.append(np.array([tr.alpha[-1], tr.beta1[-1], tr.beta2[-1]]))
    e1 = np.max(np.abs(finals[0] - finals[3]))
    e2 = np.max(np.abs(finals[1] - finals[3]))
    e3 = np.max(np.abs(finals[2] - finals[3]))
    orders = (math.log2(e1 / e2), math.log2(e2 / e3))
    _expect(min(orders) >= 3.7, "RK4 observed order", orders, ">= 3.7")
    return f"orders {orders[0]:.2f}, {orders[1]:.2f}"


def _two_drive_seq(theta1=0.0, theta2=0.0, phi1=None, t_signal=1e-4, t_decay=2e-4):
    phi1 = theta1 if phi1 is None else phi1
    return sequence.preset_interference(theta1, theta2, phi1, t_signal, t_decay, 1.0)


def check_gauge_invariance() -> str:
    p = _params(c1=1.3, c2=1.0)
    shift = 1.234
    base = _two_drive_seq(0.2, -0.4, 0.2 + math.pi / 3)
    shifted = _two_drive_seq(0.2 + shift, -0.4 + shift, 0.2 + math.pi / 3 + shift)
    opts = dynamics.IntegratorOptions(record_stride=50)
    tr_a = dynamics.integrate(base, p, dynamics.StateVector(), opts)
    tr_b = dynamics.integrate(shifted, p, dynamics.StateVector(), opts)
    worst = 0.0
    for x, y in ((tr_a.alpha, tr_b.alpha), (tr_a.beta1, tr_b.beta1), (tr_a.beta2, tr_b.beta2)):
        scale = max(float(np.max(np.abs(x))), 1e-300)
        worst = max(worst, float(np.max(np.abs(np.abs(x) - np.abs(y)))) / scale)
    _expect(worst < 1e-9, "gauge invariance of |alpha|, |beta_j|", worst, "< 1e-9")
    return f"worst relative deviation {worst:.2e}"


def check_linearity() -> str:
    p = _params(c1=1.3, c2=1.0)
    lam = 0.7 - 1.3j
    seq = _two_drive_seq()
    seq_scaled = sequence.PulseSequence(tuple(
        sequence.Stage(s.duration, lam * s.signal_amplitude, s.drive_phase,
                       s.drive_scale, s.label)
        for s in seq.stages
    ))
    init = dynamics.StateVector(0.1j, 0.2, -0.3 + 0.1j)
    init_scaled = dynamics.StateVector(lam * 0.1j, lam * 0.2, lam * (-0.3 + 0.1j))
    opts = dynamics.IntegratorOptions(record_stride=50)
    tr_a = dynamics.integrate(seq, p, init, opts)
    tr_b = dynamics.integrate(seq_scaled, p, init_scaled, opts)
    worst = 0.0
    for x, y in ((tr_a.alpha, tr_b.alpha), (tr_a.beta1, tr_b.beta1), (tr_a.beta2, tr_b.beta2)):
        scale = max(float(np.max(np.abs(y))), 1e-300)
        worst = max(worst, float(np.max(np.abs(lam * x - y))) / scale)
    _expect(worst < 1e-9, "linearity under common scaling", worst, "< 1e-9")
    return f"worst relative deviation {worst:.2e}"


def check_passivity() -> str:
    p = _params(variant=model.FULL, c1=1.3, c2=1.0)
    seq = sequence.PulseSequence(
        (sequence.Stage(2e-4, 0j, (0.3, 1.0), (1.0, 1.0), "coupling"),)
    )
    tr = dynamics.integrate(seq, p, dynamics.StateVector(0.5, 1.0, -0.5j),
                            dynamics.IntegratorOptions(record_stride=20))
    norm = np.abs(tr.alpha) ** 2 + np.abs(tr.beta1) ** 2 + np.abs(tr.beta2) ** 2
    increase = float(np.max(np.diff(norm) / norm[0]))
    _expect(increase <= 1e-9, "norm non-increasing without sources", increase, "<= 1e-9")
    return f"max relative increase {increase:.2e}"


def check_dark_mode_decoupling() -> str:
    p = _params(gamma2_hz=3.5e3, c1=1.05, c2=1.05)
    phi1, phi2 = 0.7, -0.3
    g1, g2 = p.G[0][0], p.G[1][1]
    b1, b2 = model.bright_dark_compose(model.SuperpositionPair(0j, 1.0), phi1, phi2, g1, g2)
    seq = sequence.PulseSequence(
        (sequence.Stage(2e-4, 0j, (phi1, phi2), (1.0, 1.0), "coupling"),)
    )
    tr = dynamics.integrate(seq, p, dynamics.StateVector(0j, b1, b2),
                            dynamics.IntegratorOptions(record_stride=20))
    alpha_max = float(np.max(np.abs(tr.alpha)))
    dark = np.array([
        model.bright_dark_decompose(x1, x2, phi1, phi2, g1, g2).beta_D
        for x1, x2 in zip(tr.beta1, tr.beta2)
    ])
    expected = np.exp(-0.5 * p.gamma1 * tr.times())
    rel = float(np.max(np.abs(np.abs(dark) - expected) / expected))
    _expect(alpha_max < 1e-8, "dark state leaves alpha dark", alpha_max, "< 1e-8")
    _expect(rel < 1e-4, "|beta_D| decays at gamma/2", rel, "< 1e-4")
    return f"max |alpha| {alpha_max:.2e}, |beta_D| deviation {rel:.2e}"


def check_adiabatic_agreement() -> str:
    p = _params(gamma2_hz=3.5e3, c1=1.6)
    seq = sequence.PulseSequence(
        (sequence.Stage(4e-4, 0j, (0.0, 0.0), (1.0, 0.0), "coupling"),)
    )
    init = dynamics.StateVector(beta1=1.0)
    full = dynamics.integrate(seq, p, init, dynamics.IntegratorOptions(record_stride=100))
    fast = dynamics.integrate_adiabatic(seq, p, init,
                                        dynamics.IntegratorOptions(record_stride=1))
    rates = []
    for tr in (full, fast):
        t = tr.times()
        mask = t > 2e-5
        rates.append(-np.polyfit(t[mask], np.log(np.abs(tr.beta1[mask])), 1)[0])
    rel = abs(rates[0] - rates[1]) / rates[1]
    _expect(rel < 0.02, "adiabatic vs full fitted rate", rel, "< 0.02")
    return f"rates differ by {100 * rel:.3f}%"


def check_filter_transfer() -> str:
    bw = 50e3
    dt = 1e-7
    t = np.arange(0, 2e-3, dt)
    worst = 0.0
    for f in (20e3, 50e3, 180e3):
        tone = detection.Trace(0.0, dt, np.exp(1j * TWO_PI * f * t))
        out = detection.demodulate(tone, 0.0, bw)
        measured = float(np.mean(np.abs(out.samples[len(t) // 2:])))
        expected = 1.0 / math.sqrt(1.0 + (f / bw) ** 2)
        worst = max(worst, abs(measured - expected) / expected)
    _expect(worst < 0.02, "one-pole |H(f)| vs analytic", worst, "< 0.02")
    return f"worst relative deviation {worst:.2e}"


def check_demodulate_linearity() -> str:
    rng = np.random.default_rng(3)
    dt = 1e-7
    x = rng.standard_normal(4000) + 1j * rng.standard_normal(4000)
    y = rng.standard_normal(4000) + 1j * rng.standard_normal(4000)
    a, b = 0.7 - 0.2j, -1.1 + 0.4j
    mix = detection.Trace(0.0, dt, a * x + b * y)
    out_mix = detection.demodulate(mix, TWO_PI * 30e3, 50e3).samples
    out_sep = (
        a * detection.demodulate(detection.Trace(0.0, dt, x), TWO_PI * 30e3, 50e3).samples
        + b * detection.demodulate(detection.Trace(0.0, dt, y), TWO_PI * 30e3, 50e3).samples
    )
    worst = float(np.max(np.abs(out_mix - out_sep)))
    _expect(worst < 1e-12, "demodulate linearity", worst, "< 1e-12")
    return f"worst deviation {worst:.2e}"


def check_exponential_fit_roundtrip() -> str:
    rate = TWO_PI * 9.1e3
    dt = 1e-6
    t = np.arange(0, 1e-3, dt)
    tr = detection.Trace(0.0, dt, 0.3 + 5.0 * np.exp(-rate * t))
    fit = analysis.fit_exponential(tr, (0.0, 1e-3 - dt))
    rel = abs(fit.rate - rate) / rate
    _expect(rel < 1e-3, "exponential fit recovers its generator", rel, "< 1e-3")
    return f"rate error {100 * rel:.4f}%"


def check_fringe_fit_roundtrip() -> str:
    phis = TWO_PI * np.arange(24) / 24
    energies = 2.0 + np.cos(phis - 0.3)
    fringe = analysis.fit_fringe(phis, energies)
    err = max(abs(fringe.mean - 2.0), abs(fringe.contrast - 1.0), abs(fringe.phi0 - 0.3))
    _expect(err < 1e-10, "fringe fit recovers its generator", err, "< 1e-10")
    return f"worst parameter error {err:.2e}"


def check_omit_consistency() -> str:
    p = _params(c1=1.6)
    seq = sequence.PulseSequence(
        (sequence.Stage(8e-4, 1.0, (0.0, 0.0), (1.0, 0.0), "excitation"),)
    )
    tr = dynamics.integrate(seq, p, dynamics.StateVector(),
                            dynamics.IntegratorOptions(record_stride=100))
    time_domain = abs(tr.alpha[-1]) ** 2
    closed_form = analysis.omit_spectrum(p, np.array([0.0]))[0]
    rel = abs(time_domain - closed_form) / closed_form
    _expect(rel < 0.005, "time-domain vs closed-form steady state", rel, "< 0.005")
    return f"relative deviation {100 * rel:.4f}%"


def check_stability_refusal() -> str:
    p = _params()
    seq = _two_drive_seq()
    try:
        dynamics.integrate(seq, p, dynamics.StateVector(),
                           dynamics.IntegratorOptions(dt=1e-6))
    except StabilityError:
        return "oversized step refused"
    raise CheckFailure("stability: dt = 1e-6 s accepted, expected StabilityError")


def check_config_validation() -> str:
    bad = {
        "system": {
            "omega_m1_hz": 69.48e6, "omega_m2_hz": 69.66e6,
            "gamma1_hz": 3.5e3, "gamma2_hz": 3.6e3, "kappa_hz": 1.6e6,
            "c1": 1.6, "g2_hz": 0.0, "kappa_ext_hz": 3.2e6,
        },
        "sequence": {"preset": "two-mode", "t_signal_s": 5e-4, "t_decay_s": 1e-3},
    }
    try:
        config_from_dict(bad)
    except ConfigError as exc:
        return f"rejected: {exc.field}"
    raise CheckFailure("config: kappa_ext > kappa accepted, expected ConfigError")


CHECKS = (
    ("transform-unitarity", check_transform_unitarity),
    ("cooperativity-roundtrip", check_cooperativity_roundtrip),
    ("sequence-coefficients", check_sequence_coefficients),
    ("free-cavity-decay", check_free_cavity_decay),
    ("rk4-order", check_rk4_order),
    ("gauge-invariance", check_gauge_invariance),
    ("linearity", check_linearity),
    ("passivity", check_passivity),
    ("dark-mode-decoupling", check_dark_mode_decoupling),
    ("adiabatic-agreement", check_adiabatic_agreement),
    ("filter-transfer", check_filter_transfer),
    ("demodulate-linearity", check_demodulate_linearity),
    ("exponential-fit-roundtrip", check_exponential_fit_roundtrip),
    ("fringe-fit-roundtrip", check_fringe_fit_roundtrip),
    ("omit-consistency", check_omit_consistency),
    ("stability-refusal", check_stability_refusal),
    ("config-validation", check_config_validation),
)


def run_all(echo=print) -> bool:
    """Run every check, print one timed line each; True when all pass."""
    all_ok = True
    total = time.perf_counter()
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            detail = fn()
            ok = True
        except CheckFailure as exc:
            detail = str(exc)
            ok = False
        except Exception as exc:  # noqa: BLE001 - report, keep running
            detail = f"unexpected {type(exc).__name__}: {exc}"
            ok = False
        elapsed = time.perf_counter() - start
        echo(f"[{'pass' if ok else 'FAIL'}] {name:28s} {detail} ({elapsed:.2f} s)")
        all_ok = all_ok and ok
    echo(f"{'all checks passed' if all_ok else 'FAILURES PRESENT'} "
         f"in {time.perf_counter() - total:.2f} s")
    return all_ok
