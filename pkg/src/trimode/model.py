"""Physical parameters and the bright/dark superposition transform.

The system is one optical mode coupled to two mechanical modes by two
red-sideband drive tones.  All quantities here are kept in angular units
(rad/s); configuration entry points accept ordinary frequencies (Hz, the
values usually quoted as "/2pi") and convert on construction.

Conventions
-----------
* ``G[j][k]`` is the (linearized) coupling rate of drive ``k`` to
  mechanical mode ``j``; the diagonal entries are the two-photon-resonant
  couplings, the off-diagonal entries the non-resonant cross couplings.
* ``Delta`` is the optical detuning of the cavity from the signal tone,
  ``delta`` the common two-photon detuning of the resonant channels.
* Mode splitting ``delta_m = omega_m2 - omega_m1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

RESONANT_ONLY = "resonant-only"
FULL = "full"
_VARIANTS = (RESONANT_ONLY, FULL)


def cooperativity(g: float, gamma: float, kappa: float) -> float:
    """Optomechanical cooperativity C = 4 g^2 / (gamma kappa).

    ``g``, ``gamma`` and ``kappa`` may be given in any common unit (all
    angular or all ordinary frequency); the ratio is dimensionless.
    """
    if gamma <= 0.0 or kappa <= 0.0:
        raise ValueError("cooperativity requires gamma > 0 and kappa > 0")
    return 4.0 * g * g / (gamma * kappa)


def coupling_from_cooperativity(c: float, gamma: float, kappa: float) -> float:
    """Inverse of :func:`cooperativity`: g = sqrt(C gamma kappa) / 2."""
    if c < 0.0:
        raise ValueError("cooperativity must be non-negative")
    if gamma <= 0.0 or kappa <= 0.0:
        raise ValueError("coupling_from_cooperativity requires gamma > 0 and kappa > 0")
    return math.sqrt(c * gamma * kappa) / 2.0


@dataclass(frozen=True)
class SuperpositionPair:
    """Bright/dark superposition amplitudes of the two mechanical modes."""

    beta_B: complex
    beta_D: complex


def bright_dark_decompose(
    beta1: complex,
    beta2: complex,
    phi1: float,
    phi2: float,
    g1: float,
    g2: float,
) -> SuperpositionPair:
    """Map mode amplitudes onto the bright/dark superposition basis.

    beta_B = (e^{+i phi1} g1 beta1 + e^{+i phi2} g2 beta2) / N
    beta_D = (e^{-i phi2} g2 beta1 - e^{-i phi1} g1 beta2) / N

    with N = sqrt(g1^2 + g2^2).  The transform is unitary, so
    |beta_B|^2 + |beta_D|^2 = |beta1|^2 + |beta2|^2.
    """
    norm = math.hypot(g1, g2)
    if norm == 0.0:
        raise ValueError("degenerate transform: g1 and g2 are both zero")
    e1 = complex(math.cos(phi1), math.sin(phi1))
    e2 = complex(math.cos(phi2), math.sin(phi2))
    beta_b = (e1 * g1 * beta1 + e2 * g2 * beta2) / norm
    beta_d = (e2.conjugate() * g2 * beta1 - e1.conjugate() * g1 * beta2) / norm
    return SuperpositionPair(beta_b, beta_d)


def bright_dark_compose(
    pair: SuperpositionPair,
    phi1: float,
    phi2: float,
    g1: float,
    g2: float,
) -> tuple[complex, complex]:
    """Exact inverse of :func:`bright_dark_decompose` (conjugate transpose)."""
    norm = math.hypot(g1, g2)
    if norm == 0.0:
        raise ValueError("degenerate transform: g1 and g2 are both zero")
    e1 = complex(math.cos(phi1), math.sin(phi1))
    e2 = complex(math.cos(phi2), math.sin(phi2))
    beta1 = (e1.conjugate() * g1 * pair.beta_B + e2 * g2 * pair.beta_D) / norm
    beta2 = (e2.conjugate() * g2 * pair.beta_B - e1 * g1 * pair.beta_D) / norm
    return beta1, beta2


@dataclass(frozen=True)
class SystemParams:
    """All physical rates of the three-mode system, in rad/s.

    ``G`` is stored as a nested tuple ``((G11, G12), (G21, G22))`` with
    ``G[j][k]`` the coupling of drive ``k`` to mode ``j`` (0-based).
    Instances are immutable and safe to share across sweep workers.
    """

    omega_m1: float
    omega_m2: float
    gamma1: float
    gamma2: float
    kappa: float
    kappa_ext: float
    Delta: float
    delta: float
    G: tuple[tuple[float, float], tuple[float, float]]
    variant: str = RESONANT_ONLY

    def __post_init__(self):
        for name in ("omega_m1", "omega_m2", "gamma1", "gamma2", "kappa", "kappa_ext"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if self.kappa_ext > self.kappa:
            raise ValueError("kappa_ext must not exceed kappa")
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}")
        g = self.G
        if len(g) != 2 or any(len(row) != 2 for row in g):
            raise ValueError("G must be a 2x2 matrix")
        if any(x < 0.0 for row in g for x in row):
            raise ValueError("coupling rates must be non-negative")
        if self.variant == FULL and self.omega_m1 == self.omega_m2:
            raise ValueError("full variant requires omega_m1 != omega_m2")

    @property
    def delta_m(self) -> float:
        """Mechanical mode splitting omega_m2 - omega_m1 (rad/s)."""
        return self.omega_m2 - self.omega_m1

    def gamma(self, j: int) -> float:
        return self.gamma1 if j == 0 else self.gamma2

    def omega_m(self, j: int) -> float:
        return self.omega_m1 if j == 0 else self.omega_m2

    def delta_jk(self, j: int, k: int) -> float:
        """Two-photon detuning of the (mode j, drive k) channel."""
        return self.delta + (self.omega_m(k) - self.omega_m(j))

    def drive_cooperativity(self, k: int) -> float:
        """Cooperativity of drive k with its own mode, 4 G_kk^2/(gamma_k kappa)."""
        return cooperativity(self.G[k][k], self.gamma(k), self.kappa)

    @property
    def gamma_mean(self) -> float:
        return 0.5 * (self.gamma1 + self.gamma2)


def make_params(
    *,
    omega_m1_hz: float,
    omega_m2_hz: float,
    gamma1_hz: float,
    gamma2_hz: float,
    kappa_hz: float,
    kappa_ext_hz: float | None = None,
    Delta_hz: float = 0.0,
    delta_hz: float = 0.0,
    g1_hz: float | None = None,
    g2_hz: float | None = None,
    c1: float | None = None,
    c2: float | None = None,
    g12_hz: float | None = None,
    g21_hz: float | None = None,
    rho: float = 1.0,
    variant: str = RESONANT_ONLY,
) -> SystemParams:
    """Build :class:`SystemParams` from ordinary-frequency (Hz) values.

    Each drive takes exactly one of a coupling rate (``g*_hz``) or a
    cooperativity (``c*``); cooperativities convert through the drive's own
    mechanical damping rate.  Unless given explicitly, the cross couplings
    default to ``G21 = rho * G11`` and ``G12 = G22 / rho`` (they only enter
    the ``full`` variant), and ``kappa_ext`` defaults to critical coupling
    ``kappa / 2``.
    """
    if (g1_hz is None) == (c1 is None):
        raise ValueError("specify exactly one of g1_hz or c1")
    if (g2_hz is None) == (c2 is None):
        raise ValueError("specify exactly one of g2_hz or c2")
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if g1_hz is None:
        g1_hz = coupling_from_cooperativity(c1, gamma1_hz, kappa_hz)
    if g2_hz is None:
        g2_hz = coupling_from_cooperativity(c2, gamma2_hz, kappa_hz)
    if g21_hz is None:
        g21_hz = rho * g1_hz
    if g12_hz is None:
        g12_hz = g2_hz / rho
    if kappa_ext_hz is None:
        kappa_ext_hz = kappa_hz / 2.0
    return SystemParams(
        omega_m1=TWO_PI * omega_m1_hz,
        omega_m2=TWO_PI * omega_m2_hz,
        gamma1=TWO_PI * gamma1_hz,
        gamma2=TWO_PI * gamma2_hz,
        kappa=TWO_PI * kappa_hz,
        kappa_ext=TWO_PI * kappa_ext_hz,
        Delta=TWO_PI * Delta_hz,
        delta=TWO_PI * delta_hz,
        G=((TWO_PI * g1_hz, TWO_PI * g12_hz), (TWO_PI * g21_hz, TWO_PI * g2_hz)),
        variant=variant,
    )
