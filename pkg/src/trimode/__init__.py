"""Simulator and analysis toolkit for three-mode optomechanical interference.

One optical mode couples to two mechanical modes through phase-programmed
drive tones; the package integrates the semiclassical coupled-oscillator
equations over pulse protocols, models heterodyne detection, and extracts
decay rates, interference fringes and damping-suppression metrics.
"""

from .analysis import (
    DampingPrediction,
    FitResult,
    FringeResult,
    fit_exponential,
    fit_exponential_samples,
    fit_fringe,
    fit_ring_in,
    omit_spectrum,
    predicted_total_damping,
    steady_state_response,
    suppression_metric,
)
from .config import RunConfig, config_from_dict, load_config
from .detection import (
    DetectionConfig,
    Trace,
    beat_envelope,
    demodulate,
    energy_in_window,
    guard_time,
    intensity,
    output_field,
    period_average,
)
from .dynamics import (
    IntegratorOptions,
    StateTrace,
    StateVector,
    convergence_report,
    derivative,
    integrate,
    integrate_adiabatic,
)
from .errors import (
    AdiabaticApplicabilityError,
    ConfigError,
    DivergenceError,
    FitConvergenceError,
    FitRejectedError,
    FringeRankError,
    StabilityError,
    TrimodeError,
)
from .model import (
    FULL,
    RESONANT_ONLY,
    SuperpositionPair,
    SystemParams,
    bright_dark_compose,
    bright_dark_decompose,
    cooperativity,
    coupling_from_cooperativity,
    make_params,
)
from .sequence import (
    PulseSequence,
    Stage,
    preset_dark_decay,
    preset_interference,
    preset_two_mode,
)

__version__ = "0.1.0"
