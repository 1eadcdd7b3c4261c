"""zpfsim: a stochastic zeropoint-field model of parametric down conversion
with threshold photodetection, verified against analytic gaussian laws and
a CHSH harness."""

__version__ = "0.1.0"

from .field import FieldState, Mode, evaluate_field, sample_vacuum
from .pdc import PhaseMatchedPairs, PumpSpec, apply_pdc, mean_signal_intensity
from .optics import (
    GeometrySpec,
    LensSpec,
    beam_splitter,
    coherence_ok,
    lens_gain,
    polarization_rotator,
    ring_radius,
)
from .detection import (
    BivariateIntensityDist,
    DetectorSpec,
    EffectiveIntensityDist,
    effective_intensity,
    empirical_corr,
    filtered_field,
    p_joint,
    p_single,
    q_model,
    q_standard,
    rho_signal,
    rho_vacuum,
)
from .analysis import (
    ChshResult,
    RegimeReport,
    TradeoffReport,
    chsh_scan,
    classify_regime,
    min_rate_bound,
    tradeoff_report,
)
from .engine import DetectionResult, Estimate, mc_detect
from .scenarios import (
    Scenario,
    chsh_scenario,
    make_matched_detector,
    pdc_scenario,
    vacuum_scenario,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .runner import RunRecord, emit, run
from .units import UnitSystem
