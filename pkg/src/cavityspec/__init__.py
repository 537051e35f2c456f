"""Weak-field transmission and fluorescence-into-the-mode spectra of N
two-level atoms in a driven cavity, checked against a master-equation
steady state."""

from .params import (
    DerivedParams,
    DriveSpec,
    InvalidRateError,
    SystemRates,
    cavity_emission_fraction,
    derive_params,
    enhanced_emission_rate,
    preset,
)
from .weakfield import (
    PeakReport,
    SpectrumResult,
    WeakFieldPoint,
    find_peaks_numeric,
    omega_X,
    omega_xp,
    resonant_curves,
    response,
    spectrum,
    split_thresholds,
)

__version__ = "0.1.0"
