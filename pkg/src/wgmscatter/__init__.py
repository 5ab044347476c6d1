"""Exact single-photon transport through a waveguide coupled to a whispering-gallery
resonator and a two-level atom, with spectral analysis, fitting and a
time-domain cross-check."""

from .amplitudes import (AmplitudeSet, SpectrumTable, amplitudes_full, amplitudes_h0, amplitudes_wr,
                         denominator, evaluate, group_delay, spectrum, transmission)
from .analysis import (CriticalCouplingReport, PoleSet, PoleSweep, ResonanceReport, anticrossing_sweep,
                       critical_coupling_check, mirror_partner, poles, resonance_report, symmetry_check)
from .errors import (ConfigError, DegenerateCubic, DegenerateDenominator, GridTooCoarse, NegativeRate,
                     NoConvergence, NonFiniteParameter, NotSettled, ParseError, PreconditionViolated,
                     StepTooLarge, TrackingAmbiguity, UndefinedPhase, UndefinedRatio, Underdetermined,
                     UnitMissing, WGMError)
from .fitting import FitResult, MeasuredSpectrum, fit_full, fit_wr, load_spectrum, synthesize_spectrum
from .params import DerivedCouplings, SystemParams, ValidatedParams, delta_theta_of, validate
from .timedomain import (PulseSpec, ScatteringRecord, reduced_rhs, scatter_pulse, steady_state_transfer)

__version__ = "0.1.0"
