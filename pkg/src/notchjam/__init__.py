"""Spectrally notched noise waveforms.

Two designers produce noise-like jamming waveforms with controlled spectral
notches: orthogonal projection (perfect nulls, :class:`ProjectionNotcher`)
and block-wise constrained least squares (per-band energy caps,
:class:`QcqpNotcher`). Helpers measure the result (Welch PSD, notch depth,
autocorrelation), model DAC quantization and simulate coexistence with a
friendly link and a hostile radar.
"""

__version__ = "0.1.0"

from .analysis import autocorrelation, notch_depth, psll, spectrogram, welch_psd
from .coexistence import ScenarioConfig, run_scenario
from .projection import ProjectionNotcher, generate_reference, project_notch
from .quantization import UniformQuantizer, full_scale_normalize, quantization_report, quantize
from .qcqp import InfeasibleError, QcqpNotcher, SolverConfig, design_blockwise
from .spectral import FrequencyGrid, StopBand, bands_from_hz, check_constraints, steering_vector

__all__ = [
    "__version__",
    "StopBand",
    "FrequencyGrid",
    "bands_from_hz",
    "steering_vector",
    "check_constraints",
    "generate_reference",
    "project_notch",
    "ProjectionNotcher",
    "SolverConfig",
    "InfeasibleError",
    "design_blockwise",
    "QcqpNotcher",
    "welch_psd",
    "spectrogram",
    "autocorrelation",
    "psll",
    "notch_depth",
    "quantize",
    "full_scale_normalize",
    "quantization_report",
    "UniformQuantizer",
    "ScenarioConfig",
    "run_scenario",
]
