"""Discrete time-frequency analysis on periodic grids.

Short-time Fourier transforms, frequency-uniform decompositions, weighted
and Gevrey modulation norms in the log domain, products and superposition
operators, and a spectral wave propagator.
"""

from .grid import GridFunction, GridSpec, SpectralFunction, forward_transform, inverse_transform, lp_norm, make_grid
from .norms import LogMagnitude, NormParams, WeightSpec, modulation_norm_decomp, modulation_norm_stft
from .stft import Window, gaussian_window, istft, stft
from .decomposition import build_sigma

__version__ = "0.1.0"

__all__ = [
    "GridFunction", "GridSpec", "SpectralFunction", "forward_transform", "inverse_transform", "lp_norm",
    "make_grid", "LogMagnitude", "NormParams", "WeightSpec", "modulation_norm_decomp", "modulation_norm_stft",
    "Window", "gaussian_window", "istft", "stft", "build_sigma",
]
