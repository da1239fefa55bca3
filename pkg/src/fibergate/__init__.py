"""Simulator of a controlled-phase gate between two atoms in fiber-linked
optical cavities.

Two regimes of the same physical gate: a short-distance regime where the
whole chain adiabatically follows a driven dark state and the conditional
phase is a dynamical phase, and a long-distance regime where a shaped single
photon is emitted, conditionally reflected, and reabsorbed.
"""
from ._kernels import BACKEND as kernel_backend
from .params import ParameterSet, PulseConfig, Regime, RegimeTag, classify_regime, load_params, validate

__version__ = "0.1.0"

__all__ = [
    "ParameterSet",
    "PulseConfig",
    "Regime",
    "RegimeTag",
    "classify_regime",
    "kernel_backend",
    "load_params",
    "validate",
    "__version__",
]
