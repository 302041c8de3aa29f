"""Physical-layer simulator of a time-stretch electro-optical neural network.

A dispersive fiber stretches each laser pulse until its rectangular
spectrum becomes a flat temporal carrier; two intensity modulators write
a weight row and an activation vector onto its slices; a compensating
fiber recompresses the pulse and a narrowband photodiode integrates it,
so each slot's energy reads out one inner product.  This package models
that chain sample by sample, trains the reference digit classifier it
executes, and measures how quantization, bandwidth limits, and amplifier
and detector noise degrade its accuracy.
"""

from .config import SimulationConfig, load_config, parse_config_text, validate_config
from .signal_core import (
    SampledEnvelope,
    SpectrumView,
    TimeGrid,
    energy,
    energy_in_window,
    from_spectrum,
    to_spectrum,
)

__all__ = [
    "SimulationConfig",
    "load_config",
    "parse_config_text",
    "validate_config",
    "SampledEnvelope",
    "SpectrumView",
    "TimeGrid",
    "energy",
    "energy_in_window",
    "from_spectrum",
    "to_spectrum",
]

__version__ = "0.1.0"
