"""Top-down synthetic SISO/MIMO power line channel models: fit, generate, measure, validate."""

from plc_synth.data_model import ChannelEnsemble, FrequencyGrid, MimoChannelEnsemble
from plc_synth.generator import fit_mimo, fit_siso, generate_mimo, generate_siso
from plc_synth.metrics import compute_metrics
from plc_synth.validation import validate_ensembles

__version__ = "0.1.0"

__all__ = [
    "ChannelEnsemble",
    "FrequencyGrid",
    "MimoChannelEnsemble",
    "compute_metrics",
    "fit_mimo",
    "fit_siso",
    "generate_mimo",
    "generate_siso",
    "validate_ensembles",
]
