"""Digital twin of a CW electron-spin-resonance spectrometer inside a TEM."""

__version__ = "0.1.0"

from .calibration import (LensCalibration, excitation_to_field, excitation_to_frequency,
                          field_to_excitation, quantize_excitation)
from .lineshape import FieldInhomogeneity, LineshapeParams
from .physics import PhysicalConstants, SpinSystem
from .resonator import ResonatorModel
from .sensitivity import NoiseLedger, REFERENCE_LEDGER, spin_sensitivity

__all__ = [
    "__version__", "LensCalibration", "excitation_to_field", "excitation_to_frequency",
    "field_to_excitation", "quantize_excitation", "FieldInhomogeneity", "LineshapeParams",
    "PhysicalConstants", "SpinSystem", "ResonatorModel", "NoiseLedger", "REFERENCE_LEDGER",
    "spin_sensitivity",
]
