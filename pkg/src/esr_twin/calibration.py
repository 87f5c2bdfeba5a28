"""Objective-lens calibration: excitation (%) <-> B0 (mT) <-> frequency (GHz)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationRangeError, DomainError
from .physics import DEFAULT_CONSTANTS, PhysicalConstants

__all__ = ["LensCalibration", "LOW_MAG", "STANDARD_MODE", "excitation_to_field",
           "field_to_excitation", "excitation_to_frequency", "quantize_excitation"]

# rounding noise from float division; far below any reachable excitation step
_QUANT_DIGITS = 12


@dataclass(frozen=True)
class LensCalibration:
    field_slope: float = 22.86      # mT per %
    field_offset: float = 19.14     # mT, remanence + minicondenser leakage
    freq_slope: float = 0.64        # GHz per %
    freq_offset: float = 0.536      # GHz
    min_step: float = 0.0001        # %
    max_field: float = 800.0        # mT

    def __post_init__(self):
        if self.field_slope <= 0 or self.freq_slope <= 0:
            raise DomainError("calibration slopes must be positive")
        if self.min_step <= 0:
            raise DomainError("min_step must be positive")
        if self.max_field <= self.field_offset:
            raise DomainError("max_field must exceed the remanent offset")

    @property
    def implied_hz_per_tesla(self) -> float:
        """Field-to-frequency slope implied by the two lines, in Hz/T."""
        return self.freq_slope / self.field_slope * 1e12

    def implied_g_factor(self, frequency_ghz: float,
                         constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
        """g-factor that makes both lines agree at ``frequency_ghz``.

        The field line was itself derived from a reference sample, so a twin
        reproducing the frequency line exactly needs this effective g.
        """
        E = (frequency_ghz - self.freq_offset) / self.freq_slope
        B = (self.field_slope * E + self.field_offset) * 1e-3
        return frequency_ghz * 1e9 * constants.planck_h / (constants.bohr_magneton * B)

    def consistent_with(self, constants: PhysicalConstants = DEFAULT_CONSTANTS,
                        rtol: float = 0.02) -> bool:
        return abs(self.implied_hz_per_tesla / constants.hz_per_tesla - 1.0) <= rtol


LOW_MAG = LensCalibration()
# upper threshold of the objective lens in standard (high-magnification) use
STANDARD_MODE = LensCalibration(max_field=1800.0)


def excitation_to_field(E_obj, cal: LensCalibration = LOW_MAG):
    """B0 in mT for an excitation in percent."""
    E = np.asarray(E_obj, dtype=float)
    if np.any(E < 0):
        raise DomainError("excitation must be >= 0")
    B = cal.field_slope * E + cal.field_offset
    if np.any(B > cal.max_field):
        raise CalibrationRangeError(
            f"B0 = {np.max(B):.2f} mT exceeds the {cal.max_field:g} mT ceiling "
            f"(low-magnification mode reaches 0 to 0.8 T at the specimen)")
    return B if B.ndim else float(B)


def field_to_excitation(B0_mT, cal: LensCalibration = LOW_MAG):
    B = np.asarray(B0_mT, dtype=float)
    if np.any(B < cal.field_offset):
        raise CalibrationRangeError(
            f"B0 below the remanent offset of {cal.field_offset} mT cannot be reached")
    if np.any(B > cal.max_field):
        raise CalibrationRangeError(f"B0 above {cal.max_field:g} mT cannot be reached")
    E = (B - cal.field_offset) / cal.field_slope
    return E if E.ndim else float(E)


def excitation_to_frequency(E_obj, cal: LensCalibration = LOW_MAG):
    """Resonance frequency in GHz from the frequency calibration line."""
    E = np.asarray(E_obj, dtype=float)
    if np.any(E < 0):
        raise DomainError("excitation must be >= 0")
    nu = cal.freq_slope * E + cal.freq_offset
    return nu if nu.ndim else float(nu)


def quantize_excitation(E_obj, cal: LensCalibration = LOW_MAG):
    """Snap to the nearest multiple of ``min_step`` (ties to even)."""
    E = np.asarray(E_obj, dtype=float)
    if np.any(E < 0):
        raise DomainError("excitation must be >= 0")
    n = np.round(np.round(E / cal.min_step, _QUANT_DIGITS - 4))
    q = np.round(n * cal.min_step, _QUANT_DIGITS)
    return q if q.ndim else float(q)


def is_quantized(E_obj, cal: LensCalibration = LOW_MAG) -> bool:
    ratio = np.asarray(E_obj, dtype=float) / cal.min_step
    return bool(np.all(np.abs(ratio - np.round(ratio)) < 1e-6))


def step_deltas(cal: LensCalibration = LOW_MAG,
                constants: PhysicalConstants = DEFAULT_CONSTANTS) -> dict:
    """Field and frequency change for one minimal excitation step."""
    dB_T = cal.field_slope * cal.min_step * 1e-3
    return {
        "field_T": dB_T,
        "freq_from_line_Hz": cal.freq_slope * cal.min_step * 1e9,
        "freq_from_field_Hz": constants.hz_per_tesla * dB_T,
    }


