"""Lumped model of the impedance-matched loop-gap microresonator.

The reflection coefficient follows the usual one-port form

    Gamma = (beta - 1 - i Q delta) / (beta + 1 + i Q delta),
    delta = nu / f_res - f_res / nu,

with Q the unloaded quality factor and beta the coupling (1 = matched).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .physics import DEFAULT_CONSTANTS, PhysicalConstants, unitary_field

__all__ = ["ResonatorModel", "detuning", "reflection_coefficient", "b1_field",
           "signal_perturbation", "susceptibility_gain", "absorption_phase"]


@dataclass(frozen=True)
class ResonatorModel:
    center_frequency: float = 4.5e9
    quality_factor: float = 30.0
    coupling: float = 1.0
    coil_diameter: float = 1e-3
    equivalent_resistance: float = 1.0
    filling_factor: float = 0.1
    reference_impedance: float = 50.0

    def __post_init__(self):
        if self.center_frequency <= 0 or self.quality_factor <= 0 or self.coupling <= 0:
            raise DomainError("f_res, Q and beta must be positive")
        if not 0 < self.filling_factor <= 1:
            raise DomainError("filling factor must lie in (0, 1]")
        if self.equivalent_resistance < 0:
            raise DomainError("equivalent resistance must be >= 0")
        if self.coil_diameter <= 0 or self.reference_impedance <= 0:
            raise DomainError("coil diameter and Z0 must be positive")


def detuning(nu, model: ResonatorModel):
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0):
        raise DomainError("frequency must be > 0")
    f0 = model.center_frequency
    d = nu / f0 - f0 / nu
    return d if d.ndim else float(d)


def reflection_coefficient(nu, model: ResonatorModel):
    x = model.quality_factor * detuning(nu, model)
    b = model.coupling
    return (b - 1 - 1j * x) / (b + 1 + 1j * x)


def b1_field(power, model: ResonatorModel, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Rotating-frame drive amplitude B1 (T) at resonance for incident power (W).

    Coil current I = sqrt(2 beta/(1+beta)^2 * 4P/R); the linear field B_u I
    splits into two counter-rotating halves, only one of which drives the spins.
    """
    if np.any(np.asarray(power) < 0):
        raise DomainError("power must be >= 0")
    R = model.equivalent_resistance
    if R == 0:
        if np.all(np.asarray(power) == 0):
            return 0.0 * power
        raise DomainError("zero coil resistance makes the drive current singular")
    b = model.coupling
    current = np.sqrt(2.0 * b / (1.0 + b) ** 2 * 4.0 * power / R)
    return 0.5 * unitary_field(model.coil_diameter, constants) * current


def susceptibility_gain(nu, model: ResonatorModel):
    """d Gamma / d chi for a coil inductance scaled by (1 + eta chi).

    Susceptibility uses chi = chi' - i chi'' (chi'' > 0 absorbs).
    At nu = f_res this is -2 i eta Q beta / (1 + beta)^2.
    """
    nu = np.asarray(nu, dtype=float)
    b = model.coupling
    Q = model.quality_factor
    x = Q * detuning(nu, model)
    return (-2j * model.filling_factor * Q * b * (nu / model.center_frequency)
            / (1.0 + b + 1j * x) ** 2)


def signal_perturbation(chi, model: ResonatorModel, nu=None):
    """First-order change in Gamma caused by sample susceptibility ``chi``."""
    if nu is None:
        nu = model.center_frequency
    return susceptibility_gain(nu, model) * chi


def absorption_phase(nu, model: ResonatorModel):
    """Mixer phase that puts pure absorption on the positive real axis."""
    return np.angle(-1j * susceptibility_gain(nu, model))
