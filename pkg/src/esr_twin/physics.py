"""Physical constants and spin-ensemble physics.

Everything here is SI. Functions accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
import math

import numpy as np
from scipy import constants as sc

from .errors import DomainError

__all__ = [
    "PhysicalConstants",
    "SpinSystem",
    "DEFAULT_CONSTANTS",
    "resonance_frequency",
    "resonance_field",
    "zeeman_splitting",
    "curie_magnetization",
    "boltzmann_polarization",
    "unitary_field",
    "johnson_noise_density",
]


@dataclass(frozen=True)
class PhysicalConstants:
    boltzmann_k: float = sc.k
    planck_h: float = sc.h
    planck_hbar: float = sc.hbar
    bohr_magneton: float = sc.physical_constants["Bohr magneton"][0]
    vacuum_permeability: float = sc.mu_0
    electron_g_factor: float = 2.0023

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise DomainError(f"{f.name} must be positive")

    @property
    def gyromagnetic_ratio(self) -> float:
        """gamma = g * mu_B / hbar in rad/(s T)."""
        return self.electron_g_factor * self.bohr_magneton / self.planck_hbar

    @property
    def hz_per_tesla(self) -> float:
        return self.electron_g_factor * self.bohr_magneton / self.planck_h

    def with_g(self, g: float) -> "PhysicalConstants":
        return replace(self, electron_g_factor=g)


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class SpinSystem:
    """Paramagnetic sample: density in spins/m^3, volume in m^3, HWHM in T."""

    spin_density: float
    volume: float
    temperature: float
    g_factor: float = 2.0023
    hwhm_linewidth: float = 1e-4

    def __post_init__(self):
        for name in ("spin_density", "volume", "temperature", "g_factor", "hwhm_linewidth"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"SpinSystem.{name} must be positive and finite, got {value}")
        if not math.isfinite(self.total_spins):
            raise DomainError("total spin count is not finite")

    @property
    def total_spins(self) -> float:
        return self.spin_density * self.volume

    def constants(self, base: PhysicalConstants = DEFAULT_CONSTANTS) -> PhysicalConstants:
        return base.with_g(self.g_factor)


def _check_nonneg_field(B0):
    if np.any(np.asarray(B0) < 0):
        raise DomainError("B0 must be >= 0")


def _check_temperature(T):
    if np.any(np.asarray(T) <= 0):
        raise DomainError("temperature must be > 0")


def resonance_frequency(B0, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Spin-flip frequency in Hz for a bias field ``B0`` in T."""
    _check_nonneg_field(B0)
    return constants.hz_per_tesla * B0


def resonance_field(frequency, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Inverse of :func:`resonance_frequency`."""
    if np.any(np.asarray(frequency) < 0):
        raise DomainError("frequency must be >= 0")
    return frequency / constants.hz_per_tesla


def zeeman_splitting(B0, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    _check_nonneg_field(B0)
    return constants.electron_g_factor * constants.bohr_magneton * B0


def curie_magnetization(system: SpinSystem, B0, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Equilibrium magnetization M0 in A/m for a spin-1/2 ensemble.

    M0 = N gamma^2 hbar^2 B0 / (4 k_B T), with gamma built from the sample's
    own g-factor so frequency and magnetization stay consistent.
    """
    _check_nonneg_field(B0)
    _check_temperature(system.temperature)
    c = system.constants(constants)
    gamma = c.gyromagnetic_ratio
    return (system.spin_density * gamma**2 * c.planck_hbar**2 * B0
            / (4.0 * c.boltzmann_k * system.temperature))


def boltzmann_polarization(B0, T, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Two-level population difference tanh(g mu_B B0 / 2 k_B T)."""
    _check_nonneg_field(B0)
    _check_temperature(T)
    x = zeeman_splitting(B0, constants) / (2.0 * constants.boltzmann_k * np.asarray(T, dtype=float))
    return np.tanh(x) if np.ndim(x) else math.tanh(float(x))


def unitary_field(coil_diameter, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Field per ampere at the centre of a one-turn loop, approximated as mu0/d."""
    if np.any(np.asarray(coil_diameter) <= 0):
        raise DomainError("coil diameter must be > 0")
    return constants.vacuum_permeability / coil_diameter


def johnson_noise_density(R, T, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Thermal voltage noise sqrt(4 k_B T R) in V/sqrt(Hz)."""
    _check_temperature(T)
    if np.any(np.asarray(R) < 0):
        raise DomainError("resistance must be >= 0")
    return np.sqrt(4.0 * constants.boltzmann_k * T * R)
