"""Steady-state CW susceptibility lineshapes in field units.

Conventions: ``chi = chi' - i chi''`` with chi'' >= 0 the absorption. The
dispersion carries the sign of the Hilbert pair, so for a Lorentzian
chi' = chi0 dB (B_res - B) / ((B - B_res)^2 + dB^2).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy import optimize, special

from .errors import DomainError
from .physics import (DEFAULT_CONSTANTS, PhysicalConstants, SpinSystem,
                      curie_magnetization)

__all__ = [
    "LineshapeParams", "FieldInhomogeneity", "chi_absorption", "chi_dispersion",
    "chi_complex", "derivative_absorption", "derivative_dispersion", "pp_linewidth",
    "hwhm_from_pp", "broadened_absorption", "broadened_dispersion",
    "broadened_complex", "broadened_pp_linewidth", "params_from_spins",
]

SHAPES = ("lorentzian", "gaussian")
_LN2 = math.log(2.0)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


@dataclass(frozen=True)
class LineshapeParams:
    center_field: float
    hwhm: float
    chi0: float = 1.0
    shape: str = "lorentzian"

    def __post_init__(self):
        if not self.hwhm > 0:
            raise DomainError("hwhm must be > 0")
        if self.shape not in SHAPES:
            raise DomainError(f"unknown lineshape {self.shape!r}; expected one of {SHAPES}")

    def at(self, center_field: float) -> "LineshapeParams":
        return replace(self, center_field=center_field)


@dataclass(frozen=True)
class FieldInhomogeneity:
    """Linear field gradient (T/m) across a sample of given extent (m)."""

    gradient: float = 0.0
    sample_extent: float = 0.0

    def __post_init__(self):
        if self.sample_extent < 0:
            raise DomainError("sample extent must be >= 0")

    @property
    def spread(self) -> float:
        """Full width of the uniform field-offset distribution, in T."""
        return abs(self.gradient) * self.sample_extent


def params_from_spins(system: SpinSystem, center_field: float, shape: str = "lorentzian",
                      constants: PhysicalConstants = DEFAULT_CONSTANTS) -> LineshapeParams:
    """Peak absorption from Curie magnetization: chi''_max = mu0 M0 / (2 dB)."""
    M0 = curie_magnetization(system, center_field, constants)
    chi0 = constants.vacuum_permeability * M0 / (2.0 * system.hwhm_linewidth)
    return LineshapeParams(center_field, system.hwhm_linewidth, chi0, shape)


def _u(B, p):
    return (np.asarray(B, dtype=float) - p.center_field) / p.hwhm


def chi_absorption(B, p: LineshapeParams):
    u = _u(B, p)
    if p.shape == "lorentzian":
        return p.chi0 / (1.0 + u * u)
    return p.chi0 * np.exp(-_LN2 * u * u)


def chi_dispersion(B, p: LineshapeParams):
    u = _u(B, p)
    if p.shape == "lorentzian":
        return -p.chi0 * u / (1.0 + u * u)
    s = math.sqrt(_LN2)
    return -p.chi0 * (2.0 / math.sqrt(math.pi)) * special.dawsn(s * u)


def chi_complex(B, p: LineshapeParams):
    return chi_dispersion(B, p) - 1j * chi_absorption(B, p)


def derivative_absorption(B, p: LineshapeParams):
    u = _u(B, p)
    if p.shape == "lorentzian":
        return -2.0 * p.chi0 * u / (p.hwhm * (1.0 + u * u) ** 2)
    return -2.0 * _LN2 * u / p.hwhm * p.chi0 * np.exp(-_LN2 * u * u)


def derivative_dispersion(B, p: LineshapeParams):
    u = _u(B, p)
    if p.shape == "lorentzian":
        return -p.chi0 * (1.0 - u * u) / (p.hwhm * (1.0 + u * u) ** 2)
    s = math.sqrt(_LN2)
    x = s * u
    # D'(x) = 1 - 2 x D(x)
    return -p.chi0 * (2.0 / math.sqrt(math.pi)) * s / p.hwhm * (1.0 - 2.0 * x * special.dawsn(x))


def _pp_factor(shape: str) -> float:
    if shape == "lorentzian":
        return 2.0 / math.sqrt(3.0)
    return 2.0 / math.sqrt(2.0 * _LN2)


def pp_linewidth(p: LineshapeParams, axis: str = "field",
                 constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Peak-to-peak width of the derivative line, in T or Hz."""
    width = _pp_factor(p.shape) * p.hwhm
    if axis == "field":
        return width
    if axis == "frequency":
        return width * constants.hz_per_tesla
    raise ValueError(f"axis must be 'field' or 'frequency', not {axis!r}")


def hwhm_from_pp(width: float, axis: str = "frequency", shape: str = "lorentzian",
                 constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    if axis == "frequency":
        width = width / constants.hz_per_tesla
    elif axis != "field":
        raise ValueError(f"axis must be 'field' or 'frequency', not {axis!r}")
    return width / _pp_factor(shape)


def _average_over_spread(func, B, p, W):
    B = np.asarray(B, dtype=float)
    offsets = 0.5 * W * _GL_NODES
    vals = func(B[..., None] - offsets, p)
    return 0.5 * np.sum(vals * _GL_WEIGHTS, axis=-1)


def broadened_absorption(B, p: LineshapeParams, inhom: FieldInhomogeneity):
    """chi'' averaged over a uniform spread of local fields."""
    W = inhom.spread
    if W == 0.0:
        return chi_absorption(B, p)
    x = np.asarray(B, dtype=float) - p.center_field
    h = 0.5 * W
    if p.shape == "lorentzian":
        return p.chi0 * p.hwhm / W * (np.arctan((x + h) / p.hwhm) - np.arctan((x - h) / p.hwhm))
    a = math.sqrt(_LN2) / p.hwhm
    return p.chi0 * math.sqrt(math.pi) / (2.0 * a * W) * (special.erf(a * (x + h)) - special.erf(a * (x - h)))


def broadened_dispersion(B, p: LineshapeParams, inhom: FieldInhomogeneity):
    W = inhom.spread
    if W == 0.0:
        return chi_dispersion(B, p)
    if p.shape == "lorentzian":
        x = np.asarray(B, dtype=float) - p.center_field
        h = 0.5 * W
        d2 = p.hwhm * p.hwhm
        return -p.chi0 * p.hwhm / (2.0 * W) * np.log(((x + h) ** 2 + d2) / ((x - h) ** 2 + d2))
    return _average_over_spread(chi_dispersion, B, p, W)


def broadened_complex(B, p: LineshapeParams, inhom: FieldInhomogeneity):
    return broadened_dispersion(B, p, inhom) - 1j * broadened_absorption(B, p, inhom)


def broadened_derivative(B, p: LineshapeParams, inhom: FieldInhomogeneity):
    """Exact derivative of the uniformly broadened absorption."""
    W = inhom.spread
    if W == 0.0:
        return derivative_absorption(B, p)
    B = np.asarray(B, dtype=float)
    return (chi_absorption(B + 0.5 * W, p) - chi_absorption(B - 0.5 * W, p)) / W


def broadened_pp_linewidth(p: LineshapeParams, inhom: FieldInhomogeneity) -> float:
    """Peak-to-peak width in T of the broadened derivative line."""
    W = inhom.spread
    if W == 0.0:
        return pp_linewidth(p)
    # the derivative is odd about the centre; its maximum sits below it, where
    # the second derivative (a difference of first derivatives) changes sign
    h = 0.5 * W
    c = p.center_field
    # solve in offsets from the centre to keep full relative precision
    x = optimize.brentq(lambda o: derivative_absorption(c + o + h, p) - derivative_absorption(c + o - h, p),
                        -(h + 10.0 * p.hwhm), 0.0, xtol=p.hwhm * 1e-15)
    return -2.0 * x
