"""Spin-sensitivity budget for a microcoil CW detector.

The chain is: induced voltage from reciprocity -> SNR against the coil's
Johnson noise (with the conventional factor 3) -> minimum detectable spins
per sqrt(Hz). A dB ledger then degrades the ideal figure stage by stage.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
import io
import math
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .physics import (DEFAULT_CONSTANTS, PhysicalConstants, SpinSystem,
                      curie_magnetization, johnson_noise_density, unitary_field)

__all__ = [
    "SensitivityInputs", "LedgerStage", "NoiseLedger", "SensitivityEstimate",
    "REFERENCE_LEDGER", "max_induced_voltage", "snr", "spin_sensitivity",
    "constructive_sensitivity", "sensitivity_table", "table_to_csv",
    "apply_ledger", "measured_sensitivity", "lockin_enbw",
]


@dataclass(frozen=True)
class SensitivityInputs:
    spins: SpinSystem
    B0: float
    R: float
    coil_diameter: float
    B1: float
    bandwidth: float

    def __post_init__(self):
        for name in ("B0", "R", "coil_diameter", "B1", "bandwidth"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.B1 > self.spins.hwhm_linewidth * (1 + 1e-12):
            raise DomainError("B1 may not exceed the HWHM linewidth (saturation regime)")

    @property
    def temperature(self) -> float:
        return self.spins.temperature


@dataclass(frozen=True)
class LedgerStage:
    name: str
    degradation_db: float

    def __post_init__(self):
        if not self.degradation_db >= 0:
            raise DomainError(f"stage {self.name!r}: degradation must be >= 0 dB")


@dataclass(frozen=True)
class NoiseLedger:
    stages: tuple[LedgerStage, ...] = ()
    coupling_efficiency: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not 0 < self.coupling_efficiency <= 1:
            raise DomainError("coupling efficiency must lie in (0, 1]")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, float]], coupling_efficiency: float = 1.0):
        return cls(tuple(LedgerStage(n, float(db)) for n, db in pairs), coupling_efficiency)

    @property
    def total_db(self) -> float:
        return float(sum(s.degradation_db for s in self.stages))

    def amplitude_factor(self) -> float:
        return 10.0 ** (self.total_db / 20.0)

    def without(self, name: str) -> "NoiseLedger":
        return NoiseLedger(tuple(s for s in self.stages if s.name != name), self.coupling_efficiency)

    def replace_stage(self, name: str, degradation_db: float) -> "NoiseLedger":
        return NoiseLedger(tuple(LedgerStage(s.name, degradation_db) if s.name == name else s
                                 for s in self.stages), self.coupling_efficiency)


REFERENCE_LEDGER = NoiseLedger.from_pairs([
    ("directional coupler", 10.0),
    ("high pass filter", 0.5),
    ("LNA", 1.2),
    ("mixer", 5.5),
    ("bias tee", 0.2),
    ("impedance mismatch", 1.5),
    ("lock-in input noise", 3.0),
])


@dataclass(frozen=True)
class SensitivityEstimate:
    n_min: float
    snr: float = math.nan
    xi_max: float = math.nan
    mode: str = "theoretical"


def lockin_enbw(time_constant: float) -> float:
    """Equivalent noise bandwidth of a first-order RC filter, 1/(4 tau)."""
    if time_constant <= 0:
        raise DomainError("time constant must be > 0")
    return 1.0 / (4.0 * time_constant)


def max_induced_voltage(inp: SensitivityInputs, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """xi_max = gamma B1 M0 (B0/dB) B_u V_s, in volts."""
    c = inp.spins.constants(constants)
    dB = inp.spins.hwhm_linewidth
    if dB == 0:
        raise DomainError("zero linewidth makes the induced voltage singular")
    M0 = curie_magnetization(inp.spins, inp.B0, constants)
    Bu = unitary_field(inp.coil_diameter, c)
    return c.gyromagnetic_ratio * inp.B1 * M0 * (inp.B0 / dB) * Bu * inp.spins.volume


def snr(inp: SensitivityInputs, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    if inp.bandwidth <= 0:
        raise DomainError("bandwidth must be > 0")
    noise = johnson_noise_density(inp.R, inp.temperature, constants) * math.sqrt(inp.bandwidth)
    return max_induced_voltage(inp, constants) / (3.0 * noise)


def spin_sensitivity(B0, T, R, coil_diameter, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Closed-form minimum detectable spins per sqrt(Hz).

    N_min = 24 k^(3/2) / (gamma^3 hbar^2) * T^(3/2) sqrt(R) / (B_u B0^2)

    Vectorises over numpy inputs.
    """
    B0, T, R, d = (np.asarray(v, dtype=float) for v in (B0, T, R, coil_diameter))
    if np.any(B0 <= 0) or np.any(T <= 0) or np.any(R <= 0) or np.any(d <= 0):
        raise DomainError("B0, T, R and d must all be positive")
    k = constants.boltzmann_k
    gamma = constants.gyromagnetic_ratio
    Bu = unitary_field(d, constants)
    out = 24.0 * k**1.5 / (gamma**3 * constants.planck_hbar**2) * T**1.5 * np.sqrt(R) / (Bu * B0**2)
    return out if out.ndim else float(out)


def constructive_sensitivity(inp: SensitivityInputs, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> SensitivityEstimate:
    """N V_s / (SNR sqrt(df)) evaluated through the explicit voltage and noise."""
    xi = max_induced_voltage(inp, constants)
    s = snr(inp, constants)
    n_min = inp.spins.total_spins / (s * math.sqrt(inp.bandwidth))
    return SensitivityEstimate(n_min=n_min, snr=s, xi_max=xi, mode="theoretical")


def sensitivity_table(fields: Sequence[float], temps: Sequence[float], R: float = 1.0,
                      coil_diameter: float = 1e-3,
                      constants: PhysicalConstants = DEFAULT_CONSTANTS) -> np.ndarray:
    """Grid of N_min with fields along rows and temperatures along columns."""
    if len(fields) == 0 or len(temps) == 0:
        raise DomainError("sensitivity table needs at least one field and one temperature")
    B, T = np.meshgrid(np.asarray(fields, float), np.asarray(temps, float), indexing="ij")
    return np.asarray(spin_sensitivity(B, T, R, coil_diameter, constants))


def table_to_csv(fields, temps, grid, full_precision: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["B0_T"] + [f"{t:g}" for t in temps])
    fmt = "{:.17g}" if full_precision else "{:.1e}"
    for b, row in zip(fields, grid):
        w.writerow([f"{b:g}"] + [fmt.format(v) for v in row])
    return buf.getvalue()


def apply_ledger(n_min: float, ledger: NoiseLedger) -> float:
    """Degrade an ideal sensitivity; dB are amplitude-SNR losses."""
    return n_min * ledger.amplitude_factor() / ledger.coupling_efficiency


def measured_sensitivity(total_spins: float, snr_value: float, bandwidth: float) -> float:
    if total_spins <= 0 or snr_value <= 0 or bandwidth <= 0:
        raise DomainError("spins, SNR and bandwidth must be positive")
    return total_spins / (snr_value * math.sqrt(bandwidth))


def cumulative_ledger(n_min: float, ledger: NoiseLedger) -> list[dict]:
    """Per-stage rows with running dB total and the degraded N_min after each."""
    rows = []
    running = 0.0
    for stage in ledger.stages:
        running += stage.degradation_db
        rows.append({"stage": stage.name, "dB": stage.degradation_db,
                     "cumulative_dB": running,
                     "n_min": n_min * 10.0 ** (running / 20.0)})
    return rows
