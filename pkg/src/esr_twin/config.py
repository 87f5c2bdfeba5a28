"""Run configuration: strict YAML schema, presets, and model construction.

Units at this boundary are the ones an experimentalist reads off the
instruments (GHz, mT, mm, dBm, %); everything is converted to SI when the
models are built.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
import math
from pathlib import Path
from typing import Any

import yaml

from .calibration import LensCalibration
from .errors import CalibrationRangeError, ConfigError, DomainError
from .lineshape import SHAPES, FieldInhomogeneity
from .physics import DEFAULT_CONSTANTS, PhysicalConstants, SpinSystem
from .resonator import ResonatorModel
from .sensitivity import NoiseLedger
from .sweep import (AxisRange, Experiment, LockInSettings, ModulationSettings,
                    SweepPlan)

__all__ = ["RunConfig", "load_config", "load_preset", "list_presets", "dump_config"]

_NUM = "number"
_OPT_NUM = "optional number"
_BOOL = "bool"
_STR = "str"
_NUM_LIST = "number list"
_RANGE = "optional range"
_STAGES = "stage list"
_OPT_INT = "optional int"

# block -> key -> (kind, default)
SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "constants": {
        "boltzmann_k": (_NUM, DEFAULT_CONSTANTS.boltzmann_k),
        "planck_h": (_NUM, DEFAULT_CONSTANTS.planck_h),
        "planck_hbar": (_NUM, DEFAULT_CONSTANTS.planck_hbar),
        "bohr_magneton": (_NUM, DEFAULT_CONSTANTS.bohr_magneton),
        "vacuum_permeability": (_NUM, DEFAULT_CONSTANTS.vacuum_permeability),
        "electron_g_factor": (_NUM, DEFAULT_CONSTANTS.electron_g_factor),
    },
    "spin_system": {
        "spin_density_per_m3": (_NUM, 1.5e27),
        "volume_m3": (_NUM, 3.375e-12),
        "temperature_K": (_NUM, 300.0),
        "g_factor": (_NUM, 2.0023),
        "hwhm_mT": (_NUM, 0.1),
        "shape": (_STR, "lorentzian"),
    },
    "inhomogeneity": {
        "gradient_T_per_m": (_NUM, 0.0),
        "sample_extent_um": (_NUM, 0.0),
    },
    "resonator": {
        "f_res_GHz": (_NUM, 4.5),
        "Q": (_NUM, 30.0),
        "beta": (_NUM, 1.0),
        "d_mm": (_NUM, 1.0),
        "R_ohm": (_NUM, 1.0),
        "eta": (_NUM, 0.1),
        "Z0_ohm": (_NUM, 50.0),
    },
    "calibration": {
        "field_slope_mT_per_pct": (_NUM, 22.86),
        "field_offset_mT": (_NUM, 19.14),
        "freq_slope_GHz_per_pct": (_NUM, 0.64),
        "freq_offset_GHz": (_NUM, 0.536),
        "min_step_pct": (_NUM, 0.0001),
        "max_field_mT": (_NUM, 800.0),
    },
    "modulation": {
        "f_mod_kHz": (_NUM, 101.0),
        "amplitude_mT": (_OPT_NUM, None),
        "phase_rad": (_NUM, 0.0),
    },
    "lockin": {
        "tau_s": (_NUM, 0.1),
        "reference_phase_rad": (_NUM, 0.0),
        "mixer_phase_rad": (_NUM, 0.0),
        "track_resonator_phase": (_BOOL, True),
    },
    "drive": {
        "power_dBm": (_NUM, 20.0),
    },
    "ledger": {
        "stages": (_STAGES, []),
        "coupling_efficiency": (_NUM, 1.0),
        "apply_to_noise": (_BOOL, False),
    },
    "sweep": {
        "mode": (_STR, "field"),
        "excitation_pct": (_RANGE, None),
        "frequency_GHz": (_RANGE, None),
        "drive_GHz": (_OPT_NUM, None),
        "bias_mT": (_OPT_NUM, None),
        "dwell_s": (_OPT_NUM, None),
        "noise": (_BOOL, True),
        "dc_offsets_V": (_NUM_LIST, []),
    },
    "table": {
        "fields_T": (_NUM_LIST, [0.17, 0.71, 1.8]),
        "temperatures_K": (_NUM_LIST, [300.0, 77.0, 10.0]),
        "R_ohm": (_NUM, 1.0),
        "d_mm": (_NUM, 1.0),
    },
    "budget": {
        "B0_T": (_NUM, 0.167),
        "temperature_K": (_NUM, 300.0),
        "R_ohm": (_NUM, 1.0),
        "d_mm": (_NUM, 1.0),
    },
}

TOP_LEVEL: dict[str, tuple[str, Any]] = {
    "seed": (_OPT_INT, 0),
    "output_dir": (_STR, "out"),
    "workers": (_OPT_INT, None),
}

_CHOICES = {("spin_system", "shape"): SHAPES, ("sweep", "mode"): ("field", "frequency", "2d")}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check(where: str, kind: str, value):
    if kind == _NUM:
        if not _is_number(value):
            raise ConfigError(f"{where}: expected a finite number, got {value!r}")
        return float(value)
    if kind == _OPT_NUM:
        return None if value is None else _check(where, _NUM, value)
    if kind == _OPT_INT:
        if value is None:
            return None
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind == _BOOL:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected text, got {value!r}")
        return value
    if kind == _NUM_LIST:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list of numbers")
        return [_check(f"{where}[{i}]", _NUM, v) for i, v in enumerate(value)]
    if kind == _RANGE:
        if value is None:
            return None
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping with start/stop/step")
        extra = set(value) - {"start", "stop", "step"}
        if extra:
            raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}")
        missing = {"start", "stop", "step"} - set(value)
        if missing:
            raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")
        return {k: _check(f"{where}.{k}", _NUM, value[k]) for k in ("start", "stop", "step")}
    if kind == _STAGES:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list of {{name, dB}} entries")
        out = []
        for i, st in enumerate(value):
            w = f"{where}[{i}]"
            if not isinstance(st, dict) or set(st) != {"name", "dB"}:
                raise ConfigError(f"{w}: each stage needs exactly the keys 'name' and 'dB'")
            name = _check(f"{w}.name", _STR, st["name"])
            db = _check(f"{w}.dB", _NUM, st["dB"])
            if db < 0:
                raise ConfigError(f"{w}.dB: degradation must be >= 0 dB, got {db}")
            out.append({"name": name, "dB": db})
        return out
    raise AssertionError(kind)


def _normalize(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    unknown = set(raw) - set(SCHEMA) - set(TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    out: dict[str, Any] = {}
    for key, (kind, default) in TOP_LEVEL.items():
        out[key] = _check(key, kind, raw.get(key, default))
    if out["seed"] is None or out["seed"] < 0:
        raise ConfigError("seed: must be a non-negative integer")
    if out["workers"] is not None and out["workers"] < 1:
        raise ConfigError("workers: must be >= 1")
    for block, keys in SCHEMA.items():
        given = raw.get(block) or {}
        if not isinstance(given, dict):
            raise ConfigError(f"{block}: expected a mapping")
        unknown = set(given) - set(keys)
        if unknown:
            raise ConfigError(f"{block}: unknown key(s) {sorted(unknown)}")
        norm = {}
        for key, (kind, default) in keys.items():
            value = given.get(key, copy.deepcopy(default))
            norm[key] = _check(f"{block}.{key}", kind, value)
            choices = _CHOICES.get((block, key))
            if choices and norm[key] not in choices:
                raise ConfigError(f"{block}.{key}: must be one of {list(choices)}, got {norm[key]!r}")
        out[block] = norm
    return out


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k in SCHEMA:
            out[k] = {**out[k], **v}
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class RunConfig:
    """A validated, fully defaulted configuration."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        cfg = cls(_normalize(raw))
        cfg.validate_models()
        return cfg

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_yaml(self) -> str:
        return dump_config(self.data)

    def override(self, **top) -> "RunConfig":
        """Replace top-level or dotted ``block.key`` values, revalidating."""
        raw = self.to_dict()
        for key, value in top.items():
            if "." in key:
                block, sub = key.split(".", 1)
                raw.setdefault(block, {})[sub] = value
            else:
                raw[key] = value
        return RunConfig.from_dict(raw)

    def __getitem__(self, block):
        return self.data[block]

    # -- model construction -------------------------------------------------

    def validate_models(self):
        """Build every model once so invariant violations surface as ConfigError."""
        try:
            self.constants()
            self.spins()
            self.resonator()
            self.calibration()
            self.ledger()
            self.inhomogeneity()
            ModulationSettings(**self._modulation_kwargs())
            LockInSettings(**self._lockin_kwargs())
            if self["sweep"]["excitation_pct"] or self["sweep"]["frequency_GHz"]:
                self.plan()
        except (DomainError, CalibrationRangeError) as exc:
            raise ConfigError(str(exc)) from exc

    def constants(self) -> PhysicalConstants:
        return PhysicalConstants(**self["constants"])

    def spins(self) -> SpinSystem:
        s = self["spin_system"]
        return SpinSystem(spin_density=s["spin_density_per_m3"], volume=s["volume_m3"],
                          temperature=s["temperature_K"], g_factor=s["g_factor"],
                          hwhm_linewidth=s["hwhm_mT"] * 1e-3)

    def resonator(self) -> ResonatorModel:
        r = self["resonator"]
        return ResonatorModel(center_frequency=r["f_res_GHz"] * 1e9, quality_factor=r["Q"],
                              coupling=r["beta"], coil_diameter=r["d_mm"] * 1e-3,
                              equivalent_resistance=r["R_ohm"], filling_factor=r["eta"],
                              reference_impedance=r["Z0_ohm"])

    def calibration(self) -> LensCalibration:
        c = self["calibration"]
        return LensCalibration(field_slope=c["field_slope_mT_per_pct"],
                               field_offset=c["field_offset_mT"],
                               freq_slope=c["freq_slope_GHz_per_pct"],
                               freq_offset=c["freq_offset_GHz"],
                               min_step=c["min_step_pct"], max_field=c["max_field_mT"])

    def ledger(self) -> NoiseLedger:
        g = self["ledger"]
        return NoiseLedger.from_pairs([(s["name"], s["dB"]) for s in g["stages"]],
                                      g["coupling_efficiency"])

    def inhomogeneity(self) -> FieldInhomogeneity:
        h = self["inhomogeneity"]
        return FieldInhomogeneity(h["gradient_T_per_m"], h["sample_extent_um"] * 1e-6)

    def _modulation_kwargs(self):
        m = self["modulation"]
        amp = None if m["amplitude_mT"] is None else m["amplitude_mT"] * 1e-3
        return {"frequency": m["f_mod_kHz"] * 1e3, "amplitude": amp, "phase": m["phase_rad"]}

    def _lockin_kwargs(self):
        li = self["lockin"]
        return {"time_constant": li["tau_s"], "reference_phase": li["reference_phase_rad"],
                "mixer_phase": li["mixer_phase_rad"],
                "track_resonator_phase": li["track_resonator_phase"]}

    def experiment(self) -> Experiment:
        power = 1e-3 * 10.0 ** (self["drive"]["power_dBm"] / 10.0)
        return Experiment(
            spins=self.spins(), resonator=self.resonator(), calibration=self.calibration(),
            modulation=ModulationSettings(**self._modulation_kwargs()),
            lockin=LockInSettings(**self._lockin_kwargs()), drive_power=power,
            shape=self["spin_system"]["shape"], inhomogeneity=self.inhomogeneity(),
            ledger=self.ledger() if self["ledger"]["apply_to_noise"] else None,
            dc_offsets=tuple(self["sweep"]["dc_offsets_V"]), constants=self.constants())

    def plan(self, mode: str | None = None) -> SweepPlan:
        sw = self["sweep"]
        mode = mode or sw["mode"]
        exc = sw["excitation_pct"]
        frq = sw["frequency_GHz"]
        try:
            plan = SweepPlan(
                mode=mode,
                excitation=AxisRange(**exc) if exc else None,
                frequency=AxisRange(frq["start"] * 1e9, frq["stop"] * 1e9, frq["step"] * 1e9) if frq else None,
                drive_frequency=None if sw["drive_GHz"] is None else sw["drive_GHz"] * 1e9,
                bias_field=None if sw["bias_mT"] is None else sw["bias_mT"] * 1e-3,
                dwell_time=sw["dwell_s"], rng_seed=self["seed"], noise_enabled=sw["noise"])
            plan.validate(self.calibration(), LockInSettings(**self._lockin_kwargs()))
        except (DomainError, CalibrationRangeError) as exc:
            raise ConfigError(f"sweep: {exc}") from exc
        return plan


def dump_config(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=False)


def _read_yaml(text: str, origin: str) -> dict:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{origin}: not valid YAML ({exc})") from exc
    if raw is None:
        return {}
    if isinstance(raw, dict) and "config" in raw and "software_version" in raw:
        # a run manifest; rerun exactly what produced it
        raw = raw["config"]
    if not isinstance(raw, dict):
        raise ConfigError(f"{origin}: top level must be a mapping")
    return raw


def list_presets() -> list[str]:
    files = resources.files("esr_twin.presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".yaml"))


def _preset_raw(name: str) -> dict:
    if name not in list_presets():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    text = resources.files("esr_twin.presets").joinpath(f"{name}.yaml").read_text(encoding="utf-8")
    return _read_yaml(text, f"preset {name}")


def load_preset(name: str) -> RunConfig:
    return RunConfig.from_dict(_preset_raw(name))


def load_config(path: str | Path | None = None, preset: str | None = None) -> RunConfig:
    """Preset first (if any), then the file's keys on top."""
    raw: dict = _preset_raw(preset) if preset else {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        raw = _deep_merge(raw, _read_yaml(text, str(p)))
    return RunConfig.from_dict(raw)
