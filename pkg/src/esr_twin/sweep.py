"""Virtual CW experiment: field, frequency and 2D sweeps with lock-in readout.

The 4.5 GHz carrier is handled as a complex baseband envelope

    V(t) = V_drive * (Gamma(nu) + dGamma(chi(B0 + B_m cos(w_m t)))) + noise

which the first mixer projects onto a real detector voltage with the MW
phase. The lock-in then multiplies by the modulation reference, low-pass
filters with time constant tau and reports the settled output.

Sampling is fixed at 32 samples per modulation period, so the noise-free
detector signal is exactly periodic and only one period is evaluated per
point; the filter still runs over every sample of the dwell time.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import logging
import math
import os
import warnings

import numpy as np

from . import __version__
from .calibration import LOW_MAG, LensCalibration, excitation_to_field, is_quantized
from .errors import ConfigError, DomainError, NoLineFound
from .kernels import lockin_filter
from .lineshape import FieldInhomogeneity, LineshapeParams, broadened_complex, params_from_spins
from .physics import (DEFAULT_CONSTANTS, PhysicalConstants, SpinSystem,
                      johnson_noise_density, resonance_field)
from .resonator import (ResonatorModel, absorption_phase, b1_field,
                        reflection_coefficient, susceptibility_gain)
from .sensitivity import NoiseLedger

log = logging.getLogger(__name__)

__all__ = [
    "SAMPLES_PER_PERIOD", "SETTLING_TAUS", "ModulationSettings", "LockInSettings",
    "AxisRange", "SweepPlan", "Experiment", "Spectrum", "OvermodulationWarning",
    "synthesize_baseband", "detect", "lockin_demodulate", "run_field_sweep",
    "run_frequency_sweep", "run_2d_sweep", "run_sweep", "measure_snr",
    "extract_pp_linewidth", "find_zero_crossing", "crossing_locus",
]

SAMPLES_PER_PERIOD = 32
SETTLING_TAUS = 5.0


class OvermodulationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ModulationSettings:
    frequency: float = 101e3
    amplitude: float | None = None  # T; None means hwhm / 10
    phase: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise DomainError("modulation frequency must be > 0")
        if self.amplitude is not None and self.amplitude < 0:
            raise DomainError("modulation amplitude must be >= 0")

    def resolved_amplitude(self, hwhm: float) -> float:
        return hwhm / 10.0 if self.amplitude is None else self.amplitude


@dataclass(frozen=True)
class LockInSettings:
    time_constant: float = 0.1
    reference_phase: float = 0.0
    # MW phase at the first mixer; an offset from pure absorption when tracking
    mixer_phase: float = 0.0
    track_resonator_phase: bool = True
    filter_order: int = 1

    def __post_init__(self):
        if not self.time_constant > 0:
            raise DomainError("time constant must be > 0")
        if self.filter_order != 1:
            raise DomainError("only a first-order low-pass is modelled")

    @property
    def enbw(self) -> float:
        return 1.0 / (4.0 * self.time_constant)


@dataclass(frozen=True)
class AxisRange:
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("axis step must be > 0")
        if not self.start < self.stop:
            raise ConfigError("axis start must be below stop")

    def __len__(self):
        return int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1

    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(len(self))


@dataclass(frozen=True)
class SweepPlan:
    """What to sweep. Excitation in %, frequencies in Hz, fields in T."""

    mode: str = "field"
    excitation: AxisRange | None = None
    frequency: AxisRange | None = None
    drive_frequency: float | None = None
    bias_field: float | None = None
    dwell_time: float | None = None
    rng_seed: int = 0
    noise_enabled: bool = True

    def __post_init__(self):
        if self.mode not in ("field", "frequency", "2d"):
            raise ConfigError(f"unknown sweep mode {self.mode!r}")
        if self.mode in ("field", "2d") and self.excitation is None:
            raise ConfigError(f"{self.mode} sweep needs an excitation axis")
        if self.mode in ("frequency", "2d") and self.frequency is None:
            raise ConfigError(f"{self.mode} sweep needs a frequency axis")
        if self.mode == "field" and not (self.drive_frequency and self.drive_frequency > 0):
            raise ConfigError("field sweep needs a positive drive frequency")
        if self.mode == "frequency" and not (self.bias_field and self.bias_field > 0):
            raise ConfigError("frequency sweep needs a positive bias field")
        if self.rng_seed < 0:
            raise ConfigError("rng seed must be a non-negative integer")

    def validate(self, cal: LensCalibration, lockin: LockInSettings):
        if self.excitation is not None:
            ax = self.excitation
            for name in ("start", "step"):
                if not is_quantized(getattr(ax, name), cal):
                    raise ConfigError(
                        f"excitation {name} {getattr(ax, name)} is not a multiple of the "
                        f"lens step {cal.min_step}%")
            excitation_to_field(ax.values()[-1], cal)
        if self.dwell(lockin) < SETTLING_TAUS * lockin.time_constant * (1 - 1e-9):
            raise ConfigError(f"dwell time must be at least {SETTLING_TAUS:g} time constants")

    def dwell(self, lockin: LockInSettings) -> float:
        if self.dwell_time is None:
            return SETTLING_TAUS * lockin.time_constant
        return self.dwell_time


@dataclass(frozen=True)
class Experiment:
    """Every model the virtual spectrometer needs, bundled."""

    spins: SpinSystem
    resonator: ResonatorModel = field(default_factory=ResonatorModel)
    calibration: LensCalibration = LOW_MAG
    modulation: ModulationSettings = field(default_factory=ModulationSettings)
    lockin: LockInSettings = field(default_factory=LockInSettings)
    drive_power: float = 0.1  # W at the resonator input
    shape: str = "lorentzian"
    inhomogeneity: FieldInhomogeneity = field(default_factory=FieldInhomogeneity)
    ledger: NoiseLedger | None = None
    dc_offsets: tuple[float, ...] = ()
    constants: PhysicalConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        object.__setattr__(self, "dc_offsets", tuple(float(v) for v in self.dc_offsets))
        if self.drive_power < 0:
            raise DomainError("drive power must be >= 0")
        Bm = self.modulation_amplitude
        if Bm > self.spins.hwhm_linewidth / 2:
            warnings.warn(f"modulation amplitude {Bm:.3g} T exceeds half the linewidth; "
                          "overmodulation distorts the line", OvermodulationWarning, stacklevel=3)

    @property
    def spin_constants(self) -> PhysicalConstants:
        return self.spins.constants(self.constants)

    @property
    def modulation_amplitude(self) -> float:
        return self.modulation.resolved_amplitude(self.spins.hwhm_linewidth)

    @property
    def sample_rate(self) -> float:
        return SAMPLES_PER_PERIOD * self.modulation.frequency

    @property
    def drive_amplitude(self) -> float:
        """Peak incident voltage on the reference line."""
        return math.sqrt(2.0 * self.drive_power * self.resonator.reference_impedance)

    @property
    def b1(self) -> float:
        return b1_field(self.drive_power, self.resonator, self.constants)

    def noise_density(self) -> float:
        """Detector-referred white noise in V/sqrt(Hz)."""
        n = johnson_noise_density(self.resonator.equivalent_resistance,
                                  self.spins.temperature, self.constants)
        if self.ledger is not None:
            n *= self.ledger.amplitude_factor() / self.ledger.coupling_efficiency
        return float(n)

    def lineshape(self, nu: float) -> LineshapeParams:
        B_res = resonance_field(nu, self.spin_constants)
        return params_from_spins(self.spins, B_res, self.shape, self.constants)

    def mixer_phase(self, nu: float) -> float:
        phi = self.lockin.mixer_phase
        if self.lockin.track_resonator_phase:
            phi += float(absorption_phase(nu, self.resonator))
        return phi

    def dc_offset(self, row: int) -> float:
        if not self.dc_offsets:
            return 0.0
        return self.dc_offsets[row % len(self.dc_offsets)]


@dataclass
class Spectrum:
    """Lock-in output of a sweep.

    For 1D sweeps ``axis2`` is None and every array has the axis length. For
    2D sweeps rows follow ``axis1`` (excitation) and columns ``axis2``
    (frequency).
    """

    axis1_name: str
    axis1: np.ndarray
    B0: np.ndarray
    freq: np.ndarray
    I: np.ndarray
    Q: np.ndarray
    axis2_name: str | None = None
    axis2: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def is_2d(self) -> bool:
        return self.axis2 is not None

    def row(self, i: int) -> "Spectrum":
        if not self.is_2d:
            raise ValueError("spectrum is one-dimensional")
        return Spectrum(self.axis2_name, self.axis2, self.B0[i], self.freq[i],
                        self.I[i], self.Q[i], metadata=self.metadata)


# -- signal synthesis --------------------------------------------------------

def _check_rate(sample_rate: float, f_mod: float):
    if sample_rate < SAMPLES_PER_PERIOD * f_mod * (1 - 1e-12):
        raise ConfigError(
            f"sample rate {sample_rate:g} Hz is below {SAMPLES_PER_PERIOD} samples per "
            f"modulation period ({SAMPLES_PER_PERIOD * f_mod:g} Hz)")


def _envelope(t, B0, nu, exp: Experiment):
    """Noise-free complex envelope at times ``t``."""
    mod = exp.modulation
    B = B0 + exp.modulation_amplitude * np.cos(2 * np.pi * mod.frequency * t + mod.phase)
    chi = broadened_complex(B, exp.lineshape(nu), exp.inhomogeneity)
    gamma = reflection_coefficient(nu, exp.resonator)
    gain = susceptibility_gain(nu, exp.resonator)
    return exp.drive_amplitude * (gamma + gain * chi)


def synthesize_baseband(B0: float, nu: float, duration: float, exp: Experiment,
                        rng: np.random.Generator | None = None, sample_rate: float | None = None,
                        noise: bool = True):
    """Complex reflected envelope for bias ``B0`` (T) and drive ``nu`` (Hz).

    Returns ``(t, V)``. Complex white noise of the experiment's density is
    added when ``noise`` is set; each quadrature then carries the full
    one-sided density so a real projection sees exactly that density.
    """
    fs = exp.sample_rate if sample_rate is None else sample_rate
    _check_rate(fs, exp.modulation.frequency)
    if duration < SETTLING_TAUS * exp.lockin.time_constant * (1 - 1e-9):
        raise ConfigError(f"duration must cover at least {SETTLING_TAUS:g} time constants")
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    V = _envelope(t, B0, nu, exp)
    if noise:
        if rng is None:
            raise ValueError("a seeded generator is required when noise is enabled")
        sigma = exp.noise_density() * math.sqrt(fs / 2.0)
        V = V + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return t, V


def detect(V, mixer_phase: float):
    """First mixer: project the envelope onto the MW reference phase."""
    return np.real(V * np.exp(-1j * mixer_phase))


def _references(phases):
    return math.sqrt(2.0) * np.cos(phases), -math.sqrt(2.0) * np.sin(phases)


def _filter_params(lockin: LockInSettings, fs: float, f_mod: float, n: int):
    alpha = -math.expm1(-1.0 / (fs * lockin.time_constant))
    n_tau = max(1, int(round(lockin.time_constant * fs)))
    per = fs / f_mod
    whole = int(math.floor(n_tau / per)) if per >= 1 else 0
    n_pre = int(round(whole * per)) if whole else n_tau
    return alpha, min(n_pre, n), min(n_tau, n)


def lockin_demodulate(series, sample_rate: float, f_mod: float, lockin: LockInSettings,
                      return_trace: bool = False, backend: str | None = None):
    """Dual-phase lock-in on a real detector record.

    RMS convention: ``A cos(2 pi f_mod t + phi)`` yields
    ``I = A/sqrt(2) cos(phi - ref)``, ``Q = A/sqrt(2) sin(phi - ref)``.
    The filter state starts at the mean product over the first whole
    modulation periods within one time constant, then runs to the end of the
    record; the result is the mean output over the final time constant.
    """
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    if n < SETTLING_TAUS * lockin.time_constant * sample_rate * (1 - 1e-9):
        raise ConfigError(f"record shorter than {SETTLING_TAUS:g} time constants")
    _check_rate(sample_rate, f_mod)
    t = np.arange(n) / sample_rate
    ref_i, ref_q = _references(2 * np.pi * f_mod * t + lockin.reference_phase)
    alpha, n_pre, n_avg = _filter_params(lockin, sample_rate, f_mod, n)
    return lockin_filter(x, ref_i, ref_q, n, alpha, n_pre, n_avg,
                         keep_trace=return_trace, backend=backend)


# -- per-point measurement ---------------------------------------------------

def _point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def _measure_point(B0, nu, exp: Experiment, n, index, seed, noise, row, backend=None):
    fs = exp.sample_rate
    k = np.arange(SAMPLES_PER_PERIOD)
    t = k / fs
    V = _envelope(t, B0, nu, exp)
    s = detect(V, exp.mixer_phase(nu))
    # AC-coupled lock-in input: the reflected carrier is pure DC here
    s = s - s.mean()
    ref_phase = 2 * np.pi * k / SAMPLES_PER_PERIOD + exp.lockin.reference_phase
    ref_i, ref_q = _references(ref_phase)
    offset = exp.dc_offset(row)
    if offset:
        # vibration pickup locked to the modulation appears as an I offset
        s = s + offset * ref_i
    noise_arr = None
    if noise:
        sigma = exp.noise_density() * math.sqrt(fs / 2.0)
        noise_arr = sigma * _point_rng(seed, index).standard_normal(n)
    alpha, n_pre, n_avg = _filter_params(exp.lockin, fs, exp.modulation.frequency, n)
    return lockin_filter(s, ref_i, ref_q, n, alpha, n_pre, n_avg, noise=noise_arr,
                         backend=backend)


def _default_workers() -> int:
    return os.cpu_count() or 1


def _run_points(points, exp: Experiment, plan: SweepPlan, workers=None, backend=None):
    """points: list of (B0, nu, row). Index in the list seeds the noise."""
    plan.validate(exp.calibration, exp.lockin)
    n = int(round(plan.dwell(exp.lockin) * exp.sample_rate))

    def one(i):
        B0, nu, row = points[i]
        return _measure_point(B0, nu, exp, n, i, plan.rng_seed, plan.noise_enabled, row, backend)

    workers = workers or _default_workers()
    if workers == 1 or len(points) == 1:
        results = [one(i) for i in range(len(points))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(points))))
    out = np.array(results, dtype=float).reshape(len(points), 2)
    return out[:, 0], out[:, 1]


def _metadata(plan: SweepPlan, exp: Experiment) -> dict:
    return {
        "plan": _plain(asdict(plan)),
        "experiment": _plain(asdict(exp)),
        "derived": {
            "sample_rate_Hz": exp.sample_rate,
            "modulation_amplitude_T": exp.modulation_amplitude,
            "b1_T": exp.b1,
            "noise_density_V_per_rtHz": exp.noise_density(),
            "enbw_Hz": exp.lockin.enbw,
        },
        "seed": plan.rng_seed,
        "software_version": __version__,
    }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _excitation_axis(plan: SweepPlan, exp: Experiment):
    from .calibration import quantize_excitation
    E = quantize_excitation(plan.excitation.values(), exp.calibration)
    B0 = np.asarray(excitation_to_field(E, exp.calibration)) * 1e-3
    return E, B0


def run_field_sweep(plan: SweepPlan, exp: Experiment, workers=None, backend=None) -> Spectrum:
    if plan.mode != "field":
        raise ConfigError("run_field_sweep needs a field-mode plan")
    E, B0 = _excitation_axis(plan, exp)
    nu = float(plan.drive_frequency)
    I, Q = _run_points([(b, nu, 0) for b in B0], exp, plan, workers, backend)
    spec = Spectrum("excitation_pct", E, B0, np.full_like(B0, nu), I, Q,
                    metadata=_metadata(plan, exp))
    _flag_crossing(spec)
    return spec


def run_frequency_sweep(plan: SweepPlan, exp: Experiment, workers=None, backend=None) -> Spectrum:
    if plan.mode != "frequency":
        raise ConfigError("run_frequency_sweep needs a frequency-mode plan")
    nu = plan.frequency.values()
    B0 = float(plan.bias_field)
    I, Q = _run_points([(B0, f, 0) for f in nu], exp, plan, workers, backend)
    spec = Spectrum("drive_freq_Hz", nu, np.full_like(nu, B0), nu, I, Q,
                    metadata=_metadata(plan, exp))
    _flag_crossing(spec)
    return spec


def run_2d_sweep(plan: SweepPlan, exp: Experiment, workers=None, backend=None) -> Spectrum:
    if plan.mode != "2d":
        raise ConfigError("run_2d_sweep needs a 2d plan")
    E, B0 = _excitation_axis(plan, exp)
    nu = plan.frequency.values()
    points = [(b, f, r) for r, b in enumerate(B0) for f in nu]
    I, Q = _run_points(points, exp, plan, workers, backend)
    shape = (len(E), len(nu))
    BB, FF = np.meshgrid(B0, nu, indexing="ij")
    return Spectrum("excitation_pct", E, BB, FF, I.reshape(shape), Q.reshape(shape),
                    axis2_name="drive_freq_Hz", axis2=nu, metadata=_metadata(plan, exp))


def run_sweep(plan: SweepPlan, exp: Experiment, workers=None, backend=None) -> Spectrum:
    runner = {"field": run_field_sweep, "frequency": run_frequency_sweep, "2d": run_2d_sweep}
    return runner[plan.mode](plan, exp, workers, backend)


# -- analysis ----------------------------------------------------------------

def _flag_crossing(spec: Spectrum):
    x = find_zero_crossing(spec.axis1, spec.I)
    spec.metadata["zero_crossing"] = x
    if x is None:
        log.warning("no crossing detected in the swept range")
        spec.metadata["flags"] = ["no crossing detected"]


def find_zero_crossing(axis, trace):
    """Axis position where the trace changes sign between its two extrema.

    Linear interpolation between the bracketing samples; None when the trace
    has no opposite-signed extremum pair.
    """
    y = np.asarray(trace, dtype=float)
    x = np.asarray(axis, dtype=float)
    if y.size < 2:
        return None
    i_max, i_min = int(np.argmax(y)), int(np.argmin(y))
    if not (y[i_max] > 0 > y[i_min]):
        return None
    lo, hi = sorted((i_max, i_min))
    seg = y[lo:hi + 1]
    sign = np.signbit(seg)
    idx = np.nonzero(sign[1:] != sign[:-1])[0]
    if idx.size == 0:
        return None
    # several sign changes only happen with noise; take the one nearest the middle
    j = lo + int(idx[np.argmin(np.abs(idx + 0.5 - (hi - lo) / 2))])
    y0, y1 = y[j], y[j + 1]
    if y1 == y0:
        return float(x[j])
    return float(x[j] + (x[j + 1] - x[j]) * y0 / (y0 - y1))


def crossing_locus(spec: Spectrum):
    """Per frequency column of a 2D spectrum, the excitation of the zero crossing.

    Returns ``(freq_Hz, excitation_pct)`` for the columns where a crossing
    was found.
    """
    if not spec.is_2d:
        raise ValueError("crossing locus needs a 2D spectrum")
    nu, E = [], []
    for j, f in enumerate(spec.axis2):
        x = find_zero_crossing(spec.axis1, spec.I[:, j])
        if x is not None:
            nu.append(f)
            E.append(x)
    return np.array(nu), np.array(E)


def _window(axis, win):
    lo, hi = sorted(win)
    m = (axis >= lo) & (axis <= hi)
    if not np.any(m):
        raise ValueError(f"window {win} contains no samples")
    return m, (lo, hi)


def measure_snr(spec: Spectrum, signal_window, noise_window) -> float:
    """Peak-to-peak of I in the signal window over the RMS noise of I elsewhere.

    The noise RMS is taken about the window mean so a baseline offset does
    not count as noise. Returns ``inf`` for a noise-free trace.
    """
    axis = np.asarray(spec.axis1)
    ms, (s0, s1) = _window(axis, signal_window)
    mn, (n0, n1) = _window(axis, noise_window)
    if not (s1 < n0 or n1 < s0):
        raise ValueError("signal and noise windows overlap")
    sig = spec.I[ms]
    pp = float(np.max(sig) - np.min(sig))
    rms = float(np.std(spec.I[mn]))
    if rms == 0.0:
        return math.inf
    return pp / rms


def _parabolic_vertex(x, y, i):
    if i == 0 or i == len(y) - 1:
        return float(x[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = y0 - 2 * y1 + y2
    if den == 0:
        return float(x[i])
    shift = 0.5 * (y0 - y2) / den
    return float(x[i] + shift * (x[i + 1] - x[i]))


def extract_pp_linewidth(spec: Spectrum) -> float:
    """Axis distance between the maximum and minimum of the I trace.

    Each extremum is refined with a three-point parabola so the estimate is
    not limited to the sweep step.
    """
    y = np.asarray(spec.I, dtype=float)
    x = np.asarray(spec.axis1, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise NoLineFound("no line found: need a 1D trace of at least three points")
    i_max, i_min = int(np.argmax(y)), int(np.argmin(y))
    if not (y[i_max] > 0 > y[i_min]) or i_max == i_min:
        raise NoLineFound("no line found: trace lacks an opposite-signed extremum pair")
    return abs(_parabolic_vertex(x, y, i_max) - _parabolic_vertex(x, y, i_min))


def axis_to_field(spec: Spectrum, width: float, cal: LensCalibration) -> float:
    """Convert a width on the spectrum's axis into tesla."""
    if spec.axis1_name == "excitation_pct":
        return width * cal.field_slope * 1e-3
    raise ValueError("only excitation axes convert directly to field")


def with_modulation(exp: Experiment, **kw) -> Experiment:
    return replace(exp, modulation=replace(exp.modulation, **kw))
