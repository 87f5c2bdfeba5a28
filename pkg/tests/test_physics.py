import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import constants as sc

from esr_twin.errors import DomainError
from esr_twin.physics import (DEFAULT_CONSTANTS, PhysicalConstants, SpinSystem,
                              boltzmann_polarization, curie_magnetization,
                              johnson_noise_density, resonance_frequency,
                              unitary_field, zeeman_splitting)

MU_B = sc.physical_constants["Bohr magneton"][0]


def test_constants_invariants():
    c = DEFAULT_CONSTANTS
    assert c.gyromagnetic_ratio == pytest.approx(c.electron_g_factor * c.bohr_magneton / c.planck_hbar, rel=1e-12)
    assert 27.9e9 <= c.hz_per_tesla <= 28.1e9
    with pytest.raises(DomainError):
        PhysicalConstants(boltzmann_k=-1.0)


@pytest.mark.parametrize("B0, expected, tol", [
    (0.160, 4.5e9, 0.01),    # operating point, quoted rounded to 4.5 GHz
    (1.8, 50.4e9, 0.002),
])
def test_resonance_frequency_reference_points(B0, expected, tol):
    assert resonance_frequency(B0) == pytest.approx(expected, rel=tol)


def test_resonance_frequency_zero_and_negative():
    assert resonance_frequency(0.0) == 0.0
    with pytest.raises(DomainError):
        resonance_frequency(-0.1)
    with pytest.raises(DomainError):
        zeeman_splitting(-1e-3)


def test_zeeman_splitting_values():
    assert zeeman_splitting(0.0) == 0.0
    c2 = DEFAULT_CONSTANTS.with_g(2.0)
    assert zeeman_splitting(1.0, c2) == pytest.approx(2 * MU_B, rel=1e-12)
    assert zeeman_splitting(1.0, c2) == pytest.approx(1.855e-23, rel=1e-3)
    for B in (0.1, 0.5, 1.8):
        assert sc.h * resonance_frequency(B) - zeeman_splitting(B) == pytest.approx(0.0, abs=1e-36)


def test_curie_magnetization_bdpa():
    # hand evaluation: N gamma^2 hbar^2 B0 / (4 k T), gamma = g muB / hbar
    s = SpinSystem(1.5e27, 1e-12, 300.0, g_factor=2.0023)
    gamma = 2.0023 * MU_B / sc.hbar
    hand = 1.5e27 * gamma**2 * sc.hbar**2 * 0.167 / (4 * sc.k * 300.0)
    M0 = curie_magnetization(s, 0.167)
    assert M0 == pytest.approx(hand, rel=1e-12)
    assert M0 == pytest.approx(5.2, rel=0.02)
    assert curie_magnetization(s, 0.0) == 0.0


def test_curie_inverse_temperature():
    hot = SpinSystem(1e27, 1e-12, 300.0)
    cold = SpinSystem(1e27, 1e-12, 150.0)
    assert curie_magnetization(cold, 0.2) == pytest.approx(2 * curie_magnetization(hot, 0.2), rel=1e-12)


@given(T=st.floats(0.1, 1000), B=st.floats(1e-4, 5))
def test_curie_times_temperature_constant(T, B):
    ref = curie_magnetization(SpinSystem(1e27, 1e-12, 1.0), B) * 1.0
    val = curie_magnetization(SpinSystem(1e27, 1e-12, T), B) * T
    assert val == pytest.approx(ref, rel=1e-12)


def test_spin_system_invariants():
    with pytest.raises(DomainError):
        SpinSystem(0.0, 1e-12, 300.0)
    with pytest.raises(DomainError):
        SpinSystem(1e27, 1e-12, -1.0)
    with pytest.raises(DomainError):
        SpinSystem(1e300, 1e300, 300.0)  # infinite spin count


def test_polarization_examples():
    assert boltzmann_polarization(0.0, 300.0) == 0.0
    x = 2.0023 * MU_B * 0.17 / (2 * sc.k * 300.0)
    assert boltzmann_polarization(0.17, 300.0) == pytest.approx(x, rel=1e-6)
    assert boltzmann_polarization(0.17, 300.0) == pytest.approx(3.8e-4, rel=0.03)
    p = boltzmann_polarization(1.8, 4.0)
    assert 0.29 <= p <= 0.30
    with pytest.raises(DomainError):
        boltzmann_polarization(0.1, 0.0)


@given(B1=st.floats(0, 10), B2=st.floats(0, 10), T1=st.floats(0.5, 500), T2=st.floats(0.5, 500))
def test_polarization_monotone_bounded(B1, B2, T1, T2):
    lo, hi = sorted((B1, B2))
    assert boltzmann_polarization(lo, T1) <= boltzmann_polarization(hi, T1)
    cold, warm = sorted((T1, T2))
    assert boltzmann_polarization(lo, warm) <= boltzmann_polarization(lo, cold)
    p = boltzmann_polarization(hi, cold)
    assert 0.0 <= p <= 1.0


@given(x=st.floats(1e-8, 1e-2))
def test_polarization_linear_regime(x):
    c = DEFAULT_CONSTANTS
    T = 10.0
    B = x * 2 * c.boltzmann_k * T / (c.electron_g_factor * c.bohr_magneton)
    assert boltzmann_polarization(B, T) == pytest.approx(x, rel=1e-4)


@given(a=st.floats(0, 100), B=st.floats(0, 5))
def test_resonance_frequency_linear(a, B):
    assert resonance_frequency(a * B) == pytest.approx(a * resonance_frequency(B), rel=1e-12, abs=1e-300)


def test_unitary_field():
    assert unitary_field(1e-3) == pytest.approx(sc.mu_0 / 1e-3, rel=1e-12)
    assert unitary_field(1e-3) == pytest.approx(1.2566e-3, rel=1e-4)
    assert unitary_field(2e-3) == pytest.approx(unitary_field(1e-3) / 2)
    with pytest.raises(DomainError):
        unitary_field(0.0)


def test_johnson_noise():
    assert johnson_noise_density(1.0, 300.0) == pytest.approx(math.sqrt(4 * sc.k * 300.0), rel=1e-12)
    assert johnson_noise_density(1.0, 300.0) == pytest.approx(1.287e-10, rel=1e-3)
    assert johnson_noise_density(0.0, 300.0) == 0.0
    assert johnson_noise_density(1.0, 1200.0) == pytest.approx(2 * johnson_noise_density(1.0, 300.0))
    with pytest.raises(DomainError):
        johnson_noise_density(1.0, 0.0)


def test_vectorised():
    B = np.linspace(0, 1, 5)
    assert resonance_frequency(B).shape == (5,)
    assert np.all(np.diff(boltzmann_polarization(B, 300.0)) > 0)
