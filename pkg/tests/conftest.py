import warnings

import numpy as np
import pytest

from esr_twin import _accel
from esr_twin.physics import SpinSystem
from esr_twin.sweep import Experiment, LockInSettings

BACKENDS = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])

# BDPA cube from the in-TEM measurement, linewidth set for a 3.2 MHz pp line
BDPA = dict(spin_density=1.5e27, volume=(150e-6) ** 3, temperature=300.0,
            g_factor=2.00035, hwhm_linewidth=0.098982e-3)


@pytest.fixture
def bdpa():
    return SpinSystem(**BDPA)


@pytest.fixture
def fast_exp(bdpa):
    """Short time constant so a sweep point costs ~16k samples."""
    return Experiment(spins=bdpa, lockin=LockInSettings(time_constant=1e-3))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(autouse=True)
def _quiet_overmodulation():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=UserWarning)
        yield


def rel(a, b):
    return abs(a - b) / abs(b)


np.seterr(all="raise", under="ignore")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("]")[1].split(".")[0])):
            terminalreporter.write_line(line)
