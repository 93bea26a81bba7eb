import math

import numpy as np
import pytest
from hypothesis import settings

from ctoa import pipeline
from ctoa.config import preset
from ctoa.model import PhysicalParams, PotentialSpec
from ctoa.operators import CtoaKernel
from ctoa.spectral import eigensolve, gauss_legendre, nystrom_matrix
from ctoa.timekernel import closed_form_timekernel, goursat_solve

settings.register_profile("ctoa", max_examples=40, deadline=None)
settings.load_profile("ctoa")

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def harmonic():
    return PotentialSpec.harmonic(1.0)


@pytest.fixture(scope="session")
def quartic():
    return PotentialSpec.polynomial([0.0, 0.0, 0.0, 0.0, 0.25])


@pytest.fixture(scope="session")
def harmonic_field(params, harmonic):
    return closed_form_timekernel(harmonic, params, n_grid=200)


@pytest.fixture(scope="session")
def harmonic_kernel(harmonic_field, params):
    return CtoaKernel(harmonic_field, params)


@pytest.fixture(scope="session")
def quartic_field(params, quartic):
    return goursat_solve(quartic, params, n_grid=200)


@pytest.fixture(scope="session")
def harmonic_spectrum(harmonic_kernel):
    rule = gauss_legendre(64, -1.0, 1.0)
    B = nystrom_matrix(harmonic_kernel, rule)
    return eigensolve(B, rule, harmonic_kernel), B


@pytest.fixture(scope="session")
def fig1_stages():
    return pipeline.build(preset("fig1-harmonic"))


@pytest.fixture(scope="session")
def linear_stages():
    return pipeline.build(preset("linear-lambda1"))


@pytest.fixture(scope="session")
def fig1_runs(fig1_stages):
    """Evolution of the top 8 positive-eigenvalue eigenfunctions."""
    return {n: pipeline.evolve_eigenfunction(fig1_stages, n, snapshots=False) for n in range(1, 9)}


@pytest.fixture(scope="session")
def linear_runs(linear_stages):
    return {n: pipeline.evolve_eigenfunction(linear_stages, n, snapshots=False) for n in range(1, 7)}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def harmonic_periodic_exact(q, qp, mu=1.0, hbar=1.0, omega=1.0, l=1.0):
    """Periodic harmonic kernel in closed form, through the sine/hyperbolic integral."""
    from scipy.special import shichi

    a = mu * omega / (2 * hbar)
    u, v = q + qp, q - qp
    with np.errstate(invalid="ignore", divide="ignore"):
        T = np.where(v == 0, u / 4, np.sinh(a * u * v) / (4 * a * np.where(v == 0, 1, v)))
    shi = shichi(a * u * v)[0]
    return (mu / (1j * hbar)) * (T * np.sign(v) - shi / (4 * a * l))


HALF_PI = math.pi / 2
