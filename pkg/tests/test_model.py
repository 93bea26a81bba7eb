import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctoa.model import (
    NoArrivalError,
    PhysicalParams,
    PotentialSpec,
    classical_arrival_ode,
    classical_toa,
    eval_potential,
    ltoa_eval,
    ltoa_terms,
    make_potential,
)

P = PhysicalParams()


# -- parameters and potentials ----------------------------------------------


@pytest.mark.parametrize("bad", [dict(mu=0.0), dict(hbar=-1.0), dict(l=0.0), dict(gamma=math.pi), dict(gamma=-4.0)])
def test_params_invariants(bad):
    with pytest.raises(ValueError):
        PhysicalParams(**bad)


def test_params_replace_validates():
    assert P.replace(hbar=0.5).hbar == 0.5
    with pytest.raises(ValueError):
        P.replace(l=-1.0)


def test_eval_potential_examples():
    assert eval_potential(PotentialSpec.harmonic(1.0), 0.5) == pytest.approx(0.125, abs=1e-15)
    assert eval_potential(PotentialSpec.free(), 0.7) == 0.0
    assert eval_potential(PotentialSpec.linear(2.0), 0.3) == pytest.approx(0.6, abs=1e-15)


def test_harmonic_is_polynomial_with_mu():
    V = PotentialSpec.harmonic(3.0, mu=2.0)
    assert V.coeffs[2] == pytest.approx(0.5 * 2.0 * 9.0)
    assert V.is_linear_system and V.is_even


def test_linear_system_flag():
    assert PotentialSpec.polynomial([1.0, 2.0, 3.0]).is_linear_system
    assert not PotentialSpec.polynomial([0, 0, 0, 1.0]).is_linear_system
    assert not PotentialSpec.tabulated(np.linspace(-1, 1, 9), np.zeros(9)).is_linear_system


def test_tabulated_range_and_clip():
    q = np.linspace(-1, 1, 21)
    V = PotentialSpec.tabulated(q, q**2)
    assert eval_potential(V, 0.35) == pytest.approx(0.35**2, abs=1e-12)
    with pytest.raises(ValueError):
        eval_potential(V, 1.5)
    assert eval_potential(V, 1.5, clip=True) == pytest.approx(1.0)


def test_tabulated_rejects_bad_samples():
    with pytest.raises(ValueError):
        PotentialSpec.tabulated([0, 1, 0.5, 2], [0, 0, 0, 0])
    with pytest.raises(ValueError):
        PotentialSpec.tabulated([0, 1, 2], [0, 0, 0])


def test_make_potential():
    assert make_potential("free").kind == "free"
    assert make_potential("linear", 2.0).lam == 2.0
    assert make_potential("polynomial", coeffs=[0, 1]).coeffs == (0.0, 1.0)
    with pytest.raises(ValueError):
        make_potential("polynomial")
    with pytest.raises(ValueError):
        make_potential("cubic")


# -- classical time of arrival -------------------------------------------------


def test_classical_toa_free():
    assert classical_toa(PotentialSpec.free(), P, 1.0, -2.0) == pytest.approx(0.5, abs=1e-12)


def test_classical_toa_harmonic_quarter_period():
    assert classical_toa(PotentialSpec.harmonic(1.0), P, 1.0, -1.0) == pytest.approx(math.pi / 4, abs=1e-9)


def test_classical_toa_linear_matches_ode():
    V = PotentialSpec.linear(1.0)
    t = classical_toa(V, P, 0.5, -1.0)
    # q(t) = q0 + p0 t - t^2/2 reaches zero at sqrt(2) - 1
    assert t == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
    assert abs(t - classical_arrival_ode(V, P, 0.5, -1.0, 2.0)) < 1e-8


def test_classical_toa_zero_momentum():
    with pytest.raises(ValueError):
        classical_toa(PotentialSpec.free(), P, 0.5, 0.0)


def test_classical_toa_forbidden():
    # climbing a linear ramp toward the origin without enough energy
    with pytest.raises(NoArrivalError):
        classical_toa(PotentialSpec.linear(1.0), P, -1.0, 0.5)


def test_ode_examples():
    assert classical_arrival_ode(PotentialSpec.free(), P, 1.0, -2.0, 1.0) == pytest.approx(0.5, abs=1e-10)
    assert classical_arrival_ode(PotentialSpec.harmonic(1.0), P, 1.0, 1.0, 5.0) == pytest.approx(3 * math.pi / 4, abs=1e-9)
    assert classical_arrival_ode(PotentialSpec.free(), P, 1.0, 1.0, 10.0) is None


def test_ode_rejects_bad_tmax():
    with pytest.raises(ValueError):
        classical_arrival_ode(PotentialSpec.free(), P, 1.0, -1.0, 0.0)


@given(q=st.floats(-1, 1), p=st.floats(0.2, 4).flatmap(lambda a: st.sampled_from([a, -a])))
def test_free_toa_is_exact(q, p):
    assert classical_toa(PotentialSpec.free(), P, q, p) == pytest.approx(-q / p, abs=1e-12)


@given(q=st.floats(-1, 1), p=st.floats(0.1, 4).flatmap(lambda a: st.sampled_from([a, -a])), omega=st.floats(0.2, 3))
def test_harmonic_toa_is_arctan(q, p, omega):
    V = PotentialSpec.harmonic(omega)
    assert classical_toa(V, P, q, p) == pytest.approx(-math.atan(omega * q / p) / omega, abs=1e-9)


@given(c=st.floats(0.0, 1.0), q=st.floats(0.1, 1.0), p=st.floats(0.5, 3.0))
def test_toa_matches_trajectory(c, q, p):
    # quartic well entered from the right: no turning point on the way in
    V = PotentialSpec.polynomial([0, 0, 0.3, 0, c])
    t = classical_toa(V, P, q, -p)
    assert abs(t - classical_arrival_ode(V, P, q, -p, 2 * t + 0.1)) < 1e-6


# -- LTOA series ----------------------------------------------------------------


def test_ltoa_free():
    s = ltoa_terms(PotentialSpec.free(), 3)
    assert s.terms == ((1, 1, Fraction(-1)),)


def test_ltoa_harmonic_arctan_coefficients():
    s = ltoa_terms(PotentialSpec.harmonic(1.0), 2)
    assert s.terms == ((1, 1, Fraction(-1)), (3, 3, Fraction(1, 3)), (5, 5, Fraction(-1, 5)))


@pytest.mark.parametrize("mu,omega", [(2.0, 3.0), (0.5, 1.5)])
def test_ltoa_harmonic_scaling(mu, omega):
    s = ltoa_terms(PotentialSpec.harmonic(omega, mu=mu), 2, mu=mu)
    want = [-((-1) ** k) / (2 * k + 1) * mu ** (2 * k + 1) * omega ** (2 * k) for k in range(3)]
    assert [c for _, _, c in s.as_floats()] == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("mu,lam", [(1.0, 2.0), (2.0, 0.5)])
def test_ltoa_linear_one_step(mu, lam):
    s = ltoa_terms(PotentialSpec.linear(lam), 1, mu=mu)
    assert s.as_floats() == [(1, 1, -mu), (2, 3, pytest.approx(mu**2 * lam / 2))]


def test_ltoa_eval_examples():
    assert ltoa_eval(ltoa_terms(PotentialSpec.free(), 0), 1.0, -2.0) == pytest.approx(0.5)
    s = ltoa_terms(PotentialSpec.harmonic(1.0), 8)
    assert abs(ltoa_eval(s, 0.2, -1.0) + math.atan(0.2 / -1.0)) < 1e-6
    with pytest.raises(ValueError):
        ltoa_eval(s, 0.2, 0.0)


def test_ltoa_rejects_non_polynomial():
    with pytest.raises(ValueError):
        ltoa_terms(PotentialSpec.tabulated(np.linspace(-1, 1, 9), np.zeros(9)), 2)


@given(coeffs=st.lists(st.integers(-3, 3), min_size=1, max_size=5), K=st.integers(0, 5))
def test_ltoa_powers_odd_and_coefficients_real(coeffs, K):
    s = ltoa_terms(PotentialSpec.polynomial(coeffs), K)
    for n, m, c in s.terms:
        assert m % 2 == 1
        assert isinstance(c, Fraction)


def test_ltoa_converges_to_classical():
    V = PotentialSpec.harmonic(1.0)
    q, p = 0.5, -1.0  # |mu omega q / p| = 0.5
    exact = classical_toa(V, P, q, p)
    errs = [abs(ltoa_eval(ltoa_terms(V, K), q, p) - exact) for K in (1, 3, 6, 10)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-7
