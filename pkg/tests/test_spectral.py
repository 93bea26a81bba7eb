import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from ctoa.model import PhysicalParams
from ctoa.operators import CtoaKernel
from ctoa.spectral import (
    Nodality,
    QuadratureRule,
    Spectrum,
    classify_nodal,
    eigensolve,
    gauss_legendre,
    lagrange_matrix,
    nodal_depth,
    nystrom_interpolate,
    nystrom_matrix,
)
from ctoa.timekernel import closed_form_timekernel

P = PhysicalParams()


def spectrum_of(kernel, n, scheme="split"):
    rule = gauss_legendre(n, -kernel.params.l, kernel.params.l)
    return eigensolve(nystrom_matrix(kernel, rule, scheme=scheme), rule, kernel, scheme=scheme)


def top_positive(sp, k=6):
    return np.array([sp.eigenvalues[sp.index_of(n)] for n in range(1, k + 1)])


# -- quadrature and interpolation ------------------------------------------------


@given(n=st.integers(1, 40), a=st.floats(-3, 0), width=st.floats(0.1, 4))
def test_gauss_legendre_exact_to_degree(n, a, width):
    b = a + width
    r = gauss_legendre(n, a, b)
    deg = 2 * n - 1
    exact = (b ** (deg + 1) - a ** (deg + 1)) / (deg + 1)
    assert np.sum(r.weights * r.nodes**deg) == pytest.approx(exact, rel=1e-10, abs=1e-10)


def test_gauss_legendre_rejects_bad_input():
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        gauss_legendre(4, 1.0, 1.0)
    with pytest.raises(ValueError):
        QuadratureRule(np.array([0.0, 0.0]), np.array([1.0, 1.0]), -1.0, 1.0)


def test_lagrange_identity_at_nodes_and_exact_for_polynomials():
    r = gauss_legendre(12, -1, 1)
    assert np.allclose(lagrange_matrix(r, r.nodes), np.eye(12), atol=1e-14)
    x = np.linspace(-1, 1, 37)
    coef = np.random.default_rng(3).normal(size=12)
    f = np.polynomial.polynomial.polyval
    assert np.max(np.abs(lagrange_matrix(r, x) @ f(r.nodes, coef) - f(x, coef))) < 1e-12


# -- eigenvalues ------------------------------------------------------------------


def test_fig1_pair(harmonic_spectrum):
    sp, _ = harmonic_spectrum
    tau = top_positive(sp)
    assert tau[4] == pytest.approx(0.0336, abs=1e-3)
    assert tau[5] == pytest.approx(0.0303, abs=1e-3)


def test_split_scheme_converged_at_32(harmonic_kernel, harmonic_spectrum):
    sp, _ = harmonic_spectrum
    assert np.max(np.abs(top_positive(spectrum_of(harmonic_kernel, 32)) - top_positive(sp))) < 1e-8


def test_plain_scheme_second_order(harmonic_kernel, harmonic_spectrum):
    ref = top_positive(harmonic_spectrum[0])
    e32 = np.max(np.abs(top_positive(spectrum_of(harmonic_kernel, 32, "plain")) - ref))
    e64 = np.max(np.abs(top_positive(spectrum_of(harmonic_kernel, 64, "plain")) - ref))
    assert 3.0 < e32 / e64 < 5.0


def test_unknown_scheme(harmonic_kernel):
    with pytest.raises(ValueError):
        nystrom_matrix(harmonic_kernel, gauss_legendre(4), scheme="galerkin")


def test_sorted_by_magnitude_positive_first(harmonic_spectrum):
    tau = harmonic_spectrum[0].eigenvalues
    assert np.all(np.diff(np.abs(tau)) <= 1e-15)
    assert tau[0] > 0 and tau[1] < 0


def test_eigenvectors_orthonormal_and_phase(harmonic_spectrum):
    sp, B = harmonic_spectrum
    X = sp.eigenvectors
    assert np.allclose(X.conj().T @ X, np.eye(X.shape[1]), atol=1e-12)
    assert np.max(sp.residuals(B)) < 1e-12
    peak = X[np.argmax(np.abs(X), axis=0), np.arange(X.shape[1])]
    assert np.allclose(peak.imag, 0.0) and np.all(peak.real > 0)


@pytest.mark.parametrize("gamma", [math.pi / 2, 1.0])
@pytest.mark.parametrize("kind", ["free", "harmonic"])
def test_even_potential_symmetric_spectrum(kind, gamma):
    p = P.replace(gamma=gamma)
    K = CtoaKernel(closed_form_timekernel(kind, p, strength=1.0), p)
    tau = spectrum_of(K, 32).eigenvalues
    pos, neg = np.sort(tau[tau > 0]), np.sort(-tau[tau < 0])
    assert pos.size == neg.size
    assert np.max(np.abs(pos - neg)) < 1e-10


@pytest.mark.parametrize("gamma,paired", [(math.pi / 2, True), (0.0, True), (1.0, False)])
def test_linear_potential_pairing(gamma, paired):
    p = P.replace(gamma=gamma)
    K = CtoaKernel(closed_form_timekernel("linear", p, strength=1.0), p)
    tau = spectrum_of(K, 32).eigenvalues
    pos, neg = np.sort(tau[tau > 0]), np.sort(-tau[tau < 0])
    n = min(pos.size, neg.size)
    assert (np.max(np.abs(pos[-n:] - neg[-n:])) < 1e-10) == paired


def test_index_of(harmonic_spectrum):
    sp = harmonic_spectrum[0]
    assert sp.index_of(1) == 0 and sp.eigenvalues[sp.index_of(2)] > 0
    with pytest.raises(IndexError):
        sp.index_of(0)
    with pytest.raises(IndexError):
        sp.index_of(len(sp))


def test_eigensolve_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigensolve(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        eigensolve(np.zeros((2, 3)))


def test_node_values_need_rule():
    with pytest.raises(ValueError):
        Spectrum(np.zeros(1), np.eye(1)).node_values(0)


# -- interpolation and nodality ----------------------------------------------------


def test_interpolation_reproduces_nodes(harmonic_kernel, harmonic_spectrum):
    sp = harmonic_spectrum[0]
    for i in range(16):
        phi = nystrom_interpolate(harmonic_kernel, sp.rule, sp, i, sp.rule.nodes, normalize=False)
        assert np.max(np.abs(phi - sp.node_values(i))) < 1e-8


def test_interpolation_normalized(harmonic_kernel, harmonic_spectrum):
    sp = harmonic_spectrum[0]
    q = np.linspace(-1, 1, 400)
    phi = nystrom_interpolate(harmonic_kernel, sp.rule, sp, 4, q)
    assert integrate.trapezoid(np.abs(phi) ** 2, q) == pytest.approx(1.0, abs=1e-12)


def test_plain_interpolation_matches_split(harmonic_kernel):
    sp = spectrum_of(harmonic_kernel, 64, "plain")
    q = np.linspace(-1, 1, 200)
    a = nystrom_interpolate(harmonic_kernel, sp.rule, sp, 0, q)
    ref = spectrum_of(harmonic_kernel, 64)
    b = nystrom_interpolate(harmonic_kernel, ref.rule, ref, 0, q)
    assert np.max(np.abs(a - b)) < 0.1


def test_interpolation_rejects_zero_eigenvalue(harmonic_kernel):
    rule = gauss_legendre(4, -1, 1)
    sp = Spectrum(np.zeros(4), np.eye(4, dtype=complex), rule, harmonic_kernel)
    with pytest.raises(ValueError):
        nystrom_interpolate(harmonic_kernel, rule, sp, 0, [0.0])


def test_fig1_nodality(harmonic_kernel, harmonic_spectrum):
    sp = harmonic_spectrum[0]
    q = np.linspace(-1, 1, 512)
    labels = [classify_nodal(nystrom_interpolate(harmonic_kernel, sp.rule, sp, sp.index_of(n), q), q) for n in range(1, 9)]
    assert labels == [Nodality.NON_NODAL, Nodality.NODAL] * 4


def test_classify_synthetic():
    q = np.linspace(-1, 1, 256)
    assert classify_nodal(np.sin(np.pi * q)) is Nodality.NODAL
    assert classify_nodal(np.cos(np.pi * q / 2) + 0.1) is Nodality.NON_NODAL
    # real part changes sign but the modulus never vanishes
    assert classify_nodal(np.exp(1j * np.pi * q)) is Nodality.NON_NODAL
    # a zero sitting between grid points is still found
    assert classify_nodal(q - 0.5 * (q[100] + q[101])) is Nodality.NODAL


def test_classify_rejects_bad_input():
    with pytest.raises(ValueError):
        classify_nodal(np.ones(10))
    with pytest.raises(ValueError):
        classify_nodal(np.zeros(100))
    with pytest.raises(ValueError):
        classify_nodal(np.ones(100), np.ones(99))


def test_nodal_depth():
    q = np.linspace(-1, 1, 512)
    assert nodal_depth(np.sin(np.pi * q)) < 1e-2
    assert nodal_depth(np.cos(np.pi * q / 2)) == 1.0
    assert nodal_depth(1.2 - np.cos(np.pi * q)) == pytest.approx(0.2 / 2.2, rel=1e-4)
