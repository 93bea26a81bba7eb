import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ctoa import CtoaSpectrum


@pytest.fixture(scope="module")
def est():
    return CtoaSpectrum().fit()


def test_get_set_params_and_clone():
    e = CtoaSpectrum(potential="linear", strength=2.0, n_nodes=32)
    p = e.get_params()
    assert p["potential"] == "linear" and p["strength"] == 2.0 and p["gamma"] == math.pi / 2
    c = clone(e)
    assert c.get_params() == p and c is not e
    c.set_params(n_nodes=16)
    assert c.n_nodes == 16 and e.n_nodes == 32


def test_fit_attributes(est):
    assert est.eigenvalues_.shape == (64,)
    assert est.eigenvectors_.shape == (64, 64)
    assert est.nodes_.shape == est.weights_.shape == (64,)
    assert est.positive_eigenvalue(5) == pytest.approx(0.0336, abs=1e-3)
    assert est.positive_eigenvalue(6) == pytest.approx(0.0303, abs=1e-3)


def test_fit_returns_self():
    e = CtoaSpectrum(potential="free", n_nodes=16)
    assert e.fit() is e


def test_transform_reproduces_resolved_nodes(est):
    Y = est.transform(est.nodes_)
    assert np.max(np.abs(Y[:, :16] - est.eigenvectors_[:, :16])) < 1e-8


def test_transform_accepts_column(est):
    q = np.linspace(-1, 1, 5)
    assert np.array_equal(est.transform(q), est.transform(q[:, None]))


def test_transform_plain_scheme():
    e = CtoaSpectrum(scheme="plain", n_nodes=48).fit()
    Y = e.transform(e.nodes_)
    assert np.max(np.abs(Y[:, :8] - e.eigenvectors_[:, :8])) < 1e-8


def test_predict_eigenstates_give_eigenvalues(est):
    assert np.allclose(est.predict(est.eigenvectors_.T), est.eigenvalues_, atol=1e-12)


def test_predict_scale_invariant(est):
    psi = est.eigenvectors_[:, 2] + 0.5j * est.eigenvectors_[:, 7]
    assert est.predict(3.0 * psi)[0] == pytest.approx(est.predict(psi)[0], abs=1e-14)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        CtoaSpectrum().transform([0.0])
    with pytest.raises(NotFittedError):
        CtoaSpectrum().predict(np.ones(64))


@pytest.mark.parametrize(
    "kw,exc",
    [
        (dict(potential="cubic"), ValueError),
        (dict(scheme="galerkin"), ValueError),
        (dict(hbar=0.0), ValueError),
        (dict(l=-1.0), ValueError),
        (dict(n_nodes=3.5), TypeError),
        (dict(goursat_grid=True), TypeError),
        (dict(gamma=4.0), ValueError),
        (dict(potential="polynomial"), ValueError),
    ],
)
def test_invalid_params(kw, exc):
    with pytest.raises(exc):
        CtoaSpectrum(**kw).fit()


def test_bad_positions(est):
    with pytest.raises(ValueError):
        est.transform([0.0, 1.5])
    with pytest.raises(ValueError):
        est.transform(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        est.transform([np.nan])


def test_bad_states(est):
    with pytest.raises(ValueError):
        est.predict(np.ones(10))
    with pytest.raises(ValueError):
        est.predict(np.full(64, np.inf))
