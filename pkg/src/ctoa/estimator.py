"""scikit-learn style front door to the kernel -> spectrum pipeline.

``fit`` builds the CTOA kernel and diagonalizes its Nystrom matrix.
``transform`` evaluates eigenfunctions at positions, while ``predict``
returns expected arrival times of states sampled at the nodes.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    POTENTIAL_KINDS,
    SCHEMES,
    check_choice,
    check_gamma,
    check_positions,
    check_positive,
    check_states,
)
from .model import PhysicalParams, make_potential
from .operators import CtoaKernel
from .spectral import _apply_split, eigensolve, gauss_legendre, nystrom_matrix
from .timekernel import solve_timekernel

__all__ = ["CtoaSpectrum"]


class CtoaSpectrum(TransformerMixin, BaseEstimator):
    """Spectrum of the confined time-of-arrival operator.

    Parameters
    ----------
    potential : {"free", "linear", "harmonic", "polynomial"}
    strength : float
        omega for ``harmonic``, lambda for ``linear``.
    coeffs : sequence of float, optional
        Ascending coefficients for ``polynomial``.
    mu, hbar, l, gamma : float
        Mass, Planck constant, box half-width, boundary angle.
    n_nodes : int
        Nystrom (Gauss-Legendre) order.
    scheme : {"split", "plain"}
    goursat_grid : int
        Cells per half axis for numerically solved time kernels.

    Attributes
    ----------
    eigenvalues_ : ndarray of shape (n_nodes,)
        Sorted by magnitude, largest first.
    eigenvectors_ : ndarray of shape (n_nodes, n_nodes)
        Column k holds the eigenfunction values at ``nodes_``.
    nodes_, weights_ : ndarray of shape (n_nodes,)
    field_ : TimeKernelField
    kernel_ : CtoaKernel
    spectrum_ : Spectrum
    """

    def __init__(self, potential="harmonic", strength=1.0, coeffs=None, mu=1.0, hbar=1.0, l=1.0, gamma=math.pi / 2, n_nodes=64, scheme="split", goursat_grid=200):
        self.potential = potential
        self.strength = strength
        self.coeffs = coeffs
        self.mu = mu
        self.hbar = hbar
        self.l = l
        self.gamma = gamma
        self.n_nodes = n_nodes
        self.scheme = scheme
        self.goursat_grid = goursat_grid

    def _validate_params(self):
        check_choice("potential", self.potential, POTENTIAL_KINDS)
        check_choice("scheme", self.scheme, SCHEMES)
        for name in ("mu", "hbar", "l"):
            check_positive(name, getattr(self, name))
        check_positive("n_nodes", self.n_nodes, integer=True)
        check_positive("goursat_grid", self.goursat_grid, integer=True)
        check_gamma(self.gamma)

    def fit(self, X=None, y=None):
        """Build the operator and diagonalize it. ``X`` and ``y`` are ignored."""
        self._validate_params()
        params = PhysicalParams(mu=self.mu, hbar=self.hbar, l=self.l, gamma=self.gamma)
        V = make_potential(self.potential, self.strength, self.coeffs, mu=self.mu)
        self.field_ = solve_timekernel(V, params, n_grid=self.goursat_grid)
        self.kernel_ = CtoaKernel(self.field_, params)
        rule = gauss_legendre(self.n_nodes, -self.l, self.l)
        B = nystrom_matrix(self.kernel_, rule, scheme=self.scheme)
        self.spectrum_ = eigensolve(B, rule, self.kernel_, scheme=self.scheme)
        self.matrix_ = B
        self.nodes_ = rule.nodes
        self.weights_ = rule.weights
        self.eigenvalues_ = self.spectrum_.eigenvalues
        self.eigenvectors_ = self.spectrum_.eigenvectors / np.sqrt(rule.weights)[:, None]
        self.potential_ = V
        self.params_ = params
        return self

    def transform(self, X):
        """Eigenfunctions at positions ``X``, shape (n_samples, n_nodes).

        Column k is extended from its node values by Nystrom interpolation
        and agrees with ``eigenvectors_[:, k]`` on the nodes.
        """
        check_is_fitted(self, "spectrum_")
        q = check_positions(X, self.l)
        rule = self.spectrum_.rule
        if self.scheme == "plain":
            Q, QP = np.meshgrid(q, rule.nodes, indexing="ij")
            vals = np.asarray(self.kernel_(Q, QP)) @ (rule.weights[:, None] * self.eigenvectors_)
        else:
            vals = _apply_split(self.kernel_, rule, q, self.eigenvectors_, max(2 * self.n_nodes, 32))
        with np.errstate(divide="ignore", invalid="ignore"):
            return vals / self.eigenvalues_[None, :]

    def predict(self, X):
        """``<psi|T|psi> / <psi|psi>`` for states given by their node values."""
        check_is_fitted(self, "spectrum_")
        psi = check_states(X, self.n_nodes) * np.sqrt(self.weights_)[None, :]
        num = np.einsum("ni,ij,nj->n", psi.conj(), self.matrix_, psi).real
        return num / np.sum(np.abs(psi) ** 2, axis=1)

    def positive_eigenvalue(self, n: int) -> float:
        """The n-th largest positive eigenvalue (n counts from 1)."""
        check_is_fitted(self, "spectrum_")
        return float(self.eigenvalues_[self.spectrum_.index_of(n)])
