"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

import math
import numbers

import numpy as np
from sklearn.utils.validation import check_array

POTENTIAL_KINDS = ("free", "linear", "harmonic", "polynomial")
SCHEMES = ("split", "plain")


def check_positive(name, value, integer=False):
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(value, bool) or not isinstance(value, kind):
        raise TypeError(f"{name} must be {'an integer' if integer else 'a real number'}, got {value!r}")
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value


def check_gamma(gamma):
    if not isinstance(gamma, numbers.Real) or not -math.pi < gamma < math.pi:
        raise ValueError(f"gamma must lie in (-pi, pi), got {gamma!r}")
    return float(gamma)


def check_choice(name, value, choices):
    if value not in choices:
        raise ValueError(f"{name} must be one of {', '.join(choices)}; got {value!r}")
    return value


def check_positions(X, l):
    """1-D positions inside [-l, l]; accepts shape (n,) or (n, 1)."""
    X = check_array(np.asarray(X, dtype=float).reshape(-1, 1) if np.ndim(X) <= 1 else X, ensure_2d=True)
    if X.shape[1] != 1:
        raise ValueError(f"positions must have one feature, got {X.shape[1]}")
    q = X[:, 0]
    if np.any(np.abs(q) > l * (1 + 1e-12)):
        raise ValueError(f"positions must lie in [-{l}, {l}]")
    return q


def check_states(X, n_nodes):
    """Wavefunction samples at the quadrature nodes, one state per row."""
    # check_array refuses complex input, so this one is done by hand
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("states must be a non-empty 2-D array")
    if not np.all(np.isfinite(X)):
        raise ValueError("states contain NaN or infinity")
    if X.shape[1] != n_nodes:
        raise ValueError(f"states must have {n_nodes} node values, got {X.shape[1]}")
    return X
