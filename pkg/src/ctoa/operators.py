"""CTOA integral-operator kernels <q|T_gamma|q'>.

For gamma != 0 (non-periodic)::

    K(q, q') = -mu T(q, q') / (hbar sin gamma) * (e^{i gamma} H(q - q') + e^{-i gamma} H(q' - q))

and for gamma = 0 (periodic)::

    K(q, q') = (mu / i hbar) T(q, q') sgn(q - q')
               - (mu / i l hbar) int_0^{q - q'} T(c + s/2, c - s/2) ds,   c = (q + q')/2.

On the diagonal H(0) = 1/2 and sgn(0) = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import LtoaSeries, PhysicalParams
from .timekernel import TimeKernelField, kernel_eval

__all__ = [
    "CtoaKernel",
    "ctoa_kernel_nonperiodic",
    "ctoa_kernel_periodic",
    "weyl_term_kernel",
    "weyl_series_kernel",
    "hermiticity_defect",
    "heaviside",
]


def _finish(out):
    return complex(out) if np.ndim(out) == 0 else out


def heaviside(x):
    return np.heaviside(x, 0.5)


@dataclass(frozen=True)
class CtoaKernel:
    """A CTOA kernel bound to a time-kernel field and physical parameters.

    Calling the kernel dispatches on ``params.gamma``: the periodic branch
    for ``gamma == 0`` and the non-periodic one otherwise. ``order`` is
    the Gauss-Legendre order of the relative integral in the periodic
    branch.
    """

    field: TimeKernelField
    params: PhysicalParams
    order: int = 16

    @property
    def periodic(self) -> bool:
        return self.params.gamma == 0.0

    def __call__(self, q, qp):
        if self.periodic:
            return ctoa_kernel_periodic(self, q, qp)
        return ctoa_kernel_nonperiodic(self, q, qp)

    def sample(self, n: int):
        """Uniform n x n sample of the kernel over the box."""
        x = np.linspace(-self.params.l, self.params.l, n)
        Q, QP = np.meshgrid(x, x, indexing="ij")
        return x, self(Q, QP)


def ctoa_kernel_nonperiodic(k: CtoaKernel, q, qp):
    gamma = k.params.gamma
    if gamma == 0.0:
        raise ValueError("gamma = 0 has no non-periodic kernel; use the periodic branch")
    mu, hbar = k.params.mu, k.params.hbar
    q = np.asarray(q, dtype=float)
    qp = np.asarray(qp, dtype=float)
    T = kernel_eval(k.field, q, qp)
    bracket = np.exp(1j * gamma) * heaviside(q - qp) + np.exp(-1j * gamma) * heaviside(qp - q)
    out = -mu * T / (hbar * math.sin(gamma)) * bracket
    return _finish(out)


def _relative_integral(field_: TimeKernelField, q, qp, order: int):
    """int_0^{q-q'} T(c + s/2, c - s/2) ds at fixed centre c = (q+q')/2."""
    x, w = np.polynomial.legendre.leggauss(order)
    u = (q + qp)[..., None]
    v = (q - qp)[..., None]
    s = 0.5 * v * (x + 1.0)
    # point pairs (c + s/2, c - s/2) are (u, s) in characteristic coordinates
    vals = 0.5 * (field_.evaluate_uv(u, s) + field_.evaluate_uv(u, -s))
    return 0.5 * (q - qp) * np.sum(vals * w, axis=-1)


def ctoa_kernel_periodic(k: CtoaKernel, q, qp):
    mu, hbar, l = k.params.mu, k.params.hbar, k.params.l
    q = np.asarray(q, dtype=float)
    qp = np.asarray(qp, dtype=float)
    q, qp = np.broadcast_arrays(q, qp)
    T = kernel_eval(k.field, q, qp)
    rel = _relative_integral(k.field, q, qp, k.order)
    out = (mu / (1j * hbar)) * T * np.sign(q - qp) - (mu / (1j * l * hbar)) * rel
    return _finish(out)


def weyl_term_kernel(s: int, n: int, gamma: float, params: PhysicalParams, q, qp):
    """Kernel of the Weyl-ordered term T_{2s+1, n} projected on the box.

    The periodic branch carries 1/l on the relative term only, which keeps
    both terms in the units of the non-periodic kernel.
    """
    if s < 0 or n < 0:
        raise ValueError("s and n must be non-negative")
    hbar, l = params.hbar, params.l
    q = np.asarray(q, dtype=float)
    qp = np.asarray(qp, dtype=float)
    centre = ((q + qp) / 2.0) ** n
    sep = q - qp
    sign = (-1.0) ** s
    if gamma != 0.0:
        bracket = np.exp(1j * gamma) * heaviside(sep) + np.exp(-1j * gamma) * heaviside(-sep)
        out = centre * sign * sep ** (2 * s) / (hbar ** (2 * s + 1) * math.factorial(2 * s)) * bracket
        out = out / (2.0 * math.sin(gamma))
    else:
        pref = 1j * sign / (2.0 * hbar ** (2 * s + 1))
        out = pref * centre * sep ** (2 * s) / math.factorial(2 * s) * np.sign(sep)
        out = out - pref / l * centre * sep ** (2 * s + 1) / math.factorial(2 * s + 1)
    return _finish(out)


def weyl_series_kernel(series: LtoaSeries, gamma: float, params: PhysicalParams, q, qp):
    """Sum of coeff * kernel(T_{m,n}) over an LTOA series (all m odd)."""
    total = 0.0
    for n, m, coeff in series.terms:
        if m % 2 != 1:
            raise ValueError(f"term with even power of 1/p: m={m}")
        total = total + float(coeff) * weyl_term_kernel((m - 1) // 2, n, gamma, params, q, qp)
    return total


def hermiticity_defect(kernel, n: int = 64) -> float:
    """max |K(q, q') - conj K(q', q)| on a uniform n x n sample of the box.

    ``kernel`` may be a :class:`CtoaKernel` or any callable ``K(q, q')``
    together with an ``l`` attribute or a box of half-width 1.
    """
    if n < 2:
        raise ValueError("need at least a 2 x 2 sample")
    l = kernel.params.l if hasattr(kernel, "params") else getattr(kernel, "l", 1.0)
    x = np.linspace(-l, l, n)
    Q, QP = np.meshgrid(x, x, indexing="ij")
    K = np.asarray(kernel(Q, QP))
    return float(np.max(np.abs(K - np.conj(K.T))))
