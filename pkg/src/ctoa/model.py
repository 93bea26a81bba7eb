"""Physical parameters, potentials, classical arrival times and the local
time-of-arrival (LTOA) series.

All times are measured to the arrival point ``q = 0``. Signs are kept as
they come out of the formulas: a negative value is an arrival in the past
(motion away from the origin).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

__all__ = [
    "PhysicalParams",
    "PotentialSpec",
    "LtoaSeries",
    "NoArrivalError",
    "eval_potential",
    "classical_toa",
    "classical_arrival_ode",
    "ltoa_terms",
    "ltoa_eval",
    "make_potential",
]


class NoArrivalError(ValueError):
    """Raised when the classical path to the origin is forbidden."""


@dataclass(frozen=True)
class PhysicalParams:
    """Mass, Planck constant, box half-width and boundary angle."""

    mu: float = 1.0
    hbar: float = 1.0
    l: float = 1.0
    gamma: float = math.pi / 2

    def __post_init__(self):
        problems = []
        if not self.mu > 0:
            problems.append(f"mu must be > 0, got {self.mu}")
        if not self.hbar > 0:
            problems.append(f"hbar must be > 0, got {self.hbar}")
        if not self.l > 0:
            problems.append(f"l must be > 0, got {self.l}")
        if not abs(self.gamma) < math.pi:
            problems.append(f"|gamma| must be < pi, got {self.gamma}")
        if problems:
            raise ValueError("; ".join(problems))

    def replace(self, **changes) -> "PhysicalParams":
        values = dict(mu=self.mu, hbar=self.hbar, l=self.l, gamma=self.gamma)
        values.update(changes)
        return PhysicalParams(**values)


_POLY_KINDS = ("free", "linear", "harmonic", "polynomial")


@dataclass(frozen=True)
class PotentialSpec:
    """A potential V(q) on the box.

    Use the named constructors (:meth:`free`, :meth:`linear`,
    :meth:`harmonic`, :meth:`polynomial`, :meth:`tabulated`,
    :meth:`from_callable`) rather than the raw initializer.
    ``coeffs`` holds ascending power-series coefficients ``c0, c1, ...``
    for the polynomial kinds.
    """

    kind: str
    coeffs: tuple = ()
    omega: Optional[float] = None
    lam: Optional[float] = None
    q_samples: Optional[tuple] = None
    v_samples: Optional[tuple] = None
    func: Optional[Callable] = field(default=None, compare=False, repr=False)

    @classmethod
    def free(cls) -> "PotentialSpec":
        return cls("free", coeffs=(0.0,))

    @classmethod
    def linear(cls, lam: float, c0: float = 0.0) -> "PotentialSpec":
        return cls("linear", coeffs=(float(c0), float(lam)), lam=float(lam))

    @classmethod
    def harmonic(cls, omega: float, mu: float = 1.0) -> "PotentialSpec":
        return cls(
            "harmonic",
            coeffs=(0.0, 0.0, 0.5 * mu * omega**2),
            omega=float(omega),
        )

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "PotentialSpec":
        coeffs = tuple(float(c) for c in coeffs) or (0.0,)
        return cls("polynomial", coeffs=coeffs)

    @classmethod
    def tabulated(cls, q: Sequence[float], v: Sequence[float]) -> "PotentialSpec":
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if q.ndim != 1 or q.shape != v.shape or q.size < 4:
            raise ValueError("tabulated potential needs >= 4 matching samples")
        if np.any(np.diff(q) <= 0):
            raise ValueError("tabulated sample positions must be increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("tabulated potential values must be finite")
        return cls("tabulated", q_samples=tuple(q), v_samples=tuple(v))

    @classmethod
    def from_callable(cls, func: Callable) -> "PotentialSpec":
        return cls("callable", func=func)

    @property
    def is_polynomial(self) -> bool:
        return self.kind in _POLY_KINDS

    @property
    def degree(self) -> Optional[int]:
        if not self.is_polynomial:
            return None
        nz = [i for i, c in enumerate(self.coeffs) if c != 0.0]
        return max(nz) if nz else 0

    @property
    def is_linear_system(self) -> bool:
        """True for potentials c + a q + b q^2 / 2 (no quantization obstruction)."""
        return self.is_polynomial and self.degree <= 2

    @property
    def is_even(self) -> bool:
        if not self.is_polynomial:
            return False
        return all(c == 0.0 for c in self.coeffs[1::2])

    def _spline(self):
        # cached on first use; frozen dataclass so go through object.__setattr__
        spline = self.__dict__.get("_cached_spline")
        if spline is None:
            spline = CubicSpline(np.array(self.q_samples), np.array(self.v_samples))
            object.__setattr__(self, "_cached_spline", spline)
        return spline

    def __call__(self, q):
        return eval_potential(self, q)

    def derivative_coeffs(self) -> tuple:
        if not self.is_polynomial:
            raise ValueError(f"{self.kind} potential has no polynomial form")
        return tuple(j * c for j, c in enumerate(self.coeffs))[1:] or (0.0,)


def make_potential(kind: str, strength: float = 1.0, coeffs: Optional[Sequence[float]] = None, mu: float = 1.0) -> PotentialSpec:
    """Potential from flat settings, as used by configs and the estimator.

    ``strength`` is omega for ``harmonic`` and lambda for ``linear``;
    ``polynomial`` takes ascending ``coeffs``.
    """
    if kind == "free":
        return PotentialSpec.free()
    if kind == "harmonic":
        return PotentialSpec.harmonic(strength, mu=mu)
    if kind == "linear":
        return PotentialSpec.linear(strength)
    if kind == "polynomial":
        if not coeffs:
            raise ValueError("polynomial potential needs coefficients")
        return PotentialSpec.polynomial(coeffs)
    raise ValueError(f"unknown potential kind {kind!r}")


def eval_potential(V: PotentialSpec, q, *, clip: bool = False):
    """Evaluate ``V(q)``; scalar in, scalar out.

    Tabulated potentials are only defined on their sample range; pass
    ``clip=True`` to clamp positions into it instead of raising.
    """
    qa = np.asarray(q, dtype=float)
    if V.is_polynomial:
        out = np.polynomial.polynomial.polyval(qa, V.coeffs)
    elif V.kind == "tabulated":
        lo, hi = V.q_samples[0], V.q_samples[-1]
        if clip:
            qa = np.clip(qa, lo, hi)
        elif np.any((qa < lo - 1e-12) | (qa > hi + 1e-12)):
            raise ValueError(f"position outside tabulated range [{lo}, {hi}]")
        out = V._spline()(qa)
    elif V.kind == "callable":
        out = np.asarray(V.func(qa), dtype=float)
        if out.shape != qa.shape:
            out = np.broadcast_to(out, qa.shape).copy()
    else:
        raise ValueError(f"unknown potential kind {V.kind!r}")
    if np.ndim(q) == 0:
        return float(out)
    return out


def classical_toa(V: PotentialSpec, params: PhysicalParams, q: float, p: float) -> float:
    """Signed classical arrival time at the origin by quadrature.

    Evaluates ``-sgn(p) sqrt(mu/2) * int_0^q (H - V(q'))^(-1/2) dq'``.
    """
    if p == 0:
        raise ValueError("classical time of arrival undefined at zero momentum")
    mu = params.mu
    energy = p * p / (2 * mu) + eval_potential(V, q)
    if q == 0:
        return 0.0

    # coarse scan for turning points before handing over to quad
    probe = np.linspace(0.0, q, 257)
    kinetic = energy - np.asarray(eval_potential(V, probe))
    if np.any(kinetic <= 0):
        raise NoArrivalError("classically forbidden region between q and the origin")

    def integrand(x):
        k = energy - eval_potential(V, x)
        if k <= 0:
            raise NoArrivalError("classically forbidden region between q and the origin")
        return 1.0 / math.sqrt(k)

    if V.kind == "free" or (V.is_polynomial and V.degree == 0):
        val = q / math.sqrt(energy - V.coeffs[0])
    else:
        # H - V > 0 on the closed path, so the integrand is bounded
        val, _ = integrate.quad(integrand, 0.0, q, epsabs=1e-14, epsrel=1e-13, limit=200)
    return -math.copysign(1.0, p) * math.sqrt(mu / 2.0) * val


def _rk4_step(force, mu, q, p, h):
    k1q, k1p = p / mu, force(q)
    k2q, k2p = (p + 0.5 * h * k1p) / mu, force(q + 0.5 * h * k1q)
    k3q, k3p = (p + 0.5 * h * k2p) / mu, force(q + 0.5 * h * k2q)
    k4q, k4p = (p + h * k3p) / mu, force(q + h * k3q)
    return (
        q + h * (k1q + 2 * k2q + 2 * k3q + k4q) / 6,
        p + h * (k1p + 2 * k2p + 2 * k3p + k4p) / 6,
    )


def _force_of(V: PotentialSpec) -> Callable[[float], float]:
    if V.is_polynomial:
        dcoeffs = V.derivative_coeffs()
        return lambda x: -float(np.polynomial.polynomial.polyval(x, dcoeffs))
    step = 1e-5

    def force(x):
        return -(eval_potential(V, x + step) - eval_potential(V, x - step)) / (2 * step)

    return force


def classical_arrival_ode(
    V: PotentialSpec,
    params: PhysicalParams,
    q0: float,
    p0: float,
    t_max: float,
    n_steps: int = 10_000,
) -> Optional[float]:
    """First time the Hamiltonian trajectory from ``(q0, p0)`` reaches q = 0.

    Fixed-step RK4 with ``h = t_max / n_steps``; the crossing is refined by
    bisection on the step size of a single RK4 step from the last point
    before the sign change. Returns ``None`` when no crossing occurs in
    ``(0, t_max]``.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    h = t_max / n_steps
    if h < 1e-14 * max(1.0, t_max):
        raise ValueError("RK4 step size underflow")
    force = _force_of(V)
    mu = params.mu
    if q0 == 0:
        return 0.0
    q, p, t = float(q0), float(p0), 0.0
    for _ in range(n_steps):
        qn, pn = _rk4_step(force, mu, q, p, h)
        if qn == 0.0:
            return t + h
        if math.copysign(1.0, qn) != math.copysign(1.0, q):
            lo, hi = 0.0, h
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                qm, _ = _rk4_step(force, mu, q, p, mid)
                if math.copysign(1.0, qm) == math.copysign(1.0, q):
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-16 * max(1.0, t):
                    break
            return t + 0.5 * (lo + hi)
        q, p, t = qn, pn, t + h
    return None


@dataclass(frozen=True)
class LtoaSeries:
    """Truncated LTOA series ``sum coeff * q**n * p**(-m)``.

    ``terms`` are ``(n, m, coeff)`` triples with exact :class:`Fraction`
    coefficients; ``order`` is the truncation index K.
    """

    terms: tuple
    order: int

    def as_floats(self):
        return [(n, m, float(c)) for n, m, c in self.terms]


def _poly_to_fractions(coeffs) -> list:
    return [Fraction(c) for c in coeffs]


def ltoa_terms(V: PotentialSpec, K: int, mu: float = 1.0) -> LtoaSeries:
    """Exact LTOA series through order ``K`` for a polynomial potential.

    Runs ``T_0 = -mu q / p`` and
    ``T_k = -mu/p * int_0^q V'(q') d/dp T_{k-1}(q', p) dq'``
    on (power of q, power of 1/p, coefficient) triples, then sums
    ``(-1)**k T_k``.
    """
    if not V.is_polynomial:
        raise ValueError("LTOA recursion needs a polynomial potential")
    if K < 0:
        raise ValueError("truncation order must be >= 0")
    mu_f = Fraction(mu)
    dV = [Fraction(j) * c for j, c in enumerate(_poly_to_fractions(V.coeffs))][1:]

    current = {(1, 1): -mu_f}
    total = dict(current)
    for k in range(1, K + 1):
        nxt: dict = {}
        for (n, m), a in current.items():
            for jm1, dc in enumerate(dV):
                if dc == 0:
                    continue
                # dV has power jm1; d/dp brings -m/p; integrate q^(n+jm1)
                power = n + jm1 + 1
                coeff = mu_f * m * dc * a / power
                key = (power, m + 2)
                nxt[key] = nxt.get(key, Fraction(0)) + coeff
        current = {key: c for key, c in nxt.items() if c != 0}
        sign = -1 if k % 2 else 1
        for key, c in current.items():
            total[key] = total.get(key, Fraction(0)) + sign * c
        if not current:
            break
    terms = tuple(
        (n, m, c) for (n, m), c in sorted(total.items(), key=lambda kv: (kv[0][1], kv[0][0])) if c != 0
    )
    return LtoaSeries(terms=terms, order=K)


def ltoa_eval(series: LtoaSeries, q, p):
    """Numeric value of the series at ``(q, p)``."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr == 0):
        raise ValueError("LTOA has a pole at zero momentum")
    q_arr = np.asarray(q, dtype=float)
    out = np.zeros(np.broadcast(q_arr, p_arr).shape)
    for n, m, c in series.terms:
        out = out + float(c) * q_arr**n * p_arr ** (-m)
    if out.ndim == 0:
        return float(out)
    return out
