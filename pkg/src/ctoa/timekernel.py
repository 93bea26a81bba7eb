"""The two-point time kernel T(q, q').

Every CTOA kernel is built from a real, symmetric function T(q, q') that
solves

    -(hbar^2/2mu) T_qq + (hbar^2/2mu) T_q'q' + (V(q) - V(q')) T = 0,
    T(q, q) = q/2,   T(q, -q) = 0.

In characteristic coordinates ``u = q + q'`` and ``v = q - q'`` this is the
Goursat problem

    T_uv = (mu / 2 hbar^2) [V((u+v)/2) - V((u-v)/2)] T,
    T(u, 0) = u/4,   T(0, v) = 0.

Linear systems (free, linear, harmonic) have closed forms; anything else
goes through :func:`goursat_solve`.
"""
from __future__ import annotations

import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .model import PhysicalParams, PotentialSpec, eval_potential

__all__ = [
    "TimeKernelField",
    "closed_form_timekernel",
    "goursat_solve",
    "solve_timekernel",
    "kernel_eval",
    "pde_residual",
    "truncation_bound",
    "linear_system_kind",
    "save_field",
    "load_field",
]

logger = logging.getLogger(__name__)

# Taylor switch (in units of l) for the removable v -> 0 singularity of sinh(x)/x
_TAYLOR_SWITCH = 1e-4


@dataclass
class TimeKernelField:
    """T sampled on the characteristic square ``[-2l, 2l]^2``.

    ``values[i, j]`` is T at ``u = u_axis[i]``, ``v = v_axis[j]``. Only the
    diamond ``|u| + |v| <= 2l`` corresponds to points of the box; the rest
    is padding that keeps interpolation near the diamond edge centred.
    ``exact`` is set for closed forms and is used by :func:`kernel_eval`
    instead of the spline.
    """

    l: float
    u_axis: np.ndarray
    v_axis: np.ndarray
    values: np.ndarray
    source: str
    exact: Optional[Callable] = field(default=None, repr=False)
    _spline: Optional[RectBivariateSpline] = field(default=None, repr=False)

    @property
    def h_u(self) -> float:
        return float(self.u_axis[1] - self.u_axis[0])

    @property
    def h_v(self) -> float:
        return float(self.v_axis[1] - self.v_axis[0])

    @property
    def diamond_mask(self) -> np.ndarray:
        U, W = np.meshgrid(self.u_axis, self.v_axis, indexing="ij")
        return np.abs(U) + np.abs(W) <= 2 * self.l * (1 + 1e-12)

    def spline(self) -> RectBivariateSpline:
        if self._spline is None:
            self._spline = RectBivariateSpline(self.u_axis, self.v_axis, self.values, kx=3, ky=3, s=0)
        return self._spline

    def evaluate_uv(self, u, v):
        """T at characteristic coordinates (no symmetrization, no domain check)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.exact is not None:
            return self.exact(u, v)
        shape = np.broadcast(u, v).shape
        ub, vb = np.broadcast_to(u, shape).ravel(), np.broadcast_to(v, shape).ravel()
        return self.spline().ev(ub, vb).reshape(shape)


def linear_system_kind(V: PotentialSpec):
    """Map a degree <= 2 potential onto ('free'|'linear'|'harmonic', strength)."""
    if not V.is_linear_system:
        return None
    c = V.coeffs + (0.0,) * (3 - len(V.coeffs))
    a, b = c[1], 2.0 * c[2]
    if a == 0.0 and b == 0.0:
        return ("free", 0.0)
    if b == 0.0:
        return ("linear", a)
    if a == 0.0 and b > 0:
        return ("harmonic", b)  # b = mu * omega^2, resolved with mu later
    return None


def _harmonic_exact(mu, hbar, omega, l):
    alpha = mu * omega / (2.0 * hbar)
    switch = _TAYLOR_SWITCH * l

    def T(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        x = alpha * u * v
        small = np.abs(v) < switch
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = np.sinh(x) / (4.0 * alpha * v)
        x2 = x * x
        # sinh(x)/x to x^8
        series = 1 + x2 / 6 * (1 + x2 / 20 * (1 + x2 / 42 * (1 + x2 / 72)))
        return np.where(small, 0.25 * u * series, direct)

    return T


def _linear_exact(mu, hbar, lam):
    kappa = mu * lam / (2.0 * hbar**2)

    def T(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        z = 0.5 * kappa * u * v * v
        total = np.ones(np.broadcast(u, v).shape)
        term = np.ones_like(total)
        for n in range(200):
            term = term * z / ((n + 1) * (n + 2))
            total = total + term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        return 0.25 * u * total

    return T


def _free_exact(u, v):
    u = np.asarray(u, dtype=float)
    return 0.25 * u + 0.0 * np.asarray(v, dtype=float)


def _axes(l, n_grid):
    """Symmetric axes on [-2l, 2l] with ``n_grid`` cells per half axis."""
    idx = np.arange(-n_grid, n_grid + 1)
    h = 2.0 * l / n_grid
    return idx * h, h


def closed_form_timekernel(kind, params: PhysicalParams, strength: float = 0.0, n_grid: int = 100) -> TimeKernelField:
    """Exact T for a linear system.

    ``kind`` is ``'free'``, ``'linear'`` (``strength`` = lambda) or
    ``'harmonic'`` (``strength`` = omega). A :class:`PotentialSpec` is also
    accepted. The returned field carries the exact evaluator plus a sampled
    grid with ``n_grid`` cells per half axis for export and residual checks.
    """
    if isinstance(kind, PotentialSpec):
        V = kind
        if V.kind in ("free", "linear", "harmonic"):
            kind, strength = V.kind, {"free": 0.0, "linear": V.lam, "harmonic": V.omega}[V.kind]
        else:
            resolved = linear_system_kind(V)
            if resolved is None:
                raise ValueError("potential has degree above two; no closed form")
            kind, strength = resolved
            if kind == "harmonic":
                strength = math.sqrt(strength / params.mu)
    mu, hbar = params.mu, params.hbar
    if kind == "free":
        exact = _free_exact
    elif kind == "harmonic":
        exact = _harmonic_exact(mu, hbar, float(strength), params.l)
    elif kind == "linear":
        exact = _linear_exact(mu, hbar, float(strength))
    else:
        raise ValueError(f"no closed form for {kind!r}")
    axis, _ = _axes(params.l, n_grid)
    U, W = np.meshgrid(axis, axis, indexing="ij")
    return TimeKernelField(
        l=params.l,
        u_axis=axis,
        v_axis=axis.copy(),
        values=exact(U, W),
        source=f"closed-form:{kind}",
        exact=exact,
    )


def goursat_solve(V: PotentialSpec, params: PhysicalParams, n_grid: int = 200, sweeps: int = 2) -> TimeKernelField:
    """Solve for T by second-order characteristic marching.

    Each cell of the (u, v) lattice is closed by the trapezoidal Goursat
    stencil

        T[i+1, j+1] = T[i+1, j] + T[i, j+1] - T[i, j] + hu*hv * G_mid * T_mid

    with ``G`` the source at the cell centre and ``T_mid`` refined by
    ``sweeps`` fixed-point passes. Cells sharing an anti-diagonal are
    independent and are updated together. Only the ``v >= 0`` half is
    marched; ``v < 0`` is its mirror image, which makes evenness in v exact.
    """
    if n_grid < 16:
        raise ValueError("n_grid must be >= 16")
    l, mu, hbar = params.l, params.mu, params.hbar
    analytic = V.is_polynomial
    if not analytic and V.kind == "tabulated":
        logger.warning("tabulated potential: only continuity is assumed; kernel smoothness may be reduced")
    scale = mu / (2.0 * hbar**2)
    n = n_grid
    h = 2.0 * l / n

    def source(u, v):
        a, b = 0.5 * (u + v), 0.5 * (u - v)
        if analytic:
            va, vb = eval_potential(V, a), eval_potential(V, b)
        else:
            # outside the box the marching only fills interpolation padding
            va, vb = eval_potential(V, np.clip(a, -l, l), clip=True), eval_potential(V, np.clip(b, -l, l), clip=True)
        return scale * (np.asarray(va) - np.asarray(vb))

    halves = []
    for su in (1.0, -1.0):
        T = np.zeros((n + 1, n + 1))
        T[:, 0] = 0.25 * su * h * np.arange(n + 1)
        T[0, :] = 0.0
        cell = np.arange(n) + 0.5
        Gmid = source(su * h * cell[:, None], h * cell[None, :])
        if not np.all(np.isfinite(Gmid)):
            raise FloatingPointError("potential evaluation produced non-finite values")
        area = (su * h) * h
        for d in range(2 * n - 1):
            i = np.arange(max(0, d - n + 1), min(d, n - 1) + 1)
            j = d - i
            a, b, c = T[i, j], T[i + 1, j], T[i, j + 1]
            g = area * Gmid[i, j]
            mid = 0.5 * (b + c)
            new = b + c - a + g * mid
            for _ in range(sweeps):
                mid = 0.25 * (a + b + c + new)
                new = b + c - a + g * mid
            T[i + 1, j + 1] = new
        if not np.all(np.isfinite(T)):
            raise FloatingPointError("Goursat marching diverged")
        halves.append(T)

    pos, neg = halves
    # assemble u from -2l..2l, v from 0..2l, then mirror in v
    upper = np.vstack([neg[:0:-1], pos])
    full = np.hstack([upper[:, :0:-1], upper])
    axis, _ = _axes(l, n)
    return TimeKernelField(
        l=l,
        u_axis=axis,
        v_axis=axis.copy(),
        values=full,
        source=f"goursat:{V.kind}:n={n}",
    )


def solve_timekernel(V: PotentialSpec, params: PhysicalParams, n_grid: int = 200) -> TimeKernelField:
    """Closed form for potentials of degree <= 2, Goursat otherwise."""
    if linear_system_kind(V) is not None or V.kind in ("free", "linear", "harmonic"):
        return closed_form_timekernel(V, params, n_grid=n_grid)
    return goursat_solve(V, params, n_grid=n_grid)


def _check_box(field_: TimeKernelField, q, qp):
    tol = 1e-12 * field_.l
    if np.any(np.abs(q) > field_.l + tol) or np.any(np.abs(qp) > field_.l + tol):
        raise ValueError(f"point outside [-{field_.l}, {field_.l}]^2")


def kernel_eval(field_: TimeKernelField, q, qp, check: bool = True):
    """T(q, q'), symmetrized as (T(q,q') + T(q',q)) / 2."""
    q = np.asarray(q, dtype=float)
    qp = np.asarray(qp, dtype=float)
    if check:
        _check_box(field_, q, qp)
    u, v = q + qp, q - qp
    out = 0.5 * (field_.evaluate_uv(u, v) + field_.evaluate_uv(u, -v))
    if np.ndim(out) == 0:
        return float(out)
    return out


def _d2(f, h):
    """4th-order centred second difference of ``f(offset)``."""
    return (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h)


def pde_residual(field_: TimeKernelField, V: PotentialSpec, params: PhysicalParams, n_points: int = 200):
    """Max |PDE residual| over interior points of the box.

    Fields with an exact evaluator are differenced on an ``n_points``
    square grid in (q, q') with 5-point centred stencils. Sampled fields
    are differenced on their own lattice with the 3x3 cross stencil, where a
    (q, q') step equal to the lattice spacing lands on grid nodes.
    """
    mu, hbar, l = params.mu, params.hbar, params.l
    c = hbar**2 / (2.0 * mu)
    if field_.exact is not None:
        if n_points < 5:
            raise ValueError("need at least 5 points per direction")
        x = np.linspace(-l, l, n_points)
        h = x[1] - x[0]
        Q, QP = np.meshgrid(x[1:-1], x[1:-1], indexing="ij")
        T = lambda a, b: field_.evaluate_uv(a + b, a - b)  # noqa: E731
        d2q = _d2(lambda s: T(Q + s, QP), h)
        d2qp = _d2(lambda s: T(Q, QP + s), h)
        dV = np.asarray(eval_potential(V, Q, clip=True)) - np.asarray(eval_potential(V, QP, clip=True))
        res = -c * d2q + c * d2qp + dV * T(Q, QP)
        return float(np.max(np.abs(res)))
    res, interior = _lattice_residual(field_, V, params)
    return float(np.max(np.abs(res[interior])))


def _lattice_residual(field_, V, params):
    c = params.hbar**2 / (2.0 * params.mu)
    h = field_.h_u
    T = field_.values
    U, W = np.meshgrid(field_.u_axis, field_.v_axis, indexing="ij")
    inner = (slice(1, -1), slice(1, -1))
    # equals T_qq - T_q'q' for a (q, q') step of h
    cross = (T[2:, 2:] + T[:-2, :-2] - T[2:, :-2] - T[:-2, 2:]) / h**2
    q, qp = 0.5 * (U + W)[inner], 0.5 * (U - W)[inner]
    dV = np.asarray(eval_potential(V, q, clip=True)) - np.asarray(eval_potential(V, qp, clip=True))
    res = -c * cross + dV * T[inner]
    # the whole 3x3 stencil must lie in the box
    interior = np.abs(U[inner]) + np.abs(W[inner]) <= 2 * params.l - 2 * h * (1 - 1e-9)
    return res, interior


def truncation_bound(field_: TimeKernelField, V: PotentialSpec, params: PhysicalParams, safety: float = 2.0) -> float:
    """A-priori truncation estimate for the lattice residual of a sampled field.

    The cross stencil compares F = (V(q) - V(q')) T at a node with the mean
    of F over the four adjacent cell centres, where T itself is a corner
    average. Both are O(h^2) Laplacian errors:
    ``(h^2/8) (|lap F| + |dV| |lap T|)``.
    """
    h = field_.h_u
    T = field_.values
    U, W = np.meshgrid(field_.u_axis, field_.v_axis, indexing="ij")
    q, qp = 0.5 * (U + W), 0.5 * (U - W)
    dV = np.asarray(eval_potential(V, q, clip=True)) - np.asarray(eval_potential(V, qp, clip=True))
    F = dV * T

    def lap(A):
        return (A[2:, 1:-1] + A[:-2, 1:-1] + A[1:-1, 2:] + A[1:-1, :-2] - 4 * A[1:-1, 1:-1]) / h**2

    inner = (slice(1, -1), slice(1, -1))
    est = (h**2 / 8) * (np.abs(lap(F)) + np.abs(dV[inner]) * np.abs(lap(T)))
    interior = np.abs(U[inner]) + np.abs(W[inner]) <= 2 * params.l - 2 * h * (1 - 1e-9)
    return float(safety * np.max(est[interior]))


def save_field(field_: TimeKernelField, path) -> None:
    """CSV grid dump: one header line, then row-major values (rows = u)."""
    n_u, n_v = field_.values.shape
    with open(path, "w") as fh:
        fh.write(f"# l={field_.l!r},h_u={field_.h_u!r},h_v={field_.h_v!r},n_u={n_u},n_v={n_v},source={field_.source}\n")
        buf = io.StringIO()
        np.savetxt(buf, field_.values, delimiter=",", fmt="%.17g")
        fh.write(buf.getvalue())


def load_field(path) -> TimeKernelField:
    with open(path) as fh:
        header = fh.readline()
    if not header.startswith("#"):
        raise ValueError(f"{os.fspath(path)}: missing grid header")
    meta = dict(item.split("=", 1) for item in header[1:].strip().split(","))
    l = float(meta["l"])
    n_u, n_v = int(meta["n_u"]), int(meta["n_v"])
    values = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if values.shape != (n_u, n_v):
        raise ValueError(f"grid shape {values.shape} does not match header {(n_u, n_v)}")
    h_u, h_v = float(meta["h_u"]), float(meta["h_v"])
    u_axis = (np.arange(n_u) - (n_u - 1) // 2) * h_u
    v_axis = (np.arange(n_v) - (n_v - 1) // 2) * h_v
    if n_u == n_v and n_u % 2 == 1:
        # grids written by this module: rebuild the axes bit for bit
        axis, h = _axes(l, (n_u - 1) // 2)
        if math.isclose(h, h_u, rel_tol=1e-12) and math.isclose(h, h_v, rel_tol=1e-12):
            u_axis, v_axis = axis, axis.copy()
    return TimeKernelField(l=l, u_axis=u_axis, v_axis=v_axis, values=values, source=meta.get("source", "loaded"))
