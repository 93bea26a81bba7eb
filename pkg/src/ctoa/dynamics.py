"""Confined Schrodinger dynamics with quasi-periodic boundaries.

The grid is ``q_k = -l + k dq``, ``k = 0..N-1``, ``dq = 2l/N``; the point
``q = l`` is the image of ``q = -l`` under the boundary condition
``phi(-l) = exp(-2i gamma) phi(l)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .model import PhysicalParams, PotentialSpec, eval_potential

__all__ = [
    "ConfinedHamiltonian",
    "EvolutionTrace",
    "Arrival",
    "uniform_grid",
    "hamiltonian_matrix",
    "crank_nicolson_evolve",
    "observables",
    "detect_arrival",
]


def uniform_grid(l: float, N: int) -> np.ndarray:
    return -l + (2.0 * l / N) * np.arange(N)


@dataclass
class ConfinedHamiltonian:
    grid: np.ndarray
    matrix: sparse.csc_matrix
    params: PhysicalParams

    @property
    def N(self) -> int:
        return self.grid.size

    @property
    def dq(self) -> float:
        return 2.0 * self.params.l / self.N

    def energy(self, psi) -> float:
        psi = np.asarray(psi)
        return float(np.real(np.vdot(psi, self.matrix @ psi)) / np.real(np.vdot(psi, psi)))


def hamiltonian_matrix(V: PotentialSpec, params: PhysicalParams, N: int = 512) -> ConfinedHamiltonian:
    """Three-point kinetic stencil plus diag V, with phased corner entries."""
    if N < 16:
        raise ValueError("N must be >= 16")
    q = uniform_grid(params.l, N)
    dq = 2.0 * params.l / N
    c = -params.hbar**2 / (2.0 * params.mu * dq * dq)
    off = np.full(N - 1, c, dtype=complex)
    diag = -2.0 * c + np.asarray(eval_potential(V, q), dtype=float)
    H = sparse.diags([off, diag.astype(complex), off], [-1, 0, 1], format="lil")
    H[0, N - 1] = c * np.exp(-2j * params.gamma)
    H[N - 1, 0] = c * np.exp(2j * params.gamma)
    return ConfinedHamiltonian(grid=q, matrix=H.tocsc(), params=params)


@dataclass
class EvolutionTrace:
    times: np.ndarray
    norm: np.ndarray
    mean_q: np.ndarray
    var_q: np.ndarray
    snapshot_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    densities: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    grid: Optional[np.ndarray] = None
    final_state: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return self.times.size


def observables(psi, grid) -> dict:
    """Norm and position moments by Riemann sum."""
    grid = np.asarray(grid, dtype=float)
    dq = grid[1] - grid[0]
    rho = np.abs(np.asarray(psi)) ** 2 * dq
    norm = rho.sum()
    if norm == 0:
        raise ValueError("zero-norm state")
    mean = float(np.dot(grid, rho) / norm)
    var = float(np.dot(grid * grid, rho) / norm - mean * mean)
    return {"norm": float(norm), "mean_q": mean, "var_q": var}


def crank_nicolson_evolve(H: ConfinedHamiltonian, psi0, dt: float, steps: int, snapshot_stride: int = 0) -> EvolutionTrace:
    """Propagate with ``(1 + i dt H / 2hbar) psi' = (1 - i dt H / 2hbar) psi``.

    Observables are recorded at every step including t = 0. A negative
    ``dt`` runs backwards in time.
    """
    if dt == 0:
        raise ValueError("dt must be nonzero")
    psi = np.array(psi0, dtype=complex)
    if psi.shape != (H.N,):
        raise ValueError(f"initial state has shape {psi.shape}, expected ({H.N},)")
    a = 0.5j * dt / H.params.hbar
    eye = sparse.identity(H.N, dtype=complex, format="csc")
    try:
        lu = splinalg.splu((eye + a * H.matrix).tocsc())
    except RuntimeError as exc:
        raise FloatingPointError(f"Crank-Nicolson system is singular: {exc}") from exc
    rhs_op = (eye - a * H.matrix).tocsr()

    norm = np.empty(steps + 1)
    mean = np.empty(steps + 1)
    var = np.empty(steps + 1)
    snaps, snap_t = [], []
    for k in range(steps + 1):
        obs = observables(psi, H.grid)
        norm[k], mean[k], var[k] = obs["norm"], obs["mean_q"], obs["var_q"]
        if snapshot_stride and k % snapshot_stride == 0:
            snaps.append(np.abs(psi) ** 2)
            snap_t.append(k * dt)
        if k < steps:
            psi = lu.solve(rhs_op @ psi)
    return EvolutionTrace(
        times=dt * np.arange(steps + 1),
        norm=norm,
        mean_q=mean,
        var_q=var,
        snapshot_times=np.array(snap_t),
        densities=np.array(snaps) if snaps else np.empty((0, H.N)),
        grid=H.grid,
        final_state=psi,
    )


@dataclass(frozen=True)
class Arrival:
    t_star: float
    var_min: float
    mean_at_t_star: float
    boundary_flag: bool


def detect_arrival(trace: EvolutionTrace) -> Arrival:
    """Variance minimum, refined by a parabola through the bracketing samples."""
    t, var, mean = trace.times, trace.var_q, trace.mean_q
    if t.size < 5:
        raise ValueError("need at least 5 samples")
    i = int(np.argmin(var))
    if i == 0 or i == t.size - 1:
        return Arrival(float(t[i]), float(var[i]), float(mean[i]), True)
    t0, t1, t2 = t[i - 1 : i + 2]
    y0, y1, y2 = var[i - 1 : i + 2]
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    A = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom
    Bc = (t2 * t2 * (y0 - y1) + t1 * t1 * (y2 - y0) + t0 * t0 * (y1 - y2)) / denom
    if A <= 0:
        return Arrival(float(t1), float(y1), float(mean[i]), False)
    ts = -Bc / (2 * A)
    Cc = y1 - A * t1 * t1 - Bc * t1
    vmin = Cc - Bc * Bc / (4 * A)
    m = float(np.interp(ts, t, mean)) if t[1] > t[0] else float(np.interp(ts, t[::-1], mean[::-1]))
    return Arrival(float(ts), float(vmin), m, False)
