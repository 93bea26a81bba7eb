"""Stage functions chained by the command line: kernel, spectrum, evolution."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .config import RunConfig
from .dynamics import EvolutionTrace, crank_nicolson_evolve, detect_arrival, hamiltonian_matrix
from .model import PhysicalParams, PotentialSpec, make_potential
from .operators import CtoaKernel
from .spectral import Nodality, Spectrum, classify_nodal, eigensolve, gauss_legendre, nystrom_interpolate, nystrom_matrix
from .timekernel import TimeKernelField, solve_timekernel

__all__ = ["Stages", "build", "eigenfunction", "nodality", "evolve_eigenfunction", "variance_at", "arrival_summary"]


@dataclass
class Stages:
    cfg: RunConfig
    params: PhysicalParams
    V: PotentialSpec
    field: TimeKernelField
    kernel: CtoaKernel
    spectrum: Spectrum = None


def build(cfg: RunConfig, spectrum: bool = True) -> Stages:
    params = PhysicalParams(mu=cfg.mu, hbar=cfg.hbar, l=cfg.l, gamma=cfg.gamma)
    V = make_potential(cfg.potential, cfg.strength, cfg.coeffs, mu=cfg.mu)
    field_ = solve_timekernel(V, params, n_grid=cfg.goursat_grid)
    st = Stages(cfg, params, V, field_, CtoaKernel(field_, params))
    if spectrum:
        rule = gauss_legendre(cfg.nystrom_n, -cfg.l, cfg.l)
        B = nystrom_matrix(st.kernel, rule, scheme=cfg.scheme)
        st.spectrum = eigensolve(B, rule, st.kernel, scheme=cfg.scheme)
    return st


def eigenfunction(st: Stages, index: int, grid) -> np.ndarray:
    """Eigenfunction ``index`` (table position) on ``grid``, unit norm."""
    sp = st.spectrum
    return nystrom_interpolate(st.kernel, sp.rule, sp, index, grid)


def nodality(st: Stages, index: int) -> Nodality:
    q = np.linspace(-st.cfg.l, st.cfg.l, st.cfg.interp_points)
    return classify_nodal(eigenfunction(st, index, q), q)


def evolve_eigenfunction(st: Stages, n: int, hamiltonian=None, snapshots: bool = True):
    """Evolve the eigenfunction of the n-th positive eigenvalue.

    Returns ``(tau, trace, arrival)``. The time step is ``tau / dt_divisor``
    and the run covers ``run_length * tau``.
    """
    cfg = st.cfg
    i = st.spectrum.index_of(n)
    tau = float(st.spectrum.eigenvalues[i])
    H = hamiltonian or hamiltonian_matrix(st.V, st.params, cfg.dynamics_n)
    psi0 = eigenfunction(st, i, H.grid)
    steps = int(round(cfg.run_length * cfg.dt_divisor))
    trace = crank_nicolson_evolve(H, psi0, tau / cfg.dt_divisor, steps, snapshot_stride=cfg.snapshot_stride if snapshots else 0)
    return tau, trace, detect_arrival(trace)


def variance_at(trace: EvolutionTrace, t: float) -> float:
    return float(np.interp(t, trace.times, trace.var_q))


def arrival_summary(results: Dict[int, tuple]) -> Dict[str, dict]:
    out = {}
    for n, (tau, trace, arr) in sorted(results.items()):
        out[str(n)] = {
            "tau": tau,
            "t_star": arr.t_star,
            "t_star_over_tau": arr.t_star / tau,
            "var_min": arr.var_min,
            "var_at_tau": variance_at(trace, tau),
            "mean_at_t_star": arr.mean_at_t_star,
            "boundary_flag": arr.boundary_flag,
            "norm_drift": float(np.max(np.abs(trace.norm - trace.norm[0]))),
        }
    return out
