"""Command line: ``ctoa <command> [--config FILE] [--preset NAME] [--out DIR] [--index N ...]``.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical
failure, 3 a verification or acceptance check failed. Failures also leave
``error.json`` in the output directory.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io, pipeline
from .config import ConfigError, RunConfig, dump_config, parse_config, preset
from .model import ltoa_eval, ltoa_terms
from .operators import hermiticity_defect
from .dynamics import hamiltonian_matrix
from .spectral import Nodality, classify_nodal
from .timekernel import pde_residual, save_field, solve_timekernel, truncation_bound
from .verify import CheckResult, TestFunction, weak_ccr_defect, wigner_transform, write_report

log = logging.getLogger("ctoa")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3
THREADS_ENV = "CTOA_NUM_THREADS"

# caption values the fig1 summary is checked against
FIG1_TAUS = (0.0336, 0.0303)
FIG1_TOL = 1e-3


class UsageError(Exception):
    pass


def _dump_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- commands ---------------------------------------------------------------


def cmd_kernel(cfg: RunConfig, out: Path, args) -> int:
    st = pipeline.build(cfg, spectrum=False)
    save_field(st.field, out / "kernel_field.csv")
    x, K = st.kernel.sample(65)
    io.write_kernel_sample(out / "kernel_sample.csv", x, K)
    report = {
        "source": st.field.source,
        "pde_residual": pde_residual(st.field, st.V, st.params),
        "hermiticity_defect": hermiticity_defect(st.kernel),
    }
    if st.field.exact is None:
        report["truncation_bound"] = truncation_bound(st.field, st.V, st.params)
        report["residual_within_bound"] = report["pde_residual"] <= report["truncation_bound"]
    _dump_json(out / "kernel_report.json", report)
    return EXIT_OK


def _spectrum_outputs(st, out: Path):
    sp = st.spectrum
    q = np.linspace(-st.cfg.l, st.cfg.l, st.cfg.interp_points)
    nodal = {}
    for i in range(min(st.cfg.export_count, len(sp))):
        phi = pipeline.eigenfunction(st, i, q)
        nodal[i] = classify_nodal(phi, q).value
        io.write_eigenfunction(out / f"eigenfunction_{i:03d}.csv", q, phi)
    io.write_spectrum(out / "spectrum.csv", sp, nodal)
    return nodal


def cmd_spectrum(cfg: RunConfig, out: Path, args) -> int:
    st = pipeline.build(cfg)
    _spectrum_outputs(st, out)
    return EXIT_OK


def _indices(cfg, args):
    return tuple(args.index) if args.index else cfg.indices


def cmd_evolve(cfg: RunConfig, out: Path, args) -> int:
    st = pipeline.build(cfg)
    n_pos = st.spectrum.positive_indices().size
    bad = [n for n in _indices(cfg, args) if not 1 <= n <= n_pos]
    if bad:
        raise UsageError(f"index {bad[0]} out of range: {n_pos} positive eigenvalues available")
    H = hamiltonian_matrix(st.V, st.params, cfg.dynamics_n)
    results = {}
    for n in _indices(cfg, args):
        res = pipeline.evolve_eigenfunction(st, n, hamiltonian=H)
        io.write_trace(out / f"trace_n{n}.csv", res[1])
        io.write_density(out / f"density_n{n}.csv", res[1])
        results[n] = res
    _dump_json(out / "arrivals.json", pipeline.arrival_summary(results))
    return EXIT_OK


def verification_checks(cfg: RunConfig):
    """Checks for the configured system; see README for the list."""
    st = pipeline.build(cfg)
    p, V, tol = st.params, st.V, cfg.ccr_tol
    checks = []

    herm = hermiticity_defect(st.kernel)
    checks.append(CheckResult("hermiticity", herm, 1e-12, herm <= 1e-12))

    if V.is_even and math.isclose(p.gamma, math.pi / 2):
        tau = st.spectrum.eigenvalues
        pos, neg = np.sort(tau[tau > 0]), np.sort(-tau[tau < 0])
        gap = float(np.max(np.abs(pos - neg))) if pos.size == neg.size else math.inf
        checks.append(CheckResult("spectrum_symmetry", gap, 1e-10, gap < 1e-10))

    if p.gamma != 0.0:
        f = TestFunction(4, (1.0, 0.3), p.l)
        g = TestFunction(4, (0.5, -0.2, 0.4j), p.l)
        d = weak_ccr_defect(st.kernel, V, p, f, g, n=cfg.ccr_nodes, tol=tol)
        checks.append(CheckResult("weak_ccr", abs(d.value), tol, abs(d.value) < tol and not d.under_resolved, f"refined {abs(d.refined):.3e}"))
        f0, g0 = TestFunction(0, (1.0, 0.3), p.l), TestFunction(0, (0.5, 1.0), p.l)
        d0 = abs(weak_ccr_defect(st.kernel, V, p, f0, g0, n=cfg.ccr_nodes, tol=tol).value)
        checks.append(CheckResult("weak_ccr_negative_control", d0, 10 * tol, d0 >= 10 * tol, "boundary-violating functions must fail"))

    kind = st.field.source
    if kind == "closed-form:free":
        q, pp = 0.5 * p.l, 2.0
        w = wigner_transform(st.field, p, q, pp)
        err = abs(w + p.mu * q / pp)
        checks.append(CheckResult("wigner_free", err, 1e-6, err < 1e-6))
    elif kind.startswith("closed-form"):
        series = ltoa_terms(V, 20, mu=p.mu)
        errs = []
        for q, pp in _wigner_grid(cfg):
            errs.append(abs(wigner_transform(st.field, p, q, pp) - ltoa_eval(series, q, pp)))
        err = max(errs)
        checks.append(CheckResult("wigner_ltoa", err, 1e-3, err < 1e-3))
    else:
        ratio = hbar_scaling_ratio(V, p, cfg.goursat_grid)
        checks.append(CheckResult("wigner_hbar_scaling", ratio, 1.0, abs(ratio - 4.0) <= 1.0, "D(hbar)/D(hbar/2) at q=0.3 l, p=2"))
    return checks


def _wigner_grid(cfg):
    l = cfg.l
    if cfg.potential == "linear":
        # keep mu lam q / p^2 small, where the local series converges fast
        pts = [(q * l, pp) for q in (-0.3, -0.1, 0.1, 0.3) for pp in (1.5, 2.0, -2.0)]
        return [(q, pp) for q, pp in pts if abs(cfg.mu * cfg.strength * q / pp**2) <= 0.2]
    pts = [(q * l, pp) for q in (-0.4, -0.2, 0.1, 0.3, 0.45) for pp in (-1.0, 1.0, 1.5, 2.0)]
    return [(q, pp) for q, pp in pts if abs(cfg.mu * cfg.strength * q / pp) < 0.5]


def hbar_scaling_ratio(V, params, n_grid, q=None, p=2.0):
    """``D(hbar) / D(hbar/2)`` with ``D = |wigner - LTOA|``; the field is re-solved per hbar."""
    q = 0.3 * params.l if q is None else q
    series = ltoa_terms(V, 20, mu=params.mu)
    D = []
    for h in (params.hbar, 0.5 * params.hbar):
        ph = params.replace(hbar=h)
        D.append(abs(wigner_transform(solve_timekernel(V, ph, n_grid=max(n_grid, 400)), ph, q, p) - ltoa_eval(series, q, p)))
    return D[0] / D[1]


def cmd_verify(cfg: RunConfig, out: Path, args) -> int:
    checks = verification_checks(cfg)
    write_report(checks, out / "verification.json")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


def fig1_summary(cfg: RunConfig, out: Path = None):
    """Checks on the eigenvalue pair shown in the figure."""
    st = pipeline.build(cfg)
    sp = st.spectrum
    pos = sp.positive_indices()
    taus = sp.eigenvalues[pos]
    # adjacent positive pair closest to the caption values
    k = int(np.argmin([abs(taus[j] - FIG1_TAUS[0]) + abs(taus[j + 1] - FIG1_TAUS[1]) for j in range(taus.size - 1)]))
    ns = (k + 1, k + 2)
    H = hamiltonian_matrix(st.V, st.params, cfg.dynamics_n)
    results, checks = {}, []
    for n, ref in zip(ns, FIG1_TAUS):
        tau = float(taus[n - 1])
        checks.append(CheckResult(f"tau_n{n}", tau, FIG1_TOL, abs(tau - ref) <= FIG1_TOL, f"reference {ref}"))
    labels = {n: pipeline.nodality(st, sp.index_of(n)) for n in ns}
    checks.append(CheckResult(f"n{ns[0]}_non_nodal", 0.0, 0.0, labels[ns[0]] is Nodality.NON_NODAL, labels[ns[0]].value))
    checks.append(CheckResult(f"n{ns[1]}_nodal", 0.0, 0.0, labels[ns[1]] is Nodality.NODAL, labels[ns[1]].value))
    for n in ns:
        tau, trace, arr = results[n] = pipeline.evolve_eigenfunction(st, n, hamiltonian=H)
        r = arr.t_star / tau
        checks.append(CheckResult(f"arrival_n{n}", r, 0.1, (not arr.boundary_flag) and abs(r - 1) <= 0.1, "t_star / tau"))
        checks.append(CheckResult(f"mean_at_arrival_n{n}", abs(arr.mean_at_t_star), 0.05, abs(arr.mean_at_t_star) < 0.05))
        if out is not None:
            io.write_density(out / f"density_n{n}.csv", trace)
            io.write_rows(out / f"variance_n{n}.csv", ["t", "var_q"], zip(trace.times, trace.var_q))
    summary = {
        "eigenvalues": {str(n): float(taus[n - 1]) for n in ns},
        "nodality": {str(n): labels[n].value for n in ns},
        "arrivals": pipeline.arrival_summary(results),
        "checks": [c.__dict__ for c in checks],
        "passed": all(c.passed for c in checks),
    }
    return summary


def cmd_reproduce_fig1(cfg: RunConfig, out: Path, args) -> int:
    summary = fig1_summary(cfg, out)
    _dump_json(out / "summary.json", summary)
    return EXIT_OK if summary["passed"] else EXIT_CHECK


COMMANDS = {
    "kernel": cmd_kernel,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
    "reproduce-fig1": cmd_reproduce_fig1,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="ctoa", description="Confined time-of-arrival operators: kernels, spectra, dynamics.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--preset", help="fig1-harmonic, linear-lambda1 or free-box")
    ap.add_argument("--out", type=Path, help="output directory (overrides out_dir)")
    ap.add_argument("--index", type=int, nargs="+", help="positive-eigenvalue ranks to evolve")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> RunConfig:
    if args.command == "reproduce-fig1" and not (args.config or args.preset):
        args.preset = "fig1-harmonic"
    cfg = preset(args.preset) if args.preset else RunConfig()
    if args.config:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read {args.config}: {exc.strerror}"]) from exc
        cfg = parse_config(text, base=cfg)
    if args.out:
        cfg = cfg.replace(out_dir=str(args.out))
    return cfg


def _threads():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError([f"{THREADS_ENV} must be a positive integer, got {raw!r}"])
    if n < 1:
        raise ConfigError([f"{THREADS_ENV} must be a positive integer, got {raw!r}"])
    return n


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    out = Path(args.out or ".")
    try:
        cfg = load_config(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(dump_config(cfg))
        with threadpool_limits(limits=_threads()):
            code = COMMANDS[args.command](cfg, out, args)
    except (ConfigError, UsageError) as exc:
        return _fail(out, args.command, "config", str(exc), EXIT_CONFIG)
    except (FloatingPointError, np.linalg.LinAlgError, ArithmeticError, ValueError) as exc:
        return _fail(out, args.command, "numeric", str(exc), EXIT_NUMERIC)
    if code == EXIT_CHECK:
        print(f"ctoa {args.command}: checks failed, see {out}", file=sys.stderr)
    return code


def _fail(out: Path, command, kind, message, code):
    print(f"ctoa {command}: {kind} error: {message}", file=sys.stderr)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(out / "error.json", {"command": command, "kind": kind, "message": message, "exit_code": code})
    except OSError:
        pass
    return code


if __name__ == "__main__":
    sys.exit(main())
