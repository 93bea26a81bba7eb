"""CSV writers. Floats are written with 17 significant digits so that
every value round-trips exactly."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = [
    "fmt",
    "write_rows",
    "write_spectrum",
    "write_eigenfunction",
    "write_trace",
    "write_density",
    "write_kernel_sample",
    "read_csv",
]


def fmt(x) -> str:
    if isinstance(x, (str, bool, np.bool_)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_spectrum(path, spectrum, nodal=None) -> Path:
    """One row per eigenvalue: position in the table, tau, positive rank, nodality.

    ``nodal`` maps table index to a label; rows without one are left blank.
    """
    nodal = nodal or {}
    rank = np.zeros(len(spectrum), dtype=int)
    for r, i in enumerate(spectrum.positive_indices(), start=1):
        rank[i] = r
    rows = ((i, tau, rank[i], nodal.get(i, "")) for i, tau in enumerate(spectrum.eigenvalues))
    return write_rows(path, ["index", "tau", "n", "nodal"], rows)


def write_eigenfunction(path, q, phi) -> Path:
    phi = np.asarray(phi, dtype=complex)
    rows = zip(q, phi.real, phi.imag, np.abs(phi) ** 2)
    return write_rows(path, ["q", "re_phi", "im_phi", "abs2"], rows)


def write_trace(path, trace) -> Path:
    rows = zip(trace.times, trace.norm, trace.mean_q, trace.var_q)
    return write_rows(path, ["t", "norm", "mean_q", "var_q"], rows)


def write_density(path, trace) -> Path:
    def rows():
        for t, rho in zip(trace.snapshot_times, trace.densities):
            for q, r in zip(trace.grid, rho):
                yield t, q, r

    return write_rows(path, ["t", "q", "abs2"], rows())


def write_kernel_sample(path, x, K) -> Path:
    K = np.asarray(K, dtype=complex)

    def rows():
        for i, q in enumerate(x):
            for j, qp in enumerate(x):
                yield q, qp, K[i, j].real, K[i, j].imag

    return write_rows(path, ["q", "qp", "re_k", "im_k"], rows())


def read_csv(path):
    """Header and float columns of a numeric CSV written here."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    return header, data
