"""File formats: nodal CSV, spectrum CSV, trajectory CSV, reconstruction output.

All numeric cells use ``repr(float(...))``, the shortest representation that
round-trips the binary value (at least 15 significant digits).  Bodies contain
no timestamps, so identical inputs produce byte-identical files.
"""

import csv
import json
import math
import os

import numpy as np

from .errors import ProblemFormatError
from .spectrum import NodalData


def format_float(value):
    return repr(float(value))


def write_nodal_csv(data, path):
    """CSV "n,j,x"; j is the 0-based position in ascending-x order.

    Synthetic data is tagged with a "# source=synthetic" comment so readers
    can tell which generator produced it.
    """
    with open(path, "w", newline="") as fh:
        if data.source == "synthetic":
            fh.write("# source=synthetic\n")
        writer = csv.writer(fh)
        writer.writerow(["n", "j", "x"])
        for n, j, x in data.rows():
            writer.writerow([n, j, format_float(x)])


def read_nodal_csv(path):
    """Inverse of write_nodal_csv; unknown comments are ignored."""
    source = "numeric"
    nodes = {}
    with open(path, newline="") as fh:
        rows = []
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body == "source=synthetic":
                    source = "synthetic"
                continue
            rows.append(line)
    if not rows:
        raise ProblemFormatError(f"{path}: no rows")
    header = [c.strip() for c in rows[0].split(",")]
    if header != ["n", "j", "x"]:
        raise ProblemFormatError(f"{path}: expected header n,j,x, got {rows[0]!r}")
    staged = {}
    for k, line in enumerate(rows[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 3:
            raise ProblemFormatError(f"{path}:{k}: expected 3 cells, got {len(cells)}")
        try:
            n, j, x = int(cells[0]), int(cells[1]), float(cells[2])
        except ValueError as exc:
            raise ProblemFormatError(f"{path}:{k}: {exc}") from None
        staged.setdefault(n, []).append((j, x))
    for n, pairs in staged.items():
        pairs.sort()
        if [j for j, _ in pairs] != list(range(len(pairs))):
            raise ProblemFormatError(f"{path}: node positions for n = {n} are not 0..{len(pairs)-1}")
        nodes[n] = np.array([x for _, x in pairs])
    try:
        return NodalData(nodes=nodes, source=source)
    except ValueError as exc:
        raise ProblemFormatError(f"{path}: {exc}") from None


def write_spectrum_csv(spectrum, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "lambda", "residual"])
        for n, lam, resid in spectrum.rows():
            writer.writerow([n, format_float(lam), format_float(resid)])


def write_trajectory_csv(traj, path, comment=None):
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "phi1", "phi2"])
        for x, p1, p2 in zip(traj.grid, traj.phi1, traj.phi2):
            writer.writerow([format_float(x), format_float(p1), format_float(p2)])


def write_reconstruction(result, out_dir):
    """summary.json (scalars + diagnostics) and curves.csv "x,f,g,V,Lprime"."""
    os.makedirs(out_dir, exist_ok=True)
    summary = {
        "theta_hat": result.theta_hat,
        "beta_hat": result.beta_hat,
        "m_hat": result.m_hat,
        "offset": result.diagnostics["offset"],
        "stage1_dispersion": result.diagnostics["stage1_dispersion"],
        "stage2_dispersion": result.diagnostics["stage2_dispersion"],
        "diagnostics": {k: _plain(v) for k, v in result.diagnostics.items()},
    }
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    curves_path = os.path.join(out_dir, "curves.csv")
    with open(curves_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "f", "g", "V", "Lprime"])
        for i, x in enumerate(result.f_hat.x):
            writer.writerow([
                format_float(x),
                format_float(result.f_hat.values[i]),
                format_float(result.g_hat.values[i]),
                format_float(result.V_hat.values[i]),
                format_float(result.Lprime_hat.values[i]),
            ])
    return summary_path, curves_path


def _plain(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value
