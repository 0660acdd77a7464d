"""Atomic on-disk artifacts: node-dump CSVs and JSON summaries.

Numeric CSV cells use 17 significant digits and a fixed row order (j outer,
i inner) so repeated runs round-trip bit-exactly.
"""

import json
import os
import tempfile

import numpy as np


def _fmt(x):
    return format(float(x), ".17g")


def atomic_write_text(path, text):
    """Write-temp-then-rename so interrupted runs never leave partial files."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as f:
        return json.load(f)


def write_solution_csv(path, grid, sol):
    """Node dump ``i,j,x1,x2,u,chi``."""
    lines = ["i,j,x1,x2,u,chi"]
    u = np.asarray(sol.u).reshape(grid.shape)
    chi = np.asarray(sol.chi).reshape(grid.shape)
    for j in range(grid.ny + 1):
        x2 = j * grid.h2
        for i in range(grid.nx + 1):
            lines.append(f"{i},{j},{_fmt(i * grid.h1)},{_fmt(x2)},{_fmt(u[j, i])},{_fmt(chi[j, i])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_energy_csv(path, series):
    lines = ["t,E,F"]
    for t, e, f in zip(series.times, series.E, series.F):
        lines.append(f"{_fmt(t)},{_fmt(e)},{_fmt(f)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def snapshot_filename(step_index):
    return f"snapshot_{step_index:05d}.csv"
