"""Deterministic CSV/JSON serialization for grids, matrices and metrics."""
import json

import numpy as np

from gpmslab.metrics import SpectralGrid

SPECTRAL_UNITS = "hbar_over_eps0_L"
MATRIX_UNITS = "c_over_L"
CSV_HEADER = f"x,xp,omega,value,method,units={SPECTRAL_UNITS}"


def fmt(v):
    return format(float(v), ".17g")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def matrix_to_json(a, config=None, units=MATRIX_UNITS):
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    out = {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in a.ravel()],
        "units": units,
    }
    if config is not None:
        out["config"] = config
    return out


def matrix_from_json(obj):
    entries = np.array(obj["entries"], dtype=float)
    if entries.shape != (obj["rows"] * obj["cols"], 2):
        raise ValueError("matrix JSON entry count does not match rows x cols")
    return (entries[:, 0] + 1j * entries[:, 1]).reshape(obj["rows"], obj["cols"])


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def grid_to_csv(grid, config):
    lines = ["# config: " + json.dumps(config, sort_keys=True), CSV_HEADER]
    for x, xp, w, v in grid.nodes():
        lines.append(",".join((fmt(x), fmt(xp), fmt(w), fmt(v), grid.method)))
    return "\n".join(lines) + "\n"


def grid_to_json(grid, config):
    return dumps({
        "config": config,
        "method": grid.method,
        "units": SPECTRAL_UNITS,
        "diagonal": grid.diagonal,
        "x": [float(v) for v in grid.x_values],
        "xp": [float(v) for v in grid.xp_values],
        "omega": [float(v) for v in grid.omega_values],
        "values": np.asarray(grid.values).tolist(),
    })


def read_grid_csv(path):
    """Parse a grid written by :func:`grid_to_csv`; returns ``(grid, config)``."""
    config = {}
    rows = []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("config:"):
                    config = json.loads(body[len("config:"):])
                continue
            if not header_seen:
                if not line.startswith("x,xp,omega,value,method"):
                    raise ValueError(f"{path}: unexpected CSV header {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            rows.append((float(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]), parts[4]))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array([r[:4] for r in rows])
    methods = {r[4] for r in rows}
    if len(methods) != 1:
        raise ValueError(f"{path}: mixed methods {sorted(methods)}")
    xs = np.unique(data[:, 0])
    ws = np.unique(data[:, 2])
    diagonal = bool(np.array_equal(data[:, 0], data[:, 1]) and config.get("xp", "diag") == "diag")
    if diagonal:
        xps = xs
        shape = (xs.size, ws.size)
    else:
        xps = np.unique(data[:, 1])
        shape = (xs.size, xps.size, ws.size)
    if np.prod(shape) != len(rows):
        raise ValueError(f"{path}: rows do not form a complete grid")
    values = data[:, 3].reshape(shape)
    grid = SpectralGrid(xs, xps, ws, values, methods.pop(), None, config.get("m"), diagonal)
    return grid, config
