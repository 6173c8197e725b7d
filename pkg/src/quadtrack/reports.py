"""CSV and JSON input/output with byte-stable formatting."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .signals import Signal, TimeGrid, Trajectory


def write_csv(path, grid: TimeGrid, values, prefix="x"):
    """Header ``t,<prefix>_0,...`` and one row per grid node, 17 significant digits."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    header = ",".join(["t"] + [f"{prefix}_{i}" for i in range(values.shape[1])])
    data = np.column_stack([grid.nodes, values])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def write_signal_csv(path, sig: Signal, prefix="x"):
    write_csv(path, sig.grid, sig.nodes(), prefix)


def read_csv(path):
    """Returns ``(grid, values)``; the time column must be uniform."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            header = next(csv.reader(fh))
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, StopIteration, ValueError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not header or header[0].strip() != "t" or data.shape[1] != len(header) or data.shape[0] < 2:
        raise ConfigError(f"{path}: expected header t,x_0,... and at least two rows")
    t = data[:, 0]
    grid = TimeGrid(t[-1] - t[0], len(t) - 1, t[0])
    if not np.allclose(t, grid.nodes, rtol=0, atol=1e-9 * max(1.0, abs(t[-1]))):
        raise ConfigError(f"{path}: time column is not uniform")
    return grid, data[:, 1:]


def read_trajectory(path) -> Trajectory:
    grid, values = read_csv(path)
    return Trajectory(grid, values)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default, allow_nan=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=_default)
    return hashlib.sha256(canon.encode()).hexdigest()
