"""CSV tables with atomic writes and reproducible float text.

Floats are written with ``repr`` (shortest round-trip form), so identical
arrays always give identical bytes.  NaN is written as an empty field.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np


def format_value(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return ""
    if x == 0.0:
        return "0.0"  # folds -0.0 so sign noise cannot change the bytes
    return repr(x)


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def render_table(columns: Mapping[str, Sequence], metadata: Mapping[str, object] | None = None) -> str:
    names = list(columns)
    if not names:
        raise ValueError("table needs at least one column")
    lengths = {len(columns[n]) for n in names}
    if len(lengths) != 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        buf.write(f"# {key}={format_value(value)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*(columns[n] for n in names)):
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_table(path, columns: Mapping[str, Sequence], metadata: Mapping[str, object] | None = None) -> Path:
    return atomic_write_text(path, render_table(columns, metadata))


def read_table(path) -> Tuple[Dict[str, np.ndarray], Dict[str, str]]:
    """Read a table written by :func:`write_table`.

    Numeric columns come back as float arrays (empty fields as NaN); any
    column that does not parse stays a list of strings.
    """
    meta: Dict[str, str] = {}
    lines: List[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
            elif line.strip():
                lines.append(line)
    if not lines:
        return {}, meta
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    cols: Dict[str, np.ndarray] = {}
    for i, name in enumerate(header):
        raw = [r[i] if i < len(r) else "" for r in body]
        try:
            cols[name] = np.array([float(v) if v != "" else np.nan for v in raw])
        except ValueError:
            cols[name] = raw
    return cols, meta


# ---------------------------------------------------------------------------
# domain tables
# ---------------------------------------------------------------------------

def trajectory_columns(traj) -> Dict[str, np.ndarray]:
    return {
        "t": traj.t,
        "re_b": traj.b.real,
        "im_b": traj.b.imag,
        "pop": np.abs(traj.b) ** 2,
        "omega_shift": traj.omega_shift,
        "gamma_rate": traj.gamma_rate,
    }


def write_trajectory(path, traj, metadata=None) -> Path:
    return write_table(path, trajectory_columns(traj), metadata)


def oracle_columns(result) -> Dict[str, np.ndarray]:
    """Oracle amplitudes in the trajectory layout; rates use the exact derivative."""
    from .amplitude import RATE_FLOOR

    ratio = np.full(result.b.shape, np.nan + 0j)
    ok = np.abs(result.b) >= RATE_FLOOR
    ratio[ok] = result.b_dot[ok] / result.b[ok]
    return {
        "t": result.t,
        "re_b": result.b.real,
        "im_b": result.b.imag,
        "pop": np.abs(result.b) ** 2,
        "omega_shift": -ratio.imag,
        "gamma_rate": -ratio.real,
    }


def write_oracle(path, result) -> Path:
    meta = {"n_modes": result.n_modes, "k_cut": result.k_cut, "recurrence_time": result.recurrence_time}
    return write_table(path, oracle_columns(result), meta)


def write_correlations(path, records: Iterable, partitions: Sequence[str]) -> Path:
    from .correlations import records_to_columns

    return write_table(path, records_to_columns(records, partitions))


def write_y_curves(path, E_grid, curves: Mapping[float, np.ndarray]) -> Path:
    cols: Dict[str, Sequence] = {"E": np.asarray(E_grid, float)}
    for w0, vals in curves.items():
        cols[f"y_minus_E_w0_{format_value(w0)}"] = vals
    return write_table(path, cols)
