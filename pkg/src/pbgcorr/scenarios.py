"""Figure presets, single runs and parameter sweeps that write CSV and SVG files."""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import svg
from .amplitude import AmplitudeTrajectory, solve_amplitude
from .bound_state import find_bound_state, y_minus_E
from .config import RunConfig, write_resolved
from .correlations import (
    PARTITIONS,
    InitialWeights,
    correlation_timeseries,
    physicality_batch,
    records_to_columns,
    reduce_batch,
)
from .errors import ConfigError, PBGError
from .mode_oracle import build_bath, bound_state_overlap, diagonalize, evolve_exact
from .reservoir import EmitterParams
from .tables import atomic_write_text, format_value, trajectory_columns, write_oracle, write_table

PRESET_ETA = 0.2
FIG2_ALPHAS = (math.sqrt(0.5), 0.2, 0.3)
FIG3_ALPHAS = (math.sqrt(0.5), 0.2)
FIG2_OMEGAS = (0.1, 10.0)
FIG4_OMEGAS = (0.1, 1.0, 2.0, 5.0, 10.0)
FIG4A_E_GRID = np.linspace(-3.0, 1.0 - 1e-3, 400)
PRESETS = ("fig2", "fig3", "fig4", "fig4a")
SWEEP_AXES = {"omega_0": "omega_0", "w0": "omega_0", "eta": "eta", "alpha": "alpha"}
QD_EOF_SLACK = 1e-3


def _label(x: float) -> str:
    return format_value(round(float(x), 6))


def _json(path, payload) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


@dataclass
class RunOutput:
    trajectory: AmplitudeTrajectory
    correlations: Optional[Dict[str, np.ndarray]] = None
    files: Optional[List[Path]] = None


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------

def solve(cfg: RunConfig) -> AmplitudeTrajectory:
    return solve_amplitude(cfg.reservoir, cfg.emitter, cfg.solver)


def correlations_for(cfg: RunConfig, traj: AmplitudeTrajectory, partitions: Sequence[str] | None = None,
                     stride: int | None = None) -> Dict[str, np.ndarray]:
    parts = tuple(cfg.correlations.partitions if partitions is None else partitions)
    records = correlation_timeseries(
        traj, cfg.initial, parts,
        stride=cfg.correlations.stride if stride is None else stride,
        grid=cfg.discord.grid, measured_side=cfg.discord.measured_side,
        workers=cfg.correlations.workers,
    )
    return records_to_columns(records, parts)


def run_solve(cfg: RunConfig, out: Path) -> RunOutput:
    out = Path(out)
    traj = solve(cfg)
    files = [write_table(out / "trajectory.csv", trajectory_columns(traj)),
             svg.save(svg.figure_from_table(trajectory_columns(traj), "trajectory"), out / "trajectory.svg"),
             write_resolved(cfg, out)]
    return RunOutput(traj, None, files)


def run_correlations(cfg: RunConfig, out: Path) -> RunOutput:
    out = Path(out)
    traj = solve(cfg)
    cols = correlations_for(cfg, traj)
    files = [write_table(out / "trajectory.csv", trajectory_columns(traj)),
             write_table(out / "correlations.csv", cols),
             svg.save(svg.figure_from_table(cols, "qd-eof"), out / "correlations.svg"),
             write_resolved(cfg, out)]
    return RunOutput(traj, cols, files)


def run_bound_state(cfg: RunConfig, out: Path, omegas: Sequence[float] | None = None,
                    E_grid=None) -> Dict[float, dict]:
    """Bound-state table and ``y(E) - E`` curves for the configured (or given) ``omega_0`` values."""
    out = Path(out)
    omegas = (cfg.emitter.omega_0,) if omegas is None else tuple(omegas)
    E_grid = FIG4A_E_GRID if E_grid is None else np.asarray(E_grid, float)
    curves, rows = {}, {}
    for w0 in omegas:
        em = EmitterParams(w0)
        curves[w0] = y_minus_E(cfg.reservoir, em, E_grid)
        res = find_bound_state(cfg.reservoir, em)
        rows[w0] = {"exists": res.exists, "E1": res.E1, "Z": res.Z, "marginal": res.marginal,
                    "y_at_edge": res.y_at_edge}
    cols = {"E": E_grid}
    cols.update({f"y_minus_E_w0_{_label(w0)}": v for w0, v in curves.items()})
    write_table(out / "y_minus_E.csv", cols)
    write_table(out / "bound_states.csv", {
        "omega_0": list(rows),
        "exists": [str(r["exists"]).lower() for r in rows.values()],
        "E1": [r["E1"] for r in rows.values()],
        "Z": [r["Z"] for r in rows.values()],
        "marginal": [str(r["marginal"]).lower() for r in rows.values()],
    })
    svg.save(svg.figure_from_table(cols, "bound-state"), out / "y_minus_E.svg")
    write_resolved(cfg, out)
    return rows


def run_verify(cfg: RunConfig, out: Path, n_modes: int | None = None) -> dict:
    """Compare the integro-differential solution with exact diagonalisation of a discretised bath.

    The comparison window is cut at half the bath's recurrence time.
    """
    out = Path(out)
    n_modes = cfg.oracle_modes if n_modes is None else n_modes
    traj = solve(cfg)
    bath = build_bath(cfg.reservoir, n_modes)
    horizon = min(cfg.solver.t_max, 0.5 * bath.recurrence_time)
    keep = traj.t <= horizon + 1e-12
    diag = diagonalize(bath, cfg.emitter)
    oracle = evolve_exact(bath, cfg.emitter, traj.t[keep], diag=diag)
    diff = np.abs(traj.b[keep] - oracle.b)
    overlap = bound_state_overlap(bath, cfg.emitter, diag)
    bs = find_bound_state(cfg.reservoir, cfg.emitter, cutoff=True)
    summary = {
        "n_modes": n_modes,
        "k_cut": cfg.reservoir.k_cut,
        "recurrence_time": bath.recurrence_time,
        "window": float(traj.t[keep][-1]),
        "max_abs_difference": float(diff.max()),
        "norm_deviation": oracle.norm_deviation,
        "oracle_bound_overlap": overlap,
        "residue_weight_same_cutoff": bs.Z,
    }
    write_oracle(out / "oracle.csv", oracle)
    write_table(out / "verify.csv", {
        "t": oracle.t, "re_b_volterra": traj.b[keep].real, "im_b_volterra": traj.b[keep].imag,
        "re_b_oracle": oracle.b.real, "im_b_oracle": oracle.b.imag, "abs_diff": diff,
    })
    _json(out / "verify_summary.json", summary)
    write_resolved(cfg, out)
    return summary


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def preset_config(name: str, base: RunConfig | None = None) -> RunConfig:
    """Base configuration with the preset's coupling; solver window and stride stay overridable."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    base = RunConfig() if base is None else base
    return base.replace(preset=name, reservoir=replace(base.reservoir, eta=PRESET_ETA))


def preset_panels(name: str):
    """``(panel_id, alpha, omega_0, partitions)`` for the correlation presets."""
    if name == "fig2":
        letters = iter("abcdef")
        return [(next(letters), a, w, ("n1n2",)) for w in FIG2_OMEGAS for a in FIG2_ALPHAS]
    if name == "fig3":
        letters = iter("abcd")
        return [(next(letters), a, w, ("n1n2", "r1r2", "n1r1", "n1r2")) for a in FIG3_ALPHAS
                for w in FIG2_OMEGAS]
    raise ConfigError(f"preset {name!r} has no correlation panels")


class _TrajectoryCache:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.store: Dict[float, AmplitudeTrajectory] = {}

    def __call__(self, w0: float) -> AmplitudeTrajectory:
        if w0 not in self.store:
            self.store[w0] = solve_amplitude(self.cfg.reservoir, EmitterParams(w0), self.cfg.solver)
        return self.store[w0]


def _physicality(w: InitialWeights, b) -> dict:
    worst = {"trace_error": 0.0, "hermiticity_error": 0.0, "min_eigenvalue": np.inf}
    for p in PARTITIONS:
        rep = physicality_batch(reduce_batch(w, b, p))
        worst["trace_error"] = max(worst["trace_error"], rep["trace_error"])
        worst["hermiticity_error"] = max(worst["hermiticity_error"], rep["hermiticity_error"])
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], rep["min_eigenvalue"])
    return worst


def qd_eof_violations(cols: Dict[str, np.ndarray], partition: str = "n1n2", slack: float = QD_EOF_SLACK):
    """Times where discord falls below entanglement of formation by more than ``slack``."""
    gap = cols[f"qd_{partition}"] - (cols[f"eof_{partition}"] - slack)
    bad = np.flatnonzero(gap < 0)
    return [{"t": float(cols["t"][i]), "qd": float(cols[f"qd_{partition}"][i]),
             "eof": float(cols[f"eof_{partition}"][i])} for i in bad]


def _correlation_preset(name: str, cfg: RunConfig, out: Path) -> dict:
    cache = _TrajectoryCache(cfg)
    summary = {"preset": name, "eta": cfg.reservoir.eta, "panels": {}}
    for panel, alpha, w0, parts in preset_panels(name):
        w = InitialWeights.from_alpha(alpha)
        run_cfg = cfg.replace(emitter=EmitterParams(w0), initial=w)
        traj = cache(w0)
        cols = correlations_for(run_cfg, traj, parts)
        stem = f"panel_{panel}"
        write_table(out / f"{stem}.csv", cols)
        kind = "qd-eof" if len(parts) == 1 else "partitions"
        title = f"alpha = {_label(alpha)}, omega_0 = {_label(w0)}"
        svg.save(svg.figure_from_table(cols, kind, title), out / f"{stem}.svg")
        info = {"alpha": alpha, "omega_0": w0, "partitions": list(parts),
                "physicality": _physicality(w, traj.b),
                "max_abs_b": float(np.max(np.abs(traj.b)))}
        if math.isclose(alpha, 2 ** -0.5) and math.isclose(w0, 0.1) and "n1n2" in parts:
            violations = qd_eof_violations(cols)
            info["qd_below_eof_points"] = len(violations)
            info["qd_below_eof_first"] = violations[:5]
        summary["panels"][panel] = info
    return summary


def _population_preset(cfg: RunConfig, out: Path) -> dict:
    cache = _TrajectoryCache(cfg)
    t = None
    cols: Dict[str, np.ndarray] = {}
    summary = {"preset": "fig4", "eta": cfg.reservoir.eta, "curves": {}}
    for w0 in FIG4_OMEGAS:
        traj = cache(w0)
        t = traj.t
        cols[f"pop_{_label(w0)}"] = traj.population
        write_table(out / f"trajectory_w0_{_label(w0)}.csv", trajectory_columns(traj))
        tail = traj.population[traj.t >= 0.9 * traj.t[-1]]
        summary["curves"][_label(w0)] = {"final_population": float(traj.population[-1]),
                                         "tail_mean_population": float(tail.mean()),
                                         "max_abs_b": float(np.max(np.abs(traj.b)))}
    table = {"t": t, **cols}
    write_table(out / "population.csv", table)
    svg.save(svg.figure_from_table(table, "population"), out / "population.svg")
    return summary


def run_preset(name: str, cfg: RunConfig | None = None, out: Path | str = "out") -> dict:
    """Run one figure preset into ``out/<name>`` and return its summary."""
    cfg = preset_config(name, cfg)
    out = Path(out) / name
    if name in ("fig2", "fig3"):
        summary = _correlation_preset(name, cfg, out)
    elif name == "fig4":
        summary = _population_preset(cfg, out)
    else:
        rows = run_bound_state(cfg, out, FIG4_OMEGAS)
        summary = {"preset": name, "eta": cfg.reservoir.eta, "bound_states": {_label(k): v for k, v in rows.items()}}
    _json(out / "summary.json", summary)
    write_resolved(cfg, out)
    return summary


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _apply_axis(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    if axis == "omega_0":
        return cfg.replace(emitter=EmitterParams(value))
    if axis == "eta":
        return cfg.replace(reservoir=replace(cfg.reservoir, eta=value))
    return cfg.replace(initial=InitialWeights.from_alpha(value))


def _plateau(values: np.ndarray, t: np.ndarray):
    window = t >= t[0] + 0.9 * (t[-1] - t[0])
    v = values[window]
    return float(np.nanmean(v)), float(np.nanstd(v))


def _sweep_one(args) -> dict:
    cfg, axis, value, run_dir, with_corr = args
    row = {"value": value, "status": "ok", "error": ""}
    try:
        run_cfg = _apply_axis(cfg, axis, value)
        traj = solve(run_cfg)
        run_dir = Path(run_dir)
        write_table(run_dir / "trajectory.csv", trajectory_columns(traj))
        write_resolved(run_cfg, run_dir)
        row["pop_mean"], row["pop_std"] = _plateau(traj.population, traj.t)
        row["abs_b_mean"], _ = _plateau(np.abs(traj.b), traj.t)
        if with_corr:
            cols = correlations_for(run_cfg.replace(correlations=replace(run_cfg.correlations, workers=1)), traj)
            write_table(run_dir / "correlations.csv", cols)
            for p in run_cfg.correlations.partitions:
                row[f"qd_{p}_mean"], _ = _plateau(cols[f"qd_{p}"], cols["t"])
                row[f"eof_{p}_mean"], _ = _plateau(cols[f"eof_{p}"], cols["t"])
    except (PBGError, ValueError) as exc:
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(cfg: RunConfig, axis: str, values: Sequence[float], out: Path | str = "out",
              workers: int | None = None, correlations: bool | None = None) -> List[dict]:
    """One run per value, executed in a process pool; failures are recorded, not raised.

    The summary table holds the mean (and spread) over the final 10% of the
    time window for each value.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {sorted(set(SWEEP_AXES.values()))}, got {axis!r}")
    axis = SWEEP_AXES[axis]
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    out = Path(out) / f"sweep_{axis}"
    with_corr = axis == "alpha" if correlations is None else correlations
    jobs = [(cfg, axis, v, out / f"{axis}_{_label(v)}", with_corr) for v in values]
    workers = min(len(jobs), workers or os.cpu_count() or 1)
    if workers <= 1:
        rows = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    names = ["value", "status", "error", "pop_mean", "pop_std", "abs_b_mean"]
    for r in rows:
        names += [k for k in r if k not in names]
    write_table(out / "summary.csv", {n: [r.get(n) for r in rows] for n in names})
    write_resolved(cfg, out)
    _json(out / "sweep.json", {"axis": axis, "values": values, "correlations": with_corr})
    return rows
