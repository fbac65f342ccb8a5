"""End-to-end acceptance checks, one test per numbered criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) before
asserting, so the table is complete even when a criterion fails.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from conftest import record_criterion
from pbgcorr.amplitude import SolverConfig, population_from_rates, solve_amplitude
from pbgcorr.bound_state import find_bound_state, y_function
from pbgcorr.correlations import (
    PARTITIONS,
    ClassicalCorrelation,
    InitialWeights,
    assemble_state,
    concurrence,
    discord_details,
    emitter_pair_matrix,
    eof,
    physicality_batch,
    reduce,
    reduce_batch,
    x_state_concurrence,
)
from pbgcorr.mode_oracle import bound_state_overlap, build_bath, compare_with_volterra, evolve_exact
from pbgcorr.reservoir import EmitterParams, ReservoirParams
from pbgcorr.scenarios import FIG2_ALPHAS, FIG4_OMEGAS, PRESET_ETA, qd_eof_violations

BELL_ALPHA = math.sqrt(0.5)
RES = ReservoirParams(eta=PRESET_ETA)
FIG1, FIG2, FIG3, FIG4 = "n1n2", "r1r2", "n1r1", "n1r2"


@pytest.fixture(scope="module")
def preset_runs():
    """Solver output for every preset emitter frequency (eta = 0.2, dt = 0.01, t_max = 50)."""
    return {w0: solve_amplitude(RES, EmitterParams(w0), SolverConfig()) for w0 in FIG4_OMEGAS}


def qd_eof(rho, side="B"):
    return discord_details(rho, side).discord, eof(rho)


def test_criterion_01_oracle_equivalence():
    start = time.perf_counter()
    em = EmitterParams(0.1)
    traj = solve_amplitude(RES, em, SolverConfig(dt=0.005, t_max=50))
    oracle = evolve_exact(build_bath(RES, 4000), em, traj.t)
    err = compare_with_volterra(traj.t, traj.b, oracle)
    elapsed = time.perf_counter() - start
    ok = err < 1e-3 and elapsed < 120
    record_criterion(1, ok, f"max|b_volterra - b_oracle| = {err:.2e} (< 1e-3), N=4000, {elapsed:.1f} s (< 120 s)")
    assert ok


def test_criterion_02_plateau_matches_residue_and_oracle():
    # k_max = 20 keeps the ultraviolet-cutoff shift of the plateau below the 1% budget
    res = ReservoirParams(eta=PRESET_ETA, k_max=20)
    details, ok = [], True
    for w0 in (0.1, 1.0):
        em = EmitterParams(w0)
        traj = solve_amplitude(res, em, SolverConfig(dt=0.01, t_max=200))
        plateau = float(np.mean(np.abs(traj.b[traj.t >= 180])))
        Z = find_bound_state(res, em).Z
        overlap = bound_state_overlap(build_bath(res, 4000), em)
        dz, do = abs(plateau / Z - 1), abs(plateau / overlap - 1)
        ok &= dz < 0.01 and do < 0.02
        details.append(f"w0={w0}: <|b|>={plateau:.5f} Z={Z:.5f} ({dz:.2%}) overlap={overlap:.5f} ({do:.2%})")
    record_criterion(2, ok, "; ".join(details))
    assert ok


def test_criterion_03_no_bound_state_far_above_edge(preset_runs):
    bs = find_bound_state(RES, EmitterParams(10.0))
    final = float(preset_runs[10.0].population[-1])
    ok = (not bs.exists) and final < 0.02
    record_criterion(3, ok, f"w0=10: bound state exists={bs.exists} (E1={bs.E1}, Z={bs.Z}); "
                            f"|b(50)|^2 = {final:.2e} (< 0.02)")
    assert ok


def test_criterion_04_y_monotone():
    worst, ok = [], True
    for w0 in FIG4_OMEGAS:
        lo = min(w0 - 5.0, RES.omega_c - 5.0)
        E = np.linspace(lo, RES.omega_c - 1e-3, 1002)[1:-1]
        y = np.array([y_function(RES, EmitterParams(w0), e) for e in E])
        d = np.diff(y)
        ok &= bool(np.all(d < 0))
        worst.append(f"w0={w0}: max dy={d.max():.2e}")
    record_criterion(4, ok, "y(E) strictly decreasing on 1000 points; " + ", ".join(worst))
    assert ok


def test_criterion_05_correlation_anchors(preset_runs):
    w = InitialWeights.from_alpha(BELL_ALPHA)
    start = assemble_state(w, 1.0)
    qd1, eof1 = qd_eof(reduce(start, FIG1).matrix)
    cross = max(max(qd_eof(reduce(start, p).matrix)) for p in PARTITIONS if p != FIG1)
    late = assemble_state(w, preset_runs[10.0].b[-1])
    qd2, eof2 = qd_eof(reduce(late, FIG2).matrix)
    others = {p: qd_eof(reduce(late, p).matrix)[0] for p in (FIG1, FIG3, FIG4)}
    ok = (abs(qd1 - 1) <= 1e-6 and abs(eof1 - 1) <= 1e-6 and cross < 1e-6
          and abs(qd2 / qd1 - 1) < 0.02 and abs(eof2 / eof1 - 1) < 0.02 and max(others.values()) < 0.01)
    record_criterion(5, ok, f"t=0: QD1={qd1:.8f} EoF1={eof1:.8f} max cross={cross:.1e}; "
                            f"w0=10,t=50: QD2={qd2:.6f} EoF2={eof2:.6f} "
                            f"QD1/3/4={', '.join(f'{v:.1e}' for v in others.values())}")
    assert ok


def test_criterion_06_plateau_in_deep_gap(preset_runs):
    traj = preset_runs[0.1]
    idx = np.flatnonzero(traj.t >= 45 - 1e-9)[::5]
    ok, parts = True, []
    for alpha in FIG2_ALPHAS:
        w = InitialWeights.from_alpha(alpha)
        vals = np.array([qd_eof(reduce(assemble_state(w, traj.b[i]), FIG1).matrix) for i in idx])
        for name, col in (("QD1", vals[:, 0]), ("EoF1", vals[:, 1])):
            mean, std = col.mean(), col.std()
            good = mean > 0.05 and std < 0.1 * mean
            ok &= good
            parts.append(f"a={alpha:.3f} {name} mean={mean:.4f} sd={std:.1e}{'' if good else ' x'}")
    record_criterion(6, ok, "; ".join(parts))
    assert ok


def test_criterion_07_concurrence_routes(rng):
    worst = 0.0
    for _ in range(1000):
        a = rng.uniform(0, 1)
        w = InitialWeights(a * np.exp(1j * rng.uniform(0, 2 * np.pi)), math.sqrt(1 - a * a))
        b = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        worst = max(worst, abs(concurrence(emitter_pair_matrix(w, b)) - x_state_concurrence(w, b)))
    ok = worst < 1e-9
    record_criterion(7, ok, f"1000 random (alpha, b): max |C_wootters - C_closed| = {worst:.1e} (< 1e-9)")
    assert ok


def test_criterion_08_discord_optimizer(rng):
    regress, worst = 0, 0.0
    for _ in range(100):
        w = InitialWeights.from_alpha(rng.uniform(0, 1))
        b = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        rho = emitter_pair_matrix(w, b)
        res = discord_details(rho)
        regress += res.classical_refined < res.classical_grid
        dense, _ = ClassicalCorrelation(rho).grid_max(1024)
        worst = max(worst, abs((res.mutual_information - dense) - res.discord))
    ok = regress == 0 and worst < 1e-4
    record_criterion(8, ok, f"100 states: refined < grid in {regress} cases; "
                            f"max |QD - QD_1024x1024| = {worst:.1e} (< 1e-4)")
    assert ok


def test_criterion_09_physicality(preset_runs):
    trace = herm = 0.0
    min_eig, max_b = np.inf, 0.0
    for w0, traj in preset_runs.items():
        max_b = max(max_b, float(np.max(np.abs(traj.b))))
        for alpha in FIG2_ALPHAS:
            w = InitialWeights.from_alpha(alpha)
            for p in PARTITIONS:
                rep = physicality_batch(reduce_batch(w, traj.b, p))
                trace = max(trace, rep["trace_error"])
                herm = max(herm, rep["hermiticity_error"])
                min_eig = min(min_eig, rep["min_eigenvalue"])
    ok = trace < 1e-10 and herm < 1e-12 and min_eig >= -1e-10 and max_b <= 1 + 1e-8
    record_criterion(9, ok, f"trace err {trace:.1e}, hermiticity err {herm:.1e}, min eig {min_eig:.1e}, "
                            f"max|b| - 1 = {max_b - 1:.1e}")
    assert ok


def test_criterion_10_second_order_convergence():
    parts, ok = [], True
    for w0 in (0.1, 10.0):
        em = EmitterParams(w0)
        ref = solve_amplitude(RES, em, SolverConfig(dt=0.00125, t_max=50)).b
        coarse = solve_amplitude(RES, em, SolverConfig(dt=0.01, t_max=50)).b
        fine = solve_amplitude(RES, em, SolverConfig(dt=0.005, t_max=50)).b
        e1, e2 = np.max(np.abs(coarse - ref[::8])), np.max(np.abs(fine - ref[::4]))
        ok &= e1 / e2 >= 3.5
        parts.append(f"w0={w0}: errors {e1:.2e} -> {e2:.2e}, ratio {e1 / e2:.2f}")
    record_criterion(10, ok, "; ".join(parts) + " (>= 3.5)")
    assert ok


def test_criterion_11_rate_consistency(preset_runs):
    per_run = {}
    for w0, traj in preset_runs.items():
        gaps = np.flatnonzero(~traj.rates_defined)
        upto = gaps[0] if gaps.size else traj.t.size
        rebuilt = population_from_rates(traj)[:upto]
        per_run[w0] = float(np.max(np.abs(rebuilt / traj.population[:upto] - 1)))
    gmin = float(np.nanmin(preset_runs[0.1].gamma_rate))
    ok = max(per_run.values()) < 1e-5 and gmin < -1e-3
    errs = ", ".join(f"w0={w0}: {e:.1e}" for w0, e in per_run.items())
    record_criterion(11, ok, f"max rel err of exp(-2 int gamma) vs |b|^2 ({errs}) (< 1e-5); "
                             f"min gamma (w0=0.1) = {gmin:.3f} (< -1e-3)")
    assert ok


def test_criterion_12_qd_above_eof_soft_report(preset_runs):
    traj = preset_runs[0.1]
    w = InitialWeights.from_alpha(BELL_ALPHA)
    idx = np.arange(0, traj.t.size, 5)
    vals = np.array([qd_eof(reduce(assemble_state(w, traj.b[i]), FIG1).matrix) for i in idx])
    cols = {"t": traj.t[idx], "qd_n1n2": vals[:, 0], "eof_n1n2": vals[:, 1]}
    bad = qd_eof_violations(cols)
    where = f"t in [{bad[0]['t']:.2f}, {bad[-1]['t']:.2f}]" if bad else "none"
    record_criterion(12, True, f"soft, reported only: QD1 < EoF1 - 1e-3 at {len(bad)} of {idx.size} points "
                               f"({where})")
