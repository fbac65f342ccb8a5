from __future__ import annotations

import itertools

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbgcorr.amplitude import AmplitudeTrajectory
from pbgcorr.correlations import (
    PARTITIONS,
    ClassicalCorrelation,
    InitialWeights,
    assemble_state,
    concurrence,
    correlation_timeseries,
    discord,
    discord_details,
    emitter_pair_matrix,
    eof,
    eof_from_concurrence,
    excited_first,
    mutual_information,
    partial_trace,
    physicality,
    reduce,
    reduce_batch,
    von_neumann_entropy,
    x_state_concurrence,
)
from pbgcorr.errors import ConfigError, UnphysicalStateError

BELL = InitialWeights.from_alpha(2 ** -0.5)
NAMES = ("n1", "n2", "r1", "r2")


def brute_partial_trace(psi: np.ndarray, keep: tuple) -> np.ndarray:
    """Reference reduction by explicit index loops over the 16 basis states."""
    rho = np.zeros((4, 4), dtype=complex)
    for a, b in itertools.product(range(16), repeat=2):
        bits_a = [(a >> (3 - k)) & 1 for k in range(4)]
        bits_b = [(b >> (3 - k)) & 1 for k in range(4)]
        traced = [k for k in range(4) if k not in keep]
        if any(bits_a[k] != bits_b[k] for k in traced):
            continue
        i = 2 * bits_a[keep[0]] + bits_a[keep[1]]
        j = 2 * bits_b[keep[0]] + bits_b[keep[1]]
        rho[i, j] += psi[a] * np.conj(psi[b])
    return rho


def projector_classical_info(rho: np.ndarray, theta: float, phi: float) -> float:
    """J for a projective measurement on B built from explicit projectors."""
    n = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    sig = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
    ns = np.einsum("i,ijk->jk", n, sig)
    rho_a = partial_trace(rho, "A")
    info = von_neumann_entropy(rho_a)
    for sgn in (1, -1):
        proj = np.kron(np.eye(2), 0.5 * (np.eye(2) + sgn * ns))
        post = proj @ rho @ proj
        p = np.trace(post).real
        if p > 1e-14:
            info -= p * von_neumann_entropy(partial_trace(post / p, "A"))
    return info


def random_weights(rng):
    a = rng.uniform(0, 1)
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    return InitialWeights(a * phase, np.sqrt(1 - a * a))


class TestState:
    def test_bell_state_at_t0(self):
        psi = assemble_state(BELL, 1.0).amplitudes
        expected = np.zeros(16)
        expected[0b0000] = expected[0b1100] = 2 ** -0.5
        assert np.allclose(psi, expected, atol=1e-15)

    def test_full_transfer_at_b0(self):
        psi = assemble_state(BELL, 0.0).amplitudes
        expected = np.zeros(16)
        expected[0b0000] = expected[0b0011] = 2 ** -0.5
        assert np.allclose(psi, expected, atol=1e-15)

    def test_rejects_unnormalised_weights(self):
        with pytest.raises(ConfigError):
            InitialWeights(0.5, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 2 * np.pi))
    def test_norm_and_support(self, alpha, mag, phase):
        psi = assemble_state(InitialWeights.from_alpha(alpha), mag * np.exp(1j * phase)).amplitudes
        assert abs(np.vdot(psi, psi) - 1) < 1e-10
        allowed = {0b0000, 0b1100, 0b1001, 0b0110, 0b0011}
        assert np.all(np.abs(np.delete(psi, sorted(allowed))) == 0)


class TestReduction:
    def test_partial_trace_against_brute_force(self, rng):
        for _ in range(20):
            w = random_weights(rng)
            b = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            psi = assemble_state(w, b)
            for i, j in itertools.permutations(range(4), 2):
                label = NAMES[i] + NAMES[j]
                got = reduce(psi, label).matrix
                assert np.max(np.abs(got - brute_partial_trace(psi.amplitudes, (i, j)))) < 1e-14

    def test_emitter_pair_closed_form(self, rng):
        for _ in range(50):
            w = random_weights(rng)
            b = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            got = excited_first(reduce(assemble_state(w, b), "n1n2").matrix)
            assert np.max(np.abs(got - emitter_pair_matrix(w, b))) < 1e-14

    def test_documented_example(self):
        w = InitialWeights.from_alpha(0.2)
        b = np.sqrt(0.5)
        rho = emitter_pair_matrix(w, b)
        p = 0.96 * 0.25
        assert np.allclose(np.diag(rho).real, [0.96 * 0.25, p, p, 1 - 0.96 * 0.25 - 2 * p], atol=1e-15)

    def test_bell_reduction(self):
        rho = emitter_pair_matrix(BELL, 1.0)
        assert rho[0, 3] == pytest.approx(0.5) and rho[0, 0] == pytest.approx(0.5)
        assert abs(rho[1, 1]) < 1e-15 and abs(rho[2, 2]) < 1e-15

    def test_emitter_reservoir_coherence_pattern(self):
        rho = reduce(assemble_state(BELL, 0.6 * np.exp(0.4j)), "n1r1").matrix
        # basis (-0, -1, +0, +1): |+0> couples only to |-1>
        assert abs(rho[2, 0]) < 1e-15
        assert abs(rho[2, 1]) > 1e-3

    def test_unknown_partition(self):
        with pytest.raises(ConfigError):
            reduce(assemble_state(BELL, 1.0), "n1x1")
        with pytest.raises(ConfigError):
            reduce(assemble_state(BELL, 1.0), "n1n1")

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 2 * np.pi))
    def test_physical_and_x_shaped(self, alpha, mag, phase):
        w = InitialWeights.from_alpha(alpha)
        state = assemble_state(w, mag * np.exp(1j * phase))
        off_x = ~(np.eye(4, dtype=bool) | np.fliplr(np.eye(4, dtype=bool)))
        for p in PARTITIONS:
            rho = reduce(state, p).matrix
            rep = physicality(rho)
            assert rep["trace_error"] < 1e-10
            assert rep["hermiticity_error"] < 1e-12
            assert rep["min_eigenvalue"] >= -1e-10
            assert np.max(np.abs(rho[off_x])) < 1e-12

    def test_batch_matches_single(self, rng):
        b = rng.uniform(0, 1, 7) * np.exp(1j * rng.uniform(0, 6, 7))
        for p in PARTITIONS:
            batch = reduce_batch(BELL, b, p)
            single = np.stack([reduce(assemble_state(BELL, x), p).matrix for x in b])
            assert np.max(np.abs(batch - single)) < 1e-15


class TestEntanglement:
    def test_bell_and_product(self):
        assert concurrence(emitter_pair_matrix(BELL, 1.0)) == pytest.approx(1.0, abs=1e-12)
        prod = np.zeros((4, 4))
        prod[0, 0] = 1
        assert concurrence(prod) == 0.0
        assert eof(prod) == 0.0

    def test_eof_anchor_against_arbitrary_precision(self):
        with mp.workdps(40):
            x = (1 + mp.sqrt(1 - mp.mpf(1) / 4)) / 2
            ref = float(-x * mp.log(x, 2) - (1 - x) * mp.log(1 - x, 2))
        assert eof_from_concurrence(0.5) == pytest.approx(ref, abs=1e-14)
        assert round(ref, 4) == 0.3546
        assert eof_from_concurrence(1.0) == 1.0 and eof_from_concurrence(0.0) == 0.0

    def test_closed_form_against_both_routes(self, rng):
        for _ in range(200):
            w = random_weights(rng)
            b = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            rho = emitter_pair_matrix(w, b)
            closed = x_state_concurrence(w, b)
            assert abs(concurrence(rho) - closed) < 1e-9
            assert abs(concurrence(rho, method="eig") - closed) < 1e-7

    def test_unphysical_matrix_flagged(self):
        bad = np.diag([1.2, -0.2, 0, 0])
        with pytest.raises(UnphysicalStateError):
            concurrence(bad)
        with pytest.raises(UnphysicalStateError):
            von_neumann_entropy(bad)


class TestDiscord:
    @pytest.mark.parametrize("side", ["A", "B"])
    def test_bell_state(self, side):
        assert discord(emitter_pair_matrix(BELL, 1.0), side) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("side", ["A", "B"])
    def test_classically_correlated_state(self, side):
        rho = np.diag([0.5, 0, 0, 0.5])
        assert mutual_information(rho) == pytest.approx(1.0, abs=1e-12)
        assert discord(rho, side) == pytest.approx(0.0, abs=1e-8)

    def test_bloch_form_matches_explicit_projectors(self, rng):
        for _ in range(10):
            w = random_weights(rng)
            b = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 6))
            rho = reduce(assemble_state(w, b), PARTITIONS[rng.integers(6)]).matrix
            J = ClassicalCorrelation(rho, "B")
            for th, ph in rng.uniform([0, 0], [np.pi, 2 * np.pi], size=(5, 2)):
                assert float(J.at(th, ph)) == pytest.approx(projector_classical_info(rho, th, ph), abs=1e-12)

    def test_documented_example_against_dense_grid(self):
        w = InitialWeights.from_alpha(0.2)
        rho = emitter_pair_matrix(w, np.sqrt(0.5))
        res = discord_details(rho)
        dense, _ = ClassicalCorrelation(rho).grid_max(1024)
        assert abs((res.mutual_information - dense) - res.discord) < 1e-4

    def test_measured_side_taken_from_matrix(self):
        rho = reduce(assemble_state(BELL, 0.7), "n1r1", measured_side="A")
        assert discord(rho) == discord(rho.matrix, "A")

    def test_bad_side(self):
        with pytest.raises(ConfigError):
            discord(np.eye(4) / 4, "C")

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 2 * np.pi), st.sampled_from(PARTITIONS),
           st.sampled_from(["A", "B"]))
    def test_optimizer_ordering(self, alpha, mag, phase, part, side):
        rho = reduce(assemble_state(InitialWeights.from_alpha(alpha), mag * np.exp(1j * phase)), part).matrix
        res = discord_details(rho, side)
        assert res.classical_grid <= res.classical_refined + 1e-12
        assert res.classical_refined <= res.mutual_information + 1e-9
        assert 0 <= res.discord <= 2


def _toy_trajectory(n=11):
    t = np.linspace(0, 1, n)
    b = np.sqrt(np.linspace(1, 0, n)) * np.exp(-0.3j * t)
    return AmplitudeTrajectory(t, b, np.zeros(n, complex), np.sqrt(1 - np.abs(b) ** 2))


class TestTimeseries:
    def test_anchors_at_both_ends(self):
        recs = correlation_timeseries(_toy_trajectory(), BELL, PARTITIONS, stride=10)
        first, last = recs[0], recs[-1]
        assert first.qd["n1n2"] == pytest.approx(1, abs=1e-6) and first.eof["n1n2"] == pytest.approx(1, abs=1e-6)
        for p in PARTITIONS[1:]:
            assert first.qd[p] < 1e-6 and first.eof[p] < 1e-6
        assert last.qd["r1r2"] == pytest.approx(1, abs=1e-6) and last.eof["r1r2"] == pytest.approx(1, abs=1e-6)
        for p in ("n1n2", "n1r1", "n1r2"):
            assert last.qd[p] < 1e-6

    def test_stride_keeps_last_point(self):
        recs = correlation_timeseries(_toy_trajectory(11), BELL, ("n1n2",), stride=4)
        assert [r.t for r in recs] == pytest.approx([0.0, 0.4, 0.8, 1.0])

    def test_workers_do_not_change_results(self):
        traj = _toy_trajectory(9)
        a = correlation_timeseries(traj, BELL, ("n1n2", "n1r1"), workers=1)
        b = correlation_timeseries(traj, BELL, ("n1n2", "n1r1"), workers=2)
        assert [(r.t, r.qd, r.eof, r.mi) for r in a] == [(r.t, r.qd, r.eof, r.mi) for r in b]

    def test_both_sides(self):
        recs = correlation_timeseries(_toy_trajectory(3), BELL, ("n1r1",), measured_side="both")
        assert set(recs[1].qd_other_side) == {"n1r1"}

    def test_bad_arguments(self):
        with pytest.raises(ConfigError):
            correlation_timeseries(_toy_trajectory(), BELL, ("n1n2",), stride=0)
        with pytest.raises(ConfigError):
            correlation_timeseries(_toy_trajectory(), BELL, ("xx",))
