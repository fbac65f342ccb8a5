"""Brute-force reference: the reservoir discretised into N modes.

The single-excitation sector of the emitter plus N modes is an (N+1)-level
Hermitian problem.  It is diagonalised once; amplitudes at any time follow
from the eigen-decomposition, so no time-stepping error enters.

Only meaningful below the recurrence time ``2 pi / max level spacing``;
:func:`compare_with_volterra` refuses to compare beyond half of it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import ConfigError, NormDriftError
from .reservoir import EmitterParams, ReservoirParams, coupling_density, dispersion

NORM_TOL = 1e-8


@dataclass(frozen=True)
class DiscretizedBath:
    """Uniform midpoint grid on ``(0, k_cut]`` with ``|g_j|**2 = eta k_j**2 c**3 dk / omega_j``."""

    n_modes: int
    k_grid: np.ndarray
    omega_grid: np.ndarray
    g_grid: np.ndarray
    dk: float
    omega_c: float

    @property
    def recurrence_time(self) -> float:
        gaps = np.diff(np.sort(self.omega_grid))
        return float(2 * np.pi / gaps.max())

    def kernel(self, s) -> np.ndarray:
        """Discrete counterpart of the memory kernel, ``sum_j |g_j|**2 exp(-i omega_j s)``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.exp(-1j * np.outer(s, self.omega_grid)) @ (self.g_grid ** 2)


def build_bath(reservoir: ReservoirParams, n_modes: int) -> DiscretizedBath:
    if n_modes < 1:
        raise ConfigError("n_modes must be positive")
    dk = reservoir.k_cut / n_modes
    k = (np.arange(n_modes) + 0.5) * dk
    omega = dispersion(reservoir, k)
    g = np.sqrt(coupling_density(reservoir, k) * dk)
    return DiscretizedBath(n_modes, k, omega, g, dk, reservoir.omega_c)


@dataclass
class Diagonalization:
    energies: np.ndarray
    vectors: np.ndarray  # columns are eigenvectors, row 0 is the emitter

    @property
    def emitter_weights(self) -> np.ndarray:
        return self.vectors[0] ** 2


def diagonalize(bath: DiscretizedBath, emitter: EmitterParams) -> Diagonalization:
    n = bath.n_modes + 1
    H = np.zeros((n, n))
    H[0, 0] = emitter.omega_0
    H[0, 1:] = bath.g_grid
    H[1:, 0] = bath.g_grid
    H[np.arange(1, n), np.arange(1, n)] = bath.omega_grid
    energies, vectors = linalg.eigh(H, overwrite_a=True, check_finite=False)
    return Diagonalization(energies, vectors)


@dataclass
class OracleResult:
    t: np.ndarray
    b: np.ndarray
    b_modes: Optional[np.ndarray]
    norm_deviation: float
    n_modes: int
    k_cut: float
    recurrence_time: float
    b_dot: Optional[np.ndarray] = None


def evolve_exact(bath: DiscretizedBath, emitter: EmitterParams, t_grid, return_modes: bool = False,
                 diag: Diagonalization | None = None, audit_points: int = 16) -> OracleResult:
    """Amplitudes ``b(t)`` (and optionally every ``b_k(t)``) from ``b(0)=1, b_k(0)=0``.

    The total norm is audited at ``audit_points`` evenly spread times (all
    times when ``return_modes`` is set).

    Raises
    ------
    NormDriftError
        If ``|b|**2 + sum |b_k|**2`` departs from 1 by more than ``1e-8``.
    """
    diag = diagonalize(bath, emitter) if diag is None else diag
    t = np.asarray(t_grid, dtype=float)
    c = diag.vectors[0]
    phases_w = c * c
    b = np.empty(t.size, dtype=complex)
    b_dot = np.empty(t.size, dtype=complex)
    for start in range(0, t.size, 512):
        tt = t[start:start + 512]
        phase = np.exp(-1j * np.outer(tt, diag.energies))
        b[start:start + tt.size] = phase @ phases_w
        b_dot[start:start + tt.size] = phase @ (-1j * diag.energies * phases_w)

    if return_modes:
        audit_idx = np.arange(t.size)
    else:
        audit_idx = np.unique(np.linspace(0, t.size - 1, min(audit_points, t.size)).astype(int))
    modes = np.empty((t.size, bath.n_modes), dtype=complex) if return_modes else None
    worst = 0.0
    for start in range(0, audit_idx.size, 64):
        idx = audit_idx[start:start + 64]
        coeff = np.exp(-1j * np.outer(diag.energies, t[idx])) * c[:, None]
        amps = diag.vectors @ coeff  # rows: emitter then modes
        norm = np.sum(np.abs(amps) ** 2, axis=0)
        worst = max(worst, float(np.max(np.abs(norm - 1.0))))
        if modes is not None:
            modes[idx] = amps[1:].T
    if worst > NORM_TOL:
        raise NormDriftError(f"single-excitation norm drifted by {worst:.2e}")
    return OracleResult(t, b, modes, worst, bath.n_modes, float(bath.k_grid[-1] + 0.5 * bath.dk),
                        bath.recurrence_time, b_dot)


def _local_edge_spacing(bath: DiscretizedBath, levels: int = 6) -> float:
    w = np.sort(bath.omega_grid)
    distinct = w[np.concatenate(([True], np.diff(w) > 1e-12 * w[1:]))]
    return float(np.mean(np.diff(distinct[:levels])))


def bound_state_overlap(bath: DiscretizedBath, emitter: EmitterParams,
                        diag: Diagonalization | None = None) -> Optional[float]:
    """Squared emitter overlap of the in-gap eigenvector, or ``None`` if there is none.

    An eigenvalue counts as in-gap when it lies below ``omega_c - 3 dw`` with
    ``dw`` the level spacing of the discretised band at its edge.
    """
    if diag is None:
        n = bath.n_modes + 1
        H = np.zeros((n, n))
        H[0, 0] = emitter.omega_0
        H[0, 1:] = bath.g_grid
        H[1:, 0] = bath.g_grid
        H[np.arange(1, n), np.arange(1, n)] = bath.omega_grid
        energies, vectors = linalg.eigh(H, subset_by_index=[0, 0], check_finite=False)
    else:
        energies, vectors = diag.energies[:1], diag.vectors[:, :1]
    threshold = bath.omega_c - 3 * _local_edge_spacing(bath)
    if energies[0] >= threshold:
        return None
    return float(vectors[0, 0] ** 2)


def lowest_level(bath: DiscretizedBath, emitter: EmitterParams) -> float:
    n = bath.n_modes + 1
    H = np.diag(np.concatenate(([emitter.omega_0], bath.omega_grid)))
    H[0, 1:] = bath.g_grid
    H[1:, 0] = bath.g_grid
    return float(linalg.eigh(H, eigvals_only=True, subset_by_index=[0, 0])[0])


def compare_with_volterra(t, b_volterra, oracle: OracleResult) -> float:
    """Max ``|b_volterra - b_oracle|`` on the common grid, restricted to half the recurrence time."""
    t = np.asarray(t, dtype=float)
    if t.shape != oracle.t.shape or np.max(np.abs(t - oracle.t)) > 1e-12:
        raise ValueError("time grids differ")
    if t[-1] > 0.5 * oracle.recurrence_time:
        raise ValueError(
            f"comparison window {t[-1]} exceeds half the recurrence time {oracle.recurrence_time:.1f}"
        )
    return float(np.max(np.abs(np.asarray(b_volterra) - oracle.b)))
