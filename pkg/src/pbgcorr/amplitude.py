"""Excited-state amplitude of one emitter coupled to a band-gap reservoir.

Solves

    db/dt + i omega_0 b(t) + int_0^t f(t - tau) b(tau) dtau = 0,   b(0) = 1,

on a uniform grid.  The history integral uses product integration: ``b`` is
interpolated piecewise-linearly and the kernel is integrated exactly against
each hat function, so kernel oscillations faster than the grid do not degrade
the second-order accuracy.  Time stepping is the trapezoidal rule; because the
equation is linear the implicit corrector is solved in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigError, StepSizeError
from .reservoir import (
    EmitterParams,
    ReservoirParams,
    band_edge_kernel,
    coupling_density,
    dispersion,
    natural_emission_rate,
    phase_panels,
)

KERNEL_MODES = ("full-integral", "band-edge", "markov")
RATE_FLOOR = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 0.01
    t_max: float = 50.0
    kernel_mode: str = "full-integral"
    convergence_check: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_max > self.dt:
            raise ConfigError(f"t_max must exceed dt, got {self.t_max}")
        if self.kernel_mode not in KERNEL_MODES:
            raise ConfigError(f"kernel_mode must be one of {KERNEL_MODES}, got {self.kernel_mode!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass
class AmplitudeTrajectory:
    """Amplitude ``b`` on the time grid with the time-local rates derived from it.

    ``omega_shift`` and ``gamma_rate`` are NaN where ``rates_defined`` is
    False (``|b| < 1e-6``).
    """

    t: np.ndarray
    b: np.ndarray
    b_dot: np.ndarray
    b_tilde: np.ndarray
    omega_shift: Optional[np.ndarray] = None
    gamma_rate: Optional[np.ndarray] = None
    rates_defined: Optional[np.ndarray] = None
    convergence_deviation: Optional[float] = None

    @property
    def population(self) -> np.ndarray:
        return np.abs(self.b) ** 2


@dataclass(frozen=True)
class ProductWeights:
    """Hat-function moments of the kernel.

    ``left[p]  = int_{ph}^{(p+1)h} f(s) (1 - (s - ph)/h) ds``
    ``right[p] = int_{ph}^{(p+1)h} f(s) (s - ph)/h ds``

    ``local`` is the weight of a delta-function part of the kernel sitting
    at ``s = 0`` (half of its strength lies inside ``[0, t]``); it acts at
    every time including ``t = 0``.
    """

    left: np.ndarray
    right: np.ndarray
    local: float = 0.0


def _hat_moments(x):
    """``(int_0^1 (1-v) e^{-ixv} dv, int_0^1 v e^{-ixv} dv)`` for real ``x``."""
    x = np.asarray(x, dtype=float)
    left = np.empty(x.shape, dtype=complex)
    right = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 1.0
    if np.any(small):
        z = -1j * x[small]
        term = np.ones_like(z)
        lsum = np.zeros_like(z)
        rsum = np.zeros_like(z)
        fact = 2.0  # (n+2)!
        for n in range(24):
            lsum += term / fact
            rsum += term * (n + 1) / fact
            term = term * z
            fact *= n + 3
        left[small] = lsum
        right[small] = rsum
    big = ~small
    if np.any(big):
        xb = x[big]
        e = np.exp(-1j * xb)
        r = 1j * e / xb + (e - 1.0) / xb ** 2
        right[big] = r
        left[big] = (1.0 - e) / (1j * xb) - r
    return left, right


def _block_bounds(n: int):
    """Split offsets ``0..n`` into blocks of geometrically growing length.

    Later blocks span longer elapsed times and therefore need finer k panels;
    grouping keeps the short offsets from paying for the long ones.
    """
    if n < 64:
        return [(0, n)]
    bounds = [0, n // 8, n // 4, n // 2, n]
    return list(zip(bounds[:-1], bounds[1:]))


def _integral_weights(reservoir: ReservoirParams, dt: float, n: int) -> ProductWeights:
    left = np.zeros(n, dtype=complex)
    right = np.zeros(n, dtype=complex)
    if reservoir.eta == 0:
        return ProductWeights(left, right)
    for p_lo, p_hi in _block_bounds(n):
        k, w = phase_panels(reservoir, (p_hi + 1) * dt)
        omega = dispersion(reservoir, k)
        g = w * coupling_density(reservoir, k) * dt
        lm, rm = _hat_moments(omega * dt)
        count = p_hi - p_lo
        m = int(np.ceil(np.sqrt(count)))
        n_a = int(np.ceil(count / m))
        acc = np.zeros((2 * n_a, m), dtype=complex)
        a_shift = (p_lo + m * np.arange(n_a)) * dt
        c_shift = np.arange(m) * dt
        chunk = max(1, 2 ** 22 // (2 * n_a + m))
        for j in range(0, k.size, chunk):
            om = omega[j:j + chunk]
            outer = np.exp(-1j * np.outer(a_shift, om))
            rows = np.vstack((outer * (g[j:j + chunk] * lm[j:j + chunk]),
                              outer * (g[j:j + chunk] * rm[j:j + chunk])))
            acc += rows @ np.exp(-1j * np.outer(om, c_shift))
        left[p_lo:p_hi] = acc[:n_a].ravel()[:count]
        right[p_lo:p_hi] = acc[n_a:].ravel()[:count]
    return ProductWeights(left, right)


def callable_weights(kernel: Callable, dt: float, n: int, nodes: int = 16) -> ProductWeights:
    """Hat moments of an arbitrary vectorised kernel by Gauss-Legendre per cell.

    The first cell uses ``s = h u**2`` so kernels with an integrable
    ``s**-1/2`` singularity at the origin are handled.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    left = np.zeros(n, dtype=complex)
    right = np.zeros(n, dtype=complex)
    # first cell, v = u**2, dv = 2u du
    v = x * x
    f0 = np.asarray(kernel(v * dt), dtype=complex)
    left[0] = dt * np.sum(w * 2 * x * f0 * (1 - v))
    right[0] = dt * np.sum(w * 2 * x * f0 * v)
    if n > 1:
        p = np.arange(1, n)[:, None]
        f = np.asarray(kernel((p + x[None, :]) * dt), dtype=complex)
        left[1:] = dt * (f * (w * (1 - x))).sum(axis=1)
        right[1:] = dt * (f * (w * x)).sum(axis=1)
    return ProductWeights(left, right)


@lru_cache(maxsize=8)
def product_weights(reservoir: ReservoirParams, dt: float, n: int, kernel_mode: str = "full-integral",
                    markov_rate: float = 0.0) -> ProductWeights:
    """Kernel moments for grid offsets ``0 .. n-1``, cached per bath and grid."""
    if kernel_mode == "full-integral":
        return _integral_weights(reservoir, dt, n)
    if kernel_mode == "band-edge":
        if reservoir.eta == 0:
            return ProductWeights(np.zeros(n, complex), np.zeros(n, complex))
        return callable_weights(lambda s: band_edge_kernel(reservoir, None, s), dt, n)
    if kernel_mode == "markov":
        zeros = np.zeros(n, dtype=complex)
        return ProductWeights(zeros, zeros.copy(), local=0.5 * markov_rate)
    raise ConfigError(f"unknown kernel mode {kernel_mode!r}")


def _march(omega_0: float, weights: ProductWeights, dt: float, n: int):
    P, Q, local = weights.left, weights.right, weights.local
    F = np.zeros(n, dtype=complex)
    F[1:] = P[1:] + Q[:-1]
    F_rev = F[::-1].copy()
    b = np.zeros(n + 1, dtype=complex)
    bd = np.zeros(n + 1, dtype=complex)
    b[0] = 1.0
    bd[0] = -1j * omega_0 - local
    half = 0.5 * dt
    denom = 1.0 + half * (1j * omega_0 + P[0] + local)
    for i in range(1, n + 1):
        hist = Q[i - 1] * b[0]
        if i > 1:
            hist += np.dot(F_rev[n - i:n - 1], b[1:i])
        b[i] = (b[i - 1] + half * bd[i - 1] - half * hist) / denom
        bd[i] = -(1j * omega_0 + local) * b[i] - (P[0] * b[i] + hist)
    return b, bd


def solve_amplitude(reservoir: ReservoirParams, emitter: EmitterParams,
                    cfg: SolverConfig = SolverConfig(), kernel: Callable | None = None) -> AmplitudeTrajectory:
    """Integrate the amplitude equation from ``b(0) = 1``.

    Parameters
    ----------
    reservoir, emitter : parameter records
    cfg : SolverConfig
    kernel : callable, optional
        Replaces the reservoir kernel by ``kernel(s)`` (vectorised over ``s``);
        used for analytic test problems.

    Raises
    ------
    StepSizeError
        If ``|b|`` exceeds ``1 + 1e-6`` anywhere.
    """
    n, dt = cfg.n_steps, cfg.dt
    weights = _weights_for(reservoir, emitter, cfg, kernel, dt, n)
    b, bd = _march(emitter.omega_0, weights, dt, n)
    peak = np.max(np.abs(b))
    if peak > 1 + 1e-6:
        raise StepSizeError(f"|b| reached {peak:.8f}; dt={dt} is too coarse for this kernel")
    t = dt * np.arange(n + 1)
    traj = AmplitudeTrajectory(t=t, b=b, b_dot=bd, b_tilde=np.sqrt(np.clip(1 - np.abs(b) ** 2, 0, None)))
    traj = derive_rates(traj)
    if cfg.convergence_check:
        fine_cfg = replace(cfg, dt=dt / 2, t_max=2 * n * (dt / 2), convergence_check=False)
        fine = _march(emitter.omega_0, _weights_for(reservoir, emitter, fine_cfg, kernel, dt / 2, 2 * n),
                      dt / 2, 2 * n)[0]
        traj.convergence_deviation = float(np.max(np.abs(fine[::2] - b)))
    return traj


def _weights_for(reservoir, emitter, cfg, kernel, dt, n):
    if kernel is not None:
        return callable_weights(kernel, dt, n)
    rate = natural_emission_rate(reservoir, emitter) if cfg.kernel_mode == "markov" else 0.0
    return product_weights(reservoir, dt, n, cfg.kernel_mode, rate)


def derive_rates(traj: AmplitudeTrajectory) -> AmplitudeTrajectory:
    """Fill ``Omega(t) = -Im(b'/b)`` and ``gamma(t) = -Re(b'/b)``.

    ``b'`` is the right-hand side of the equation of motion stored by the
    solver.  Points with ``|b| < 1e-6`` get NaN and ``rates_defined = False``.
    """
    defined = np.abs(traj.b) >= RATE_FLOOR
    ratio = np.full(traj.b.shape, np.nan + 0j)
    ratio[defined] = traj.b_dot[defined] / traj.b[defined]
    return replace(traj, omega_shift=-ratio.imag, gamma_rate=-ratio.real, rates_defined=defined)


def population_from_rates(traj: AmplitudeTrajectory) -> np.ndarray:
    """``exp(-2 int_0^t gamma)`` by the trapezoidal rule; NaN after the first undefined rate."""
    gamma = traj.gamma_rate
    integral = cumulative_trapezoid(gamma, traj.t, initial=0.0)
    return np.exp(-2.0 * integral)
