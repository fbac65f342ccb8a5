"""Photonic band-gap reservoir: dispersion, memory kernel and spectral integrals.

Units are fixed by ``omega_c = 1`` and ``c = 1``; with the default
``A = omega_c / k0**2`` and ``k0 = omega_c / c`` every reservoir quantity is
dimensionless and time is measured in ``1 / omega_c``.  The coupling enters
only through the dimensionless constant ``eta``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import ConfigError, ConvergenceError

__all__ = [
    "ReservoirParams",
    "EmitterParams",
    "natural_emission_rate",
    "dispersion",
    "coupling_density",
    "phase_panels",
    "memory_kernel",
    "memory_kernel_grid",
    "band_edge_kernel",
    "spectral_integral",
    "spectral_slope",
]

# widest panel allowed regardless of phase; the coupling density varies on the
# scale sqrt(omega_c / A) around the band edge
_MAX_PANEL_FRACTION = 0.25
_PHASE_PER_PANEL = np.pi / 4


@dataclass(frozen=True)
class ReservoirParams:
    """Structured bath with dispersion ``omega_c + A (k - k0)**2``.

    ``k_max`` is the ultraviolet cutoff of the memory kernel in units of
    ``k0``; the bound-state integrals are evaluated without it.
    """

    omega_c: float = 1.0
    A: float = 1.0
    k0: float = 1.0
    eta: float = 0.2
    k_max: float = 10.0
    n_quad: int = 8

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ConfigError(f"omega_c must be positive, got {self.omega_c}")
        if not self.A > 0:
            raise ConfigError(f"A must be positive, got {self.A}")
        if not self.k0 > 0:
            raise ConfigError(f"k0 must be positive, got {self.k0}")
        if not self.eta >= 0:
            raise ConfigError(f"eta must be non-negative, got {self.eta}")
        if not self.k_max > 1:
            raise ConfigError(f"k_max (units of k0) must exceed 1, got {self.k_max}")
        if int(self.n_quad) != self.n_quad or self.n_quad < 8:
            raise ConfigError(f"n_quad must be an integer >= 8, got {self.n_quad}")

    @property
    def k_cut(self) -> float:
        """Absolute cutoff wave vector."""
        return self.k_max * self.k0


@dataclass(frozen=True)
class EmitterParams:
    omega_0: float = 0.1

    def __post_init__(self):
        if not self.omega_0 > 0:
            raise ConfigError(f"omega_0 must be positive, got {self.omega_0}")


def natural_emission_rate(reservoir: ReservoirParams, emitter: EmitterParams) -> float:
    """Natural spontaneous emission rate ``eta * omega_0``."""
    return reservoir.eta * emitter.omega_0


def dispersion(params: ReservoirParams, k):
    """Band frequency ``omega_c + A (k - k0)**2``; rejects negative wave vectors."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("wave vector must be non-negative")
    w = params.omega_c + params.A * (k - params.k0) ** 2
    return float(w) if w.ndim == 0 else w


def coupling_density(params: ReservoirParams, k):
    """Spectral weight ``eta k**2 c**3 / omega_k`` per unit wave vector (c = 1)."""
    k = np.asarray(k, dtype=float)
    return params.eta * k * k / dispersion(params, k)


@lru_cache(maxsize=16)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _breakpoints(params: ReservoirParams, s: float) -> np.ndarray:
    k0, k_cut = params.k0, params.k_cut
    w_max = _MAX_PANEL_FRACTION * np.sqrt(params.omega_c / params.A)
    pts = [np.arange(0.0, k_cut, w_max), [k0, k_cut]]
    if s > 0:
        # (k - k0)**2 = j * step gives panels with s * max|dw/dk| * width <= pi/4
        step = _PHASE_PER_PANEL / (2.0 * params.A * s)
        for reach, sign in ((k_cut - k0, 1.0), (k0, -1.0)):
            j = np.arange(1, int(np.floor(reach * reach / step)) + 1)
            pts.append(k0 + sign * np.sqrt(j * step))
    pts = np.unique(np.clip(np.concatenate(pts), 0.0, k_cut))
    return pts


def phase_panels(params: ReservoirParams, s: float, n_quad: int | None = None):
    """Gauss-Legendre nodes and weights on ``[0, k_cut]`` resolving ``exp(-i omega_k s)``.

    Each panel satisfies ``s * max|d omega/dk| * width <= pi/4``; panels are
    also capped in width so the non-oscillatory part of the integrand is
    resolved at ``s = 0``.

    Returns
    -------
    nodes, weights : ndarray
    """
    n = params.n_quad if n_quad is None else int(n_quad)
    x, w = _gauss_legendre(n)
    edges = _breakpoints(params, max(float(s), 0.0))
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def _kernel_sum(params, s, n_quad, sign):
    k, w = phase_panels(params, np.max(s), n_quad)
    omega = dispersion(params, k)
    g = w * coupling_density(params, k)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return np.exp(sign * 1j * np.outer(s, omega)) @ g


def memory_kernel(params: ReservoirParams, s: float, rtol: float = 1e-6, sign: int = -1) -> complex:
    """Reservoir correlation function ``eta * int_0^kcut k**2/omega_k exp(-i omega_k s) dk``.

    Parameters
    ----------
    params : ReservoirParams
    s : float
        Elapsed time, ``s >= 0``.
    rtol : float
        Allowed relative change when the per-panel node count is doubled.
    sign : {-1, +1}
        Sign of the phase; ``+1`` evaluates the conjugate continuation.

    Raises
    ------
    ConvergenceError
        If doubling ``n_quad`` moves the result by more than ``rtol``.
    """
    if s < 0:
        raise ValueError("elapsed time must be non-negative")
    if params.eta == 0:
        return 0j
    coarse = _kernel_sum(params, s, params.n_quad, sign)[0]
    fine = _kernel_sum(params, s, 2 * params.n_quad, sign)[0]
    if abs(fine - coarse) > rtol * abs(fine):
        raise ConvergenceError(
            f"memory kernel at s={s} not converged: |delta|={abs(fine - coarse):.3e}"
        )
    return complex(fine)


def memory_kernel_grid(params: ReservoirParams, s) -> np.ndarray:
    """Vectorised kernel on an array of elapsed times (panels sized for ``max(s)``)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("elapsed time must be non-negative")
    out = np.zeros(s.shape, dtype=complex)
    if params.eta == 0 or s.size == 0:
        return out
    flat = s.ravel()
    for start in range(0, flat.size, 256):
        chunk = flat[start:start + 256]
        out.flat[start:start + chunk.size] = _kernel_sum(params, chunk, 2 * params.n_quad, -1)
    return out


def band_edge_kernel(params: ReservoirParams, emitter: EmitterParams | None, s: float) -> complex:
    """Stationary-phase approximation of the kernel around ``k = k0``.

    ``eta sqrt(pi/s) exp(-i(omega_c s + pi/4)) k0**2 / (omega_c sqrt(A))``.
    Approximate; meaningful for large ``s`` and ``omega_0`` near the band
    edge.  The emitter argument is accepted for interface symmetry only.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("band-edge kernel is singular at s <= 0")
    amp = params.eta * np.sqrt(np.pi / s) * params.k0 ** 2 / (params.omega_c * np.sqrt(params.A))
    val = amp * np.exp(-1j * (params.omega_c * s + np.pi / 4))
    return complex(val) if val.ndim == 0 else val


def _edge_model_integral(params: ReservoirParams, delta: float, power: int, upper: float) -> float:
    """Integral over ``k in [0, upper]`` of ``k0**2 / (omega_c D**power)``, ``D = delta + A (k-k0)**2``."""
    A, k0 = params.A, params.k0
    root = np.sqrt(A * delta)
    scale = np.sqrt(A / delta)

    def antiderivative(u):
        if np.isinf(u):
            atan, frac = np.pi / 2, 0.0
        else:
            atan, frac = np.arctan(u * scale), u / (delta + A * u * u)
        if power == 1:
            return atan / root
        return frac / (2 * delta) + atan / (2 * delta * root)

    return k0 ** 2 / params.omega_c * (antiderivative(upper - k0) - antiderivative(-k0))


def _half_line(params: ReservoirParams, E: float, power: int, tol: float, cutoff: bool) -> float:
    """``int_0^inf k**2 / ((E - w)**power w) dk`` (or up to ``k_cut``).

    The band-edge peak ``k0**2 / (omega_c D**power)`` is integrated
    analytically; the bounded remainder is symmetrised about ``k0`` so its
    odd part cancels before quadrature.  The tail beyond the last finite
    breakpoint is mapped onto a finite interval by ``k = 1/u``.
    """
    if not E < params.omega_c:
        raise ValueError(f"trial energy must lie below the band edge, got E={E}")
    wc, A, k0 = params.omega_c, params.A, params.k0
    delta = wc - E
    sign = -1.0 if power == 1 else 1.0

    def remainder(k):
        u = k - k0
        w = wc + A * u * u
        d = delta + A * u * u
        return sign * (k * k * wc - k0 * k0 * w) / (w * wc * d ** power)

    def paired(u):
        return remainder(k0 + u) + remainder(k0 - u)

    if cutoff and params.k_cut < 2 * k0:
        raise ValueError("cutoff integrals need k_max >= 2 (the remainder is paired about k0)")
    width = np.sqrt(delta / A)
    upper = params.k_cut if cutoff else max(2 * k0 + 20.0 * np.sqrt(wc / A), k0 + 40 * width)
    model = _edge_model_integral(params, delta, power, np.inf if not cutoff else upper)

    marks = [m * width for m in (1.0, 4.0, 16.0) if m * width < k0]
    with warnings.catch_warnings():
        # quad's own warnings are superseded by the explicit error-estimate check below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        pieces = _remainder_pieces(paired, remainder, marks, k0, upper, width, tol, cutoff)
    total = sign * model + sum(p[0] for p in pieces)
    err = sum(p[1] for p in pieces)
    if err > max(tol, 1e-11 * abs(total)):
        raise ConvergenceError(f"spectral integral error estimate {err:.2e} exceeds {tol:.0e}")
    return total


def _remainder_pieces(paired, remainder, marks, k0, upper, width, tol, cutoff):
    pieces = [integrate.quad(paired, 0.0, k0, points=marks or None, epsabs=tol / 8, epsrel=1e-13, limit=500)]
    far = [k0 + m * width for m in (1.0, 4.0, 16.0) if 2 * k0 < k0 + m * width < upper]
    pieces.append(integrate.quad(remainder, 2 * k0, upper, points=far or None, epsabs=tol / 8,
                                 epsrel=1e-13, limit=500))
    if not cutoff:
        pieces.append(integrate.quad(lambda u: remainder(1.0 / u) / (u * u), 0.0, 1.0 / upper,
                                     epsabs=tol / 8, epsrel=1e-13, limit=200))
    return pieces


def spectral_integral(params: ReservoirParams, E: float, tol: float = 1e-9, cutoff: bool = False) -> float:
    """Self-energy ``eta * int_0^inf c**3 k**2 / ((E - w_k) w_k) dk`` for ``E < omega_c``.

    Strictly negative for ``eta > 0``.  With ``cutoff=True`` the integral is
    truncated at ``k_cut``, matching the bath seen by the memory kernel.
    """
    if params.eta == 0:
        if not E < params.omega_c:
            raise ValueError(f"trial energy must lie below the band edge, got E={E}")
        return 0.0
    return params.eta * _half_line(params, E, 1, tol / params.eta, cutoff)


def spectral_slope(params: ReservoirParams, E: float, tol: float = 1e-9, cutoff: bool = False) -> float:
    """``eta * int_0^inf k**2 / ((E - w_k)**2 w_k) dk`` (minus the self-energy derivative)."""
    if params.eta == 0:
        if not E < params.omega_c:
            raise ValueError(f"trial energy must lie below the band edge, got E={E}")
        return 0.0
    return params.eta * _half_line(params, E, 2, tol / params.eta, cutoff)
