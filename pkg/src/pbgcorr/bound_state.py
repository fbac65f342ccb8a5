"""Emitter-field bound state inside the band gap.

A bound state with energy ``E1 < omega_c`` solves ``y(E1) = E1`` where
``y(E) = omega_0 + Sigma(E)`` and ``Sigma`` is :func:`spectral_integral`.
``y`` decreases monotonically on ``(-inf, omega_c)`` so there is at most one
root.

For the quadratic band edge used here ``Sigma(E)`` diverges like
``-eta pi k0**2 / (omega_c sqrt(A (omega_c - E)))`` as ``E -> omega_c``, so
``y(omega_c-) = -inf`` whenever ``eta > 0`` and a root always exists; its
weight ``Z`` becomes tiny once ``omega_0`` sits far above the band edge.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError
from .reservoir import EmitterParams, ReservoirParams, spectral_integral, spectral_slope

EDGE_EPS = 1e-6
ROOT_TOL = 1e-9


@dataclass(frozen=True)
class BoundStateResult:
    exists: bool
    E1: Optional[float]
    Z: Optional[float]
    y_at_edge: float
    marginal: bool = False


def y_function(reservoir: ReservoirParams, emitter: EmitterParams, E: float, cutoff: bool = False) -> float:
    return emitter.omega_0 + spectral_integral(reservoir, E, cutoff=cutoff)


def y_minus_E(reservoir: ReservoirParams, emitter: EmitterParams, E_grid, cutoff: bool = False) -> np.ndarray:
    return np.array([y_function(reservoir, emitter, E, cutoff) - E for E in np.asarray(E_grid, float)])


def edge_limit(reservoir: ReservoirParams, emitter: EmitterParams, eps: float = EDGE_EPS,
               cutoff: bool = False) -> float:
    """Extrapolate ``y(omega_c-)`` from ``y`` at ``omega_c - eps`` and ``omega_c - 4 eps``.

    Fits ``a + c / sqrt(eps)``; returns ``-inf`` when the singular coefficient
    is negative and the regular part ``a`` otherwise.
    """
    wc = reservoir.omega_c
    y1 = y_function(reservoir, emitter, wc - eps, cutoff)
    y4 = y_function(reservoir, emitter, wc - 4 * eps, cutoff)
    c = (y1 - y4) / (eps ** -0.5 - (4 * eps) ** -0.5)
    if c < -1e-12 * max(1.0, abs(y1)):
        return -np.inf
    return y1 - c * eps ** -0.5


def find_bound_state(reservoir: ReservoirParams, emitter: EmitterParams, eps: float = EDGE_EPS,
                     cutoff: bool = False) -> BoundStateResult:
    """Locate the in-gap root of ``y(E) = E``.

    Existence is decided by the sign of ``y(omega_c - eps) - (omega_c - eps)``
    together with the limit from :func:`edge_limit`; a limit exactly equal to
    ``omega_c`` is reported as marginal with ``exists=False``.

    Raises
    ------
    BracketError
        If the sign pattern contradicts monotonicity of ``y(E) - E``.
    """
    wc = reservoir.omega_c

    def g(E):
        return y_function(reservoir, emitter, E, cutoff) - E

    top = wc - eps
    g_top = g(top)
    limit = edge_limit(reservoir, emitter, eps, cutoff)
    y_edge = float(g_top + top)
    if g_top > 0 and limit < wc:
        # the root sits closer than eps to the edge; walk towards it
        lo_edge = top
        while g_top > 0 and wc - top > 1e-13:
            lo_edge, top = top, wc - (wc - top) / 100
            g_top = g(top)
        if g_top > 0:
            return BoundStateResult(False, None, None, y_edge, marginal=True)
        E1 = brentq(g, lo_edge, top, xtol=1e-16, maxiter=500)
        return _found(reservoir, emitter, E1, y_edge, cutoff)
    if g_top > 0:
        return BoundStateResult(False, None, None, y_edge, marginal=bool(np.isclose(limit, wc)))
    if g_top == 0 or (reservoir.eta == 0 and limit == wc):
        return BoundStateResult(False, None, None, y_edge, marginal=True)

    shift = 10 * reservoir.eta * emitter.omega_0
    lo = min(emitter.omega_0 - shift, top) - 1e-3
    for _ in range(200):
        if g(lo) > 0:
            break
        lo = wc - 2 * (wc - lo)
    else:
        raise BracketError("no sign change found below the band edge")
    E1 = brentq(g, lo, top, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(g(E1)) > ROOT_TOL:
        raise BracketError(f"root residual {abs(g(E1)):.2e} above {ROOT_TOL:.0e}")
    return _found(reservoir, emitter, E1, y_edge, cutoff)


def _found(reservoir, emitter, E1, y_edge, cutoff):
    Z = residue_weight(reservoir, emitter, E1, cutoff)
    return BoundStateResult(True, float(E1), Z, y_edge)


def residue_weight(reservoir: ReservoirParams, emitter: EmitterParams, E1: float, cutoff: bool = False) -> float:
    """``Z = 1 / (1 + eta int k**2 / ((E1 - w_k)**2 w_k) dk)``.

    ``Z`` is the squared overlap of the bare excited state with the bound
    state and hence the long-time modulus ``|b(t -> inf)|``: expanding
    ``b(t) = <e| exp(-iHt) |e>`` over eigenstates, every continuum
    contribution dephases and only ``Z exp(-i E1 t)`` survives.  ``Z`` is the
    residue of the resolvent ``1 / (E - y(E))`` at ``E1``, i.e.
    ``1 / (1 - Sigma'(E1))``.
    """
    if not E1 < reservoir.omega_c:
        raise ValueError("bound-state energy must lie below the band edge")
    return float(1.0 / (1.0 + spectral_slope(reservoir, E1, cutoff=cutoff)))
