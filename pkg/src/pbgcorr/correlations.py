"""Two-emitter/two-reservoir pure state, bipartite reductions and correlation measures.

The four subsystems are ordered (N1, N2, r1, r2), each a qubit with
``|->`` (or the collective vacuum ``|0bar>``) as level 0 and ``|+>`` (or the
collective one-photon state ``|1bar>``) as level 1.  Every entropy is in bits.

Discord is optimised over rank-one projective measurements on one side,
parameterised by the Bloch angles of the measurement axis.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, OptimizerRegression, UnphysicalStateError

SUBSYSTEMS = {"n1": 0, "n2": 1, "r1": 2, "r2": 3}
PARTITIONS = ("n1n2", "r1r2", "n1r1", "n1r2", "n2r1", "n2r2")
# labels used in the figures: QD1..QD4 / EoF1..EoF4
FIGURE_PARTITIONS = ("n1n2", "r1r2", "n1r1", "n1r2")

CLAMP_SILENT = 1e-12
CLAMP_LIMIT = 1e-8

_SY = np.array([[0, -1j], [1j, 0]])
_SYSY = np.kron(_SY, _SY)
_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
_EYE = np.eye(2)


@dataclass(frozen=True)
class InitialWeights:
    """``alpha |-,-> + beta |+,+>`` for the two emitters."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1) > 1e-12:
            raise ConfigError(f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1")

    @classmethod
    def from_alpha(cls, alpha: complex) -> "InitialWeights":
        """Real non-negative ``beta = sqrt(1 - |alpha|**2)``."""
        a2 = abs(alpha) ** 2
        if a2 > 1 + 1e-12:
            raise ConfigError(f"|alpha| = {abs(alpha)} exceeds 1")
        return cls(alpha, np.sqrt(max(0.0, 1.0 - a2)))


@dataclass(frozen=True)
class CompositeState:
    amplitudes: np.ndarray  # length 16, index 8*N1 + 4*N2 + 2*r1 + r2


@dataclass(frozen=True)
class DensityMatrix2Q:
    matrix: np.ndarray
    partition: str = ""
    measured_side: str = "B"


@dataclass
class CorrelationRecord:
    t: float
    qd: Dict[str, float] = field(default_factory=dict)
    eof: Dict[str, float] = field(default_factory=dict)
    mi: Dict[str, float] = field(default_factory=dict)
    qd_other_side: Dict[str, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# states and reductions
# ---------------------------------------------------------------------------

def assemble_state(w: InitialWeights, b: complex) -> CompositeState:
    """Pure state of both emitters and both reservoirs for emitter amplitude ``b``.

    Each excited emitter evolves as ``b |+>|0bar> + b~ |->|1bar>`` with
    ``b~ = sqrt(1 - |b|**2)`` real and non-negative.
    """
    if abs(b) > 1 + 1e-8:
        raise ValueError(f"|b| = {abs(b)} exceeds 1")
    bt = np.sqrt(max(0.0, 1.0 - abs(b) ** 2))
    psi = np.zeros(16, dtype=complex)
    psi[0b0000] = w.alpha
    psi[0b1100] = w.beta * b * b
    psi[0b1001] = w.beta * b * bt
    psi[0b0110] = w.beta * bt * b
    psi[0b0011] = w.beta * bt * bt
    return CompositeState(psi)


def _partition_axes(partition) -> tuple:
    if isinstance(partition, str):
        key = partition.lower()
        if len(key) != 4 or key[:2] not in SUBSYSTEMS or key[2:] not in SUBSYSTEMS:
            raise ConfigError(f"unknown partition {partition!r}")
        i, j = SUBSYSTEMS[key[:2]], SUBSYSTEMS[key[2:]]
    else:
        i, j = partition
    if i == j or not {i, j} <= {0, 1, 2, 3}:
        raise ConfigError(f"partition indices must be distinct subsystems, got {partition!r}")
    return i, j


def reduce(state: CompositeState, partition, measured_side: str = "B") -> DensityMatrix2Q:
    """Reduced state of two subsystems, keeping the order in which they are named."""
    i, j = _partition_axes(partition)
    rest = [k for k in range(4) if k not in (i, j)]
    psi = np.transpose(state.amplitudes.reshape(2, 2, 2, 2), (i, j, *rest)).reshape(4, 4)
    rho = psi @ psi.conj().T
    label = partition if isinstance(partition, str) else f"{i}{j}"
    return DensityMatrix2Q(rho, label, measured_side)


def reduce_batch(w: InitialWeights, b, partition) -> np.ndarray:
    """Reduced matrices for many amplitudes at once, shape ``(len(b), 4, 4)``."""
    i, j = _partition_axes(partition)
    rest = [k for k in range(4) if k not in (i, j)]
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    psi = np.stack([assemble_state(w, x).amplitudes for x in b])
    psi = np.transpose(psi.reshape(-1, 2, 2, 2, 2), (0, 1 + i, 1 + j, *(1 + k for k in rest)))
    psi = psi.reshape(-1, 4, 4)
    return psi @ np.conj(np.swapaxes(psi, 1, 2))


def physicality_batch(mats: np.ndarray) -> dict:
    """Worst trace, Hermiticity and positivity defects over a stack of matrices."""
    mats = np.asarray(mats)
    herm = 0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2)))
    return {
        "trace_error": float(np.max(np.abs(np.trace(mats, axis1=1, axis2=2) - 1))),
        "hermiticity_error": float(np.max(np.abs(mats - np.conj(np.swapaxes(mats, 1, 2))))),
        "min_eigenvalue": float(np.min(np.linalg.eigvalsh(herm))),
    }


def emitter_pair_matrix(w: InitialWeights, b: complex) -> np.ndarray:
    """Closed-form N1-N2 state in the excited-first basis ``(++, +-, -+, --)``."""
    b2 = abs(b) ** 2
    p = abs(w.beta * b) ** 2 * (1 - b2)
    q = 1 - abs(w.beta) ** 2 * b2 ** 2 - 2 * p
    corner = w.beta * np.conj(w.alpha) * b * b
    return np.array([
        [abs(w.beta) ** 2 * b2 ** 2, 0, 0, corner],
        [0, p, 0, 0],
        [0, 0, p, 0],
        [np.conj(corner), 0, 0, q],
    ], dtype=complex)


def excited_first(rho: np.ndarray) -> np.ndarray:
    """Reorder a two-qubit matrix from ``(--, -+, +-, ++)`` to ``(++, +-, -+, --)``."""
    return np.asarray(rho)[::-1, ::-1]


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix2Q) else np.asarray(rho, dtype=complex)


def physicality(rho) -> dict:
    """Trace, Hermiticity and positivity defects of a density matrix."""
    m = _as_matrix(rho)
    return {
        "trace_error": float(abs(np.trace(m) - 1)),
        "hermiticity_error": float(np.max(np.abs(m - m.conj().T))),
        "min_eigenvalue": float(np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))),
    }


# ---------------------------------------------------------------------------
# entanglement
# ---------------------------------------------------------------------------

def concurrence(rho, method: str = "svd") -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_i`` are the square roots, in decreasing order, of the eigenvalues
    of ``rho (sy x sy) rho* (sy x sy)``.  The default ``"svd"`` method takes
    them directly as the singular values of ``sqrt(rho) sqrt(rho~)``, which
    avoids square roots of round-off sized eigenvalues; ``"eig"``
    diagonalises the non-Hermitian product and clamps negative eigenvalues.

    Raises
    ------
    UnphysicalStateError
        If ``rho`` (or, for ``"eig"``, the product) has an eigenvalue below
        ``-1e-8``.
    """
    m = _as_matrix(rho)
    if method == "eig":
        r = m @ _SYSY @ m.conj() @ _SYSY
        lam = np.sort(np.linalg.eigvals(r).real)[::-1]
        if lam[-1] < -CLAMP_LIMIT:
            raise UnphysicalStateError(f"negative eigenvalue {lam[-1]:.3e} in concurrence")
        s = np.sqrt(np.clip(lam, 0.0, None))
    elif method == "svd":
        lam, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
        if lam[0] < -CLAMP_LIMIT:
            raise UnphysicalStateError(f"negative eigenvalue {lam[0]:.3e} in concurrence")
        root = (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T
        flipped = _SYSY @ root.conj() @ _SYSY
        s = np.linalg.svd(root @ flipped, compute_uv=False)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def x_state_concurrence(w: InitialWeights, b: complex) -> float:
    """Closed form for the N1-N2 state: ``2|b|^2 max(0, |alpha beta| - |beta|^2 (1 - |b|^2))``."""
    b2 = abs(b) ** 2
    return 2 * b2 * max(0.0, abs(w.alpha * w.beta) - abs(w.beta) ** 2 * (1 - b2))


def binary_entropy(x) -> np.ndarray | float:
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    h = np.where((x <= 0) | (x >= 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


def eof_from_concurrence(c: float) -> float:
    return binary_entropy(0.5 * (1 + np.sqrt(max(0.0, 1 - c * c))))


def eof(rho) -> float:
    """Entanglement of formation (bits)."""
    return eof_from_concurrence(concurrence(rho))


# ---------------------------------------------------------------------------
# entropies and discord
# ---------------------------------------------------------------------------

def _clamped_spectrum(m: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if lam.min() < -CLAMP_LIMIT:
        raise UnphysicalStateError(f"negative eigenvalue {lam.min():.3e}")
    return np.clip(lam, 0.0, None)


def von_neumann_entropy(rho) -> float:
    lam = _clamped_spectrum(_as_matrix(rho))
    lam = lam[lam > CLAMP_SILENT]
    return float(-np.sum(lam * np.log2(lam)))


def partial_trace(rho, keep: str) -> np.ndarray:
    """Single-qubit marginal; ``keep`` is ``'A'`` (first) or ``'B'`` (second)."""
    t = _as_matrix(rho).reshape(2, 2, 2, 2)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError("keep must be 'A' or 'B'")


def mutual_information(rho) -> float:
    m = _as_matrix(rho)
    return (von_neumann_entropy(partial_trace(m, "A")) + von_neumann_entropy(partial_trace(m, "B"))
            - von_neumann_entropy(m))


def bloch_decomposition(rho):
    """``(a, b, T)`` with ``rho = (I + a.s x I + I x b.s + sum T_ij s_i x s_j) / 4``."""
    m = _as_matrix(rho)
    a = np.array([np.trace(m @ np.kron(s, _EYE)).real for s in _PAULI])
    b = np.array([np.trace(m @ np.kron(_EYE, s)).real for s in _PAULI])
    T = np.array([[np.trace(m @ np.kron(si, sj)).real for sj in _PAULI] for si in _PAULI])
    return a, b, T


def _qubit_entropy(r):
    r = np.clip(r, 0.0, 1.0)
    return binary_entropy(0.5 * (1 + r))


def axis(theta, phi) -> np.ndarray:
    theta, phi = np.asarray(theta, float), np.asarray(phi, float)
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)


class ClassicalCorrelation:
    """Information about the unmeasured side gained from a projective measurement.

    ``J(n) = S(rho_U) - sum_+- p_+- S(rho_U | +-n)`` for a measurement of the
    other side along the Bloch axis ``n``.
    """

    def __init__(self, rho, measured_side: str = "B"):
        a, b, T = bloch_decomposition(rho)
        if measured_side == "A":
            a, b, T = b, a, T.T
        elif measured_side != "B":
            raise ConfigError(f"measured_side must be 'A' or 'B', got {measured_side!r}")
        self.a, self.b, self.T = a, b, T
        self.unmeasured_entropy = float(_qubit_entropy(np.linalg.norm(a)))

    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        bn = n @ self.b
        Tn = n @ self.T.T
        out = np.full(bn.shape, self.unmeasured_entropy)
        for sgn in (1.0, -1.0):
            p = 0.5 * (1 + sgn * bn)
            safe = np.where(p > 1e-15, 1 + sgn * bn, 1.0)
            r = np.linalg.norm(self.a + sgn * Tn, axis=-1) / safe
            out = out - np.where(p > 1e-15, p * _qubit_entropy(r), 0.0)
        return out

    def at(self, theta, phi):
        return self(axis(theta, phi))

    def grid_max(self, n_theta: int, n_phi: int | None = None):
        n_phi = n_theta if n_phi is None else n_phi
        th = np.linspace(0, np.pi, n_theta)
        ph = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
        best, arg = -np.inf, (0.0, 0.0)
        for start in range(0, n_theta, max(1, 2 ** 18 // n_phi)):
            T, P = np.meshgrid(th[start:start + 2 ** 18 // n_phi + 1], ph, indexing="ij")
            vals = self.at(T, P)
            k = int(np.argmax(vals))
            if vals.flat[k] > best:
                best, arg = float(vals.flat[k]), (float(T.flat[k]), float(P.flat[k]))
        return best, arg


@dataclass
class DiscordResult:
    discord: float
    mutual_information: float
    classical_grid: float
    classical_refined: float
    angles: tuple


def discord_details(rho, measured_side: str = "B", grid: int = 64, tol: float = 1e-8) -> DiscordResult:
    """Discord with the optimiser diagnostics.

    Maximises ``J`` over a ``grid x grid`` lattice in ``(theta, phi)`` and
    refines the best point with Nelder-Mead.

    Raises
    ------
    OptimizerRegression
        If the refined optimum is worse than the lattice optimum.
    """
    m = _as_matrix(rho)
    mi = mutual_information(m)
    J = ClassicalCorrelation(m, measured_side)
    j_grid, (th0, ph0) = J.grid_max(grid)
    d_th, d_ph = np.pi / (grid - 1), 2 * np.pi / grid
    simplex = np.array([[th0, ph0], [th0 + d_th, ph0], [th0, ph0 + d_ph]])
    res = minimize(lambda x: -float(J.at(x[0], x[1])), np.array([th0, ph0]), method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-9, "fatol": tol, "maxiter": 2000})
    j_ref = -float(res.fun)
    if j_ref < j_grid - 1e-12:
        raise OptimizerRegression(f"refined optimum {j_ref!r} below grid optimum {j_grid!r}")
    qd = max(0.0, mi - j_ref)
    return DiscordResult(qd, mi, j_grid, j_ref, (float(res.x[0]), float(res.x[1])))


def discord(rho, measured_side: str | None = None, grid: int = 64, tol: float = 1e-8) -> float:
    """Quantum discord (bits) for a projective measurement on ``measured_side``.

    Defaults to the side stored on a :class:`DensityMatrix2Q`, else ``'B'``.
    """
    if measured_side is None:
        measured_side = rho.measured_side if isinstance(rho, DensityMatrix2Q) else "B"
    return discord_details(rho, measured_side, grid, tol).discord


# ---------------------------------------------------------------------------
# time series
# ---------------------------------------------------------------------------

def _records_for(args) -> List[CorrelationRecord]:
    ts, bs, w, partitions, grid, side = args
    out = []
    for t, b in zip(ts, bs):
        state = assemble_state(w, b)
        rec = CorrelationRecord(float(t))
        for p in partitions:
            rho = reduce(state, p).matrix
            main = "A" if side == "A" else "B"
            res = discord_details(rho, main, grid)
            rec.qd[p] = res.discord
            rec.mi[p] = res.mutual_information
            rec.eof[p] = eof(rho)
            if side == "both":
                rec.qd_other_side[p] = discord(rho, "A", grid)
        out.append(rec)
    return out


def correlation_timeseries(traj, w: InitialWeights, partitions: Sequence[str] = ("n1n2",), stride: int = 1,
                           grid: int = 64, measured_side: str = "B", workers: int = 1) -> List[CorrelationRecord]:
    """Discord, EoF and mutual information along a solved trajectory.

    Every ``stride``-th grid point is evaluated (the last point is always
    kept).  ``measured_side='both'`` additionally stores the discord with the
    first-named subsystem measured.  With ``workers > 1`` blocks of time
    points are evaluated in separate processes; results are identical.
    """
    if stride < 1:
        raise ConfigError("stride must be >= 1")
    if measured_side not in ("A", "B", "both"):
        raise ConfigError(f"measured_side must be 'A', 'B' or 'both', got {measured_side!r}")
    parts = [p.lower() for p in partitions]
    for p in parts:
        _partition_axes(p)
    idx = np.arange(0, traj.t.size, stride)
    if idx[-1] != traj.t.size - 1:
        idx = np.append(idx, traj.t.size - 1)
    ts, bs = traj.t[idx], traj.b[idx]
    if workers <= 1:
        return _records_for((ts, bs, w, parts, grid, measured_side))
    blocks = np.array_split(np.arange(idx.size), workers * 4)
    jobs = [(ts[blk], bs[blk], w, parts, grid, measured_side) for blk in blocks if blk.size]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [rec for chunk in pool.map(_records_for, jobs) for rec in chunk]


def records_to_columns(records: Iterable[CorrelationRecord], partitions: Sequence[str]) -> Dict[str, np.ndarray]:
    records = list(records)
    cols = {"t": np.array([r.t for r in records])}
    for p in partitions:
        cols[f"qd_{p}"] = np.array([r.qd[p] for r in records])
        cols[f"eof_{p}"] = np.array([r.eof[p] for r in records])
        cols[f"mi_{p}"] = np.array([r.mi[p] for r in records])
        if records and p in records[0].qd_other_side:
            cols[f"qdA_{p}"] = np.array([r.qd_other_side[p] for r in records])
    return cols
