"""Minimal line-plot writer producing standalone SVG.

Output depends only on the data: coordinates are printed with fixed
precision and no timestamps or random ids are emitted, so the same table
always yields the same bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from .errors import PlotError
from .tables import atomic_write_text, read_table

WIDTH, HEIGHT = 720, 460
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 78, 170, 40, 58
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
DASHES = ("", "6,3", "2,2", "8,3,2,3")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


@dataclass
class Figure:
    title: str
    xlabel: str
    ylabel: str
    series: List[Series] = field(default_factory=list)

    def add(self, label, x, y):
        self.series.append(Series(label, np.asarray(x, float), np.asarray(y, float)))
        return self


def nice_ticks(lo: float, hi: float, target: int = 6) -> List[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise PlotError("axis range is not finite")
    if hi <= lo:
        pad = max(abs(lo) * 0.05, 0.5)
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.floor(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    if ticks[-1] < hi:
        ticks.append(round(first + k * step, 12))
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.6g}"


def _finite_runs(x: np.ndarray, y: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    ok = np.isfinite(x) & np.isfinite(y)
    runs, start = [], None
    for i, flag in enumerate(ok):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((x[start:i], y[start:i]))
            start = None
    if start is not None:
        runs.append((x[start:], y[start:]))
    return runs


def render(fig: Figure) -> str:
    """SVG text for ``fig``; raises :class:`PlotError` if there is nothing to draw."""
    if not fig.series:
        raise PlotError("figure has no series")
    xs = np.concatenate([s.x[np.isfinite(s.x) & np.isfinite(s.y)] for s in fig.series])
    ys = np.concatenate([s.y[np.isfinite(s.x) & np.isfinite(s.y)] for s in fig.series])
    if xs.size == 0:
        raise PlotError("no finite data points to plot")
    xt = nice_ticks(float(xs.min()), float(xs.max()))
    yt = nice_ticks(float(ys.min()), float(ys.max()))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN_T + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{_fmt(MARGIN_L + pw / 2)}" y="22" text-anchor="middle" font-size="14">{escape(fig.title)}</text>',
    ]
    # grid and ticks
    for v in xt:
        X = _fmt(sx(v))
        out.append(f'<line x1="{X}" y1="{MARGIN_T}" x2="{X}" y2="{MARGIN_T + ph}" stroke="#e6e6e6"/>')
        out.append(f'<text x="{X}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{_tick_label(v)}</text>')
    for v in yt:
        Y = _fmt(sy(v))
        out.append(f'<line x1="{MARGIN_L}" y1="{Y}" x2="{MARGIN_L + pw}" y2="{Y}" stroke="#e6e6e6"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(sy(v) + 4)}" text-anchor="end">{_tick_label(v)}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{_fmt(MARGIN_L + pw / 2)}" y="{HEIGHT - 16}" text-anchor="middle">'
               f'{escape(fig.xlabel)}</text>')
    out.append(f'<text x="18" y="{_fmt(MARGIN_T + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 18 {_fmt(MARGIN_T + ph / 2)})">{escape(fig.ylabel)}</text>')

    for i, s in enumerate(fig.series):
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[(i // len(PALETTE)) % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        for rx, ry in _finite_runs(s.x, s.y):
            pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(rx, ry))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = MARGIN_T + 14 + 18 * i
        lx = WIDTH - MARGIN_R + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save(fig: Figure, path) -> Path:
    return atomic_write_text(path, render(fig))


# ---------------------------------------------------------------------------
# plot kinds driven by table columns
# ---------------------------------------------------------------------------

PLOT_KINDS = ("population", "qd-eof", "partitions", "bound-state", "trajectory", "rates")


def _require(cols, names: Sequence[str], kind: str):
    missing = [n for n in names if n not in cols]
    if missing:
        raise PlotError(f"plot kind {kind!r} needs columns {missing}; table has {sorted(cols)}")


def _prefixed(cols, prefix: str) -> List[str]:
    return [c for c in cols if c.startswith(prefix)]


def figure_from_table(cols, kind: str, title: str = "") -> Figure:
    """Build a :class:`Figure` of the given kind; column mismatch raises :class:`PlotError`."""
    if not cols or all(len(v) == 0 for v in cols.values()):
        raise PlotError("table is empty")
    if kind == "population":
        _require(cols, ["t"], kind)
        names = _prefixed(cols, "pop_")
        if not names:
            raise PlotError("plot kind 'population' needs pop_<label> columns")
        fig = Figure(title or "Excited-state population", "t (1/omega_c)", "|b(t)|^2")
        for n in names:
            fig.add(f"omega_0 = {n[4:]}", cols["t"], cols[n])
        return fig
    if kind == "qd-eof":
        _require(cols, ["t"], kind)
        parts = [c[3:] for c in _prefixed(cols, "qd_")]
        if not parts:
            raise PlotError("plot kind 'qd-eof' needs qd_<partition> columns")
        _require(cols, [f"eof_{p}" for p in parts], kind)
        fig = Figure(title or "Correlations", "t (1/omega_c)", "bits")
        for p in parts:
            suffix = "" if len(parts) == 1 else f" {p}"
            fig.add("QD" + suffix, cols["t"], cols[f"qd_{p}"])
            fig.add("EoF" + suffix, cols["t"], cols[f"eof_{p}"])
        return fig
    if kind == "partitions":
        _require(cols, ["t"], kind)
        names = _prefixed(cols, "qd_")
        if not names:
            raise PlotError("plot kind 'partitions' needs qd_<partition> columns")
        fig = Figure(title or "Discord by partition", "t (1/omega_c)", "QD (bits)")
        for n in names:
            fig.add(n[3:], cols["t"], cols[n])
        return fig
    if kind == "bound-state":
        _require(cols, ["E"], kind)
        names = _prefixed(cols, "y_minus_E")
        if not names:
            raise PlotError("plot kind 'bound-state' needs y_minus_E columns")
        fig = Figure(title or "y(E) - E", "E (omega_c)", "y(E) - E")
        for n in names:
            label = n[len("y_minus_E_w0_"):] if n.startswith("y_minus_E_w0_") else n
            fig.add(f"omega_0 = {label}", cols["E"], cols[n])
        fig.add("zero", [cols["E"][0], cols["E"][-1]], [0.0, 0.0])
        return fig
    if kind == "trajectory":
        _require(cols, ["t", "pop"], kind)
        return Figure(title or "Excited-state population", "t (1/omega_c)", "|b(t)|^2").add(
            "|b|^2", cols["t"], cols["pop"])
    if kind == "rates":
        _require(cols, ["t", "omega_shift", "gamma_rate"], kind)
        fig = Figure(title or "Time-local rates", "t (1/omega_c)", "rate (omega_c)")
        fig.add("Omega(t)", cols["t"], cols["omega_shift"])
        fig.add("gamma(t)", cols["t"], cols["gamma_rate"])
        return fig
    raise PlotError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")


def guess_kind(cols) -> str:
    if "E" in cols:
        return "bound-state"
    if any(c.startswith("pop_") for c in cols):
        return "population"
    if any(c.startswith("qd_") for c in cols):
        return "qd-eof"
    if "pop" in cols:
        return "trajectory"
    raise PlotError(f"cannot infer a plot kind from columns {sorted(cols)}")


def emit_plot(csv_path, out_path, kind: str = "auto", title: str = "") -> Path:
    """Render ``csv_path`` as an SVG at ``out_path``.  Nothing is written on error."""
    cols, _ = read_table(csv_path)
    if not cols:
        raise PlotError(f"{csv_path} holds no data")
    kind = guess_kind(cols) if kind == "auto" else kind
    return save(figure_from_table(cols, kind, title), out_path)
