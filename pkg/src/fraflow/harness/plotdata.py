"""Log-log plot data and standalone SVG charts from a run directory."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

FUNCTIONALS = ("energy", "lyapunov_v", "suboptimality")
SVG_MAX_POINTS = 2000
WIDTH, HEIGHT, PAD = 640, 420, 60


class PlotDataError(OSError):
    pass


def read_functionals(path):
    path = Path(path)
    if not path.is_file():
        raise PlotDataError(f"{path} not found")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PlotDataError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    if "t" not in header:
        raise PlotDataError(f"{path} has no 't' column")
    if not body:
        raise PlotDataError(f"{path} holds a header but no samples")
    data = np.array([[float(v) for v in r] for r in body])
    return {name: data[:, i] for i, name in enumerate(header)}


def _log_or_nan(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, np.log10(np.where(x > 0, x, 1.0)), np.nan)


def _ticks(lo, hi):
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def svg_chart(log_t, log_v, title):
    """Plain SVG line chart of already-logged data (base-10 axes)."""
    ok = np.isfinite(log_t) & np.isfinite(log_v)
    x, y = log_t[ok], log_v[ok]
    if x.size > SVG_MAX_POINTS:
        idx = np.unique(np.linspace(0, x.size - 1, SVG_MAX_POINTS).astype(int))
        x, y = x[idx], y[idx]
    x_lo, x_hi = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    y_lo, y_hi = (float(y.min()), float(y.max())) if y.size else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    x_lo, x_hi = math.floor(x_lo), math.ceil(x_hi)
    y_lo, y_hi = math.floor(y_lo), math.ceil(y_hi)

    def px(u):
        return PAD + (u - x_lo) / (x_hi - x_lo) * (WIDTH - 2 * PAD)

    def py(v):
        return HEIGHT - PAD - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2 * PAD)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="{PAD / 2}" text-anchor="middle" font-size="16">'
        f"{escape(title)} (log-log)</text>",
        '<g stroke="#999" stroke-width="1">',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" y2="{HEIGHT - PAD}"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}"/>',
        "</g>",
        '<g font-size="11" fill="#333">',
    ]
    for k in _ticks(x_lo, x_hi):
        out.append(f'<text x="{px(k):.1f}" y="{HEIGHT - PAD + 16}" text-anchor="middle">1e{k}</text>')
    for k in _ticks(y_lo, y_hi):
        out.append(f'<text x="{PAD - 6}" y="{py(k) + 4:.1f}" text-anchor="end">1e{k}</text>')
    out.append("</g>")
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">t</text>')
    if x.size:
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="#1f4e9a" stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plotdata(run_dir):
    """Write ``loglog.csv`` and one SVG per functional column that has positive data."""
    run_dir = Path(run_dir)
    cols = read_functionals(run_dir / "functionals.csv")
    log_t = _log_or_nan(cols["t"])
    names = [n for n in FUNCTIONALS if n in cols]
    logs = {n: _log_or_nan(cols[n]) for n in names}
    written = []
    path = run_dir / "loglog.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["log10_t"] + [f"log10_{n}" for n in names])
        for i in range(log_t.size):
            w.writerow(["%.17g" % log_t[i]] + ["%.17g" % logs[n][i] for n in names])
    written.append(str(path))
    for n in names:
        if np.any(np.isfinite(logs[n]) & np.isfinite(log_t)):
            svg = run_dir / f"{n}.svg"
            svg.write_text(svg_chart(log_t, logs[n], n))
            written.append(str(svg))
    return written
