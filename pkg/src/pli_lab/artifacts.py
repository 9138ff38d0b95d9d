"""Atomic file output, CSV formatting and dependency-free SVG line plots."""

import hashlib
import math
import os
import tempfile
from html import escape
from pathlib import Path


def fmt(x):
    """A float at 17 significant digits (round-trips float64)."""
    return format(float(x), ".17g")


def csv_text(header, rows):
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def atomic_write(path, text):
    """Write ``text`` to a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- SVG ---------------------------------------------------------------------

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
_W, _H = 640, 300
_ML, _MR, _MT, _MB = 70, 20, 30, 45


def _ticks(lo, hi, log):
    if log:
        return [10.0**e for e in range(math.ceil(lo), math.floor(hi) + 1)]
    if hi == lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / 4))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def _panel(title, series, xlabel, ylabel, xlog, ylog, y0):
    pts_all = []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y) and (x > 0 or not xlog) and (y > 0 or not ylog):
                pts_all.append((x, y))
    out = [f'<g transform="translate(0,{y0})">',
           f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>']
    if not pts_all:
        out.append("</g>")
        return out
    tx = (lambda v: math.log10(v)) if xlog else (lambda v: v)
    ty = (lambda v: math.log10(v)) if ylog else (lambda v: v)
    xs_t = [tx(p[0]) for p in pts_all]
    ys_t = [ty(p[1]) for p in pts_all]
    xlo, xhi = min(xs_t), max(xs_t)
    ylo, yhi = min(ys_t), max(ys_t)
    if xhi == xlo:
        xlo, xhi = xlo - 1, xhi + 1
    if yhi == ylo:
        ylo, yhi = ylo - 1, yhi + 1
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(v):
        return _ML + (tx(v) - xlo) / (xhi - xlo) * pw

    def py(v):
        return _MT + ph - (ty(v) - ylo) / (yhi - ylo) * ph

    out.append(f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>')
    for t in _ticks(xlo, xhi, xlog):
        v = t if xlog else t
        x = px(v)
        if _ML - 1e-6 <= x <= _ML + pw + 1e-6:
            out.append(f'<line x1="{x:.2f}" y1="{_MT + ph}" x2="{x:.2f}" y2="{_MT + ph + 5}" stroke="#000"/>')
            out.append(f'<text x="{x:.2f}" y="{_MT + ph + 18}" text-anchor="middle" font-size="10">{v:.3g}</text>')
    for t in _ticks(ylo, yhi, ylog):
        y = py(t)
        if _MT - 1e-6 <= y <= _MT + ph + 1e-6:
            out.append(f'<line x1="{_ML - 5}" y1="{y:.2f}" x2="{_ML}" y2="{y:.2f}" stroke="#000"/>')
            out.append(f'<text x="{_ML - 8}" y="{y + 3:.2f}" text-anchor="end" font-size="10">{t:.3g}</text>')
    out.append(f'<text x="{_ML + pw / 2}" y="{_H - 8}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{_MT + ph / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {_MT + ph / 2})">{escape(ylabel)}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = [f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys)
               if math.isfinite(x) and math.isfinite(y)
               and (x > 0 or not xlog) and (y > 0 or not ylog)]
        if pts:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{" ".join(pts)}"/>')
        out.append(f'<text x="{_ML + pw - 5}" y="{_MT + 15 + 14 * i}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{escape(label)}</text>')
    out.append("</g>")
    return out


def svg_plot(panels):
    """Stacked line plots as a standalone SVG document.

    ``panels`` is a list of dicts with keys ``title``, ``series`` (a list of
    ``(label, xs, ys)``), and optional ``xlabel``, ``ylabel``, ``xlog``,
    ``ylog``. Non-finite points and non-positive points on log axes are
    dropped.
    """
    height = _H * len(panels)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{height}" '
           f'viewBox="0 0 {_W} {height}" font-family="sans-serif">',
           f'<rect width="{_W}" height="{height}" fill="#fff"/>']
    for i, p in enumerate(panels):
        out += _panel(p.get("title", ""), p["series"], p.get("xlabel", ""), p.get("ylabel", ""),
                      p.get("xlog", False), p.get("ylog", False), i * _H)
    out.append("</svg>")
    return "\n".join(out) + "\n"
