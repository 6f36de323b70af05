"""Minimal deterministic SVG line plots: lines, quartile bands, axes, legend.

Kept intentionally small (no plotting dependency): the figures this package
emits are summaries, and the files must be byte-stable for reruns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PALETTE = ("#c0392b", "#2471a3", "#1e8449", "#884ea0", "#b7950b", "#566573")

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 34, 46


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    band: tuple[np.ndarray, np.ndarray] | None = None  # (lower, upper)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def line_plot(path, series: list[Series], title: str, xlabel: str, ylabel: str) -> None:
    if not series:
        raise ValueError("nothing to plot")
    xs = np.concatenate([np.asarray(s.x, dtype=float) for s in series])
    ys = [np.asarray(s.y, dtype=float) for s in series]
    for s in series:
        if s.band is not None:
            ys.extend([np.asarray(s.band[0], dtype=float), np.asarray(s.band[1], dtype=float)])
    ys = np.concatenate(ys)
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    lines: list[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
    ]
    # axes
    x0, y0 = px(x_lo), py(y_lo)
    lines.append(
        f'<path d="M {px(x_lo):.1f} {py(y_hi):.1f} L {x0:.1f} {y0:.1f} L {px(x_hi):.1f} {y0:.1f}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    for i in range(6):
        tx = x_lo + (x_hi - x_lo) * i / 5
        ty = y_lo + (y_hi - y_lo) * i / 5
        lines.append(
            f'<line x1="{px(tx):.1f}" y1="{y0:.1f}" x2="{px(tx):.1f}" y2="{y0 + 4:.1f}" stroke="black"/>'
        )
        lines.append(
            f'<text x="{px(tx):.1f}" y="{y0 + 16:.1f}" text-anchor="middle">{_fmt(tx)}</text>'
        )
        lines.append(
            f'<line x1="{MARGIN_L - 4:.1f}" y1="{py(ty):.1f}" x2="{MARGIN_L:.1f}" y2="{py(ty):.1f}" stroke="black"/>'
        )
        lines.append(
            f'<text x="{MARGIN_L - 7:.1f}" y="{py(ty) + 3.5:.1f}" text-anchor="end">{_fmt(ty)}</text>'
        )
    lines.append(
        f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle">{xlabel}</text>'
    )
    lines.append(
        f'<text x="14" y="{MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {MARGIN_T + plot_h / 2:.1f})">{ylabel}</text>'
    )

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        sx = np.asarray(s.x, dtype=float)
        if s.band is not None:
            lo_b, hi_b = s.band
            pts_up = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(sx, hi_b))
            pts_dn = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(sx[::-1], np.asarray(lo_b)[::-1]))
            lines.append(f'<polygon points="{pts_up} {pts_dn}" fill="{color}" opacity="0.15"/>')
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(sx, s.y))
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        ly = MARGIN_T + 14 + 14 * i
        lx = WIDTH - MARGIN_R - 150
        lines.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        lines.append(f'<text x="{lx + 24}" y="{ly}">{s.label}</text>')

    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
