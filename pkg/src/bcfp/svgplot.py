"""Static SVG box plots (median, quartiles, 1.5 IQR whiskers, outlier dots)."""
from __future__ import annotations

from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

KIND_COLORS = {"ecfp": "#4C72B0", "bcfp": "#DD8452", "concat": "#55A868", "hybrid": "#C44E52"}


def box_stats(values) -> dict:
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "q1": float(q1), "median": float(med), "q3": float(q3),
        "whisker_lo": float(inside.min()), "whisker_hi": float(inside.max()),
        "outliers": [float(x) for x in v[(v < lo_fence) | (v > hi_fence)]],
    }


def box_plot_svg(groups: Sequence[tuple[str, Sequence[float]]], title: str, ylabel: str,
                 sections: Optional[Sequence[str]] = None, colors: Optional[Sequence[str]] = None,
                 best: Optional[str] = None, worst: Optional[str] = None) -> str:
    """One box per ``(name, values)``; ``sections[i]`` groups boxes under a shared x label."""
    n = len(groups)
    box_w, gap, left, right, top, bottom = 26, 14, 70, 20, 40, 130
    width = left + right + n * (box_w + gap)
    height = 420
    plot_h = height - top - bottom
    all_vals = np.concatenate([np.asarray(v, dtype=float) for _, v in groups]) if n else np.array([0.0, 1.0])
    lo, hi = float(all_vals.min()), float(all_vals.max())
    if hi - lo < 1e-9:
        lo, hi = lo - 0.01, hi + 0.01
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def y(v):
        return top + plot_h * (hi - v) / (hi - lo)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
           f'<text x="16" y="{top + plot_h / 2:.1f}" transform="rotate(-90 16 {top + plot_h / 2:.1f})" '
           f'text-anchor="middle">{escape(ylabel)}</text>']
    for t in np.linspace(lo + pad, hi - pad, 6):
        out.append(f'<line x1="{left - 4}" y1="{y(t):.1f}" x2="{left}" y2="{y(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{y(t) + 4:.1f}" text-anchor="end">{t:.3f}</text>')

    for i, (name, values) in enumerate(groups):
        st = box_stats(values)
        x0 = left + gap / 2 + i * (box_w + gap)
        xc = x0 + box_w / 2
        fill = colors[i] if colors else "#8da0cb"
        stroke, sw = "black", 1
        if name == best:
            stroke, sw = "#1a9850", 3
        elif name == worst:
            stroke, sw = "#d73027", 3
        out.append(f'<g class="box" data-config="{escape(name)}">')
        out.append(f'<line x1="{xc:.1f}" y1="{y(st["whisker_lo"]):.1f}" x2="{xc:.1f}" y2="{y(st["q1"]):.1f}" stroke="black"/>')
        out.append(f'<line x1="{xc:.1f}" y1="{y(st["q3"]):.1f}" x2="{xc:.1f}" y2="{y(st["whisker_hi"]):.1f}" stroke="black"/>')
        for w in ("whisker_lo", "whisker_hi"):
            out.append(f'<line x1="{x0 + 6:.1f}" y1="{y(st[w]):.1f}" x2="{x0 + box_w - 6:.1f}" y2="{y(st[w]):.1f}" stroke="black"/>')
        out.append(f'<rect x="{x0:.1f}" y="{y(st["q3"]):.1f}" width="{box_w}" '
                   f'height="{max(y(st["q1"]) - y(st["q3"]), 0.5):.1f}" fill="{fill}" fill-opacity="0.75" '
                   f'stroke="{stroke}" stroke-width="{sw}"/>')
        out.append(f'<line x1="{x0:.1f}" y1="{y(st["median"]):.1f}" x2="{x0 + box_w:.1f}" y2="{y(st["median"]):.1f}" '
                   f'stroke="black" stroke-width="2"/>')
        for o in st["outliers"]:
            out.append(f'<circle cx="{xc:.1f}" cy="{y(o):.1f}" r="2.5" fill="none" stroke="black"/>')
        out.append("</g>")
        ty = top + plot_h + 8
        out.append(f'<text x="{xc:.1f}" y="{ty}" transform="rotate(60 {xc:.1f} {ty})">{escape(name)}</text>')

    if sections:
        start = 0
        for i in range(1, n + 1):
            if i == n or sections[i] != sections[start]:
                xa = left + start * (box_w + gap)
                xb = left + i * (box_w + gap)
                out.append(f'<text x="{(xa + xb) / 2:.1f}" y="{height - 12}" text-anchor="middle" '
                           f'font-weight="bold">{escape(sections[start])}</text>')
                if i < n:
                    out.append(f'<line x1="{xb:.1f}" y1="{top}" x2="{xb:.1f}" y2="{top + plot_h}" '
                               f'stroke="#999" stroke-dasharray="4 3"/>')
                start = i
    out.append("</svg>")
    return "\n".join(out) + "\n"
