"""Small self-contained SVG emitters for residual curves and law panels.

No plotting toolkit is involved; the files embed no external assets and
stay far below the 2 MB budget.
"""

from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Canvas:
    def __init__(self, width, height):
        self.width = width
        self.height = height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
        ]

    def line(self, x1, y1, x2, y2, color="#333", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width}"{d}/>'
        )

    def polyline(self, pts, color, width=1.6, dash=None):
        if len(pts) < 2:
            return
        d = f' stroke-dasharray="{dash}"' if dash else ""
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"{d}/>'
        )

    def polygon(self, pts, color, opacity=0.18):
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        self.parts.append(f'<polygon points="{coords}" fill="{color}" fill-opacity="{opacity}"/>')

    def rect(self, x, y, w, h, color):
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{color}"/>'
        )

    def text(self, x, y, s, size=11, anchor="start", color="#222", rotate=None):
        r = f' transform="rotate({rotate} {x:.1f} {y:.1f})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" text-anchor="{anchor}" '
            f'fill="{color}"{r}>{_esc(s)}</text>'
        )

    def write(self, path):
        self.parts.append("</svg>")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(self.parts))


def _log_ticks(lo: float, hi: float):
    first = math.floor(math.log10(lo))
    last = math.ceil(math.log10(hi))
    return [10.0 ** e for e in range(first, last + 1) if lo <= 10.0 ** e <= hi * 1.0001]


def line_chart(
    path,
    curves,
    *,
    title="",
    xlabel="",
    ylabel="",
    bands=(),
    width=760,
    height=500,
):
    """Log-log line chart. curves: dicts with x, y, label and optional
    color/dash; bands: dicts with x, lo, hi, color drawn behind the curves."""
    ml, mr, mt, mb = 70, 20, 34, 52
    pw, ph = width - ml - mr, height - mt - mb
    xs_all, ys_all = [], []
    for c in curves:
        for x, y in zip(c["x"], c["y"]):
            if x > 0 and y is not None and y > 0 and math.isfinite(y):
                xs_all.append(x)
                ys_all.append(y)
    if not xs_all:
        raise ValueError("no positive data to plot")
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x0 == x1:
        x1 = x0 * 10.0
    y0 /= 1.5
    y1 *= 1.5

    def tx(x):
        return ml + pw * (math.log10(x) - math.log10(x0)) / (math.log10(x1) - math.log10(x0))

    def ty(y):
        return mt + ph * (1.0 - (math.log10(y) - math.log10(y0)) / (math.log10(y1) - math.log10(y0)))

    cv = _Canvas(width, height)
    for xt in _log_ticks(x0, x1):
        cv.line(tx(xt), mt, tx(xt), mt + ph, color="#eee")
        cv.text(tx(xt), mt + ph + 16, f"1e{int(round(math.log10(xt)))}", anchor="middle")
    for yt in _log_ticks(y0, y1):
        cv.line(ml, ty(yt), ml + pw, ty(yt), color="#eee")
        cv.text(ml - 6, ty(yt) + 4, f"1e{int(round(math.log10(yt)))}", anchor="end")
    cv.line(ml, mt + ph, ml + pw, mt + ph)
    cv.line(ml, mt, ml, mt + ph)
    for band in bands:
        pts = [(tx(x), ty(max(lo, y0))) for x, lo in zip(band["x"], band["lo"]) if x > 0 and lo is not None]
        back = [(tx(x), ty(min(hi, y1))) for x, hi in zip(band["x"], band["hi"]) if x > 0 and hi is not None]
        if pts and back:
            cv.polygon(pts + back[::-1], band.get("color", PALETTE[0]))
    for n, c in enumerate(curves):
        color = c.get("color", PALETTE[n % len(PALETTE)])
        pts = [
            (tx(x), ty(min(max(y, y0), y1)))
            for x, y in zip(c["x"], c["y"])
            if x > 0 and y is not None and y > 0 and math.isfinite(y)
        ]
        cv.polyline(pts, color, dash=c.get("dash"))
        cv.text(ml + pw - 8, mt + 16 + 15 * n, c["label"], anchor="end", color=color)
    cv.text(ml + pw / 2, 18, title, size=13, anchor="middle")
    cv.text(ml + pw / 2, height - 14, xlabel, anchor="middle")
    cv.text(16, mt + ph / 2, ylabel, anchor="middle", rotate=-90)
    cv.write(path)


def distribution_panels(
    path,
    theta,
    families,
    labels,
    *,
    title="",
    means=None,
    panel_w=230,
    panel_h=110,
):
    """One row per state, one column per method; bars show the categorical
    weights and a dashed vertical line marks each law's mean."""
    if not families:
        raise ValueError("no families to plot")
    m = families[0].shape[0]
    ncol = len(families)
    ml, mt, gap = 46, 40, 14
    width = ml + ncol * (panel_w + gap)
    height = mt + m * (panel_h + gap) + 24
    cv = _Canvas(width, height)
    cv.text(width / 2, 20, title, size=13, anchor="middle")
    wmax = max(float(f.max()) for f in families)
    t0, t1 = float(theta[0]), float(theta[-1])
    bar_w = panel_w / len(theta) * 0.9
    for col, (fam, label) in enumerate(zip(families, labels)):
        x_off = ml + col * (panel_w + gap)
        cv.text(x_off + panel_w / 2, mt - 8, label, anchor="middle", size=11)
        for i in range(m):
            y_off = mt + i * (panel_h + gap)
            cv.line(x_off, y_off + panel_h, x_off + panel_w, y_off + panel_h, color="#999")
            if col == 0:
                cv.text(x_off - 30, y_off + panel_h / 2, f"s={i}", size=10)
            for k, w in enumerate(fam[i]):
                if w <= 0:
                    continue
                x = x_off + panel_w * (theta[k] - t0) / (t1 - t0)
                h = panel_h * min(w / wmax, 1.0)
                cv.rect(x - bar_w / 2, y_off + panel_h - h, bar_w, h, PALETTE[col % len(PALETTE)])
            if means is not None:
                mean_i = means[col][i]
                x = x_off + panel_w * (mean_i - t0) / (t1 - t0)
                if x_off <= x <= x_off + panel_w:
                    cv.line(x, y_off, x, y_off + panel_h, color="#444", width=1.0, dash="4,3")
    cv.text(width / 2, height - 6, "support", anchor="middle", size=10)
    cv.write(path)
