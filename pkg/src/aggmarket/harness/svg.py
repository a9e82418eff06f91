"""Small hand-written SVG charts.

Output depends only on the input numbers: coordinates are printed with a
fixed number of decimals and series are drawn in the order given.
"""

from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 400
PAD_L, PAD_R, PAD_T, PAD_B = 64, 150, 36, 52
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f")


def _esc(text) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


class _Axis:
    def __init__(self, values, lo_px, hi_px, log=False):
        vals = [v for v in values if _num(v) and (not log or v > 0)]
        self.log = log
        if not vals:
            vals = [0.0, 1.0] if not log else [1.0, 10.0]
        f = math.log10 if log else float
        lo, hi = f(min(vals)), f(max(vals))
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi, self.lo_px, self.hi_px = lo, hi, lo_px, hi_px

    def __call__(self, v):
        t = math.log10(v) if self.log else v
        return self.lo_px + (t - self.lo) / (self.hi - self.lo) * (self.hi_px - self.lo_px)

    def ticks(self, n=5):
        if self.log:
            return [10.0 ** k for k in range(math.ceil(self.lo), math.floor(self.hi) + 1)]
        return [self.lo + (self.hi - self.lo) * i / (n - 1) for i in range(n)]


def _frame(title, xlabel, ylabel, xa, ya, xticks=True):
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{_esc(title)}</title>",
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<line x1="{PAD_L}" y1="{HEIGHT - PAD_B}" x2="{WIDTH - PAD_R}" y2="{HEIGHT - PAD_B}" stroke="black"/>',
        f'<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{HEIGHT - PAD_B}" stroke="black"/>',
        f'<text x="{(PAD_L + WIDTH - PAD_R) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
        f'<text x="16" y="{(PAD_T + HEIGHT - PAD_B) / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {(PAD_T + HEIGHT - PAD_B) / 2:.1f})">{_esc(ylabel)}</text>',
    ]
    if xticks:
        for t in xa.ticks():
            x = xa(t)
            out.append(f'<text x="{x:.2f}" y="{HEIGHT - PAD_B + 16}" text-anchor="middle" font-size="10">{t:.3g}</text>')
    for t in ya.ticks():
        y = ya(t)
        out.append(f'<text x="{PAD_L - 6}" y="{y + 3:.2f}" text-anchor="end" font-size="10">{t:.3g}</text>')
    return out


def _legend(names):
    out = []
    for i, name in enumerate(names):
        y = PAD_T + 14 * i
        c = PALETTE[i % len(PALETTE)]
        out.append(f'<rect x="{WIDTH - PAD_R + 10}" y="{y}" width="10" height="10" fill="{c}"/>')
        out.append(f'<text x="{WIDTH - PAD_R + 24}" y="{y + 9}" font-size="10">{_esc(name)}</text>')
    return out


def line_chart(title, x, series: dict, xlabel="x", ylabel="y", xlog=False) -> str:
    """One polyline per entry of ``series``; non-finite points are skipped."""
    ys = [v for s in series.values() for v in s]
    xa = _Axis(x, PAD_L, WIDTH - PAD_R, log=xlog)
    ya = _Axis(ys, HEIGHT - PAD_B, PAD_T)
    out = _frame(title, xlabel, ylabel, xa, ya)
    for i, (name, s) in enumerate(series.items()):
        pts = [
            f"{xa(a):.2f},{ya(b):.2f}"
            for a, b in zip(x, s)
            if _num(a) and _num(b) and (not xlog or a > 0)
        ]
        out.append(
            f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="1.5" '
            f'points="{" ".join(pts)}"><title>{_esc(name)}</title></polyline>'
        )
    out += _legend(series)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_chart(title, x, y, xlabel="x", ylabel="y", highlight=None, diagonal=True) -> str:
    xa = _Axis(list(x) + list(y) if diagonal else x, PAD_L, WIDTH - PAD_R)
    ya = _Axis(list(x) + list(y) if diagonal else y, HEIGHT - PAD_B, PAD_T)
    out = _frame(title, xlabel, ylabel, xa, ya)
    if diagonal:
        lo, hi = min(xa.lo, ya.lo), max(xa.hi, ya.hi)
        out.append(
            f'<line x1="{xa(lo):.2f}" y1="{ya(lo):.2f}" x2="{xa(hi):.2f}" y2="{ya(hi):.2f}" '
            'stroke="#999" stroke-dasharray="4 3"/>'
        )
    highlight = highlight or [False] * len(x)
    for a, b, h in zip(x, y, highlight):
        if _num(a) and _num(b):
            c = PALETTE[1] if h else PALETTE[0]
            out.append(f'<circle cx="{xa(a):.2f}" cy="{ya(b):.2f}" r="3" fill="{c}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart(title, categories, series: dict, xlabel="", ylabel="y") -> str:
    """Grouped bars: one group per category, one bar per series."""
    vals = [v for s in series.values() for v in s if _num(v)] + [0.0]
    xa = _Axis([0, max(len(categories), 1)], PAD_L, WIDTH - PAD_R)
    ya = _Axis(vals, HEIGHT - PAD_B, PAD_T)
    out = _frame(title, xlabel, ylabel, xa, ya, xticks=False)
    n_series = max(len(series), 1)
    group_w = (WIDTH - PAD_R - PAD_L) / max(len(categories), 1)
    bar_w = 0.8 * group_w / n_series
    zero = ya(0.0)
    for gi, cat in enumerate(categories):
        gx = PAD_L + gi * group_w + 0.1 * group_w
        for si, s in enumerate(series.values()):
            v = s[gi]
            if not _num(v):
                continue
            top = ya(v)
            out.append(
                f'<rect x="{gx + si * bar_w:.2f}" y="{min(top, zero):.2f}" width="{bar_w:.2f}" '
                f'height="{abs(zero - top):.2f}" fill="{PALETTE[si % len(PALETTE)]}"/>'
            )
        out.append(
            f'<text x="{gx + 0.4 * group_w:.2f}" y="{HEIGHT - PAD_B + 16}" text-anchor="middle" '
            f'font-size="10">{_esc(cat)}</text>'
        )
    out += _legend(series)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_report(report) -> str:
    """Chart a report according to ``metadata["plot"]``.

    Without a plot hint, the first column is x and every other numeric
    column is drawn as a line.
    """
    plot = dict(report.metadata.get("plot") or {})
    table = report.sections[plot["section"]] if plot.get("section") else report.columns
    title = plot.get("title", report.name)
    if not table:
        return line_chart(title, [], {})
    cols = list(table)
    xcol = plot.get("x", cols[0])
    ycols = plot.get("y") or [c for c in cols if c != xcol and any(_num(v) for v in table[c])]
    kind = plot.get("kind", "line")
    xlabel = plot.get("xlabel", xcol)
    ylabel = plot.get("ylabel", ycols[0] if len(ycols) == 1 else "value")
    if kind == "scatter":
        hl = table.get(plot["highlight"]) if plot.get("highlight") else None
        return scatter_chart(title, table[xcol], table[ycols[0]], xlabel, ylabel, highlight=hl)
    if kind == "bar":
        return bar_chart(title, [str(c) for c in table[xcol]], {c: table[c] for c in ycols}, xlabel, ylabel)
    return line_chart(title, table[xcol], {c: table[c] for c in ycols}, xlabel, ylabel, xlog=bool(plot.get("xlog")))
