"""Minimal SVG scatter/line plot, enough for the correlation vs confounding curve."""
from __future__ import annotations

from xml.sax.saxutils import escape


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    step = (hi - lo) / (n - 1) if hi > lo else 1.0
    return [lo + i * step for i in range(n)]


def plot_svg(
    series: dict[str, tuple[list[float], list[float]]],
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 480,
    height: int = 360,
    lines: set[str] | None = None,
) -> str:
    """Render named ``(xs, ys)`` series; names in ``lines`` are joined by a polyline,
    the rest drawn as markers."""
    lines = lines or set()
    xs = [x for sx, _ in series.values() for x in sx]
    ys = [y for _, sy in series.values() for y in sy]
    if not xs:
        raise ValueError("nothing to plot")
    x0, x1 = min(0.0, min(xs)), max(xs) or 1.0
    y0, y1 = min(0.0, min(ys)), max(ys) or 1.0
    ml, mr, mt, mb = 56, 16, 32, 48
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (x - x0) / (x1 - x0 or 1) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0 or 1) * ph

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{mt + ph + 16}" font-size="10" text-anchor="middle">{t:.2f}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ml - 6}" y="{py(t) + 3:.1f}" font-size="10" text-anchor="end">{t:.2f}</text>')
    if title:
        out.append(f'<text x="{width / 2}" y="18" font-size="13" text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{ml + pw / 2}" y="{height - 10}" font-size="11" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="14" y="{mt + ph / 2}" font-size="11" text-anchor="middle" '
            f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>'
        )
    for k, (name, (sx, sy)) in enumerate(series.items()):
        c = colors[k % len(colors)]
        pts = sorted(zip(sx, sy))
        if name in lines:
            path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        else:
            out += [f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3.5" fill="{c}"/>' for x, y in pts]
        out.append(f'<text x="{ml + 8}" y="{mt + 14 + 14 * k}" font-size="11" fill="{c}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def curve_svg(rows) -> str:
    """Pearson r against measured confounding, with the analytic curve as a line."""
    return plot_svg(
        {
            "measured": ([r.pearson for r in rows], [r.confounding for r in rows]),
            "closed form": ([r.p for r in rows], [r.analytic for r in rows]),
        },
        title="Correlation vs confounding",
        xlabel="Pearson r",
        ylabel="confounding (nats)",
        lines={"closed form"},
    )
