"""Static SVG log-log plot for risk ladders.

Writes the full document as one deterministic string: axes, decade ticks,
risk points with error bars, the fitted line, and a dashed guide line with
the target slope anchored at the first point. No display dependency.
"""

from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 440
MARGIN = {"left": 70, "right": 30, "top": 40, "bottom": 55}


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _decades(lo: float, hi: float):
    start = math.floor(math.log10(lo))
    stop = math.ceil(math.log10(hi))
    return [10.0**k for k in range(start, stop + 1)]


def loglog_risk_svg(
    points,
    fit=None,
    target_slope: float | None = None,
    title: str = "risk vs n",
) -> str:
    """Render [(n, risk, stderr), ...] on log-log axes.

    fit is an (slope, intercept) pair in natural-log coordinates, as
    produced by the rate fitter; target_slope draws the dashed guide.
    """
    pts = [(float(n), float(r), float(se)) for n, r, se in points]
    if not pts:
        raise ValueError("plot needs at least one point")
    if any(n <= 0 or r <= 0 for n, r, _ in pts):
        raise ValueError("log-log plot needs positive budgets and risks")

    xs = [n for n, _, _ in pts]
    ys = [r for _, r, _ in pts]
    los = [max(r - se, r * 0.5) for _, r, se in pts]
    his = [r + se for _, r, se in pts]
    x_lo, x_hi = min(xs) / 1.3, max(xs) * 1.3
    y_lo, y_hi = min(los) / 1.5, max(his) * 1.5

    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(n):
        frac = (math.log10(n) - math.log10(x_lo)) / (
            math.log10(x_hi) - math.log10(x_lo)
        )
        return MARGIN["left"] + frac * plot_w

    def py(r):
        frac = (math.log10(r) - math.log10(y_lo)) / (
            math.log10(y_hi) - math.log10(y_lo)
        )
        return MARGIN["top"] + (1 - frac) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
    ]

    # frame
    x0, y0 = MARGIN["left"], MARGIN["top"]
    parts.append(
        f'<rect x="{x0}" y="{y0}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )

    for tick in _decades(y_lo, y_hi):
        if not y_lo <= tick <= y_hi:
            continue
        y = py(tick)
        parts.append(
            f'<line x1="{x0}" y1="{y:.1f}" x2="{x0 + plot_w}" y2="{y:.1f}" '
            'stroke="#cccccc" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{x0 - 6}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="monospace" font-size="11">1e{int(math.log10(tick))}</text>'
        )

    for n, _, _ in pts:
        x = px(n)
        parts.append(
            f'<line x1="{x:.1f}" y1="{y0}" x2="{x:.1f}" y2="{y0 + plot_h}" '
            'stroke="#eeeeee" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{y0 + plot_h + 16}" text-anchor="middle" '
            f'font-family="monospace" font-size="11">{int(n)}</text>'
        )
    parts.append(
        f'<text x="{x0 + plot_w / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
        'font-family="monospace" font-size="12">n</text>'
    )
    parts.append(
        f'<text x="16" y="{y0 + plot_h / 2:.1f}" text-anchor="middle" '
        'font-family="monospace" font-size="12" '
        f'transform="rotate(-90 16 {y0 + plot_h / 2:.1f})">risk</text>'
    )

    if target_slope is not None:
        n0, r0, _ = pts[0]
        guide = " ".join(
            f"{px(n):.1f},{py(r0 * (n / n0) ** target_slope):.1f}"
            for n in (x_lo, x_hi)
        )
        parts.append(
            f'<polyline points="{guide}" fill="none" stroke="#888888" '
            'stroke-width="1.5" stroke-dasharray="6,4"/>'
        )
        parts.append(
            f'<text x="{x0 + plot_w - 4}" y="{y0 + 16}" text-anchor="end" '
            f'font-family="monospace" font-size="11" fill="#666666">'
            f"target slope {_fmt(target_slope)}</text>"
        )

    if fit is not None:
        slope, intercept = float(fit[0]), float(fit[1])
        line = " ".join(
            f"{px(n):.1f},{py(math.exp(intercept + slope * math.log(n))):.1f}"
            for n in (x_lo, x_hi)
        )
        parts.append(
            f'<polyline points="{line}" fill="none" stroke="#1f77b4" '
            'stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{x0 + plot_w - 4}" y="{y0 + 32}" text-anchor="end" '
            f'font-family="monospace" font-size="11" fill="#1f77b4">'
            f"fit slope {_fmt(slope)}</text>"
        )

    for n, r, se in pts:
        x, y = px(n), py(r)
        if se > 0:
            y_hi_bar = py(r + se)
            y_lo_bar = py(max(r - se, r * 0.5))
            parts.append(
                f'<line x1="{x:.1f}" y1="{y_hi_bar:.1f}" x2="{x:.1f}" '
                f'y2="{y_lo_bar:.1f}" stroke="#d62728" stroke-width="1"/>'
            )
        parts.append(
            f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3.5" fill="#d62728"/>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
