"""Minimal deterministic SVG line charts.

Only what the CLI needs: multi-series line plots with axes, tick labels,
optional dashed horizontal rules (target levels) and a legend. Output is a
plain string with fixed formatting, so identical inputs give identical bytes.
"""

import math

_WIDTH = 640
_HEIGHT = 400
_MARGIN = {"left": 64, "right": 16, "top": 32, "bottom": 44}
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_N_TICKS = 5


def _fmt(value):
    return f"{value:.6g}"


def _bounds(values, pad_fraction=0.05):
    lo, hi = min(values), max(values)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("chart data must be finite")
    if hi == lo:
        hi, lo = hi + 1.0, lo - 1.0
    pad = pad_fraction * (hi - lo)
    return lo - pad, hi + pad


def line_chart(series, title="", x_label="", y_label="", hlines=()):
    """Render series as an SVG string.

    ``series`` is a list of (name, xs, ys) with equal-length sequences;
    ``hlines`` is a list of (label, y) dashed horizontal rules.
    """
    if not series:
        raise ValueError("need at least one series")
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    ys_all += [y for _, y in hlines]
    x_lo, x_hi = _bounds(xs_all)
    y_lo, y_hi = _bounds(ys_all)
    plot_w = _WIDTH - _MARGIN["left"] - _MARGIN["right"]
    plot_h = _HEIGHT - _MARGIN["top"] - _MARGIN["bottom"]

    def sx(x):
        return _MARGIN["left"] + plot_w * (x - x_lo) / (x_hi - x_lo)

    def sy(y):
        return _MARGIN["top"] + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_WIDTH / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    # axes
    x0, y0 = _MARGIN["left"], _MARGIN["top"] + plot_h
    parts.append(
        f'<path d="M{x0} {_MARGIN["top"]} V{y0} H{x0 + plot_w}" '
        'fill="none" stroke="black"/>'
    )
    for i in range(_N_TICKS + 1):
        fx = x_lo + (x_hi - x_lo) * i / _N_TICKS
        px = sx(fx)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 4}" stroke="black"/>')
        parts.append(
            f'<text x="{px:.1f}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(fx)}</text>'
        )
        fy = y_lo + (y_hi - y_lo) * i / _N_TICKS
        py = sy(fy)
        parts.append(f'<line x1="{x0 - 4}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(fy)}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{x0 + plot_w / 2:.1f}" y="{_HEIGHT - 6}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{x_label}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="14" y="{_MARGIN["top"] + plot_h / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {_MARGIN["top"] + plot_h / 2:.1f})">{y_label}</text>'
        )
    for label, y in hlines:
        py = sy(y)
        parts.append(
            f'<line x1="{x0}" y1="{py:.1f}" x2="{x0 + plot_w}" y2="{py:.1f}" '
            'stroke="#666666" stroke-dasharray="6 4"/>'
        )
        parts.append(
            f'<text x="{x0 + plot_w - 4}" y="{py - 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10" fill="#666666">{label}</text>'
        )
    for k, (name, xs, ys) in enumerate(series):
        if len(xs) != len(ys):
            raise ValueError(f"series {name!r} has mismatched lengths")
        color = _PALETTE[k % len(_PALETTE)]
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{x0 + plot_w - 4}" y="{_MARGIN["top"] + 14 * (k + 1)}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11" '
            f'fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_chart(path, *args, **kwargs):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(line_chart(*args, **kwargs))
