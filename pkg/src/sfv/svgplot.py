"""Headless, byte-deterministic SVG scatter plots.

The output is self-contained SVG 1.1 in a fixed 640x480 viewport with
linear axes and computed ticks.  Identical inputs produce identical
bytes, so plots can be diffed and regression-tested; this is why no
plotting library is used here.
"""

from __future__ import annotations

import math

__all__ = ["emit_svg_scatter", "MARKER_ORDER"]

_WIDTH, _HEIGHT = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 16, 18, 46

# Marker shapes assigned to point classes: selection methods keep the
# conventional encoding (stepwise triangles, lasso dots, least angle
# crosses); unknown classes cycle in first-appearance order.
MARKER_ORDER = ("dot", "triangle", "cross")
_CLASS_MARKERS = {
    "stepwise": "triangle",
    "lasso": "dot",
    "lars": "cross",
    "signal": "dot",
    "noise": "cross",
}


def _fmt(value: float) -> str:
    out = f"{value:.3f}"
    return "0.000" if out == "-0.000" else out


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = 10.0 * mag
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _tick_label(value: float) -> str:
    return f"{value:.10g}"


def _marker_svg(kind: str, x: float, y: float) -> str:
    xs, ys = _fmt(x), _fmt(y)
    if kind == "dot":
        return f'<circle cx="{xs}" cy="{ys}" r="3" class="m-dot"/>'
    if kind == "triangle":
        pts = " ".join(
            f"{_fmt(px)},{_fmt(py)}"
            for px, py in ((x, y - 4.0), (x - 3.6, y + 3.0), (x + 3.6, y + 3.0))
        )
        return f'<polygon points="{pts}" class="m-triangle"/>'
    x0, x1 = _fmt(x - 3.2), _fmt(x + 3.2)
    y0, y1 = _fmt(y - 3.2), _fmt(y + 3.2)
    return (
        f'<path d="M {x0} {y0} L {x1} {y1} M {x0} {y1} L {x1} {y0}" class="m-cross"/>'
    )


def emit_svg_scatter(points, x_label: str, y_label: str, overlay=None) -> str:
    """Render classed points (and an optional polyline overlay) as SVG.

    ``points`` is a sequence of (x, y, class_name) triples; ``overlay``
    an optional sequence of (x, y) pairs drawn as a connected line.
    Non-finite coordinates are rejected with their index.
    """
    points = [(float(x), float(y), str(c)) for x, y, c in points]
    if not points:
        raise ValueError("no points to plot")
    for i, (x, y, _) in enumerate(points):
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite coordinate at point {i}: ({x}, {y})")
    overlay = [(float(x), float(y)) for x, y in overlay] if overlay else []
    for i, (x, y) in enumerate(overlay):
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite coordinate at overlay point {i}: ({x}, {y})")

    xs = [p[0] for p in points] + [q[0] for q in overlay]
    ys = [p[1] for p in points] + [q[1] for q in overlay]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    x_pad = 0.04 * (x_hi - x_lo)
    y_pad = 0.04 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(x):
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    classes: list[str] = []
    for _, _, cls in points:
        if cls not in classes:
            classes.append(cls)
    markers = {}
    cycle = 0
    for cls in classes:
        if cls in _CLASS_MARKERS:
            markers[cls] = _CLASS_MARKERS[cls]
        else:
            markers[cls] = MARKER_ORDER[cycle % len(MARKER_ORDER)]
            cycle += 1

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        "<style>"
        "text{font-family:sans-serif;font-size:12px;fill:#222}"
        ".axis{stroke:#222;stroke-width:1;fill:none}"
        ".grid{stroke:#ddd;stroke-width:0.5}"
        ".m-dot{fill:#1f4e9c}"
        ".m-triangle{fill:#b03030}"
        ".m-cross{stroke:#207040;stroke-width:1.6;fill:none}"
        ".overlay{stroke:#444;stroke-width:1.4;fill:none}"
        "</style>",
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
    ]

    x_ticks = _nice_ticks(x_lo, x_hi)
    y_ticks = _nice_ticks(y_lo, y_hi)
    for t in x_ticks:
        px = _fmt(sx(t))
        parts.append(
            f'<line x1="{px}" y1="{_MARGIN_T}" x2="{px}" '
            f'y2="{_HEIGHT - _MARGIN_B}" class="grid"/>'
        )
        parts.append(
            f'<text x="{px}" y="{_HEIGHT - _MARGIN_B + 16}" '
            f'text-anchor="middle">{_tick_label(t)}</text>'
        )
    for t in y_ticks:
        py = _fmt(sy(t))
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{py}" x2="{_WIDTH - _MARGIN_R}" '
            f'y2="{py}" class="grid"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 6}" y="{py}" text-anchor="end" '
            f'dominant-baseline="middle">{_tick_label(t)}</text>'
        )
    parts.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" class="axis"/>'
    )
    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 8}" '
        f'text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="14" y="{_MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_MARGIN_T + plot_h / 2:.1f})">{y_label}</text>'
    )

    if overlay:
        path = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in overlay)
        parts.append(f'<polyline points="{path}" class="overlay"/>')

    for x, y, cls in points:
        parts.append(_marker_svg(markers[cls], sx(x), sy(y)))

    # Legend: one entry per class, in first-appearance order.
    ly = _MARGIN_T + 14
    for cls in classes:
        parts.append(_marker_svg(markers[cls], _WIDTH - _MARGIN_R - 120, ly - 4))
        parts.append(
            f'<text x="{_WIDTH - _MARGIN_R - 110}" y="{ly}">{cls}</text>'
        )
        ly += 16

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
