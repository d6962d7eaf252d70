"""Minimal static SVG charts.  Data files are the contract; these are previews."""

from __future__ import annotations

from html import escape

W, H, PAD = 640, 360, 48


def _frame(title, body):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'font-family="sans-serif" font-size="11">\n'
            f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>\n'
            f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD / 2}" y2="{H - PAD}" stroke="black"/>\n'
            f'<line x1="{PAD}" y1="{PAD / 2 + 10}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>\n'
            f"{body}</svg>\n")


def bar_chart(labels, values, title="") -> str:
    values = [float(v) for v in values]
    top = max([abs(v) for v in values] + [1e-300])
    n = max(len(values), 1)
    slot = (W - 1.5 * PAD) / n
    plot_h = H - 1.5 * PAD - 10
    parts = []
    for k, (lab, v) in enumerate(zip(labels, values)):
        h = plot_h * abs(v) / top
        x = PAD + k * slot + 0.15 * slot
        parts.append(f'<rect x="{x:.1f}" y="{H - PAD - h:.1f}" width="{0.7 * slot:.1f}" '
                     f'height="{h:.1f}" fill="{"#3b6ea5" if v >= 0 else "#b5473a"}"/>\n')
        parts.append(f'<text x="{x + 0.35 * slot:.1f}" y="{H - PAD + 14}" '
                     f'text-anchor="middle">{escape(str(lab))}</text>\n')
    parts.append(f'<text x="{PAD - 4}" y="{PAD / 2 + 14}" text-anchor="end">{top:.3g}</text>\n')
    return _frame(title, "".join(parts))


def line_chart(xs, series: dict, title="") -> str:
    """``series`` maps a label to y values aligned with ``xs``."""
    xs = [float(x) for x in xs]
    ys = [float(y) for s in series.values() for y in s]
    if not xs or not ys:
        return _frame(title, "")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys + [0.0]), max(ys)
    sx = lambda x: PAD + (W - 1.5 * PAD) * ((x - x0) / (x1 - x0) if x1 > x0 else 0.5)  # noqa: E731
    sy = lambda y: H - PAD - (H - 1.5 * PAD - 10) * ((y - y0) / (y1 - y0) if y1 > y0 else 0.5)  # noqa: E731
    colours = ["#3b6ea5", "#b5473a", "#4f8a3c", "#8a5ca8", "#c08a1e"]
    parts = []
    for k, (label, s) in enumerate(series.items()):
        c = colours[k % len(colours)]
        pts = " ".join(f"{sx(x):.1f},{sy(float(y)):.1f}" for x, y in zip(xs, s))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="2"/>\n')
        parts.append(f'<text x="{W - PAD}" y="{PAD + 14 * k}" fill="{c}" '
                     f'text-anchor="end">{escape(str(label))}</text>\n')
    for x in xs:
        parts.append(f'<text x="{sx(x):.1f}" y="{H - PAD + 14}" text-anchor="middle">{x:g}</text>\n')
    parts.append(f'<text x="{PAD - 4}" y="{sy(y1):.1f}" text-anchor="end">{y1:.3g}</text>\n')
    return _frame(title, "".join(parts))
