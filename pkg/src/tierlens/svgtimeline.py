"""Deterministic SVG rendering of timeline segments.

Plain text output with fixed-precision coordinates: the same segments
always produce the same bytes, so rendered timelines can be golden-tested
and diffed. One horizontal band per rank (rank id on the y axis, seconds
on the x axis), overlapping calls stacked into lanes within the band.
"""

from __future__ import annotations

from .analysis import TimelineSegment
from .events import Category

CATEGORY_FILL = {
    Category.METADATA: "#8da0cb",
    Category.READ: "#66c2a5",
    Category.WRITE: "#fc8d62",
    Category.OTHER: "#b3b3b3",
}

_MARGIN_LEFT = 70.0
_MARGIN_RIGHT = 20.0
_MARGIN_TOP = 30.0
_MARGIN_BOTTOM = 40.0
_LANE_HEIGHT = 14.0
_BAND_GAP = 8.0
_PLOT_WIDTH = 900.0
_TICKS = 6


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def render_timeline_svg(segments: list[TimelineSegment]) -> str:
    """Render segments to a standalone SVG document string."""
    ranks = sorted({s.rank for s in segments})
    lanes_per_rank = {
        r: 1 + max(s.lane for s in segments if s.rank == r) for r in ranks
    }
    t0 = min((s.start for s in segments), default=0.0)
    t1 = max((s.end for s in segments), default=1.0)
    if t1 <= t0:
        t1 = t0 + 1.0
    span = t1 - t0
    scale = _PLOT_WIDTH / span

    band_tops: dict[int, float] = {}
    y = _MARGIN_TOP
    for r in ranks:
        band_tops[r] = y
        y += lanes_per_rank[r] * _LANE_HEIGHT + _BAND_GAP
    plot_bottom = max(y - _BAND_GAP, _MARGIN_TOP + _LANE_HEIGHT)
    width = _MARGIN_LEFT + _PLOT_WIDTH + _MARGIN_RIGHT
    height = plot_bottom + _MARGIN_BOTTOM

    out: list[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">'
    )
    # rect elements are reserved for segments (one rect per event), so
    # background and axes use style/line primitives only
    out.append(
        '<style>svg{background:#ffffff}'
        "text{font-family:monospace;font-size:10px;fill:#333}</style>"
    )
    # axes
    axis_y = plot_bottom + 6.0
    out.append(
        f'<line x1="{_MARGIN_LEFT:.2f}" y1="{axis_y:.2f}" '
        f'x2="{_MARGIN_LEFT + _PLOT_WIDTH:.2f}" y2="{axis_y:.2f}" '
        'stroke="#333" stroke-width="1"/>'
    )
    for i in range(_TICKS + 1):
        tx = _MARGIN_LEFT + _PLOT_WIDTH * i / _TICKS
        tv = t0 + span * i / _TICKS
        out.append(
            f'<line x1="{tx:.2f}" y1="{axis_y:.2f}" x2="{tx:.2f}" '
            f'y2="{axis_y + 4.0:.2f}" stroke="#333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{tx:.2f}" y="{axis_y + 16.0:.2f}" '
            f'text-anchor="middle">{tv:.6f}</text>'
        )
    out.append(
        f'<text x="{_MARGIN_LEFT + _PLOT_WIDTH / 2:.2f}" '
        f'y="{axis_y + 30.0:.2f}" text-anchor="middle">seconds</text>'
    )
    for r in ranks:
        label_y = band_tops[r] + lanes_per_rank[r] * _LANE_HEIGHT / 2 + 3.0
        out.append(
            f'<text x="{_MARGIN_LEFT - 8.0:.2f}" y="{label_y:.2f}" '
            f'text-anchor="end">rank {r}</text>'
        )
    for s in segments:
        x = _MARGIN_LEFT + (s.start - t0) * scale
        w = max((s.end - s.start) * scale, 0.5)
        top = band_tops[s.rank] + s.lane * _LANE_HEIGHT
        fill = CATEGORY_FILL[s.category]
        out.append(
            f'<rect x="{x:.2f}" y="{top:.2f}" width="{w:.2f}" '
            f'height="{_LANE_HEIGHT - 2.0:.2f}" fill="{fill}">'
            f"<title>{_esc(s.function)} [{s.start:.9f}, {s.end:.9f}] "
            f"rank {s.rank}</title></rect>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
