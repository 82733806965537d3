"""
This module draws learning curves from a metrics CSV file as an SVG image: one
polyline per requested column against the epoch, with axes and a legend.

The image is a pure function of the CSV contents; coordinates are written with fixed
precision so the same file always produces the same bytes.
"""

import logging
import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

from mollify.harness.metrics import read_metrics
from mollify.exceptions.base import MollifyValueError
from mollify.exceptions.harness import OutputDirectoryError, PlotError

__all__ = ["emit_plot", "render_svg"]

logger = logging.getLogger(__name__)

WIDTH = 640
HEIGHT = 400
MARGIN = 60
LEGEND_WIDTH = 150
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _range(values: Sequence[float]) -> Tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    low, high = min(finite), max(finite)
    if low == high:
        return low - 1.0, high + 1.0
    return low, high


def _line(parent: ET.Element, x1: float, y1: float, x2: float, y2: float) -> None:
    ET.SubElement(
        parent, "line", {"x1": str(x1), "y1": str(y1), "x2": str(x2), "y2": str(y2)}
    )


def render_svg(x: Sequence[float], series: Dict[str, Sequence[float]]) -> str:
    """
    SVG document plotting every series of `series` against `x`. Non-finite points
    are left out of their polyline.
    """
    x_low, x_high = _range(x)
    y_low, y_high = _range([v for values in series.values() for v in values])
    plot_right = WIDTH - LEGEND_WIDTH
    plot_bottom = HEIGHT - MARGIN

    def to_x(value: float) -> float:
        return MARGIN + (value - x_low) / (x_high - x_low) * (plot_right - MARGIN)

    def to_y(value: float) -> float:
        return plot_bottom - (value - y_low) / (y_high - y_low) * (plot_bottom - MARGIN)

    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(WIDTH),
            "height": str(HEIGHT),
            "viewBox": f"0 0 {WIDTH} {HEIGHT}",
        },
    )
    axes = ET.SubElement(svg, "g", {"id": "axes", "stroke": "black"})
    _line(axes, MARGIN, plot_bottom, plot_right, plot_bottom)
    _line(axes, MARGIN, MARGIN, MARGIN, plot_bottom)
    labels = ET.SubElement(svg, "g", {"id": "labels", "font-size": "11"})
    for text, x_pos, y_pos, anchor in (
        (f"{x_low:g}", MARGIN, plot_bottom + 16, "middle"),
        (f"{x_high:g}", plot_right, plot_bottom + 16, "middle"),
        ("epoch", (MARGIN + plot_right) / 2, plot_bottom + 36, "middle"),
        (f"{y_low:.4g}", MARGIN - 6, plot_bottom, "end"),
        (f"{y_high:.4g}", MARGIN - 6, MARGIN, "end"),
    ):
        label = ET.SubElement(
            labels,
            "text",
            {"x": _fmt(x_pos), "y": _fmt(y_pos), "text-anchor": anchor},
        )
        label.text = text
    curves = ET.SubElement(svg, "g", {"id": "curves", "fill": "none"})
    legend = ET.SubElement(svg, "g", {"id": "legend", "font-size": "11"})
    for position, (name, values) in enumerate(series.items()):
        colour = PALETTE[position % len(PALETTE)]
        points = " ".join(
            f"{_fmt(to_x(a))},{_fmt(to_y(b))}"
            for a, b in zip(x, values)
            if math.isfinite(a) and math.isfinite(b)
        )
        ET.SubElement(
            curves,
            "polyline",
            {"points": points, "stroke": colour, "data-column": name},
        )
        y_pos = MARGIN + 18 * position
        ET.SubElement(
            legend,
            "rect",
            {
                "x": str(plot_right + 12),
                "y": str(y_pos - 8),
                "width": "10",
                "height": "10",
                "fill": colour,
            },
        )
        entry = ET.SubElement(
            legend, "text", {"x": str(plot_right + 28), "y": str(y_pos + 1)}
        )
        entry.text = name
    return ET.tostring(svg, encoding="unicode") + "\n"


def emit_plot(
    csv_path: Union[str, Path],
    columns: Sequence[str],
    out_svg: Union[str, Path],
) -> Path:
    """
    Plot `columns` of the metrics file `csv_path` against its epoch column (the row
    number if it has none) and write the SVG to `out_svg`.

    Raises `PlotError` if the file cannot be read, has no data rows, or lacks a
    requested column; the message lists the available columns. Raises
    `OutputDirectoryError` if the SVG cannot be written.
    """
    try:
        header, rows = read_metrics(csv_path)
    except (OSError, MollifyValueError) as exc:
        raise PlotError(f"cannot plot {csv_path}; {exc}") from None
    if not columns:
        raise PlotError(f"cannot plot {csv_path}; no columns requested. ")
    missing = [column for column in columns if column not in header]
    if missing:
        raise PlotError(
            f"cannot plot {csv_path}; missing columns {', '.join(missing)}; "
            f"available columns: {', '.join(header)}. "
        )
    if not rows:
        raise PlotError(f"cannot plot {csv_path}; the file has no data rows. ")
    if "epoch" in header:
        x: List[float] = [row["epoch"] for row in rows]
    else:
        x = [float(number) for number in range(1, len(rows) + 1)]
    series = {column: [row[column] for row in rows] for column in columns}
    out_svg = Path(out_svg)
    try:
        with open(out_svg, "w", encoding="utf-8", newline="") as stream:
            stream.write(render_svg(x, series))
    except OSError as exc:
        raise OutputDirectoryError(f"cannot write plot {out_svg}; {exc}. ") from None
    logger.info("plot of %s written to %s", ", ".join(columns), out_svg)
    return out_svg
