"""
Standalone SVG charts for regret curves, bound curves and spread PMFs.

Output is plain SVG 1.1 built with ElementTree: no scripts, no external
fonts or images, and identical input always gives identical bytes.
"""

from __future__ import annotations

import csv
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from .bounds import BOUNDS_COLUMNS
from .errors import NoDataError, ResultsSchemaError
from .harness import RESULT_COLUMNS, AggregateResult, load_results
from .spread import SpreadPmf

logger = logging.getLogger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"
PALETTE = (
    '#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd',
    '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf',
)
WIDTH, HEIGHT = 800, 500
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 200, 40, 60


@dataclass
class Series:
    """One curve; ``half_width`` draws a shaded band of +/- that amount around it."""
    name: str
    x: List[float]
    y: List[float]
    half_width: Optional[List[float]] = None
    dashed: bool = False


def series_from_result(result: AggregateResult) -> List[Series]:
    return [
        Series(
            name=agg.name,
            x=[float(t) for t in agg.rounds],
            y=list(agg.mean_regret),
            half_width=list(agg.ci_half_width),
        )
        for agg in result.policies
    ]


def series_from_bounds(path: Union[str, Path]) -> List[Series]:
    """Curves of a bounds CSV; non-finite values are dropped from their curve."""
    path = Path(path)
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        curves = [c for c in BOUNDS_COLUMNS[1:4] if c in header]
        if 'T' not in header or not curves:
            raise ResultsSchemaError(path, [c for c in BOUNDS_COLUMNS[:4] if c not in header])
        rows = list(reader)
    if not rows:
        raise NoDataError(f"{path}: no data rows")
    series = []
    for column in curves:
        points = [(float(r['T']), float(r[column])) for r in rows]
        points = [(t, v) for t, v in points if math.isfinite(v)]
        if points:
            xs, ys = zip(*points)
            series.append(Series(name=column, x=list(xs), y=list(ys), dashed=True))
    return series


def load_series(path: Union[str, Path]) -> List[Series]:
    """Curves from a results file (CSV or JSON) or a bounds CSV, told apart by header."""
    path = Path(path)
    if path.suffix.lower() == '.json':
        series = series_from_result(load_results(path))
    else:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            header = next(csv.reader(f), [])
        if not header:
            raise NoDataError(f"{path}: no data rows")
        if 'policy_name' in header:
            series = series_from_result(load_results(path))
        elif 'T' in header:
            series = series_from_bounds(path)
        else:
            raise ResultsSchemaError(path, [c for c in RESULT_COLUMNS if c not in header])
    if not series or not any(s.x for s in series):
        raise NoDataError(f"{path}: no data rows")
    return series


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    magnitude = 10 ** math.floor(math.log10(raw))
    step = next(m * magnitude for m in (1, 2, 2.5, 5, 10) if m * magnitude >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


def _tick_label(v: float) -> str:
    if v != 0 and (abs(v) >= 1e5 or abs(v) < 1e-2):
        return f"{v:.1e}"
    return f"{v:g}"


class _Canvas:
    """Maps data coordinates to the plot area of a fixed-size SVG."""

    def __init__(self, x_range: Tuple[float, float], y_range: Tuple[float, float],
                 log_x: bool = False):
        self.log_x = log_x
        x0, x1 = x_range
        if log_x:
            x0, x1 = math.log10(x0), math.log10(x1)
        self.x0, self.x1 = x0, (x1 if x1 > x0 else x0 + 1.0)
        self.y0, self.y1 = y_range[0], (y_range[1] if y_range[1] > y_range[0] else y_range[0] + 1.0)
        self.left, self.top = MARGIN_LEFT, MARGIN_TOP
        self.width = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        self.height = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(self, x: float) -> float:
        if self.log_x:
            x = math.log10(x)
        return self.left + (x - self.x0) / (self.x1 - self.x0) * self.width

    def py(self, y: float) -> float:
        return self.top + self.height - (y - self.y0) / (self.y1 - self.y0) * self.height

    def points(self, xs: Sequence[float], ys: Sequence[float]) -> str:
        return " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))


def _svg_root(title: str) -> ET.Element:
    root = ET.Element('svg', {
        'xmlns': SVG_NS,
        'version': '1.1',
        'width': str(WIDTH),
        'height': str(HEIGHT),
        'viewBox': f"0 0 {WIDTH} {HEIGHT}",
        'font-family': 'sans-serif',
        'font-size': '12',
    })
    ET.SubElement(root, 'title').text = title
    ET.SubElement(root, 'rect', {'width': str(WIDTH), 'height': str(HEIGHT), 'fill': 'white'})
    ET.SubElement(root, 'text', {
        'x': str(WIDTH // 2), 'y': '22', 'text-anchor': 'middle', 'font-size': '15',
    }).text = title
    return root


def _axes(root: ET.Element, canvas: _Canvas, x_label: str, y_label: str,
          x_ticks: Sequence[float], y_ticks: Sequence[float]) -> None:
    axes = ET.SubElement(root, 'g', {'stroke': 'black', 'stroke-width': '1'})
    bottom = canvas.top + canvas.height
    right = canvas.left + canvas.width
    ET.SubElement(axes, 'line', {'x1': _fmt(canvas.left), 'y1': _fmt(bottom),
                                 'x2': _fmt(right), 'y2': _fmt(bottom)})
    ET.SubElement(axes, 'line', {'x1': _fmt(canvas.left), 'y1': _fmt(canvas.top),
                                 'x2': _fmt(canvas.left), 'y2': _fmt(bottom)})
    labels = ET.SubElement(root, 'g', {'fill': 'black'})
    for t in x_ticks:
        x = canvas.px(t)
        ET.SubElement(axes, 'line', {'x1': _fmt(x), 'y1': _fmt(bottom),
                                     'x2': _fmt(x), 'y2': _fmt(bottom + 5)})
        ET.SubElement(labels, 'text', {'x': _fmt(x), 'y': _fmt(bottom + 18),
                                       'text-anchor': 'middle'}).text = _tick_label(t)
    for t in y_ticks:
        y = canvas.py(t)
        ET.SubElement(axes, 'line', {'x1': _fmt(canvas.left - 5), 'y1': _fmt(y),
                                     'x2': _fmt(canvas.left), 'y2': _fmt(y)})
        ET.SubElement(labels, 'text', {'x': _fmt(canvas.left - 8), 'y': _fmt(y + 4),
                                       'text-anchor': 'end'}).text = _tick_label(t)
    ET.SubElement(labels, 'text', {
        'x': _fmt(canvas.left + canvas.width / 2), 'y': str(HEIGHT - 15),
        'text-anchor': 'middle',
    }).text = x_label
    ET.SubElement(labels, 'text', {
        'x': '18', 'y': _fmt(canvas.top + canvas.height / 2), 'text-anchor': 'middle',
        'transform': f"rotate(-90 18 {_fmt(canvas.top + canvas.height / 2)})",
    }).text = y_label


def _write(root: ET.Element, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ET.indent(root)
    data = ET.tostring(root, encoding='unicode')
    path.write_text('<?xml version="1.0" encoding="UTF-8"?>\n' + data + '\n', encoding='utf-8')
    logger.info(f"Wrote SVG to {path}")
    return path


def render_curves(series: Sequence[Series], path: Union[str, Path], title: str = 'Regret',
                  x_label: str = 'round t', y_label: str = 'cumulative regret',
                  log_x: bool = False) -> Path:
    """Line chart with one polyline (and optional CI band) per series, plus a legend."""
    series = [s for s in series if s.x]
    if not series:
        raise NoDataError("no data rows")
    xs = [x for s in series for x in s.x]
    if log_x:
        xs = [x for x in xs if x > 0]
    lows, highs = [], []
    for s in series:
        hw = s.half_width or [0.0] * len(s.y)
        lows += [y - h for y, h in zip(s.y, hw)]
        highs += [y + h for y, h in zip(s.y, hw)]
    y_lo, y_hi = min(0.0, min(lows)), max(highs)
    canvas = _Canvas((min(xs), max(xs)), (y_lo, y_hi * 1.05 if y_hi > 0 else 1.0), log_x=log_x)

    if log_x:
        x_ticks = [10.0 ** k for k in range(math.ceil(canvas.x0), math.floor(canvas.x1) + 1)]
    else:
        x_ticks = _nice_ticks(min(xs), max(xs))
    y_ticks = _nice_ticks(canvas.y0, canvas.y1)

    root = _svg_root(title)
    _axes(root, canvas, x_label, y_label, x_ticks, y_ticks)

    plot = ET.SubElement(root, 'g', {'fill': 'none', 'stroke-width': '1.5'})
    legend = ET.SubElement(root, 'g')
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(x, y) for x, y in zip(s.x, s.y) if not log_x or x > 0]
        if s.half_width:
            band = [(x, y, h) for x, y, h in zip(s.x, s.y, s.half_width) if not log_x or x > 0]
            upper = [(x, y + h) for x, y, h in band]
            lower = [(x, y - h) for x, y, h in reversed(band)]
            ET.SubElement(plot, 'polygon', {
                'points': canvas.points(*zip(*(upper + lower))),
                'fill': color, 'fill-opacity': '0.2', 'stroke': 'none',
            })
        attrs = {'points': canvas.points(*zip(*pts)), 'stroke': color}
        if s.dashed:
            attrs['stroke-dasharray'] = '6,4'
        ET.SubElement(plot, 'polyline', attrs)

        ly = MARGIN_TOP + 10 + 20 * i
        lx = WIDTH - MARGIN_RIGHT + 15
        line_attrs = {'x1': str(lx), 'y1': str(ly), 'x2': str(lx + 25), 'y2': str(ly),
                      'stroke': color, 'stroke-width': '2'}
        if s.dashed:
            line_attrs['stroke-dasharray'] = '6,4'
        ET.SubElement(legend, 'line', line_attrs)
        ET.SubElement(legend, 'text', {'x': str(lx + 32), 'y': str(ly + 4)}).text = s.name
    return _write(root, path)


def render_pmf(pmf: SpreadPmf, path: Union[str, Path], title: Optional[str] = None) -> Path:
    """Bar chart of a spread PMF over z-group indices 1..alpha."""
    alpha = pmf.alpha
    top = float(max(pmf.probs))
    canvas = _Canvas((0.5, alpha + 0.5), (0.0, top * 1.1 if top > 0 else 1.0))
    step = max(1, alpha // 10)
    x_ticks = [float(k) for k in range(1, alpha + 1, step)]
    root = _svg_root(title or f"{pmf.label or 'spread'} (alpha={alpha})")
    _axes(root, canvas, 'z-group k', 'B(k)', x_ticks, _nice_ticks(canvas.y0, canvas.y1))

    bars = ET.SubElement(root, 'g', {'fill': PALETTE[0]})
    bar_width = canvas.width / alpha * 0.8
    for k, p in enumerate(pmf.probs, start=1):
        y = canvas.py(float(p))
        ET.SubElement(bars, 'rect', {
            'x': _fmt(canvas.px(k) - bar_width / 2),
            'y': _fmt(y),
            'width': _fmt(bar_width),
            'height': _fmt(canvas.top + canvas.height - y),
        })
    return _write(root, path)
