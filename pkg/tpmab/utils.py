"""
tpmab - Utility functions and shared constants.
"""

from __future__ import annotations

import math
import re
from datetime import datetime
from typing import Any, Dict, List, Optional

from .errors import InvalidParameterError


def parse_float_list(text: str) -> List[float]:
    """
    Parse a comma separated list of numbers.
    E.g., "50, 150,300" -> [50.0, 150.0, 300.0]
    """
    items = [s.strip() for s in text.split(',') if s.strip()]
    if not items:
        raise InvalidParameterError(f"expected a comma separated list of numbers, got {text!r}")
    try:
        return [float(s) for s in items]
    except ValueError as e:
        raise InvalidParameterError(f"not a list of numbers: {text!r}") from e


def parse_dist_option(text: str, alpha: int) -> Dict[str, Any]:
    """
    Parse the compact distribution syntax of the command line into a tagged record.

    ``uniform``, ``named:begin``, ``beta_binomial:2,8``, ``zipfian:1``,
    ``boltzmann:0.5``, ``hypergeometric:200``. A bare preset name also works.
    """
    text = text.strip()
    match = re.match(r'^([a-z_]+)(?::(.*))?$', text)
    if not match:
        raise InvalidParameterError(f"cannot parse distribution {text!r}")
    kind, arg = match.group(1), match.group(2)
    if kind == 'uniform' and arg is None:
        return {'kind': 'uniform', 'alpha': alpha}
    if arg is None:
        return {'kind': 'named', 'alpha': alpha, 'name': kind}
    if kind == 'named':
        return {'kind': 'named', 'alpha': alpha, 'name': arg}
    values = parse_float_list(arg)
    if kind == 'beta_binomial' and len(values) == 2:
        return {'kind': 'beta_binomial', 'alpha': alpha, 'a': values[0], 'b': values[1]}
    if kind == 'zipfian' and len(values) == 1:
        return {'kind': 'zipfian', 'alpha': alpha, 's': values[0]}
    if kind == 'boltzmann' and len(values) == 1:
        return {'kind': 'boltzmann', 'alpha': alpha, 'lambda': values[0]}
    if kind == 'hypergeometric' and len(values) == 1:
        return {'kind': 'hypergeometric', 'alpha': alpha, 'n_pop': int(values[0])}
    raise InvalidParameterError(
        f"cannot parse distribution {text!r}; expected uniform, named:<name>, "
        f"beta_binomial:<a>,<b>, zipfian:<s>, boltzmann:<lambda> or hypergeometric:<N>"
    )


def format_regret(value: float) -> str:
    """Compact regret figure: 856123.4 -> '8.561e+05', small values stay fixed point."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    if math.isinf(value):
        return "inf"
    if abs(value) >= 1e4:
        return f"{value:.3e}"
    return f"{value:.2f}"


def format_percent(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:+.1f}%"


def format_duration(seconds: Optional[float]) -> str:
    """Format seconds as '42s', '3m 05s' or '1h 02m'."""
    if seconds is None:
        return "-"
    seconds = int(round(seconds))
    if seconds < 60:
        return f"{seconds}s"
    if seconds < 3600:
        return f"{seconds // 60}m {seconds % 60:02d}s"
    return f"{seconds // 3600}h {(seconds % 3600) // 60:02d}m"


def format_time_ago(timestamp: float) -> str:
    """Format timestamp as relative time (e.g., '5m ago', '2h ago')."""
    now = datetime.now().timestamp()
    diff = now - timestamp

    if diff < 60:
        return f"{int(diff)}s ago"
    elif diff < 3600:
        return f"{int(diff / 60)}m ago"
    elif diff < 86400:
        return f"{int(diff / 3600)}h ago"
    else:
        return f"{int(diff / 86400)}d ago"
