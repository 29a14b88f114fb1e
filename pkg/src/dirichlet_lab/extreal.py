"""Extended-real values: plain floats with ``math.inf`` sentinels.

JSON has no infinities, so sentinels travel as the strings ``"inf"``,
``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import math
from typing import Any

INF = math.inf
NINF = -math.inf


def to_json(v: float | None) -> Any:
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def from_json(v: Any) -> float | None:
    if v is None:
        return None
    if isinstance(v, str):
        if v not in ("inf", "-inf", "nan"):
            raise ValueError(f"not an extended real: {v!r}")
        return float(v)
    return float(v)


def fmt(v: float | None, digits: int = 9) -> str:
    """Format for CSV: ``digits`` significant digits, sentinels as inf/-inf."""
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{digits}g}"


def parse(text: str) -> float | None:
    text = text.strip()
    return None if text == "" else float(text)
