"""Finite-truncation estimators for tail liminf / limsup quantities.

Every estimate is an extremum of a ratio sequence over shrinking tails
``[w, K)`` for a geometric schedule of window starts. The full trace is kept;
the value is the extremum over the last window, replaced by a sentinel when
the sequence clearly escapes to +/-inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dist_models import CoefficientLaw, TrialDraw
from .extreal import from_json, to_json

DEFAULT_WINDOWS = (1 / 16, 1 / 8, 1 / 4, 1 / 2)
SENTINEL_CAP = 1e9
TREND_TOL = 1e-2
# per-window-doubling growth factor that counts as escape to infinity
GROWTH_FACTOR = 1.25
GROWTH_FLOOR = 1.0

STABLE = "Stable"
DRIFTING = "Drifting"
OSCILLATING = "Oscillating"


class EstimationError(ValueError):
    """No usable index in the tail (e.g. every exponent is zero)."""


@dataclass(frozen=True)
class TailEstimate:
    value: float
    window_trace: list[tuple[int, float]]
    K: int
    trend: str
    kind: str  # "liminf" or "limsup"
    skipped: int = 0
    limit_hint: str | None = None  # "diverges", "vanishes" or None
    block_extrema: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "value": to_json(self.value),
            "window_trace": [[w, to_json(v)] for w, v in self.window_trace],
            "K": self.K,
            "trend": self.trend,
            "kind": self.kind,
            "skipped": self.skipped,
            "limit_hint": self.limit_hint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TailEstimate":
        return cls(from_json(d["value"]), [(int(w), from_json(v)) for w, v in d["window_trace"]],
                   int(d["K"]), d["trend"], d["kind"], int(d.get("skipped", 0)), d.get("limit_hint"))


def window_starts(K: int, windows: Sequence[float] | None = None) -> list[int]:
    fracs = DEFAULT_WINDOWS if windows is None else tuple(windows)
    if not fracs or any(not (0 < f < 1) for f in fracs) or list(fracs) != sorted(set(fracs)):
        raise ValueError("window fractions must be strictly increasing values in (0, 1)")
    starts = sorted({max(1, min(K - 1, int(K * f))) for f in fracs}) if K > 1 else [0]
    return starts


def _escape(blocks: np.ndarray) -> str | None:
    b = blocks[np.isfinite(blocks)]
    if len(b) < 4:
        return None
    last = b[-4:]
    if np.all(np.sign(last) == np.sign(last[-1])) and last[-1] != 0:
        mags = np.abs(last)
        with np.errstate(over="ignore", divide="ignore"):
            steps = mags[1:] / mags[:-1]
        if np.all(steps >= GROWTH_FACTOR) and mags[-1] >= GROWTH_FLOOR:
            return "diverges"
        if np.all(steps <= 1 / GROWTH_FACTOR):
            return "vanishes"
    return None


def tail_extremum(values: np.ndarray, kind: str, windows: Sequence[float] | None = None,
                  tol: float = TREND_TOL, cap: float = SENTINEL_CAP) -> TailEstimate:
    """Liminf (``kind="liminf"``) or limsup of ``values``; NaN entries are skipped."""
    if kind not in ("liminf", "limsup"):
        raise ValueError("kind must be 'liminf' or 'limsup'")
    v = np.asarray(values, dtype=float)
    K = len(v)
    if K == 0:
        raise EstimationError("empty tail")
    skipped = int(np.isnan(v).sum())
    starts = window_starts(K, windows)
    if kind == "liminf":
        acc = np.fmin.accumulate(v[::-1])[::-1]
        reduce = np.fmin.reduce
    else:
        acc = np.fmax.accumulate(v[::-1])[::-1]
        reduce = np.fmax.reduce
    trace = [(w, float(acc[w])) for w in starts]
    value = trace[-1][1]
    if math.isnan(value):
        raise EstimationError("empty tail: every ratio in the last window was skipped")

    edges = starts + [K]
    blocks = np.array([reduce(v[a:b]) if b > a else np.nan for a, b in zip(edges[:-1], edges[1:])])

    hint = _escape(blocks)
    tail_vals = np.array([t for _, t in trace[-3:]])
    scale = max(1.0, abs(value)) if math.isfinite(value) else 1.0
    finite_tail = tail_vals[np.isfinite(tail_vals)]
    if len(finite_tail) == len(tail_vals) and np.ptp(finite_tail) < tol * scale:
        trend = STABLE
    else:
        fb = blocks[np.isfinite(blocks)]
        d = np.diff(fb)
        trend = DRIFTING if len(d) and (np.all(d >= 0) or np.all(d <= 0)) else OSCILLATING

    if value > cap or (hint == "diverges" and value > 0):
        value = math.inf
    elif value < -cap or (hint == "diverges" and value < 0):
        value = -math.inf
    return TailEstimate(value, trace, K, trend, kind, skipped, hint, list(map(float, blocks)))


def _ln_k(K: int, kmin: int) -> np.ndarray:
    k = np.arange(K, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(k)
    out[:kmin] = np.nan
    return out


def _div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den != 0, num / np.where(den != 0, den, 1.0), np.nan)


def alpha0_ratios(mu: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    """``mu_k / lambda_k`` with zero exponents skipped (NaN)."""
    return _div(np.asarray(mu, float), np.asarray(lambdas, float))


def alpha0(coeff: CoefficientLaw, draw: TrialDraw, windows=None, **kw) -> TailEstimate:
    """liminf of ``-ln|f_k| / lambda_k``."""
    mu = coeff.neg_log_values(draw.K, draw)
    return tail_extremum(alpha0_ratios(mu, draw.lambdas), "liminf", windows, **kw)


def tau(draw: TrialDraw, windows=None, **kw) -> TailEstimate:
    """limsup of ``ln k / lambda_k``."""
    return tail_extremum(_div(_ln_k(draw.K, 1), draw.lambdas), "limsup", windows, **kw)


def h_coeff(coeff: CoefficientLaw, K: int, windows=None, draw: TrialDraw | None = None,
            **kw) -> TailEstimate:
    """limsup of ``ln k / (-ln|f_k|)``; random-modulus mode needs the draw."""
    mu = coeff.neg_log_values(K, draw)
    return tail_extremum(_div(_ln_k(K, 1), mu), "limsup", windows, **kw)


def h_gamma_delta(coeff: CoefficientLaw, draw: TrialDraw, gamma: float, delta: float,
                  windows=None, **kw) -> TailEstimate:
    """liminf of ``((gamma-1) ln|f_k| + delta lambda_k) / ln k``; condition holds iff value > 1."""
    mu = coeff.neg_log_values(draw.K, draw)
    num = (gamma - 1.0) * (-mu) + delta * draw.lambdas
    return tail_extremum(_div(num, _ln_k(draw.K, 2)), "liminf", windows, **kw)


COEF_TOL = 0.01


def coef_condition(coeff: CoefficientLaw, K: int = 100_000, windows=None,
                   draw: TrialDraw | None = None) -> tuple[bool, TailEstimate]:
    """Whether ``ln k = o(ln|f_k|)`` appears to hold at truncation ``K``.

    True when the tail supremum of ``ln k / |ln|f_k||`` is below 0.01 and
    stable, or when its block suprema shrink geometrically toward 0.
    """
    mu = coeff.neg_log_values(K, draw)
    est = tail_extremum(_div(_ln_k(K, 1), np.abs(mu)), "limsup", windows)
    ok = (est.value < COEF_TOL and est.trend == STABLE) or est.limit_hint == "vanishes"
    return bool(ok), est


class CountingFunction:
    """Right-continuous step function ``t -> #{k < K : mu_k <= t}``."""

    def __init__(self, mu: np.ndarray):
        self.points = np.sort(np.asarray(mu, dtype=float))

    def __call__(self, t):
        out = np.searchsorted(self.points, np.asarray(t, dtype=float), side="right")
        return int(out) if np.ndim(out) == 0 else out

    def left_limit(self, t):
        """``#{mu_k < t}``."""
        out = np.searchsorted(self.points, np.asarray(t, dtype=float), side="left")
        return int(out) if np.ndim(out) == 0 else out


def counting_function(coeff: CoefficientLaw, K: int) -> CountingFunction:
    return CountingFunction(coeff.neg_log_values(K))
