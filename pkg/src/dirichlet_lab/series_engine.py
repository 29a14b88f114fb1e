"""Three-way convergence classification of nonnegative series and abscissa bisection.

Everything runs on log-terms so that ``|f_k| e^{x lambda_k}`` never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .dist_models import CoefficientLaw, TrialDraw
from .extreal import from_json, to_json

CONVERGENT = "Convergent"
DIVERGENT = "Divergent"
INCONCLUSIVE = "Inconclusive"

# rule names recorded in SeriesVerdict.rationale
EVENTUALLY_ZERO = "EventuallyZero"
SUM_CAP = "SumCap"
TERMS_NOT_VANISHING = "TermsNotVanishing"
GEOMETRIC_ENVELOPE = "GeometricEnvelope"
POWER_SLOPE = "PowerSlope"
CONDENSED_GEOMETRIC = "CondensedGeometric"
CONDENSED_NONDECREASING = "CondensedNondecreasing"
CAUCHY_TAIL = "CauchyTail"
NO_RULE = "NoRuleFired"

CONSERVATIVE_DOWN = "ConservativeDown"
OPTIMISTIC = "Optimistic"


@dataclass(frozen=True)
class ClassifyPolicy:
    slope_margin: float = 0.05
    geo_margin: float = 0.02
    sum_cap: float = 1e12
    envelope_blocks: int = 32
    condensed_blocks: int = 4
    # dyadic block sums are smooth for power-like terms, so a tighter ratio margin is safe
    condensed_margin: float = 0.005
    cauchy_rel: float = 1e-8

    def to_dict(self) -> dict:
        return dict(self.__dict__)


DEFAULT_POLICY = ClassifyPolicy()


@dataclass(frozen=True)
class SeriesVerdict:
    kind: str
    partial_sums: list[tuple[int, float]]
    tail_slope: float | None
    rationale: str

    @property
    def convergent(self) -> bool:
        return self.kind == CONVERGENT

    def to_dict(self) -> dict:
        return {
            "class": self.kind,
            "partial_sums": [[k, to_json(s)] for k, s in self.partial_sums],
            "tail_slope": to_json(self.tail_slope),
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeriesVerdict":
        return cls(d["class"], [(int(k), from_json(s)) for k, s in d["partial_sums"]],
                   from_json(d["tail_slope"]), d["rationale"])


def _checkpoints(K: int) -> list[int]:
    return sorted({max(1, K // 16), max(1, K // 8), max(1, K // 4), max(1, K // 2), K})


def _logsumexp(a: np.ndarray) -> float:
    if a.size == 0:
        return -math.inf
    m = np.max(a)
    if not math.isfinite(m):
        return float(m)
    return float(m + math.log(np.sum(np.exp(a - m))))


def _as_log_terms(terms: Any, K_max: int | None, log_terms: Any) -> np.ndarray:
    if (terms is None) == (log_terms is None):
        raise ValueError("pass exactly one of terms / log_terms")
    src = terms if terms is not None else log_terms
    if callable(src):
        if K_max is None:
            raise ValueError("K_max is required when terms are given as a function")
        src = src(np.arange(K_max))
    arr = np.asarray(src, dtype=float)
    if K_max is not None:
        arr = arr[:K_max]
    if np.any(np.isnan(arr)):
        raise ValueError("series terms must not be NaN")
    if terms is not None:
        if np.any(arr < 0):
            raise ValueError("series terms must be nonnegative")
        with np.errstate(divide="ignore"):
            return np.log(arr)
    return arr


def _fit(x: np.ndarray, y: np.ndarray) -> float:
    x = x - x.mean()
    den = float(np.dot(x, x))
    return float(np.dot(x, y - y.mean()) / den) if den > 0 else math.nan


def _envelope(lt: np.ndarray, nblocks: int) -> tuple[np.ndarray, np.ndarray]:
    """Block maxima of log-terms over the last half and their indices."""
    K = len(lt)
    start = K // 2
    edges = np.unique(np.linspace(start, K, min(nblocks, K - start) + 1).astype(int))
    idx, val = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        j = a + int(np.argmax(lt[a:b]))
        if math.isfinite(lt[j]):
            idx.append(j)
            val.append(lt[j])
    return np.array(idx, dtype=float), np.array(val)


def _condensed(lt: np.ndarray) -> np.ndarray:
    """log of dyadic block sums over complete blocks ``[2^j, 2^{j+1})``."""
    K = len(lt)
    out = []
    j = 0
    while 2 ** (j + 1) <= K:
        out.append(_logsumexp(lt[2 ** j: 2 ** (j + 1)]))
        j += 1
    return np.array(out)


def classify(terms: Any = None, K_max: int | None = None, policy: ClassifyPolicy = DEFAULT_POLICY,
             *, log_terms: Any = None) -> SeriesVerdict:
    """Classify ``sum_k terms[k]`` as Convergent / Divergent / Inconclusive.

    Rules are tried in a fixed order and the first that fires is recorded:
    eventually-zero tail, tail-sum cap, non-vanishing terms over the last
    quarter, geometric envelope, power slope >= 1 + margin, geometric decay
    of Cauchy-condensed block sums, power slope <= 1 - margin,
    non-decreasing condensed block sums.
    """
    lt = _as_log_terms(terms, K_max, log_terms)
    K = len(lt)
    if K < 16:
        raise ValueError("need at least 16 terms to classify a series")

    with np.errstate(over="ignore"):
        cum = np.logaddexp.accumulate(lt)
        partial = [(c, float(np.exp(cum[c - 1]))) for c in _checkpoints(K)]

    def verdict(kind, rule, slope=None):
        return SeriesVerdict(kind, partial, slope, rule)

    half, q3 = K // 2, (3 * K) // 4
    if np.all(lt[half:] == -math.inf):
        return verdict(CONVERGENT, EVENTUALLY_ZERO)
    if _logsumexp(lt[half:]) > math.log(policy.sum_cap):
        return verdict(DIVERGENT, SUM_CAP)
    m3, m4 = np.max(lt[half:q3]), np.max(lt[q3:])
    if math.isfinite(m4) and m4 >= m3 + math.log1p(-policy.slope_margin):
        return verdict(DIVERGENT, TERMS_NOT_VANISHING)

    idx, env = _envelope(lt, policy.envelope_blocks)
    slope = geo = math.nan
    if len(idx) >= 3:
        slope = -_fit(np.log(idx + 1.0), env)
        geo = _fit(idx, env)
    s = None if math.isnan(slope) else slope
    if geo <= math.log1p(-policy.geo_margin):
        return verdict(CONVERGENT, GEOMETRIC_ENVELOPE, s)
    if slope >= 1 + policy.slope_margin:
        return verdict(CONVERGENT, POWER_SLOPE, s)

    cond = _condensed(lt)
    steps = None
    if len(cond) > policy.condensed_blocks:
        last = cond[-policy.condensed_blocks:]
        if np.all(np.isfinite(last)):
            steps = np.diff(last)
    if steps is not None and np.all(steps <= math.log1p(-policy.condensed_margin)):
        return verdict(CONVERGENT, CONDENSED_GEOMETRIC, s)
    if slope <= 1 - policy.slope_margin:
        return verdict(DIVERGENT, POWER_SLOPE, s)
    if steps is not None and np.all(steps >= 0):
        return verdict(DIVERGENT, CONDENSED_NONDECREASING, s)
    return verdict(INCONCLUSIVE, NO_RULE, s)


def cauchy_verdict(terms: Any, policy: ClassifyPolicy = DEFAULT_POLICY) -> SeriesVerdict:
    """Convergence of a signed series from Cauchy differences of its partial sums."""
    t = np.asarray(terms, dtype=float)
    K = len(t)
    if K < 16:
        raise ValueError("need at least 16 terms")
    S = np.cumsum(t)
    cps = _checkpoints(K)
    partial = [(c, float(S[c - 1])) for c in cps]
    mag = np.abs(t)
    half, q3 = K // 2, (3 * K) // 4
    # checked first: sums at even checkpoints can cancel exactly for +-1 terms
    if mag[q3:].max() >= (1 - policy.slope_margin) * mag[half:q3].max() > 0:
        return SeriesVerdict(DIVERGENT, partial, None, TERMS_NOT_VANISHING)
    late = [S[c - 1] for c in cps if c >= K // 2]
    spread = max(abs(a - b) for a in late for b in late)
    if spread <= policy.cauchy_rel * (1 + abs(S[-1])):
        return SeriesVerdict(CONVERGENT, partial, None, CAUCHY_TAIL)
    return SeriesVerdict(INCONCLUSIVE, partial, None, NO_RULE)


# --------------------------------------------------------------------------
# abscissa estimation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AbscissaEstimate:
    value: float
    bracket: tuple[float, float]
    verdicts_at_bracket: tuple[SeriesVerdict, SeriesVerdict]
    iterations: int
    inconclusive_policy: str = CONSERVATIVE_DOWN

    def to_dict(self) -> dict:
        return {
            "value": to_json(self.value),
            "bracket": [to_json(self.bracket[0]), to_json(self.bracket[1])],
            "verdicts_at_bracket": [v.to_dict() for v in self.verdicts_at_bracket],
            "iterations": self.iterations,
            "inconclusive_policy": self.inconclusive_policy,
        }


def _accepts(v: SeriesVerdict, inconclusive_policy: str) -> bool:
    if v.kind == INCONCLUSIVE:
        return inconclusive_policy == OPTIMISTIC
    return v.kind == CONVERGENT


def bisect_abscissa(probe: Callable[[float], SeriesVerdict], x_range=(-50.0, 50.0), tol: float = 0.01,
                    inconclusive_policy: str = CONSERVATIVE_DOWN, max_iter: int = 60) -> AbscissaEstimate:
    """Locate the convergence boundary of ``probe`` on ``x_range``.

    ``value`` is the upper bracket end: the first probe at which convergence
    was not confirmed. The abscissa lies in ``[x_lo, value]``.
    """
    if inconclusive_policy not in (CONSERVATIVE_DOWN, OPTIMISTIC):
        raise ValueError(f"unknown inconclusive policy {inconclusive_policy!r}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = map(float, x_range)
    if not lo < hi:
        raise ValueError("x_range must satisfy x_lo < x_hi")
    v_hi = probe(hi)
    if _accepts(v_hi, inconclusive_policy):
        return AbscissaEstimate(math.inf, (lo, hi), (v_hi, v_hi), 1, inconclusive_policy)
    v_lo = probe(lo)
    if not _accepts(v_lo, inconclusive_policy):
        return AbscissaEstimate(-math.inf, (lo, hi), (v_lo, v_lo), 2, inconclusive_policy)
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        v = probe(mid)
        if _accepts(v, inconclusive_policy):
            lo, v_lo = mid, v
        else:
            hi, v_hi = mid, v
        it += 1
    return AbscissaEstimate(hi, (lo, hi), (v_lo, v_hi), it + 2, inconclusive_policy)


def _mu_lambda(coeff: CoefficientLaw, draw: TrialDraw) -> tuple[np.ndarray, np.ndarray]:
    return coeff.neg_log_values(draw.K, draw), np.asarray(draw.lambdas)


def sigma_abs(coeff: CoefficientLaw, draw: TrialDraw, x_range=(-50.0, 50.0), tol: float = 0.01,
              policy: ClassifyPolicy = DEFAULT_POLICY,
              inconclusive_policy: str = CONSERVATIVE_DOWN) -> AbscissaEstimate:
    """Abscissa of absolute convergence of ``sum |f_k| e^{x lambda_k}``."""
    mu, lam = _mu_lambda(coeff, draw)

    def probe(x: float) -> SeriesVerdict:
        return classify(log_terms=-mu + x * lam, policy=policy)

    return bisect_abscissa(probe, x_range, tol, inconclusive_policy)


def sigma_conv(coeff: CoefficientLaw, draw: TrialDraw, x_range=(-50.0, 50.0), tol: float = 0.01,
               policy: ClassifyPolicy = DEFAULT_POLICY,
               inconclusive_policy: str = CONSERVATIVE_DOWN, signs: Any = None) -> AbscissaEstimate:
    """Abscissa of convergence of ``sum f_k e^{x lambda_k}`` at real ``x``.

    Coefficients are positive moduli unless ``signs`` (+1/-1 per index) is
    given. A series with constant sign converges iff it converges absolutely,
    so it goes through :func:`classify`; with mixed signs a probe that does not
    converge absolutely falls back to the Cauchy test.
    """
    mu, lam = _mu_lambda(coeff, draw)
    sg = None if signs is None else np.sign(np.asarray(signs, dtype=float))[: draw.K]
    mixed = sg is not None and np.any(sg > 0) and np.any(sg < 0)

    def probe(x: float) -> SeriesVerdict:
        lt = -mu + x * lam
        absolute = classify(log_terms=lt, policy=policy)
        # absolute convergence implies convergence, which keeps sigma_abs <= sigma_conv
        if not mixed or absolute.kind == CONVERGENT:
            return absolute
        with np.errstate(over="ignore"):
            return cauchy_verdict(sg * np.exp(lt), policy)

    return bisect_abscissa(probe, x_range, tol, inconclusive_policy)


def zad_condition(coeff: CoefficientLaw, draw: TrialDraw, gamma: float, delta: float,
                  K_max: int | None = None, policy: ClassifyPolicy = DEFAULT_POLICY) -> SeriesVerdict:
    """Classify ``sum |f_k|^{1-gamma} e^{-delta lambda_k}``."""
    mu, lam = _mu_lambda(coeff, draw)
    lt = (1.0 - gamma) * (-mu) - delta * lam
    return classify(log_terms=lt[:K_max] if K_max else lt, policy=policy)


def prop1_lower_bound(alpha0_value: float, gamma: float, delta: float, zad: SeriesVerdict) -> float | None:
    """``gamma * alpha0 - delta`` when the summability condition holds, else None."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if zad.kind != CONVERGENT:
        return None
    return gamma * alpha0_value - delta
