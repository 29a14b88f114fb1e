"""Borel-Cantelli criterion sums and the abscissa bounds they imply.

Sums are built from law-level CDFs (never from draws) and classified with
:func:`series_engine.classify`. The bound a criterion implies is a fixed
function of ``(criterion_id, status)``, see :data:`IMPLIED_BOUND`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .dist_models import CdfModel, CoefficientLaw, IndexedLaw, TrialDraw
from .extreal import from_json, to_json
from .series_engine import (CONVERGENT, DEFAULT_POLICY, DIVERGENT, INCONCLUSIVE, ClassifyPolicy,
                            SeriesVerdict, classify)
from .tail_limits import tail_extremum

CRITERIA = ("Thm3i", "Thm3ii", "Thm4i", "Thm4ii", "Remark3", "Cor1", "Cor2", "Cor3", "Cor4",
            "Thm1a", "Thm1b", "Thm2a", "Thm2b")

GE = "sigma >= rho"
LE = "sigma <= rho"
EQ = "sigma = rho"
NEC_HOLDS = "necessary-condition-holds"
NEC_FAILS = "necessary-condition-fails"
NA = "not-applicable"

HOLD = "hold"
FAIL = "fail"

# claim refuted when a necessary condition fails
REFUTES = {
    "Thm3i": "sigma >= rho",
    "Thm3ii": "0 >= sigma >= rho",
    "Remark3": "sigma > rho",
    "Thm1a": "sigma >= rho",
    "Thm2b": "sigma = -inf",
}

_NECESSARY = {CONVERGENT: NEC_HOLDS, DIVERGENT: NEC_FAILS, INCONCLUSIVE: NA}
_SUFFICIENT_GE = {CONVERGENT: GE, DIVERGENT: NA, INCONCLUSIVE: NA}
_HYPOTHESES_EQ = {HOLD: EQ, FAIL: NA, INCONCLUSIVE: NA}

IMPLIED_BOUND: dict[str, dict[str, str]] = {
    "Thm3i": _NECESSARY,
    "Thm3ii": _NECESSARY,
    "Remark3": _NECESSARY,
    "Thm1a": _NECESSARY,
    "Thm4i": _SUFFICIENT_GE,
    "Thm4ii": _SUFFICIENT_GE,
    "Thm2a": _SUFFICIENT_GE,
    "Cor3": _SUFFICIENT_GE,
    "Thm1b": {CONVERGENT: NA, DIVERGENT: LE, INCONCLUSIVE: NA},
    # a convergent sum violates the necessary condition for sigma = -inf
    "Thm2b": {CONVERGENT: NEC_FAILS, DIVERGENT: NEC_HOLDS, INCONCLUSIVE: NA},
    "Cor1": _HYPOTHESES_EQ,
    "Cor2": _HYPOTHESES_EQ,
    "Cor4": _HYPOTHESES_EQ,
}


def implied_bound(criterion_id: str, status: str) -> str:
    try:
        return IMPLIED_BOUND[criterion_id][status]
    except KeyError:
        raise ValueError(f"no table entry for ({criterion_id!r}, {status!r})") from None


@dataclass(frozen=True)
class CriterionReport:
    criterion_id: str
    params: dict
    verdict: SeriesVerdict | None
    status: str
    implied_bound: str
    partial_sum_at_K: float | None = None
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def term_trace(self) -> list[tuple[int, float]]:
        return [] if self.verdict is None else self.verdict.partial_sums

    @property
    def rho(self) -> float:
        return float(self.params.get("rho", 0.0))

    @property
    def refuted_claim(self) -> str | None:
        return REFUTES.get(self.criterion_id) if self.implied_bound == NEC_FAILS else None

    def to_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "verdict": None if self.verdict is None else self.verdict.to_dict(),
            "status": self.status,
            "implied_bound": self.implied_bound,
            "partial_sum_at_K": to_json(self.partial_sum_at_K),
            "notes": list(self.notes),
            "extra": {k: _jsonable(v) for k, v in self.extra.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CriterionReport":
        return cls(d["criterion_id"], dict(d["params"]),
                   None if d["verdict"] is None else SeriesVerdict.from_dict(d["verdict"]),
                   d["status"], d["implied_bound"], from_json(d["partial_sum_at_K"]),
                   list(d["notes"]), dict(d["extra"]))


def _jsonable(v: Any) -> Any:
    if isinstance(v, float):
        return to_json(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    return v


def _report(cid: str, params: dict, terms: np.ndarray, policy: ClassifyPolicy,
            notes: list[str] | None = None, extra: dict | None = None) -> CriterionReport:
    v = classify(terms, policy=policy)
    return CriterionReport(cid, params, v, v.kind, implied_bound(cid, v.kind),
                           float(np.sum(terms)), notes or [], extra or {})


def _det_mu(coeff: CoefficientLaw, K: int) -> np.ndarray:
    if not coeff.is_deterministic:
        raise ValueError("this criterion needs deterministic coefficients")
    return coeff.neg_log_values(K)


def _thresholds(mu: np.ndarray, denom: np.ndarray) -> np.ndarray:
    """``ln|f_k| / denom_k`` with ``ln|f_k| = -mu_k``; zero denominators rejected."""
    if np.any(denom == 0):
        raise ValueError("threshold denominator -rho + eps vanishes at some index")
    return -mu / denom


def default_eps_schedule(k: np.ndarray) -> np.ndarray:
    return 1.0 / np.log(np.asarray(k, dtype=float) + math.e)


def _schedule(eps: Any, K: int) -> np.ndarray:
    k = np.arange(K)
    if eps is None:
        return default_eps_schedule(k)
    if callable(eps):
        return np.broadcast_to(np.asarray(eps(k), dtype=float), (K,)).copy()
    return np.full(K, float(eps))


# --------------------------------------------------------------------------
# random exponents, deterministic coefficients
# --------------------------------------------------------------------------


def thm3_upper_sum(exp_law: IndexedLaw, coeff: CoefficientLaw, rho: float, eps: float | None = None,
                   K_max: int = 100_000, policy: ClassifyPolicy = DEFAULT_POLICY) -> CriterionReport:
    """``sum 1 - F_k(ln|f_k| / (-rho + eps))``: necessary for sigma >= rho > 0."""
    if not rho > 0:
        raise ValueError("Thm3i needs rho > 0")
    eps = rho / 2 if eps is None else float(eps)
    if not 0 < eps < rho:
        raise ValueError("Thm3i needs eps in (0, rho)")
    mu = _det_mu(coeff, K_max)
    k = np.arange(K_max)
    thr = _thresholds(mu, np.full(K_max, -rho + eps))
    return _report("Thm3i", {"rho": rho, "eps": eps, "K_max": K_max}, 1.0 - exp_law.cdf(k, thr), policy)


def eps_grid(rho: float, n: int = 8) -> list[float]:
    """``rho * 2^-j`` for ``j = 1..n``."""
    return [abs(rho) * 2.0 ** -j for j in range(1, n + 1)]


def thm3_upper_eps_grid(exp_law: IndexedLaw, coeff: CoefficientLaw, rho: float,
                        eps_values: Sequence[float] | None = None, K_max: int = 100_000,
                        policy: ClassifyPolicy = DEFAULT_POLICY) -> CriterionReport:
    """Thm3i over several eps; the necessary condition is for every eps, so one
    divergent sum refutes sigma >= rho."""
    eps_values = eps_grid(rho) if eps_values is None else list(eps_values)
    reports = [thm3_upper_sum(exp_law, coeff, rho, e, K_max, policy) for e in eps_values]
    return _combine_necessary(reports, "eps_grid", eps_values)


def _combine_necessary(reports: list[CriterionReport], tag: str, values: list[float]) -> CriterionReport:
    chosen = next((r for r in reports if r.status == DIVERGENT), None)
    if chosen is None:
        chosen = next((r for r in reports if r.status == INCONCLUSIVE), reports[-1])
    params = dict(chosen.params)
    params[tag] = list(values)
    extra = dict(chosen.extra)
    extra["status_by_eps"] = [[r.params["eps"], r.status] for r in reports]
    return CriterionReport(chosen.criterion_id, params, chosen.verdict, chosen.status,
                           chosen.implied_bound, chosen.partial_sum_at_K, chosen.notes, extra)


def thm3_lower_sum(exp_law: IndexedLaw, coeff: CoefficientLaw, rho: float, eps: float = 1.0,
                   K_max: int = 100_000, policy: ClassifyPolicy = DEFAULT_POLICY) -> CriterionReport:
    """``sum F_k(ln|f_k| / (-rho + eps))``: necessary for 0 >= sigma >= rho."""
    if rho > 0:
        raise ValueError("Thm3ii needs rho <= 0")
    if not eps > 0:
        raise ValueError("Thm3ii needs eps > 0")
    mu = _det_mu(coeff, K_max)
    k = np.arange(K_max)
    thr = _thresholds(mu, np.full(K_max, -rho + eps))
    return _report("Thm3ii", {"rho": rho, "eps": eps, "K_max": K_max}, exp_law.cdf(k, thr), policy)


def thm4_sum(exp_law: IndexedLaw, coeff: CoefficientLaw, rho: float, eps_schedule: Any = None,
             K_max: int = 100_000, side: str = "upper",
             policy: ClassifyPolicy = DEFAULT_POLICY) -> CriterionReport:
    """Sufficient conditions for sigma >= rho with ``eps_k -> 0``.

    ``side="upper"`` (rho > 0): ``sum 1 - F_k(ln|f_k| / (-rho + eps_k))``;
    ``side="lower"`` (rho <= 0): ``sum F_k(ln|f_k| / (-rho + eps_k))``.
    """
    if side == "upper" and not rho > 0:
        raise ValueError("Thm4i needs rho > 0")
    if side == "lower" and rho > 0:
        raise ValueError("Thm4ii needs rho <= 0")
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    mu = _det_mu(coeff, K_max)
    k = np.arange(K_max)
    eps = _schedule(eps_schedule, K_max)
    denom = -rho + eps
    # eps_k -> 0, so only finitely many leading indices can have the wrong sign;
    # they do not affect convergence and are left out of the sum
    bad = np.flatnonzero(denom >= 0) if side == "upper" else np.flatnonzero(denom <= 0)
    k_start = int(bad[-1]) + 1 if len(bad) else 0
    if k_start > K_max // 2:
        raise ValueError("eps schedule does not settle below rho within the first half of the range")
    thr = np.zeros(K_max)
    thr[k_start:] = _thresholds(mu[k_start:], denom[k_start:])
    F = exp_law.cdf(k, thr)
    terms = 1.0 - F if side == "upper" else F
    terms[:k_start] = 0.0
    cid = "Thm4i" if side == "upper" else "Thm4ii"
    label = "1/ln(k+e)" if eps_schedule is None else (
        "callable" if callable(eps_schedule) else float(eps_schedule))
    return _report(cid, {"rho": rho, "eps_schedule": label, "K_max": K_max, "k_start": k_start},
                   terms, policy)


PLUS_ZERO_GRID = tuple(10.0 ** -j for j in range(3, 13))


def cdf_plus_zero(law: IndexedLaw | CdfModel, k: np.ndarray, delta_grid: Sequence[float] = PLUS_ZERO_GRID,
                  tol: float = 1e-6) -> tuple[np.ndarray, bool]:
    """``F_k(+0)`` as the limit of ``F_k(delta)`` along a decreasing grid.

    Returns the value at the smallest delta and whether the last three grid
    values agree within ``tol`` at every index.
    """
    grid = np.asarray(sorted(delta_grid, reverse=True), dtype=float)
    if isinstance(law, CdfModel):
        vals = np.array([np.full(len(k), law.cdf(d)) for d in grid])
    else:
        vals = np.array([law.cdf(k, d) for d in grid])
    last = vals[-3:]
    stable = bool(np.all(np.ptp(last, axis=0) <= tol))
    return vals[-1], stable


def remark3_sum(exp_law: IndexedLaw, coeff: CoefficientLaw, rho: float, K_max: int = 100_000,
                delta_grid: Sequence[float] = PLUS_ZERO_GRID,
                policy: ClassifyPolicy = DEFAULT_POLICY) -> CriterionReport:
    """Necessary condition for sigma > rho >= 0.

    rho > 0: ``sum 1 - F_k(-ln|f_k| / rho)``; rho = 0: ``sum 1 - F_k(+0)``.
    """
    if rho < 0:
        raise ValueError("Remark3 needs rho >= 0")
    mu = _det_mu(coeff, K_max)
    k = np.arange(K_max)
    params = {"rho": rho, "K_max": K_max}
    if rho > 0:
        return _report("Remark3", params, 1.0 - exp_law.cdf(k, mu / rho), policy)
    f0, stable = cdf_plus_zero(exp_law, k, delta_grid)
    notes = ["boundary-case rho = 0"]
    if not stable:
        return CriterionReport("Remark3", params, None, INCONCLUSIVE, NA, None,
                               notes + ["F_k(+0) did not stabilize on the delta grid"])
    return _report("Remark3", params, 1.0 - f0, policy, notes)


def _tends_to_zero(coeff: CoefficientLaw, K: int) -> tuple[bool, list[float]]:
    """``f_k -> 0`` judged from the tail-infimum trace of ``mu_k = -ln|f_k|``."""
    mu = _det_mu(coeff, K)
    est = tail_extremum(mu, "liminf")
    trace = [v for _, v in est.window_trace]
    ok = est.value > 0 and all(b > a for a, b in zip(trace[-3:], trace[-2:]))
    return bool(ok or est.value == math.inf), trace


def _liminf_plus_zero(exp_law: IndexedLaw, K: int, delta_grid) -> tuple[float | None, bool]:
    k = np.arange(K)
    f0, stable = cdf_plus_zero(exp_law, k, delta_grid)
    if not stable:
        return None, False
    return float(tail_extremum(f0, "liminf").value), True


def cor1_check(exp_law: IndexedLaw, coeff: CoefficientLaw, K_max: int = 100_000,
               delta_grid: Sequence[float] = PLUS_ZERO_GRID) -> CriterionReport:
    """Hypotheses ``liminf F_k(+0) < 1`` and ``f_k -> 0``; conclusion sigma = 0."""
    lim, stable = _liminf_plus_zero(exp_law, K_max, delta_grid)
    f_to_zero, mu_trace = _tends_to_zero(coeff, K_max)
    extra = {"liminf_F_plus_zero": lim, "f_to_zero": f_to_zero, "mu_tail_inf_trace": mu_trace}
    if not stable:
        status = INCONCLUSIVE
    else:
        status = HOLD if (lim < 1 and f_to_zero) else FAIL
    return CriterionReport("Cor1", {"rho": 0.0, "K_max": K_max}, None, status,
                           implied_bound("Cor1", status), None, [], extra)


DEFAULT_PROBE_GRID = tuple(np.concatenate([[0.0], np.logspace(-6, 4, 201)]).tolist())


def cor2_domination(exp_law: IndexedLaw, dominating: CdfModel, grid: Sequence[float] | None = None,
                    K_max: int = 1000) -> bool:
    """``F_k(x) <= F_a(x)`` for every probe ``x >= 0`` and ``k < K_max``."""
    x = np.asarray(DEFAULT_PROBE_GRID if grid is None else grid, dtype=float)
    k = np.arange(K_max)[:, None]
    Fk = exp_law.cdf(k, x[None, :])
    Fa = dominating.cdf(x)[None, :]
    return bool(np.all(Fk <= Fa + 1e-12))


def cor2_check(exp_law: IndexedLaw, coeff: CoefficientLaw, dominating: CdfModel,
               grid: Sequence[float] | None = None, K_max: int = 1000,
               delta_grid: Sequence[float] = PLUS_ZERO_GRID) -> CriterionReport:
    dominated = cor2_domination(exp_law, dominating, grid, K_max)
    fa0, stable = cdf_plus_zero(dominating, np.zeros(1, dtype=int), delta_grid)
    f_to_zero, _ = _tends_to_zero(coeff, max(K_max, 1024))
    extra = {"dominated": dominated, "F_a_plus_zero": float(fa0[0]), "f_to_zero": f_to_zero}
    if not stable:
        status = INCONCLUSIVE
    else:
        status = HOLD if (dominated and fa0[0] < 1 and f_to_zero) else FAIL
    return CriterionReport("Cor2", {"rho": 0.0, "K_max": K_max, "dominating": dominating.to_dict()},
                           None, status, implied_bound("Cor2", status), None, [], extra)


class StieltjesGridError(RuntimeError):
    pass


def stieltjes_step_integral(step: Callable, step_left: Callable, F: CdfModel, jumps: np.ndarray,
                            levels: int = 1024, mass_tol: float = 1e-13,
                            max_rounds: int = 80) -> float:
    """Riemann-Stieltjes sum of a right-continuous step function against ``dF`` on ``[0, inf)``.

    The grid starts at quantiles of ``F`` and cells in which the step function
    jumps are bisected until their ``F``-mass is below ``mass_tol``. Each cell
    ``[a, b)`` is tagged at ``a``; with ``F(x) = P{X < x}`` the cell mass is
    ``F(b) - F(a)``.
    """
    u = (np.arange(1, levels) / levels)
    q = np.asarray(F.quantile(u), dtype=float)
    lo = max(0.0, float(F.quantile(1e-15)))
    hi = float(F.quantile(1 - 1e-15))
    top = hi + max(1.0, abs(hi))
    grid = np.unique(np.concatenate([[0.0, lo], q[q >= 0], [hi, top]]))
    for _ in range(max_rounds):
        a, b = grid[:-1], grid[1:]
        mass = F.cdf(b) - F.cdf(a)
        jumping = step(a) != step_left(b)
        bad = jumping & (mass > mass_tol) & (b - a > np.spacing(b) * 4)
        if not bad.any():
            break
        grid = np.unique(np.concatenate([grid, 0.5 * (a[bad] + b[bad])]))
    else:
        raise StieltjesGridError("grid refinement did not converge")
    a, b = grid[:-1], grid[1:]
    mass = F.cdf(b) - F.cdf(a)
    total = float(np.sum(step(a) * mass))
    # mass at and beyond the last grid point
    total += float(step(grid[-1]) * (1.0 - F.cdf(grid[-1])))
    return total


def cor3_integral(F_b: CdfModel, coeff: CoefficientLaw, rho: float, K_max: int = 100_000,
                  policy: ClassifyPolicy = DEFAULT_POLICY) -> tuple[float, float, CriterionReport]:
    """Both routes to ``int_0^inf n_mu(t rho) dF_b(t)``.

    Sum route: ``sum_k 1 - F_b(mu_k / rho)``. Quadrature route: adaptive
    Riemann-Stieltjes sum of the counting function.
    """
    if not rho > 0:
        raise ValueError("Cor3 needs rho > 0")
    mu = _det_mu(coeff, K_max)
    terms = 1.0 - F_b.cdf(mu / rho)
    sum_route = float(np.sum(terms))
    pts = np.sort(mu / rho)

    def n_scaled(t):
        return np.searchsorted(pts, t, side="right")

    def n_scaled_left(t):
        return np.searchsorted(pts, t, side="left")

    quad_route = stieltjes_step_integral(n_scaled, n_scaled_left, F_b, pts)
    v = classify(terms, policy=policy)
    diff = abs(sum_route - quad_route)
    rep = CriterionReport("Cor3", {"rho": rho, "K_max": K_max, "F_b": F_b.to_dict()}, v, v.kind,
                          implied_bound("Cor3", v.kind), sum_route, [],
                          {"sum_route": sum_route, "quadrature_route": quad_route, "route_difference": diff})
    return sum_route, quad_route, rep


def cor4_monotone_check(draw: TrialDraw) -> bool:
    return bool(np.all(np.diff(draw.lambdas) >= 0))


def cor4_check(exp_law: IndexedLaw, coeff: CoefficientLaw, draws: Sequence[TrialDraw],
               delta_grid: Sequence[float] = PLUS_ZERO_GRID) -> CriterionReport:
    """Increasing exponents, ``F_0(+0) < 1`` and ``f_k -> 0``; conclusion sigma = 0."""
    monotone = [cor4_monotone_check(d) for d in draws]
    f00, stable = cdf_plus_zero(exp_law, np.zeros(1, dtype=int), delta_grid)
    K = max([d.K for d in draws] + [1024])
    f_to_zero, _ = _tends_to_zero(coeff, K)
    extra = {"monotone_fraction": (sum(monotone) / len(monotone)) if monotone else None,
             "F0_plus_zero": float(f00[0]), "f_to_zero": f_to_zero}
    if not stable or not draws:
        status = INCONCLUSIVE
    else:
        status = HOLD if (all(monotone) and f00[0] < 1 and f_to_zero) else FAIL
    return CriterionReport("Cor4", {"rho": 0.0}, None, status, implied_bound("Cor4", status), None, [], extra)


# --------------------------------------------------------------------------
# random coefficients, deterministic exponents
# --------------------------------------------------------------------------


def _random_mode(exp_law: IndexedLaw, coeff: CoefficientLaw, K: int) -> np.ndarray:
    if coeff.is_deterministic:
        raise ValueError("random-coefficient criteria need coefficient mode 'random_modulus'")
    return exp_law.values(K)


def _power_thresholds(base: np.ndarray, lam: np.ndarray) -> np.ndarray:
    if np.any(base < 0):
        raise ValueError("threshold base must be nonnegative")
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = np.power(base, lam)
    return out


def thm1_sum(coeff: CoefficientLaw, exp_law: IndexedLaw, rho: float, K_max: int = 100_000,
             part: str = "a", eps: float | None = None, delta: Any = None,
             policy: ClassifyPolicy = DEFAULT_POLICY) -> CriterionReport:
    """Random-coefficient criteria with thresholds ``(e^-rho + eps)^lambda_k`` (a)
    or ``delta_k^lambda_k`` (b)."""
    lam = _random_mode(exp_law, coeff, K_max)
    k = np.arange(K_max)
    if part == "a":
        eps = 0.1 if eps is None else float(eps)
        if not eps > 0:
            raise ValueError("Thm1a needs eps > 0")
        thr = _power_thresholds(np.full(K_max, math.exp(-rho) + eps), lam)
        return _report("Thm1a", {"rho": rho, "eps": eps, "K_max": K_max},
                       1.0 - coeff.modulus_cdf(k, thr), policy)
    if part != "b":
        raise ValueError("part must be 'a' or 'b'")
    d = _schedule(math.exp(-rho) if delta is None else delta, K_max)
    lim = tail_extremum(d, "liminf").value
    if not math.isclose(lim, math.exp(-rho), rel_tol=1e-6, abs_tol=1e-12):
        raise ValueError(f"liminf delta_k = {lim} does not match e^-rho = {math.exp(-rho)}")
    thr = _power_thresholds(d, lam)
    return _report("Thm1b", {"rho": rho, "delta": _label(delta, math.exp(-rho)), "K_max": K_max},
                   1.0 - coeff.modulus_cdf(k, thr), policy)


def _label(v: Any, default: float) -> Any:
    if v is None:
        return default
    return "callable" if callable(v) else float(v)


def thm2_sum(coeff: CoefficientLaw, exp_law: IndexedLaw, rho: float | None = None, K_max: int = 100_000,
             part: str = "a", eps_schedule: Any = None, E: float | None = None,
             policy: ClassifyPolicy = DEFAULT_POLICY) -> CriterionReport:
    """(a) ``sum 1 - F_k((e^-rho + eps_k)^lambda_k)`` sufficient for sigma >= rho;
    (b) ``sum 1 - F_k(E^lambda_k)`` necessary for sigma = -inf."""
    lam = _random_mode(exp_law, coeff, K_max)
    k = np.arange(K_max)
    if part == "a":
        if rho is None:
            raise ValueError("Thm2a needs rho")
        eps = _schedule(eps_schedule, K_max)
        thr = _power_thresholds(math.exp(-rho) + eps, lam)
        label = "1/ln(k+e)" if eps_schedule is None else _label(eps_schedule, 0.0)
        return _report("Thm2a", {"rho": rho, "eps_schedule": label, "K_max": K_max},
                       1.0 - coeff.modulus_cdf(k, thr), policy)
    if part != "b":
        raise ValueError("part must be 'a' or 'b'")
    E = 2.0 if E is None else float(E)
    if not E > 1:
        raise ValueError("Thm2b needs E > 1")
    thr = _power_thresholds(np.full(K_max, E), lam)
    return _report("Thm2b", {"rho": -math.inf, "E": E, "K_max": K_max},
                   1.0 - coeff.modulus_cdf(k, thr), policy)
