"""Monte Carlo harness: trials, criterion evaluation, reconciliation, persistence."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import bc_criteria as bc
from .dist_models import CdfModel, CoefficientLaw, ExponentLaw, LawError, exponent_law, sample_trial
from .extreal import fmt, from_json, parse, to_json
from .series_engine import CONSERVATIVE_DOWN, OPTIMISTIC, sigma_abs, sigma_conv
from .tail_limits import DEFAULT_WINDOWS, EstimationError, alpha0, coef_condition, h_coeff, tau

CONSISTENT = "Consistent"
TENSION = "Tension"
INCONCLUSIVE = "Inconclusive"

TRIALS_HEADER = ["trial", "sigma_abs", "sigma_conv", "alpha0", "tau", "h", "trend_alpha0", "errors"]
CRITERIA_HEADER = ["criterion", "rho", "eps_policy", "verdict", "implied_bound", "partial_sum_at_K"]
QUANTITIES = ("sigma_abs", "sigma_conv", "alpha0", "tau", "h")

_CRITERION_IDS = {c.lower(): c for c in bc.CRITERIA}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    exponent: ExponentLaw
    coefficient: CoefficientLaw
    K: int = 10_000
    trials: int = 1
    master_seed: int = 0
    x_range: tuple[float, float] = (-50.0, 50.0)
    tol: float = 0.01
    windows: tuple[float, ...] = DEFAULT_WINDOWS
    rho_grid: tuple[float, ...] = ()
    eps_policy: str | float = "grid"
    criteria: tuple[str, ...] = ()
    aux_law: CdfModel | None = None
    E: float = 2.0
    criteria_K: int | None = None
    inconclusive_policy: str = CONSERVATIVE_DOWN
    consistent_fraction: float = 0.95
    tension_fraction: float = 0.5
    output_dir: str | None = None

    def __post_init__(self):
        if self.K < 16:
            raise ConfigError("K must be >= 16")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not (0 <= self.master_seed < 2 ** 64):
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if any(b <= a for a, b in zip(self.rho_grid, self.rho_grid[1:])):
            raise ConfigError("rho_grid must be strictly increasing")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.x_range[0] < self.x_range[1]:
            raise ConfigError("x_range must satisfy lo < hi")
        if self.inconclusive_policy not in (CONSERVATIVE_DOWN, OPTIMISTIC):
            raise ConfigError(f"unknown inconclusive_policy {self.inconclusive_policy!r}")
        if isinstance(self.eps_policy, str) and self.eps_policy not in ("grid", "half"):
            raise ConfigError("eps_policy must be 'grid', 'half' or a number")
        for c in self.criteria:
            if c not in bc.CRITERIA:
                raise ConfigError(f"unknown criterion {c!r}")
        if not (0 < self.tension_fraction <= 1 and 0 < self.consistent_fraction <= 1):
            raise ConfigError("reconciliation fractions must lie in (0, 1]")
        if ("Cor2" in self.criteria or "Cor3" in self.criteria) and self.aux_law is None:
            raise ConfigError("Cor2/Cor3 need 'aux_law'")

    @property
    def criteria_k_max(self) -> int:
        return self.criteria_K or self.K

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent.to_dict(),
            "coefficient": self.coefficient.to_dict(),
            "K": self.K,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "x_range": list(self.x_range),
            "tol": self.tol,
            "windows": list(self.windows),
            "rho_grid": list(self.rho_grid),
            "eps_policy": self.eps_policy,
            "criteria": [c.lower() for c in self.criteria],
            "aux_law": None if self.aux_law is None else self.aux_law.to_dict(),
            "E": self.E,
            "criteria_K": self.criteria_K,
            "inconclusive_policy": self.inconclusive_policy,
            "consistent_fraction": self.consistent_fraction,
            "tension_fraction": self.tension_fraction,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for req in ("exponent", "coefficient"):
            if req not in d:
                raise ConfigError(f"config is missing {req!r}")
        try:
            kw: dict[str, Any] = {
                "exponent": exponent_law(d["exponent"]),
                "coefficient": CoefficientLaw.from_dict(d["coefficient"]),
            }
            for name in ("K", "trials", "master_seed"):
                if name in d:
                    kw[name] = _int(d[name], name)
            if d.get("criteria_K") is not None:
                kw["criteria_K"] = _int(d["criteria_K"], "criteria_K")
            for name in ("tol", "E", "consistent_fraction", "tension_fraction"):
                if name in d:
                    kw[name] = float(d[name])
            if "x_range" in d:
                xr = tuple(float(v) for v in d["x_range"])
                if len(xr) != 2:
                    raise ConfigError("x_range must have two entries")
                kw["x_range"] = xr
            if "windows" in d:
                kw["windows"] = tuple(float(v) for v in d["windows"])
            if "rho_grid" in d:
                kw["rho_grid"] = tuple(float(v) for v in d["rho_grid"])
            if "eps_policy" in d:
                ep = d["eps_policy"]
                kw["eps_policy"] = ep if isinstance(ep, str) else float(ep)
            if "criteria" in d:
                kw["criteria"] = tuple(_criterion_id(c) for c in d["criteria"])
            if d.get("aux_law") is not None:
                kw["aux_law"] = CdfModel.from_dict(d["aux_law"])
            if "inconclusive_policy" in d:
                kw["inconclusive_policy"] = str(d["inconclusive_policy"])
            if d.get("output_dir") is not None:
                kw["output_dir"] = str(d["output_dir"])
        except ConfigError:
            raise
        except (LawError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        return cls(**kw)

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentConfig.from_dict(d)


def _int(v: Any, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{name} must be an integer")
    return int(v)


def _criterion_id(name: str) -> str:
    try:
        return _CRITERION_IDS[str(name).lower()]
    except KeyError:
        raise ConfigError(f"unknown criterion {name!r}; expected one of {list(bc.CRITERIA)}") from None


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(data)


# --------------------------------------------------------------------------
# trials
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    sigma_abs: float
    sigma_conv: float
    alpha0: float
    tau: float
    h: float
    trend_alpha0: str
    errors: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {"trial": self.trial}
        for q in QUANTITIES:
            d[q] = to_json(getattr(self, q))
        d["trend_alpha0"] = self.trend_alpha0
        d["errors"] = list(self.errors)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        return cls(int(d["trial"]), *(from_json(d[q]) for q in QUANTITIES), d["trend_alpha0"],
                   tuple(d["errors"]))

    def csv_row(self) -> list[str]:
        return [str(self.trial)] + [fmt(getattr(self, q)) for q in QUANTITIES] + \
               [self.trend_alpha0, ";".join(self.errors)]


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialRecord:
    """All estimates for one trial; estimator failures are recorded, not raised."""
    draw = sample_trial(config.exponent, config.coefficient, config.master_seed, trial_index, config.K)
    errors: list[str] = []
    out: dict[str, float] = {}
    trend = ""

    def attempt(name, fn):
        try:
            return fn()
        except (EstimationError, ValueError, LawError) as exc:
            errors.append(f"{name}: {exc}")
            return None

    coeff = config.coefficient
    est = attempt("sigma_abs", lambda: sigma_abs(coeff, draw, config.x_range, config.tol,
                                                 inconclusive_policy=config.inconclusive_policy))
    out["sigma_abs"] = est.value if est else math.nan
    est = attempt("sigma_conv", lambda: sigma_conv(coeff, draw, config.x_range, config.tol,
                                                   inconclusive_policy=config.inconclusive_policy))
    out["sigma_conv"] = est.value if est else math.nan
    est = attempt("alpha0", lambda: alpha0(coeff, draw, config.windows))
    out["alpha0"] = est.value if est else math.nan
    trend = est.trend if est else ""
    est = attempt("tau", lambda: tau(draw, config.windows))
    out["tau"] = est.value if est else math.nan
    est = attempt("h", lambda: h_coeff(coeff, config.K, config.windows, draw=draw))
    out["h"] = est.value if est else math.nan
    return TrialRecord(trial_index, out["sigma_abs"], out["sigma_conv"], out["alpha0"], out["tau"],
                       out["h"], trend, tuple(errors))


def _run_chunk(args: tuple[dict, list[int]]) -> list[TrialRecord]:
    cfg, idx = args
    config = ExperimentConfig.from_dict(cfg)
    return [run_trial(config, i) for i in idx]


def default_workers() -> int:
    env = os.environ.get("DAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("DAL_THREADS must be a positive integer") from None
    return os.cpu_count() or 1


def run_trials(config: ExperimentConfig, indices: Iterable[int] | None = None,
               workers: int | None = None) -> list[TrialRecord]:
    """Run the given trial indices (default all) and return records sorted by index."""
    idx = sorted(set(range(config.trials) if indices is None else indices))
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or len(idx) < 2:
        recs = [run_trial(config, i) for i in idx]
    else:
        chunks = [idx[j::workers] for j in range(workers) if idx[j::workers]]
        cfg = config.to_dict()
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            recs = [r for part in pool.map(_run_chunk, [(cfg, c) for c in chunks]) for r in part]
    return sorted(recs, key=lambda r: r.trial)


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------


def _eps_values(config: ExperimentConfig, cid: str, rho: float) -> list[float]:
    pol = config.eps_policy
    base = rho if cid == "Thm3i" else 1.0
    if pol == "grid":
        return bc.eps_grid(base)
    if pol == "half":
        return [base / 2]
    return [float(pol)]


def _eps_label(config: ExperimentConfig, cid: str) -> str:
    if cid in ("Thm3i", "Thm3ii", "Thm1a"):
        return str(config.eps_policy)
    if cid in ("Thm4i", "Thm4ii", "Thm2a"):
        return "1/ln(k+e)"
    return ""


def evaluate_criteria(config: ExperimentConfig, rho_grid: Sequence[float] | None = None,
                      criteria: Sequence[str] | None = None) -> list[bc.CriterionReport]:
    """Evaluate configured criteria on the law-level CDFs across the rho grid."""
    grid = list(config.rho_grid if rho_grid is None else rho_grid)
    ids = list(config.criteria if criteria is None else criteria)
    e, c, Km = config.exponent, config.coefficient, config.criteria_k_max
    out: list[bc.CriterionReport] = []

    def necessary(fn, cid, rho):
        reps = [fn(eps) for eps in _eps_values(config, cid, rho)]
        return reps[0] if len(reps) == 1 else bc._combine_necessary(reps, "eps_grid",
                                                                    [r.params["eps"] for r in reps])

    for cid in ids:
        if cid == "Cor1":
            out.append(bc.cor1_check(e, c, Km))
            continue
        if cid == "Cor2":
            out.append(bc.cor2_check(e, c, config.aux_law, K_max=min(Km, 2000)))
            continue
        if cid == "Cor4":
            draws = [sample_trial(e, c, config.master_seed, i, config.K) for i in range(config.trials)]
            out.append(bc.cor4_check(e, c, draws))
            continue
        if cid == "Thm2b":
            out.append(bc.thm2_sum(c, e, None, Km, "b", E=config.E))
            continue
        for rho in grid:
            if cid == "Thm3i" and rho > 0:
                eps = [x for x in _eps_values(config, cid, rho) if 0 < x < rho]
                if not eps:
                    raise ConfigError(f"eps_policy gives no eps in (0, {rho}) for Thm3i")
                reps = [bc.thm3_upper_sum(e, c, rho, x, Km) for x in eps]
                out.append(reps[0] if len(reps) == 1 else bc._combine_necessary(reps, "eps_grid", eps))
            elif cid == "Thm3ii" and rho <= 0:
                out.append(necessary(lambda x: bc.thm3_lower_sum(e, c, rho, x, Km), cid, rho))
            elif cid == "Thm4i" and rho > 0:
                out.append(bc.thm4_sum(e, c, rho, None, Km, "upper"))
            elif cid == "Thm4ii" and rho <= 0:
                out.append(bc.thm4_sum(e, c, rho, None, Km, "lower"))
            elif cid == "Remark3" and rho >= 0:
                out.append(bc.remark3_sum(e, c, rho, Km))
            elif cid == "Cor3" and rho > 0:
                out.append(bc.cor3_integral(config.aux_law, c, rho, Km)[2])
            elif cid == "Thm1a":
                out.append(necessary(lambda x: bc.thm1_sum(c, e, rho, Km, "a", eps=x), cid, rho))
            elif cid == "Thm1b":
                out.append(bc.thm1_sum(c, e, rho, Km, "b"))
            elif cid == "Thm2a":
                out.append(bc.thm2_sum(c, e, rho, Km, "a"))
    return out


# --------------------------------------------------------------------------
# reconciliation
# --------------------------------------------------------------------------


def _claim_check(rep: bc.CriterionReport, slack: float):
    """(claim text, predicate on an estimate) for what the report asserts, or None."""
    rho = rep.rho
    b = rep.implied_bound
    if b == bc.GE:
        return f"sigma >= {rho:g}", lambda s: s >= rho - slack
    if b == bc.LE:
        return f"sigma <= {rho:g}", lambda s: s <= rho + slack
    if b == bc.EQ:
        return f"sigma = {rho:g}", lambda s: abs(s - rho) <= slack
    if b == bc.NEC_FAILS:
        claim = rep.refuted_claim
        if claim == "sigma >= rho":
            return f"not sigma >= {rho:g}", lambda s: s < rho + slack
        if claim == "sigma > rho":
            return f"not sigma > {rho:g}", lambda s: s <= rho + slack
        if claim == "0 >= sigma >= rho":
            return f"not 0 >= sigma >= {rho:g}", lambda s: s > slack or s < rho - slack
        if claim == "sigma = -inf":
            return "sigma > -inf", lambda s: s > -math.inf
    return None


@dataclass(frozen=True)
class Reconciliation:
    criterion: str
    rho: float
    implied_bound: str
    claim: str | None
    satisfied_fraction: float | None
    violated_fraction: float | None
    status: str

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "rho": to_json(self.rho),
            "implied_bound": self.implied_bound,
            "claim": self.claim,
            "satisfied_fraction": to_json(self.satisfied_fraction),
            "violated_fraction": to_json(self.violated_fraction),
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Reconciliation":
        return cls(d["criterion"], from_json(d["rho"]), d["implied_bound"], d["claim"],
                   from_json(d["satisfied_fraction"]), from_json(d["violated_fraction"]), d["status"])


def reconcile(rep: bc.CriterionReport, estimates: Sequence[float], tol: float,
              consistent_fraction: float = 0.95, tension_fraction: float = 0.5) -> Reconciliation:
    """Compare the bound a criterion implies with per-trial abscissa estimates.

    Consistent iff at least ``consistent_fraction`` of estimates satisfy it
    within ``3 * tol``; Tension iff at least ``tension_fraction`` violate it.
    Sentinels take part as +/-inf; failed estimates (NaN) count as neither.
    """
    cc = _claim_check(rep, 3 * tol)
    if cc is None or not estimates:
        return Reconciliation(rep.criterion_id, rep.rho, rep.implied_bound, None, None, None, INCONCLUSIVE)
    claim, ok = cc
    n = len(estimates)
    sat = sum(1 for s in estimates if not math.isnan(s) and ok(s))
    vio = sum(1 for s in estimates if not math.isnan(s) and not ok(s))
    fs, fv = sat / n, vio / n
    if fs >= consistent_fraction:
        status = CONSISTENT
    elif fv >= tension_fraction:
        status = TENSION
    else:
        status = INCONCLUSIVE
    return Reconciliation(rep.criterion_id, rep.rho, rep.implied_bound, claim, fs, fv, status)


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------


def _quantile(sorted_vals: list[float], q: float) -> float:
    # nearest-rank keeps sentinels intact (no inf - inf interpolation)
    n = len(sorted_vals)
    return sorted_vals[min(n - 1, max(0, math.ceil(q * n) - 1))]


def aggregate(values: Sequence[float]) -> dict:
    v = sorted(x for x in values if not math.isnan(x))
    n_all = len(values)
    if not v:
        return {"median": None, "iqr": None, "min": None, "max": None, "fraction_at_sentinel": None,
                "n": 0}
    q1, q3 = _quantile(v, 0.25), _quantile(v, 0.75)
    with np.errstate(invalid="ignore"):
        iqr = q3 - q1 if not (math.isinf(q1) and q1 == q3) else 0.0
    return {
        "median": to_json(_quantile(v, 0.5)),
        "iqr": to_json(iqr),
        "min": to_json(v[0]),
        "max": to_json(v[-1]),
        "fraction_at_sentinel": sum(1 for x in v if math.isinf(x)) / n_all,
        "n": len(v),
    }


@dataclass
class ExperimentReport:
    config: dict
    trials: list[TrialRecord]
    aggregates: dict
    criteria: list[bc.CriterionReport]
    reconciliation: list[Reconciliation]
    constancy: dict
    coef_condition: dict | None = None

    @property
    def has_tension(self) -> bool:
        return any(r.status == TENSION for r in self.reconciliation)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "trials": [t.to_dict() for t in self.trials],
            "aggregates": self.aggregates,
            "criteria": [c.to_dict() for c in self.criteria],
            "reconciliation": [r.to_dict() for r in self.reconciliation],
            "constancy": self.constancy,
            "coef_condition": self.coef_condition,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(d["config"], [TrialRecord.from_dict(t) for t in d["trials"]], d["aggregates"],
                   [bc.CriterionReport.from_dict(c) for c in d["criteria"]],
                   [Reconciliation.from_dict(r) for r in d["reconciliation"]], d["constancy"],
                   d.get("coef_condition"))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls.from_dict(json.loads(text))

    def trials_csv(self) -> str:
        return trials_to_csv(self.trials)

    def criteria_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CRITERIA_HEADER)
        eps_by = self.config.get("eps_policy", "")
        for c in self.criteria:
            label = c.params.get("eps_schedule", c.params.get("eps", ""))
            if c.criterion_id in ("Thm3i", "Thm3ii", "Thm1a"):
                label = eps_by
            w.writerow([c.criterion_id, fmt(c.rho), label if isinstance(label, str) else fmt(label),
                        c.status, c.implied_bound, fmt(c.partial_sum_at_K)])
        return buf.getvalue()

    def write(self, out_dir: str | os.PathLike) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "report.json": self.to_json(),
            "trials.csv": self.trials_csv(),
            "criteria.csv": self.criteria_csv(),
        }
        paths = []
        for name, text in files.items():
            p = out / name
            p.write_text(text, encoding="utf-8")
            paths.append(p)
        return paths


def trials_to_csv(trials: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIALS_HEADER)
    for t in trials:
        w.writerow(t.csv_row())
    return buf.getvalue()


def trials_from_csv(text: str) -> list[TrialRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != TRIALS_HEADER:
        raise ValueError("unexpected trials.csv header")
    out = []
    for r in rows[1:]:
        vals = [parse(x) for x in r[1:6]]
        out.append(TrialRecord(int(r[0]), *[math.nan if v is None else v for v in vals], r[6],
                               tuple(e for e in r[7].split(";") if e)))
    return out


def build_report(config: ExperimentConfig, records: Sequence[TrialRecord],
                 criteria: Sequence[bc.CriterionReport]) -> ExperimentReport:
    """Order-canonical aggregation: records are sorted by trial index first."""
    recs = sorted(records, key=lambda r: r.trial)
    aggs = {q: aggregate([getattr(r, q) for r in recs]) for q in QUANTITIES}
    est = [r.sigma_abs for r in recs]
    recon = [reconcile(c, est, config.tol, config.consistent_fraction, config.tension_fraction)
             for c in criteria]
    coef = None
    if config.coefficient.is_deterministic:
        holds, ce = coef_condition(config.coefficient, config.K, config.windows)
        coef = {"holds": holds, "estimate": ce.to_dict()}
    constancy = {"sigma_abs_iqr": aggs["sigma_abs"]["iqr"], "n_trials": len(recs)}
    return ExperimentReport(config.to_dict(), list(recs), aggs, list(criteria), recon, constancy, coef)


def run_experiment(config: ExperimentConfig, workers: int | None = None,
                   out_dir: str | os.PathLike | None = None) -> ExperimentReport:
    records = run_trials(config, workers=workers)
    report = build_report(config, records, evaluate_criteria(config))
    target = out_dir if out_dir is not None else config.output_dir
    if target is not None:
        report.write(target)
    return report


@dataclass
class SweepResult:
    rows: list[dict]
    established: float | None
    refuted: float | None

    @property
    def has_tension(self) -> bool:
        return any(r["reconciliation"] == TENSION for r in self.rows)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "established": to_json(self.established), "refuted": to_json(self.refuted)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["criterion", "rho", "verdict", "implied_bound", "reconciliation"])
        for r in self.rows:
            w.writerow([r["criterion"], fmt(from_json(r["rho"])), r["verdict"], r["implied_bound"],
                        r["reconciliation"]])
        return buf.getvalue()


def sweep(config: ExperimentConfig, rho_grid: Sequence[float] | None = None,
          records: Sequence[TrialRecord] | None = None, workers: int | None = None) -> SweepResult:
    """Criteria across the rho grid plus the bracketing summary.

    ``established`` is the largest rho with a sufficient criterion giving
    sigma >= rho; ``refuted`` the smallest rho at which a necessary condition
    for sigma >= rho fails.
    """
    grid = list(config.rho_grid if rho_grid is None else rho_grid)
    reps = evaluate_criteria(config, grid)
    if not reps:
        return SweepResult([], None, None)
    if records is None:
        records = run_trials(config, workers=workers)
    est = [r.sigma_abs for r in sorted(records, key=lambda r: r.trial)]
    rows, established, refuted = [], None, None
    for rep in reps:
        rec = reconcile(rep, est, config.tol, config.consistent_fraction, config.tension_fraction)
        rows.append({"criterion": rep.criterion_id, "rho": to_json(rep.rho), "verdict": rep.status,
                     "implied_bound": rep.implied_bound, "reconciliation": rec.status})
        if rep.implied_bound in (bc.GE, bc.EQ) and math.isfinite(rep.rho):
            established = rep.rho if established is None else max(established, rep.rho)
        if rep.implied_bound == bc.NEC_FAILS and rep.refuted_claim == "sigma >= rho":
            refuted = rep.rho if refuted is None else min(refuted, rep.rho)
    return SweepResult(rows, established, refuted)


def chain_violations(rec: TrialRecord, tol: float) -> list[str]:
    """Check ``sigma_abs <= sigma_conv <= alpha0 <= sigma_abs + tau`` within ``3 * tol``.

    NaN entries (failed estimators) are skipped; sentinels compare as +/-inf.
    """
    slack = 3 * tol
    out = []

    def le(a, b, label):
        if math.isnan(a) or math.isnan(b):
            return
        if a == b or a <= b + slack:
            return
        out.append(label)

    le(rec.sigma_abs, rec.sigma_conv, "sigma_abs <= sigma_conv")
    le(rec.sigma_conv, rec.alpha0, "sigma_conv <= alpha0")
    if not (math.isinf(rec.sigma_abs) and math.isinf(rec.tau) and rec.sigma_abs != rec.tau):
        le(rec.alpha0, rec.sigma_abs + rec.tau, "alpha0 <= sigma_abs + tau")
    return out
