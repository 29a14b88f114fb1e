"""Acceptance criteria; each test prints one PASS/FAIL line and asserts."""

import json
import math
import statistics
import time

import numpy as np
import pytest

from dirichlet_lab import bc_criteria as bc
from dirichlet_lab.cli import main
from dirichlet_lab.dist_models import (
    CoefficientLaw, Degenerate, Exponential, LogNormal, Pareto, Scaled, Shifted, TrialDraw, Uniform,
    exponent_law, sample_trial,
)
from dirichlet_lab.experiment import (
    CONSISTENT, TENSION, ExperimentConfig, build_report, evaluate_criteria, reconcile, run_experiment,
    run_trial, run_trials,
)
from dirichlet_lab.tail_limits import alpha0, tau
from conftest import CANONICAL_EXPONENT, det_coeff, fixed_draw

CANON = {"exponent": CANONICAL_EXPONENT, "coefficient": {"mode": "deterministic", "neg_log": "k"}}


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def canonical_trials():
    cfg = ExperimentConfig.from_dict({**CANON, "K": 100_000, "trials": 50})
    t0 = time.perf_counter()
    recs = run_trials(cfg, workers=1)
    return cfg, recs, time.perf_counter() - t0


def test_1_deterministic_chain(verdict):
    cfg = ExperimentConfig.from_dict({"exponent": {"rule": "sequence", "value": "k"},
                                      "coefficient": {"mode": "deterministic", "neg_log": "k"}, "K": 10_000})
    t0 = time.perf_counter()
    r = run_trial(cfg, 0)
    dt = time.perf_counter() - t0
    ok = all(0.98 <= v <= 1.02 for v in (r.sigma_abs, r.sigma_conv, r.alpha0)) and 0 <= r.tau <= 0.01 and dt < 1
    verdict(1, ok, f"sigma_abs={r.sigma_abs:.4f} sigma_conv={r.sigma_conv:.4f} alpha0={r.alpha0:.4f} "
                   f"tau={r.tau:.5f} runtime={dt:.3f}s")


def test_2_tight_chain(verdict):
    cfg = ExperimentConfig.from_dict({"exponent": {"rule": "sequence", "value": "ln(k+2)"},
                                      "coefficient": {"mode": "deterministic", "neg_log": "2*ln(k+2)"},
                                      "K": 100_000})
    t0 = time.perf_counter()
    r = run_trial(cfg, 0)
    dt = time.perf_counter() - t0
    ok = (0.95 <= r.sigma_abs <= 1.05 and 1.95 <= r.alpha0 <= 2.05 and 0.98 <= r.tau <= 1.02
          and 0.48 <= r.h <= 0.52 and (1 - r.h) * r.alpha0 <= r.sigma_abs + 0.05 and dt < 5)
    verdict(2, ok, f"sigma_abs={r.sigma_abs:.4f} alpha0={r.alpha0:.4f} tau={r.tau:.4f} h={r.h:.4f} "
                   f"(1-h)alpha0={(1 - r.h) * r.alpha0:.4f} runtime={dt:.2f}s")


def test_3_monte_carlo_canonical(verdict, canonical_trials):
    _, recs, dt = canonical_trials
    s = [r.sigma_abs for r in recs]
    med = statistics.median(s)
    frac = sum(0.48 <= v <= 0.60 for v in s) / len(s)
    ok = 0.50 <= med <= 0.56 and frac >= 0.90 and dt < 60
    verdict(3, ok, f"median sigma_abs={med:.4f} fraction in [0.48,0.60]={frac:.2f} runtime={dt:.1f}s (N=50, K=1e5)")


def test_4a_thm4i_bracket(verdict, canonical_trials):
    cfg, recs, _ = canonical_trials
    t0 = time.perf_counter()
    rep = bc.thm4_sum(cfg.exponent, cfg.coefficient, 0.5, K_max=100_000)
    dt = time.perf_counter() - t0
    rec = reconcile(rep, [r.sigma_abs for r in recs], cfg.tol)
    ok = rep.status == "Convergent" and rep.implied_bound == bc.GE and rec.status == CONSISTENT and dt < 2
    verdict("4a", ok, f"Thm4i rho=0.5: {rep.status}, implied '{rep.implied_bound}', reconciliation "
                      f"{rec.status}, runtime={dt:.3f}s")


def test_4b_thm3i_refutation_at_fixed_eps(verdict, canonical_trials):
    cfg, recs, _ = canonical_trials
    t0 = time.perf_counter()
    rep = bc.thm3_upper_sum(cfg.exponent, cfg.coefficient, 0.75, 0.25, K_max=100_000)
    dt = time.perf_counter() - t0
    rec = reconcile(rep, [r.sigma_abs for r in recs], cfg.tol)
    ps = rep.term_trace
    late = (ps[-1][1] - ps[-2][1]) / (ps[-1][0] - ps[-2][0])
    ok = (rep.status == "Divergent" and rep.refuted_claim == "sigma >= rho" and abs(late - 1 / 3) < 0.01
          and rec.status == CONSISTENT and dt < 2)
    verdict("4b", ok, f"Thm3i rho=0.75 eps=0.25: {rep.status}, late mean term={late:.4f} "
                      f"(expected 1/3), implied '{rep.implied_bound}', reconciliation {rec.status}, "
                      f"runtime={dt:.3f}s")


def test_5_cor3_routes(verdict):
    coeff = det_coeff("(k+1)/10")
    t0 = time.perf_counter()
    s1, q1, _ = bc.cor3_integral(Uniform(0, 1), coeff, 1.0, 100_000)
    s2, q2, _ = bc.cor3_integral(Uniform(0, 1), coeff, 2.0, 100_000)
    dt = time.perf_counter() - t0
    ok = max(abs(s1 - 4.5), abs(q1 - 4.5), abs(s2 - 9.5), abs(q2 - 9.5)) <= 1e-6 and dt < 1
    verdict(5, ok, f"rho=1: sum={s1!r} quad={q1!r}; rho=2: sum={s2!r} quad={q2!r}; runtime={dt:.3f}s")


def test_6_property_suite(verdict, tmp_path):
    failures = []
    families = [Exponential(1.0), Uniform(0, 2), Pareto(1, 2), LogNormal(0, 1), Degenerate(5.0),
                Scaled(Exponential(2.0), 3.0), Shifted(Uniform(0, 1), 2.0)]
    x = np.linspace(-10, 60, 1000)
    for m in families:
        F = m.cdf(x)
        if not (np.all((F >= 0) & (F <= 1)) and np.all(np.diff(F) >= 0)):
            failures.append(f"cdf {m!r}")
    u = np.array([0.001] + [j / 100 for j in range(1, 100)] + [0.999])
    for m in families:
        if m.continuous and np.max(np.abs(m.cdf(m.quantile(u)) - u)) > 1e-9:
            failures.append(f"quantile {m!r}")
    cfg = ExperimentConfig.from_dict({**CANON, "K": 8192, "trials": 4})
    for t in range(4):
        d = sample_trial(cfg.exponent, cfg.coefficient, 0, t, 8192)
        for est in (alpha0(cfg.coefficient, d), tau(d)):
            vals = [v for _, v in est.window_trace]
            mono = np.all(np.diff(vals) >= 0) if est.kind == "liminf" else np.all(np.diff(vals) <= 0)
            if not mono:
                failures.append("window trace")
    base = fixed_draw("k + ln(k+1)", 4096)
    for c in (0.25, 2.0, 8.0):
        sc = TrialDraw.fixed(base.lambdas * c)
        if (alpha0(det_coeff("k"), sc).value != alpha0(det_coeff("k"), base).value / c
                or tau(sc).value != tau(base).value / c):
            failures.append(f"scale {c}")
    ecfg = ExperimentConfig.from_dict({**CANON, "K": 4096, "trials": 4, "criteria": ["thm4i", "thm3i"],
                                       "rho_grid": [0.5, 0.75]})
    run_experiment(ecfg, workers=1, out_dir=tmp_path / "a")
    run_experiment(ecfg, workers=2, out_dir=tmp_path / "b")
    for name in ("report.json", "trials.csv", "criteria.csv"):
        if (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes():
            failures.append(f"determinism {name}")
    crit = evaluate_criteria(ecfg)
    whole = build_report(ecfg, run_trials(ecfg, workers=1), crit).to_json()
    split = run_trials(ecfg, [3, 1], workers=1) + run_trials(ecfg, [2, 0], workers=1)
    if build_report(ecfg, split, crit).to_json() != whole:
        failures.append("merge invariance")
    verdict(6, not failures, "cdf bounds, quantile inversion, trace monotonicity, scale equivariance, "
                             f"seed determinism, merge invariance; failures={failures}")


def test_7_cor1_discrepancy(verdict, tmp_path, capsys):
    cfg = {"exponent": {"rule": "constant", "law": {"family": "exponential", "rate": 1}},
           "coefficient": {"mode": "deterministic", "neg_log": "k"}, "K": 10_000, "trials": 10,
           "criteria": ["cor1"]}
    path = tmp_path / "fast.json"
    path.write_text(json.dumps(cfg))
    code = main(["experiment", "--config", str(path), "--out", str(tmp_path / "out")])
    out, _ = capsys.readouterr()
    rep = json.loads(out)
    statuses = [r["status"] for r in rep["reconciliation"]]
    sent = rep["aggregates"]["sigma_abs"]["fraction_at_sentinel"]
    ok = code == 3 and statuses == [TENSION] and rep["criteria"][0]["implied_bound"] == bc.EQ
    verdict(7, ok, f"Cor1 claims sigma=0, estimates at +inf sentinel fraction={sent}, "
                   f"reconciliation={statuses}, exit code={code}")


def test_8_random_coefficient_thm1b(verdict):
    coeff = CoefficientLaw.from_dict(
        {"mode": "random_modulus", "law": {"family": "uniform", "a": 0, "b": 1}})
    law = exponent_law({"rule": "sequence", "value": "k"})
    K = 10_000
    t0 = time.perf_counter()
    rep = bc.thm1_sum(coeff, law, -math.log(0.9), K, "b", delta=0.9)
    dt = time.perf_counter() - t0
    closed = K - (1 - 0.9 ** K) / (1 - 0.9)
    err = abs(rep.partial_sum_at_K - closed)
    ok = (rep.status == "Divergent" and rep.implied_bound == bc.LE and abs(rep.rho + math.log(0.9)) < 1e-15
          and err <= 1e-6 and dt < 1)
    verdict(8, ok, f"Thm1b delta=0.9: {rep.status}, implied sigma <= {rep.rho:.6f}, partial sum "
                   f"{rep.partial_sum_at_K!r} vs closed form {closed!r} (diff {err:.2e}), runtime={dt:.3f}s")
