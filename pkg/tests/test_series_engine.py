import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirichlet_lab.dist_models import TrialDraw
from dirichlet_lab.series_engine import (
    CONDENSED_NONDECREASING, CONSERVATIVE_DOWN, CONVERGENT, DIVERGENT, EVENTUALLY_ZERO, INCONCLUSIVE,
    OPTIMISTIC, SUM_CAP, TERMS_NOT_VANISHING, SeriesVerdict, bisect_abscissa, cauchy_verdict, classify,
    prop1_lower_bound, sigma_abs, sigma_conv, zad_condition,
)
from dirichlet_lab.tail_limits import alpha0, coef_condition, tau
from conftest import det_coeff, fixed_draw

k = np.arange(100_000, dtype=float)


def test_geometric_is_convergent():
    v = classify(2.0 ** -np.arange(200.0))
    assert v.kind == CONVERGENT


def test_harmonic_is_divergent():
    v = classify(1 / (k + 1))
    assert v.kind == DIVERGENT and v.rationale == CONDENSED_NONDECREASING


def test_bertrand_series_is_convergent():
    # sum 1/((k+2) ln^2(k+2)) converges (integral test); the condensed block sums decay
    v = classify(1 / ((k + 2) * np.log(k + 2) ** 2))
    assert v.kind == CONVERGENT


def test_power_slopes():
    assert classify((k + 1) ** -1.5).kind == CONVERGENT
    assert classify((k + 1) ** -0.5).kind == DIVERGENT


def test_rules_eventually_zero_cap_and_nonvanishing():
    t = np.r_[np.ones(50), np.zeros(50)]
    assert classify(t).rationale == EVENTUALLY_ZERO
    assert classify(np.full(100, 1e11)).rationale == SUM_CAP
    assert classify(np.full(100, 0.3)).rationale == TERMS_NOT_VANISHING


def test_negative_terms_rejected():
    with pytest.raises(ValueError):
        classify(np.r_[np.ones(20), -1.0])
    with pytest.raises(ValueError):
        classify(np.ones(8))


def test_partial_sum_trace_and_round_trip():
    v = classify(2.0 ** -np.arange(200.0))
    assert v.partial_sums[-1][0] == 200
    assert v.partial_sums[-1][1] == pytest.approx(2.0)
    assert SeriesVerdict.from_dict(v.to_dict()) == v


def test_log_terms_entry_avoids_overflow():
    lt = -(k[:2000] ** 2) + 50 * k[:2000]
    assert classify(log_terms=lt).kind == CONVERGENT


def test_sigma_abs_examples():
    d = fixed_draw("k", 10_000)
    assert abs(sigma_abs(det_coeff("k"), d, tol=0.02).value - 1) <= 0.02
    assert abs(sigma_abs(det_coeff("0"), d, tol=0.02).value) <= 0.02
    assert sigma_abs(det_coeff("k^2"), d).value == math.inf


def test_sigma_conv_examples():
    d = fixed_draw("ln(k+2)", 100_000)
    assert abs(sigma_conv(det_coeff("2*ln(k+2)"), d).value - 1) <= 0.05
    d = fixed_draw("k", 10_000)
    a, c = sigma_abs(det_coeff("k"), d), sigma_conv(det_coeff("k"), d)
    assert a.value == c.value and abs(c.value - 1) <= 0.02


def test_sigma_conv_alternating_signs():
    # sum (-1)^k e^{x ln(k+2)} / (k+2): conditionally convergent for x < 1, absolutely for x < 0
    d = fixed_draw("ln(k+2)", 100_000)
    coeff = det_coeff("ln(k+2)")
    signs = np.where(np.arange(100_000) % 2 == 0, 1.0, -1.0)
    absolute = sigma_abs(coeff, d).value
    assert abs(absolute) <= 0.05
    # the Cauchy threshold is strict, so only sigma_abs <= sigma_conv is guaranteed
    assert sigma_conv(coeff, d, signs=signs).value >= absolute


def test_bisection_bracket_invariant():
    est = sigma_abs(det_coeff("k"), fixed_draw("k", 10_000))
    lo, hi = est.bracket
    assert hi - lo <= 0.01 and est.value == hi
    assert est.verdicts_at_bracket[0].kind == CONVERGENT
    assert est.verdicts_at_bracket[1].kind != CONVERGENT


def test_inconclusive_policy_is_applied():
    def probe(x):
        kind = CONVERGENT if x < 0 else (INCONCLUSIVE if x < 1 else DIVERGENT)
        return SeriesVerdict(kind, [], None, "stub")
    assert bisect_abscissa(probe, inconclusive_policy=CONSERVATIVE_DOWN).value == pytest.approx(0, abs=0.011)
    assert bisect_abscissa(probe, inconclusive_policy=OPTIMISTIC).value == pytest.approx(1, abs=0.011)
    with pytest.raises(ValueError):
        bisect_abscissa(probe, inconclusive_policy="Whatever")


def test_tight_chain_instance():
    d = fixed_draw("ln(k+2)", 100_000)
    coeff = det_coeff("2*ln(k+2)")
    s = sigma_abs(coeff, d).value
    a = alpha0(coeff, d).value
    t = tau(d).value
    assert s <= sigma_conv(coeff, d).value + 0.01
    assert sigma_conv(coeff, d).value <= a + 0.01
    assert a <= s + t + 0.02


@pytest.mark.parametrize("expr", ["k", "k^1.5", "k*ln(k+e)"])
def test_sigma_matches_alpha0_when_coefficient_condition_holds(expr):
    coeff = det_coeff(expr)
    d = fixed_draw("k", 10_000)
    ok, _ = coef_condition(coeff, 10_000)
    assert ok
    s, a = sigma_abs(coeff, d).value, alpha0(coeff, d).value
    assert s == a or abs(s - a) <= 0.02


def test_verdict_monotone_in_exponents():
    coeff = det_coeff("k")
    small = fixed_draw("k", 4096)
    large = TrialDraw.fixed(small.lambdas * 1.5)
    order = {CONVERGENT: 0, INCONCLUSIVE: 1, DIVERGENT: 2}
    for x in (0.3, 0.66, 0.8, 1.2):
        a = classify(log_terms=-coeff.neg_log_values(4096) + x * small.lambdas).kind
        b = classify(log_terms=-coeff.neg_log_values(4096) + x * large.lambdas).kind
        assert order[b] >= order[a]


def test_zad_examples():
    d = fixed_draw("k", 10_000)
    c = det_coeff("k")
    assert zad_condition(c, d, 2, 0).kind == DIVERGENT
    assert zad_condition(c, d, 2, 2).kind == CONVERGENT
    assert zad_condition(c, d, 0.5, 0).kind == CONVERGENT


def test_prop1_examples():
    conv = SeriesVerdict(CONVERGENT, [], None, "x")
    div = SeriesVerdict(DIVERGENT, [], None, "x")
    assert prop1_lower_bound(1.0, 2.0, 2.0, conv) == 0.0
    assert prop1_lower_bound(1.0, 2.0, 2.0, div) is None
    assert prop1_lower_bound(math.inf, 1.0, 0.0, conv) == math.inf
    with pytest.raises(ValueError):
        prop1_lower_bound(1.0, 0.0, 0.0, conv)


def test_cauchy_verdict():
    t = np.where(np.arange(10_000) % 2 == 0, 1.0, -1.0) / (np.arange(10_000) + 1.0) ** 2
    assert cauchy_verdict(t).kind == CONVERGENT
    assert cauchy_verdict(np.where(np.arange(1000) % 2 == 0, 1.0, -1.0)).kind == DIVERGENT


def test_determinism():
    d = fixed_draw("ln(k+2)", 20_000)
    assert sigma_abs(det_coeff("2*ln(k+2)"), d) == sigma_abs(det_coeff("2*ln(k+2)"), d)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 5.0))
def test_geometric_rate_recovered(rate):
    # f_k = e^{-rate k}, lambda_k = k: sigma_abs = rate
    est = sigma_abs(det_coeff(f"{rate!r}*k"), fixed_draw("k", 4096))
    assert abs(est.value - rate) <= 0.03
