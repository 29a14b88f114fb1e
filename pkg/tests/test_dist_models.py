import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from dirichlet_lab.dist_models import (
    CdfModel, CoefficientLaw, Degenerate, Exponential, IndexedLaw, LawError, LogNormal, Pareto,
    Scaled, Shifted, TrialDraw, Uniform, cdf_eval, exponent_law, keyed_uniforms, pairwise_uniforms,
    quantile, sample_trial,
)
from conftest import CANONICAL_EXPONENT, det_coeff

FAMILIES = [
    Exponential(1.0), Exponential(2.5), Uniform(0.0, 2.0), Uniform(-1.0, 3.0), Pareto(1.0, 2.0),
    Pareto(0.5, 0.7), LogNormal(0.0, 1.0), LogNormal(1.0, 0.3), Degenerate(5.0),
    Scaled(Exponential(1.0), 3.0), Shifted(Uniform(0.0, 1.0), 2.0), Scaled(Degenerate(2.0), 0.5),
]
CONTINUOUS = [m for m in FAMILIES if m.continuous]
U_GRID = np.array([0.001] + [j / 100 for j in range(1, 100)] + [0.999])


def test_cdf_examples():
    assert cdf_eval(Exponential(1.0), 0.0) == 0.0
    assert cdf_eval(Uniform(0, 2), 1.0) == 0.5
    assert cdf_eval(Degenerate(5), 5.0) == 0.0
    assert cdf_eval(Degenerate(5), 5.000001) == 1.0


def test_quantile_examples():
    assert quantile(Uniform(0, 2), 0.25) == 0.5
    assert quantile(Exponential(2), 1 - math.exp(-2)) == pytest.approx(1.0, abs=1e-12)
    assert quantile(Degenerate(3), 0.7) == 3.0


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_quantile_domain(u):
    with pytest.raises(ValueError):
        quantile(Uniform(0, 1), u)


@pytest.mark.parametrize("bad", [
    lambda: Exponential(0.0), lambda: Exponential(-1.0), lambda: Uniform(1.0, 1.0),
    lambda: Pareto(0.0, 1.0), lambda: Pareto(1.0, -2.0), lambda: LogNormal(0.0, 0.0),
    lambda: Scaled(Uniform(0, 1), 0.0), lambda: Exponential(math.nan),
])
def test_invalid_parameters_fail_at_construction(bad):
    with pytest.raises(LawError):
        bad()


@pytest.mark.parametrize("model", FAMILIES, ids=repr)
def test_cdf_monotone_and_bounded_on_grid(model):
    x = np.linspace(-10, 60, 1000)
    F = model.cdf(x)
    assert np.all((F >= 0) & (F <= 1))
    assert np.all(np.diff(F) >= 0)
    assert model.cdf(-1e300) == 0.0 and model.cdf(1e300) == 1.0


@pytest.mark.parametrize("model", CONTINUOUS, ids=repr)
def test_quantile_inversion(model):
    assert np.max(np.abs(model.cdf(model.quantile(U_GRID)) - U_GRID)) <= 1e-9


@pytest.mark.parametrize("model", CONTINUOUS, ids=repr)
def test_ks_smoke(model):
    u = keyed_uniforms(2024, 0, 10_000)
    sample = model.quantile(u)
    assert stats.kstest(sample, model.cdf).statistic <= 0.03


def test_left_continuity_at_atoms():
    law = exponent_law({"rule": "sequence", "value": "k"})
    k = np.arange(5)
    assert np.all(law.cdf(k, k) == 0.0)
    assert np.all(law.cdf(k, k + 1e-9) == 1.0)


@given(st.sampled_from(FAMILIES), st.floats(-50, 50), st.floats(0, 20))
def test_cdf_monotone_property(model, x, dx):
    assert model.cdf(x) <= model.cdf(x + dx)


@settings(max_examples=200)
@given(st.sampled_from(CONTINUOUS), st.floats(1e-6, 1 - 1e-6))
def test_quantile_inversion_property(model, u):
    assert abs(model.cdf(model.quantile(u)) - u) <= 1e-9


@pytest.mark.parametrize("model", FAMILIES, ids=repr)
def test_model_dict_round_trip(model):
    assert CdfModel.from_dict(model.to_dict()) == model


@pytest.mark.parametrize("bad", [{"family": "gamma"}, {"family": "uniform", "a": 0}, {"rate": 1},
                                 {"family": "exponential", "rate": 1, "extra": 2}])
def test_model_dict_rejects_bad(bad):
    with pytest.raises(LawError):
        CdfModel.from_dict(bad)


def test_exponent_support_must_be_nonnegative():
    with pytest.raises(LawError):
        exponent_law({"rule": "constant", "law": {"family": "uniform", "a": -1, "b": 1}})
    with pytest.raises(LawError):
        exponent_law({"rule": "sequence", "value": "k - 3"})


def test_scaled_iid_cdf_matches_base():
    law = exponent_law(CANONICAL_EXPONENT)
    k = np.arange(1, 50)
    assert np.allclose(law.cdf(k, 1.5 * k), 0.75)
    assert law.cdf(0, 0.0) == 0.0 and law.cdf(0, 1e-12) == 1.0  # scale 0 is an atom at 0


def test_pairwise_needs_uniform_base():
    with pytest.raises(LawError):
        IndexedLaw.from_dict({"rule": "constant", "law": {"family": "exponential", "rate": 1},
                              "dependence": "pairwise"})


def test_degenerate_sequence_draw():
    law = exponent_law({"rule": "sequence", "value": "k"})
    d = sample_trial(law, det_coeff("k"), 99, 3, 10)
    assert list(d.lambdas) == list(range(10))


def test_draws_are_deterministic_and_read_only(canonical_exponent, exp_decay):
    a = sample_trial(canonical_exponent, exp_decay, 7, 11, 1000)
    b = sample_trial(canonical_exponent, exp_decay, 7, 11, 1000)
    assert np.array_equal(a.lambdas, b.lambdas)
    with pytest.raises(ValueError):
        a.lambdas[0] = 1.0


def test_draws_do_not_depend_on_truncation_or_offset():
    full = keyed_uniforms(5, 2, 1000)
    assert np.array_equal(full[:300], keyed_uniforms(5, 2, 300))
    for start in (1, 3, 4, 5, 517):
        assert np.array_equal(full[start:start + 50], keyed_uniforms(5, 2, 50, start=start))
    pw = pairwise_uniforms(5, 2, 1000)
    assert np.array_equal(pw[517:567], pairwise_uniforms(5, 2, 50, start=517))


def test_streams_and_trials_are_distinct():
    a = keyed_uniforms(1, 0, 100, stream=0)
    assert not np.array_equal(a, keyed_uniforms(1, 0, 100, stream=1))
    assert not np.array_equal(a, keyed_uniforms(1, 1, 100, stream=0))
    assert not np.array_equal(a, keyed_uniforms(2, 0, 100, stream=0))
    assert np.all((a > 0) & (a < 1))


def test_exponential_sample_mean():
    law = exponent_law({"rule": "constant", "law": {"family": "exponential", "rate": 1}})
    vals = np.array([sample_trial(law, det_coeff("k"), 314, t, 8).lambdas[5] for t in range(10_000)])
    assert abs(vals.mean() - 1) <= 0.05


def test_pairwise_correlation_small():
    N = 10_000
    W = np.array([pairwise_uniforms(77, t, 1000) for t in range(N)])
    rng = np.random.default_rng(0)
    for _ in range(20):
        i, j = rng.choice(1000, size=2, replace=False)
        assert abs(np.corrcoef(W[:, i], W[:, j])[0, 1]) <= 3 / math.sqrt(N)


def test_pairwise_is_not_mutually_independent():
    # W_2 = 2 W_1 - W_0 (mod 1) up to the second-copy refinement
    W = np.array([pairwise_uniforms(3, t, 3) for t in range(200)])
    resid = (W[:, 2] - 2 * W[:, 1] + W[:, 0]) % 1.0
    resid = np.minimum(resid, 1 - resid)
    assert np.all(resid < 1e-8)


def test_random_modulus_coefficients():
    coeff = CoefficientLaw.from_dict({"mode": "random_modulus", "law": {"family": "uniform", "a": 0, "b": 1},
                                      "neg_log": "k"})
    law = exponent_law({"rule": "sequence", "value": "k"})
    d = sample_trial(law, coeff, 1, 0, 100)
    mu = coeff.neg_log_values(100, d)
    assert np.allclose(mu, np.arange(100) - np.log(d.coeff_moduli))
    # F_Z(x / a_k) with a_k = e^{-k}
    got = coeff.modulus_cdf(np.arange(3), np.array([0.5, 0.5 * math.exp(-1), 2.0]))
    assert np.allclose(got, [0.5, 0.5, 1.0])
    assert CoefficientLaw.from_dict(coeff.to_dict()) == coeff


def test_trial_draw_rejects_negative():
    with pytest.raises(LawError):
        TrialDraw.fixed([0.0, -1.0])
