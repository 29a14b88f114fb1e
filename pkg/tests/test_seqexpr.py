import math

import numpy as np
import pytest

from dirichlet_lab.seqexpr import RuleError, SeqRule


def test_power_log_dict_form():
    r = SeqRule.parse({"c": 2, "p": 1, "q": 2})
    k = np.arange(5.0)
    assert np.allclose(r(k), 2 * k * np.log(k + math.e) ** 2)


def test_expression_form_matches_numpy():
    r = SeqRule.parse("2*ln(k+2) + sqrt(k)")
    k = np.arange(10.0)
    assert np.allclose(r(k), 2 * np.log(k + 2) + np.sqrt(k))


@pytest.mark.parametrize("text,expected", [("k^2", 9.0), ("(k+1)/10", 0.4), ("exp(-k)", math.exp(-3)),
                                           ("floor(k/2)", 1.0), ("k % 2", 1.0), ("pi*e", math.pi * math.e)])
def test_scalar_expressions(text, expected):
    assert SeqRule.parse(text)(3) == pytest.approx(expected)


def test_numbers_are_constant_rules():
    assert np.all(SeqRule.parse(1.5).values(4) == 1.5)


@pytest.mark.parametrize("bad", ["__import__('os')", "k.real", "x + 1", "[k]", "lambda: 1", "k if k else 1", ""])
def test_rejects_unsafe_or_unknown(bad):
    with pytest.raises(RuleError):
        SeqRule.parse(bad)


def test_json_round_trip():
    for spec in ["ln(k+2)", {"c": 1.0, "p": 0.5, "q": 0.0}]:
        r = SeqRule.parse(spec)
        assert SeqRule.parse(r.to_json()) == r
