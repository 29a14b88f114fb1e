import numpy as np
import pytest

from dirichlet_lab.dist_models import CoefficientLaw, TrialDraw, exponent_law

CANONICAL_EXPONENT = {"rule": "scaled_iid", "scale": "k", "base": {"family": "uniform", "a": 0, "b": 2}}


def det_coeff(neg_log):
    return CoefficientLaw.from_dict({"mode": "deterministic", "neg_log": neg_log})


def seq_law(expr):
    return exponent_law({"rule": "sequence", "value": expr})


def fixed_draw(expr, K):
    return TrialDraw.fixed(seq_law(expr).values(K))


@pytest.fixture
def canonical_exponent():
    return exponent_law(CANONICAL_EXPONENT)


@pytest.fixture
def exp_decay():
    return det_coeff("k")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
