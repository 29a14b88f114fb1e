"""Distribution laws for exponents and coefficient moduli, plus seeded sampling.

All CDFs are left-continuous, ``F(x) = P{X < x}``. Sampling is by inverse
transform from uniforms produced by a keyed counter-based generator (Philox),
so the draw at index ``k`` depends only on ``(master_seed, trial_index, k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special

from .seqexpr import SeqRule

MASK64 = (1 << 64) - 1
# Mersenne prime for the pairwise-independent hash family u_k = U + k V (mod P).
PAIRWISE_PRIME = (1 << 31) - 1

STREAM_EXPONENT = 0
STREAM_COEFFICIENT = 1
STREAM_PAIRWISE = 2


class LawError(ValueError):
    """Invalid distribution parameters or law description."""


def _arr(x: Any) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _check_u(u: Any) -> np.ndarray:
    u = _arr(u)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("quantile level must lie in the open interval (0, 1)")
    return u


class CdfModel:
    """Base class. Subclasses implement ``_cdf``/``_quantile`` on arrays."""

    family: str = ""
    continuous: bool = True

    def cdf(self, x: Any) -> Any:
        out = self._cdf(_arr(x))
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, u: Any) -> Any:
        out = self._quantile(_check_u(u))
        return float(out) if np.ndim(out) == 0 else out

    def cdf_plus(self, x: Any) -> Any:
        """Right limit ``F(x+) = P{X <= x}``."""
        x = _arr(x)
        out = self._cdf(np.nextafter(x, np.inf))
        return float(out) if np.ndim(out) == 0 else out

    def support_min(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _quantile(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict) -> "CdfModel":
        if not isinstance(d, dict) or "family" not in d:
            raise LawError(f"law must be an object with a 'family' field: {d!r}")
        fam = str(d["family"]).lower()
        cls = _FAMILIES.get(fam)
        if cls is None:
            raise LawError(f"unknown family {d['family']!r}")
        params = {k: v for k, v in d.items() if k != "family"}
        expected = set(cls.__dataclass_fields__)
        unknown = set(params) - expected
        missing = expected - set(params)
        if unknown or missing:
            raise LawError(f"{fam}: expected fields {sorted(expected)}, got {sorted(params)}")
        for key in ("base",):
            if key in params:
                params[key] = CdfModel.from_dict(params[key])
        try:
            return cls(**{k: (v if isinstance(v, CdfModel) else float(v)) for k, v in params.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, LawError):
                raise
            raise LawError(f"{fam}: {exc}") from None


@dataclass(frozen=True)
class Exponential(CdfModel):
    rate: float
    family = "exponential"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise LawError("exponential rate must be a positive finite number")

    def _cdf(self, x):
        with np.errstate(over="ignore"):
            return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def _quantile(self, u):
        return -np.log1p(-u) / self.rate

    def support_min(self):
        return 0.0

    def to_dict(self):
        return {"family": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Uniform(CdfModel):
    a: float
    b: float
    family = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise LawError("uniform requires finite a < b")

    def _cdf(self, x):
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def _quantile(self, u):
        return self.a + u * (self.b - self.a)

    def support_min(self):
        return self.a

    def to_dict(self):
        return {"family": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Pareto(CdfModel):
    scale: float
    shape: float
    family = "pareto"

    def __post_init__(self):
        if not (self.scale > 0 and self.shape > 0 and math.isfinite(self.scale)
                and math.isfinite(self.shape)):
            raise LawError("pareto requires scale > 0 and shape > 0")

    def _cdf(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.power(self.scale / np.where(x > self.scale, x, self.scale), self.shape)
        return np.where(x > self.scale, 1.0 - tail, 0.0)

    def _quantile(self, u):
        return self.scale * np.exp(-np.log1p(-u) / self.shape)

    def support_min(self):
        return self.scale

    def to_dict(self):
        return {"family": "pareto", "scale": self.scale, "shape": self.shape}


@dataclass(frozen=True)
class LogNormal(CdfModel):
    mu: float
    sigma: float
    family = "lognormal"

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.sigma > 0 and math.isfinite(self.sigma)):
            raise LawError("lognormal requires finite mu and sigma > 0")

    def _cdf(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(np.where(x > 0, x, 1.0)) - self.mu) / self.sigma
        return np.where(x > 0, special.ndtr(z), 0.0)

    def _quantile(self, u):
        return np.exp(self.mu + self.sigma * special.ndtri(u))

    def support_min(self):
        return 0.0

    def to_dict(self):
        return {"family": "lognormal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Degenerate(CdfModel):
    point: float
    family = "degenerate"
    continuous = False

    def __post_init__(self):
        if not math.isfinite(self.point):
            raise LawError("degenerate point must be finite")

    def _cdf(self, x):
        return np.where(x > self.point, 1.0, 0.0)

    def _quantile(self, u):
        return np.full_like(u, self.point)

    def support_min(self):
        return self.point

    def to_dict(self):
        return {"family": "degenerate", "point": self.point}


@dataclass(frozen=True)
class Scaled(CdfModel):
    base: CdfModel
    factor: float
    family = "scaled"

    def __post_init__(self):
        if not (self.factor > 0 and math.isfinite(self.factor)):
            raise LawError("scale factor must be positive and finite")

    @property
    def continuous(self):  # type: ignore[override]
        return self.base.continuous

    def _cdf(self, x):
        return self.base._cdf(x / self.factor)

    def _quantile(self, u):
        return self.factor * self.base._quantile(u)

    def support_min(self):
        return self.factor * self.base.support_min()

    def to_dict(self):
        return {"family": "scaled", "base": self.base.to_dict(), "factor": self.factor}


@dataclass(frozen=True)
class Shifted(CdfModel):
    base: CdfModel
    offset: float
    family = "shifted"

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise LawError("shift offset must be finite")

    @property
    def continuous(self):  # type: ignore[override]
        return self.base.continuous

    def _cdf(self, x):
        return self.base._cdf(x - self.offset)

    def _quantile(self, u):
        return self.base._quantile(u) + self.offset

    def support_min(self):
        return self.base.support_min() + self.offset

    def to_dict(self):
        return {"family": "shifted", "base": self.base.to_dict(), "offset": self.offset}


_FAMILIES: dict[str, type] = {
    "exponential": Exponential,
    "uniform": Uniform,
    "pareto": Pareto,
    "lognormal": LogNormal,
    "degenerate": Degenerate,
    "scaled": Scaled,
    "shifted": Shifted,
}


def cdf_eval(model: CdfModel, x: Any) -> Any:
    return model.cdf(x)


def quantile(model: CdfModel, u: Any) -> Any:
    return model.quantile(u)


# --------------------------------------------------------------------------
# k-indexed laws
# --------------------------------------------------------------------------

RULES = ("constant", "sequence", "scaled_iid")
DEPENDENCE = ("mutual", "pairwise")


@dataclass(frozen=True)
class IndexedLaw:
    """A rule ``k -> CdfModel``.

    ``constant``: the same law at every index.
    ``sequence``: deterministic values, ``Degenerate(s(k))``.
    ``scaled_iid``: ``s(k) * X`` with ``X ~ base``; ``s(k) = 0`` gives the atom at 0.
    """

    rule: str
    law: CdfModel | None = None
    scale: SeqRule | None = None
    dependence: str = "mutual"

    def __post_init__(self):
        if self.rule not in RULES:
            raise LawError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if self.dependence not in DEPENDENCE:
            raise LawError(f"unknown dependence {self.dependence!r}")
        if self.rule in ("constant", "scaled_iid") and self.law is None:
            raise LawError(f"rule {self.rule!r} needs a base law")
        if self.rule in ("sequence", "scaled_iid") and self.scale is None:
            raise LawError(f"rule {self.rule!r} needs a sequence")
        if self.dependence == "pairwise":
            if self.rule == "sequence":
                raise LawError("pairwise construction needs a random law")
            if not isinstance(self.law, Uniform):
                raise LawError("pairwise construction is only provided for uniform base laws")

    @property
    def is_deterministic(self) -> bool:
        return self.rule == "sequence"

    def scales(self, k: np.ndarray) -> np.ndarray:
        s = self.scale(k)
        if not np.all(np.isfinite(s)):
            raise LawError(f"sequence {self.scale.to_json()!r} is not finite on the requested indices")
        return s

    def values(self, K: int) -> np.ndarray:
        """The deterministic values ``s(0..K-1)`` of a ``sequence`` law."""
        if not self.is_deterministic:
            raise LawError("law is random; no deterministic values")
        return self.scales(np.arange(K))

    def cdf(self, k: Any, x: Any) -> np.ndarray:
        """``F_k(x)`` broadcast over index and argument arrays."""
        k = np.asarray(k)
        x = _arr(x)
        if self.rule == "constant":
            return np.broadcast_to(self.law._cdf(x), np.broadcast(k, x).shape).copy()
        s = self.scales(k)
        if self.rule == "sequence":
            return np.where(x > s, 1.0, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(s > 0, x / np.where(s > 0, s, 1.0), 0.0)
        scaled = self.law._cdf(ratio)
        atom = np.where(x > 0, 1.0, 0.0)
        neg = s < 0
        if np.any(neg):
            raise LawError("scaled_iid needs a nonnegative scale sequence")
        return np.where(s > 0, scaled, atom)

    def quantile(self, k: Any, u: Any) -> np.ndarray:
        k = np.asarray(k)
        u = _arr(u)
        if self.rule == "constant":
            return np.broadcast_to(self.law._quantile(u), np.broadcast(k, u).shape).copy()
        s = self.scales(k)
        if self.rule == "sequence":
            return np.broadcast_to(s, np.broadcast(k, u).shape).copy()
        return s * self.law._quantile(u)

    def support_min(self, K: int | None = None) -> float:
        if self.rule == "constant":
            return self.law.support_min()
        s = self.scales(np.arange(K or 1024))
        if self.rule == "sequence":
            return float(s.min())
        if np.any(s < 0):
            return -math.inf
        return float(min(0.0 if np.any(s == 0) else math.inf, (s * self.law.support_min()).min()))

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"rule": self.rule}
        if self.rule == "sequence":
            d["value"] = self.scale.to_json()
        elif self.rule == "constant":
            d["law"] = self.law.to_dict()
        else:
            d["scale"] = self.scale.to_json()
            d["base"] = self.law.to_dict()
        if self.dependence != "mutual":
            d["dependence"] = self.dependence
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IndexedLaw":
        if not isinstance(d, dict) or "rule" not in d:
            raise LawError(f"indexed law must be an object with a 'rule' field: {d!r}")
        rule = d["rule"]
        allowed = {
            "constant": {"rule", "law", "dependence"},
            "sequence": {"rule", "value"},
            "scaled_iid": {"rule", "scale", "base", "dependence"},
        }.get(rule)
        if allowed is None:
            raise LawError(f"unknown rule {rule!r}")
        unknown = set(d) - allowed
        if unknown:
            raise LawError(f"rule {rule!r}: unknown fields {sorted(unknown)}")
        dep = d.get("dependence", "mutual")
        if rule == "constant":
            return cls("constant", law=CdfModel.from_dict(d["law"]), dependence=dep)
        if rule == "sequence":
            return cls("sequence", scale=SeqRule.parse(d["value"]))
        return cls("scaled_iid", law=CdfModel.from_dict(d["base"]),
                   scale=SeqRule.parse(d["scale"]), dependence=dep)


class ExponentLaw(IndexedLaw):
    """Indexed law for the exponents; support must lie in ``[0, inf)``."""

    def check_support(self, K: int) -> None:
        if self.support_min(K) < 0:
            raise LawError("exponent laws must have support in [0, +inf)")


def exponent_law(d: dict | IndexedLaw) -> ExponentLaw:
    law = d if isinstance(d, IndexedLaw) else IndexedLaw.from_dict(d)
    out = ExponentLaw(law.rule, law.law, law.scale, law.dependence)
    out.check_support(1024)
    return out


@dataclass(frozen=True)
class CoefficientLaw:
    """Coefficient moduli.

    ``deterministic``: ``-ln|f_k| = neg_log(k)``.
    ``random_modulus``: ``|f_k| = a_k * Z_k`` with ``Z_k ~ modulus(k)`` and
    ``-ln a_k = neg_log(k)`` (``a_k = 1`` when ``neg_log`` is omitted).
    """

    mode: str
    neg_log: SeqRule | None = None
    modulus: IndexedLaw | None = None

    def __post_init__(self):
        if self.mode not in ("deterministic", "random_modulus"):
            raise LawError(f"unknown coefficient mode {self.mode!r}")
        if self.mode == "deterministic" and self.neg_log is None:
            raise LawError("deterministic coefficients need 'neg_log'")
        if self.mode == "random_modulus":
            if self.modulus is None:
                raise LawError("random_modulus coefficients need a 'law'")
            if self.modulus.dependence != "mutual":
                raise LawError("coefficient moduli are always mutually independent")

    @property
    def is_deterministic(self) -> bool:
        return self.mode == "deterministic"

    def scale_neg_log(self, K: int) -> np.ndarray:
        if self.neg_log is None:
            return np.zeros(K)
        mu = self.neg_log.values(K)
        if not np.all(np.isfinite(mu)):
            raise LawError("-ln|f_k| must be finite for every k (f_k = 0 is not representable)")
        return mu

    def neg_log_values(self, K: int, draw: "TrialDraw | None" = None) -> np.ndarray:
        """``mu_k = -ln|f_k|`` for ``k < K`` (random mode reads the draw)."""
        mu = self.scale_neg_log(K)
        if self.is_deterministic:
            return mu
        if draw is None or draw.coeff_moduli is None:
            raise LawError("random-modulus coefficients need a trial draw")
        z = np.asarray(draw.coeff_moduli[:K])
        with np.errstate(divide="ignore"):
            return mu - np.log(z)

    def modulus_cdf(self, k: np.ndarray, x: Any) -> np.ndarray:
        """CDF of ``|f_k|`` in random mode."""
        if self.is_deterministic:
            raise LawError("deterministic coefficients have no modulus law")
        a = np.exp(-self.scale_neg_log(int(np.max(k)) + 1)[k])
        return self.modulus.cdf(k, _arr(x) / a)

    def to_dict(self) -> dict:
        if self.is_deterministic:
            return {"mode": "deterministic", "neg_log": self.neg_log.to_json()}
        d = {"mode": "random_modulus", "law": self.modulus.to_dict()}
        if self.neg_log is not None:
            d["neg_log"] = self.neg_log.to_json()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientLaw":
        if not isinstance(d, dict) or "mode" not in d:
            raise LawError(f"coefficient law must be an object with a 'mode' field: {d!r}")
        mode = d["mode"]
        if mode == "deterministic":
            unknown = set(d) - {"mode", "neg_log"}
            if unknown:
                raise LawError(f"deterministic coefficients: unknown fields {sorted(unknown)}")
            return cls("deterministic", neg_log=SeqRule.parse(d.get("neg_log")) if "neg_log" in d else None)
        if mode == "random_modulus":
            unknown = set(d) - {"mode", "law", "neg_log"}
            if unknown:
                raise LawError(f"random_modulus coefficients: unknown fields {sorted(unknown)}")
            law = d.get("law")
            modulus = IndexedLaw.from_dict(law) if isinstance(law, dict) and "rule" in law \
                else IndexedLaw("constant", law=CdfModel.from_dict(law))
            if modulus.support_min(1024) < 0:
                raise LawError("coefficient moduli must be nonnegative")
            neg_log = SeqRule.parse(d["neg_log"]) if "neg_log" in d else None
            return cls("random_modulus", neg_log=neg_log, modulus=modulus)
        raise LawError(f"unknown coefficient mode {mode!r}")


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def _philox_raw(master_seed: int, trial_index: int, stream: int, n: int, start: int = 0) -> np.ndarray:
    key = np.array([master_seed & MASK64, trial_index & MASK64], dtype=np.uint64)
    bg = np.random.Philox(key=key, counter=np.array([0, 0, 0, stream], dtype=np.uint64))
    if start:
        # each counter step yields four 64-bit outputs
        blocks, rem = divmod(start, 4)
        bg.advance(blocks)
        if rem:
            bg.random_raw(rem)
    return bg.random_raw(n)


def keyed_uniforms(master_seed: int, trial_index: int, K: int, stream: int = STREAM_EXPONENT,
                   start: int = 0) -> np.ndarray:
    """Open-interval uniforms ``u_k`` for ``k in [start, start+K)``.

    ``u_k`` is the k-th output of Philox keyed on ``(master_seed, trial_index)``
    with the stream id in the top counter word, so it does not depend on how
    many other indices are drawn or in which order.
    """
    raw = _philox_raw(master_seed, trial_index, stream, K, start)
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53


def pairwise_uniforms(master_seed: int, trial_index: int, K: int, start: int = 0) -> np.ndarray:
    """Pairwise independent (not mutually independent) uniforms.

    Two independent copies of ``W_k = U + k V mod P`` on the prime field
    ``P = 2^31 - 1`` are combined into one 62-bit fraction. For distinct
    ``j, k < P`` the pair ``(W_j, W_k)`` is uniform on the torus, while
    ``W_0, W_1, W_2`` satisfy ``W_2 = 2 W_1 - W_0``.
    """
    if start + K > PAIRWISE_PRIME:
        raise LawError("pairwise construction supports at most 2^31 - 1 indices")
    base = _philox_raw(master_seed, trial_index, STREAM_PAIRWISE, 4) % np.uint64(PAIRWISE_PRIME)
    u1, v1, u2, v2 = base
    k = np.arange(start, start + K, dtype=np.uint64)
    p = np.uint64(PAIRWISE_PRIME)
    w1 = (u1 + k * v1 % p) % p
    w2 = (u2 + k * v2 % p) % p
    return (w1.astype(float) + (w2.astype(float) + 0.5) / PAIRWISE_PRIME) / PAIRWISE_PRIME


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TrialDraw:
    master_seed: int
    trial_index: int
    K: int
    lambdas: np.ndarray = field(repr=False)
    coeff_moduli: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.K < 1:
            raise LawError("truncation K must be >= 1")
        object.__setattr__(self, "lambdas", _frozen(self.lambdas))
        if self.coeff_moduli is not None:
            object.__setattr__(self, "coeff_moduli", _frozen(self.coeff_moduli))
        if len(self.lambdas) != self.K:
            raise LawError("lambdas must have length K")
        if np.any(self.lambdas < 0):
            raise LawError("exponents must be nonnegative")

    @classmethod
    def fixed(cls, lambdas: Any, coeff_moduli: Any = None) -> "TrialDraw":
        lam = np.asarray(lambdas, dtype=float)
        return cls(0, 0, len(lam), lam, None if coeff_moduli is None else np.asarray(coeff_moduli, float))


def sample_trial(exp_law: IndexedLaw, coeff_law: CoefficientLaw, master_seed: int,
                 trial_index: int, K: int) -> TrialDraw:
    if K < 1:
        raise LawError("truncation K must be >= 1")
    k = np.arange(K)
    if exp_law.is_deterministic:
        lam = exp_law.values(K)
    else:
        if exp_law.dependence == "pairwise":
            u = pairwise_uniforms(master_seed, trial_index, K)
        else:
            u = keyed_uniforms(master_seed, trial_index, K, STREAM_EXPONENT)
        lam = exp_law.quantile(k, u)
    if np.any(lam < 0):
        raise LawError("exponent law produced a negative value; support must be in [0, +inf)")
    moduli = None
    if not coeff_law.is_deterministic:
        u = keyed_uniforms(master_seed, trial_index, K, STREAM_COEFFICIENT)
        z = coeff_law.modulus.quantile(k, u)
        moduli = z
    return TrialDraw(int(master_seed), int(trial_index), int(K), lam, moduli)
