"""Conjugate posteriors for the two-part (conversion x order value) model.

Conversion is Beta-Binomial.  Transaction values are modelled as Normal with
unknown mean and variance under a Normal-Inverse-Gamma prior, whose marginal
for the mean order value is a location-scale Student-t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BetaPosterior:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def var(self) -> float:
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))


@dataclass(frozen=True)
class NigPosterior:
    """Normal-Inverse-Gamma over (mean, variance) of transaction values.

    ``n_pseudo`` is the number of pseudo-observations backing ``mu``;
    ``alpha``/``beta`` are the Inverse-Gamma shape and scale of the variance.
    """

    mu: float = 100.0
    n_pseudo: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.n_pseudo > 0 and self.alpha > 0 and self.beta > 0):
            raise ValueError(
                "NIG requires n_pseudo, alpha, beta > 0, got "
                f"({self.n_pseudo}, {self.alpha}, {self.beta})"
            )


@dataclass(frozen=True)
class StudentTParams:
    dof: float
    loc: float
    scale: float


@dataclass(frozen=True)
class ValueSummary:
    """Streaming sufficient statistics of transaction values."""

    count: int = 0
    sum: float = 0.0
    sum_sq: float = 0.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"count must be nonnegative, got {self.count}")
        if self.count == 0 and (self.sum != 0 or self.sum_sq != 0):
            raise ValueError("an empty ValueSummary must have sum = sum_sq = 0")
        if self.sum_sq < 0:
            raise ValueError(f"sum_sq must be nonnegative, got {self.sum_sq}")

    @classmethod
    def from_values(cls, values) -> "ValueSummary":
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            return cls()
        return cls(int(x.size), float(x.sum()), float(np.dot(x, x)))

    def __add__(self, other: "ValueSummary") -> "ValueSummary":
        return ValueSummary(self.count + other.count, self.sum + other.sum, self.sum_sq + other.sum_sq)

    @property
    def mean(self) -> float:
        return self.sum / self.count if self.count else 0.0

    @property
    def ssd(self) -> float:
        """Sum of squared deviations, clamped at zero against cancellation."""
        if self.count == 0:
            return 0.0
        return max(self.sum_sq - self.sum * self.sum / self.count, 0.0)


def update_conversion(prior: BetaPosterior, k: int, n: int) -> BetaPosterior:
    if k < 0 or n < 0:
        raise ValueError(f"counts must be nonnegative, got k={k}, n={n}")
    if k > n:
        raise ValueError(f"conversions ({k}) exceed trials ({n})")
    return BetaPosterior(prior.alpha + k, prior.beta + (n - k))


def update_value(prior: NigPosterior, data: ValueSummary) -> NigPosterior:
    k = data.count
    if k == 0:
        return prior
    xbar = data.mean
    n0 = prior.n_pseudo
    nk = n0 + k
    mu = (n0 * prior.mu + k * xbar) / nk
    alpha = prior.alpha + k / 2.0
    dev = xbar - prior.mu
    beta = prior.beta + 0.5 * data.ssd + (k * n0 / (2.0 * nk)) * dev * dev
    return NigPosterior(mu, nk, alpha, beta)


def marginal_mean(post: NigPosterior) -> StudentTParams:
    """Student-t marginal of the mean order value under a NIG posterior."""
    scale = math.sqrt(post.beta / (post.alpha * post.n_pseudo))
    return StudentTParams(dof=2.0 * post.alpha, loc=post.mu, scale=scale)


def sample_conversion(post: BetaPosterior, count: int, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return rng.beta(post.alpha, post.beta, size=count)


def sample_mean_value(t: StudentTParams, count: int, rng: np.random.Generator) -> np.ndarray:
    # no truncation at zero: the marginal is a full-support t
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not t.dof > 0:
        raise ValueError(f"dof must be positive, got {t.dof}")
    return t.loc + t.scale * rng.standard_t(t.dof, size=count)
