"""RPV posterior sampling, Probability to Be Best, Expected Loss and the stop rule."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .posterior import (
    BetaPosterior,
    NigPosterior,
    ValueSummary,
    marginal_mean,
    sample_conversion,
    sample_mean_value,
    update_conversion,
    update_value,
)


@dataclass(frozen=True)
class VariantState:
    """Cumulative data and priors for one variant (id 0 is the control by convention)."""

    id: int
    visitors: int = 0
    conversions: int = 0
    value_summary: ValueSummary = field(default_factory=ValueSummary)
    conv_prior: BetaPosterior = field(default_factory=BetaPosterior)
    value_prior: NigPosterior = field(default_factory=NigPosterior)

    def __post_init__(self):
        if self.visitors < 0 or self.conversions < 0:
            raise ValueError(f"variant {self.id}: counts must be nonnegative")
        if self.conversions > self.visitors:
            raise ValueError(
                f"variant {self.id}: conversions ({self.conversions}) exceed visitors ({self.visitors})"
            )
        if self.value_summary.count != self.conversions:
            raise ValueError(
                f"variant {self.id}: value_summary.count ({self.value_summary.count}) "
                f"must equal conversions ({self.conversions})"
            )

    def add(self, visitors: int, conversions: int, values: ValueSummary) -> "VariantState":
        return VariantState(
            self.id,
            self.visitors + visitors,
            self.conversions + conversions,
            self.value_summary + values,
            self.conv_prior,
            self.value_prior,
        )

    def conversion_posterior(self) -> BetaPosterior:
        return update_conversion(self.conv_prior, self.conversions, self.visitors)

    def value_posterior(self) -> NigPosterior:
        return update_value(self.value_prior, self.value_summary)


@dataclass(frozen=True)
class RpvSampleMatrix:
    """Paired RPV draws: row s holds sample s of every variant."""

    samples: np.ndarray
    conversion_samples: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] < 1 or self.samples.shape[1] < 1:
            raise ValueError(f"samples must be a nonempty S x N array, got shape {self.samples.shape}")

    @property
    def sample_count(self) -> int:
        return self.samples.shape[0]

    @property
    def variant_count(self) -> int:
        return self.samples.shape[1]


class Verdict(enum.Enum):
    CONTINUE = "Continue"
    STOP_WINNER = "StopWinner"
    STOP_FUTILITY = "StopFutility"


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    expected_losses: tuple
    pbb: tuple
    day: int
    winner: Optional[int] = None

    @property
    def stopped(self) -> bool:
        return self.verdict is not Verdict.CONTINUE

    def __str__(self):
        if self.verdict is Verdict.STOP_WINNER:
            return f"StopWinner({self.winner})"
        return self.verdict.value


def derive_rpv_samples(
    states: Sequence[VariantState], sample_count: int, rng: np.random.Generator
) -> RpvSampleMatrix:
    """Draw ``sample_count`` RPV samples per variant from cumulative totals.

    For each variant in order, S conversion-rate draws are taken first and
    then S mean-value draws; the generator is consumed in exactly that order.
    """
    if sample_count < 1:
        raise ValueError(f"sample_count must be >= 1, got {sample_count}")
    conv = np.empty((sample_count, len(states)))
    rpv = np.empty((sample_count, len(states)))
    for j, state in enumerate(states):
        p = sample_conversion(state.conversion_posterior(), sample_count, rng)
        mu = sample_mean_value(marginal_mean(state.value_posterior()), sample_count, rng)
        conv[:, j] = p
        rpv[:, j] = p * mu
    return RpvSampleMatrix(rpv, conv)


def compute_pbb(m: RpvSampleMatrix) -> np.ndarray:
    # argmax returns the first maximum, so exact ties go to the lowest index
    winners = np.argmax(m.samples, axis=1)
    counts = np.bincount(winners, minlength=m.variant_count)
    return counts / m.sample_count


def compute_expected_loss(m: RpvSampleMatrix) -> np.ndarray:
    row_max = m.samples.max(axis=1, keepdims=True)
    return (row_max - m.samples).mean(axis=0)


def prob_greater(samples: np.ndarray, i: int, j: int) -> float:
    """Fraction of paired rows where column ``i`` strictly exceeds column ``j``."""
    return float(np.mean(samples[:, i] > samples[:, j]))


def decide(losses, pbb, epsilon: float, control: int = 0, day: int = 1) -> Decision:
    losses = np.asarray(losses, dtype=float)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if np.any(losses < 0):
        raise ValueError("expected losses must be nonnegative")
    best = losses.min()
    tied = np.flatnonzero(losses == best)
    # a dead heat never ships a change
    i_star = control if control in tied else int(tied[0])
    losses_t = tuple(float(x) for x in losses)
    pbb_t = tuple(float(x) for x in pbb)
    if best < epsilon:
        if i_star == control:
            return Decision(Verdict.STOP_FUTILITY, losses_t, pbb_t, day)
        return Decision(Verdict.STOP_WINNER, losses_t, pbb_t, day, winner=i_star)
    return Decision(Verdict.CONTINUE, losses_t, pbb_t, day)


def evaluate_states(
    states: Sequence[VariantState],
    epsilon: float,
    sample_count: int,
    rng: np.random.Generator,
    control: int = 0,
    day: int = 1,
) -> tuple[Decision, RpvSampleMatrix]:
    """One pass of the decision phase: sample, score, decide."""
    m = derive_rpv_samples(states, sample_count, rng)
    return decide(compute_expected_loss(m), compute_pbb(m), epsilon, control, day), m
