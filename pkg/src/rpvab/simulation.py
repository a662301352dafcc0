"""Synthetic experiment generation and the two monitoring loops.

Seeding rule: every run draws from two independent streams derived as
``SeedSequence(base_seed, spawn_key=(run_id, stream))`` with stream 0 for
simulated traffic and stream 1 for posterior sampling.  Both methods see the
same traffic for a given run id, and a run's result depends only on
``(base_seed, run_id)``, never on scheduling or on ``n_runs``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .decision import (
    VariantState,
    Verdict,
    compute_expected_loss,
    compute_pbb,
    decide,
    derive_rpv_samples,
    prob_greater,
)
from .frequentist import ALTERNATIVES, peeking_step
from .posterior import BetaPosterior, NigPosterior, ValueSummary

DATA_STREAM = 0
ANALYSIS_STREAM = 1
METHODS = ("bayesian", "peeking")


@dataclass(frozen=True)
class VariantTruth:
    name: str
    true_conv_rate: float
    true_aov: float
    aov_std: float

    def __post_init__(self):
        if not 0.0 <= self.true_conv_rate < 1.0:
            raise ValueError(f"{self.name}: true_conv_rate must lie in [0, 1), got {self.true_conv_rate}")
        if not (self.true_aov > 0 and self.aov_std > 0):
            raise ValueError(f"{self.name}: true_aov and aov_std must be positive")

    @property
    def true_rpv(self) -> float:
        return self.true_conv_rate * self.true_aov


@dataclass(frozen=True)
class ScenarioConfig:
    """Ground truth for one simulated experiment.

    ``correct_winner`` is the variant a correct method should ship; ``None``
    means the correct call is to ship nothing (futility or timeout).
    """

    name: str
    daily_visitors: int
    variants: tuple
    max_days: int = 200
    control: int = 0
    correct_winner: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))
        if not self.variants:
            raise ValueError(f"scenario {self.name!r} has no variants")
        if not 0 <= self.control < len(self.variants):
            raise ValueError(f"scenario {self.name!r}: control index {self.control} out of range")
        if self.correct_winner is not None and not 0 <= self.correct_winner < len(self.variants):
            raise ValueError(f"scenario {self.name!r}: correct_winner {self.correct_winner} out of range")
        if self.daily_visitors < 1 or self.max_days < 1:
            raise ValueError(f"scenario {self.name!r}: daily_visitors and max_days must be >= 1")

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variants]


@dataclass(frozen=True)
class EngineConfig:
    epsilon: float = 0.01
    sample_count: int = 20000
    alpha: float = 0.05
    min_days: int = 1
    conv_prior: BetaPosterior = field(default_factory=BetaPosterior)
    value_prior: NigPosterior = field(default_factory=NigPosterior)
    # variant index -> (BetaPosterior, NigPosterior)
    variant_priors: dict = field(default_factory=dict)
    seed: int = 42
    peeking_alternative: str = "larger"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.min_days < 1:
            raise ValueError(f"min_days must be >= 1, got {self.min_days}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.peeking_alternative not in ALTERNATIVES:
            raise ValueError(f"peeking_alternative must be one of {ALTERNATIVES}")

    def priors_for(self, i: int) -> tuple[BetaPosterior, NigPosterior]:
        return self.variant_priors.get(i, (self.conv_prior, self.value_prior))


class Outcome(enum.Enum):
    WINNER = "Winner"
    FUTILITY = "Futility"
    TIMED_OUT = "TimedOut"


@dataclass(frozen=True)
class DailySnapshot:
    """Bayesian metrics on one day; probabilities compare each variant to the control."""

    day: int
    pbb: tuple
    expected_losses: tuple
    prob_rate_beats_control: tuple
    prob_rpv_beats_control: tuple
    verdict: str


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    method: str
    outcome: Outcome
    duration_days: int
    seed: int
    winner: Optional[int] = None
    final_losses: Optional[tuple] = None
    trace: Optional[tuple] = field(default=None, compare=False, repr=False)

    def label(self, names: Optional[Sequence[str]] = None) -> str:
        if self.outcome is Outcome.WINNER:
            return f"Winner({names[self.winner] if names else self.winner})"
        return self.outcome.value


def gamma_params_from_moments(mean: float, std: float) -> tuple[float, float]:
    """(shape, scale) of the Gamma distribution with the given mean and std."""
    if not (mean > 0 and std > 0):
        raise ValueError(f"mean and std must be positive, got mean={mean}, std={std}")
    return (mean / std) ** 2, std * std / mean


def split_visitors(total: int, n_variants: int) -> list[int]:
    base, rem = divmod(total, n_variants)
    return [base + (1 if i < rem else 0) for i in range(n_variants)]


@dataclass(frozen=True)
class DayData:
    visitors: int
    conversions: int
    values: ValueSummary


def simulate_day(scenario: ScenarioConfig, rng: np.random.Generator) -> list[DayData]:
    out = []
    for n, v in zip(split_visitors(scenario.daily_visitors, len(scenario.variants)), scenario.variants):
        k = int(rng.binomial(n, v.true_conv_rate))
        shape, scale = gamma_params_from_moments(v.true_aov, v.aov_std)
        x = rng.gamma(shape, scale, size=k)
        out.append(DayData(n, k, ValueSummary.from_values(x)))
    return out


def stream_seed(base_seed: int, run_id: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(run_id, stream))


def run_seed(base_seed: int, run_id: int) -> int:
    """The 64-bit integer identifying a run's data stream, as written to records."""
    return int(stream_seed(base_seed, run_id, DATA_STREAM).generate_state(1, np.uint64)[0])


def initial_states(scenario: ScenarioConfig, cfg: EngineConfig) -> list[VariantState]:
    states = []
    for i in range(len(scenario.variants)):
        conv_prior, value_prior = cfg.priors_for(i)
        states.append(VariantState(i, conv_prior=conv_prior, value_prior=value_prior))
    return states


def _snapshot(day, m, losses, pbb, control, verdict) -> DailySnapshot:
    n = m.variant_count
    return DailySnapshot(
        day=day,
        pbb=tuple(float(x) for x in pbb),
        expected_losses=tuple(float(x) for x in losses),
        prob_rate_beats_control=tuple(prob_greater(m.conversion_samples, j, control) for j in range(n)),
        prob_rpv_beats_control=tuple(prob_greater(m.samples, j, control) for j in range(n)),
        verdict=verdict,
    )


def run_experiment(
    scenario: ScenarioConfig,
    method: str,
    cfg: EngineConfig,
    run_id: int = 0,
    trace: bool = False,
) -> RunRecord:
    """Monitor one simulated experiment day by day until a stop or ``max_days``.

    Randomness comes only from ``(cfg.seed, run_id)`` via :func:`stream_seed`.
    With ``trace=True`` the bayesian record carries a :class:`DailySnapshot`
    per evaluated day.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    data_rng = np.random.default_rng(stream_seed(cfg.seed, run_id, DATA_STREAM))
    analysis_rng = np.random.default_rng(stream_seed(cfg.seed, run_id, ANALYSIS_STREAM))
    seed = run_seed(cfg.seed, run_id)
    states = initial_states(scenario, cfg)
    control = scenario.control
    snapshots = [] if trace else None
    losses = None

    for day in range(1, scenario.max_days + 1):
        for i, d in enumerate(simulate_day(scenario, data_rng)):
            states[i] = states[i].add(d.visitors, d.conversions, d.values)
        if day < cfg.min_days:
            continue

        if method == "peeking":
            winner = peeking_step(states, cfg.alpha, control, cfg.peeking_alternative)
            if winner is not None:
                return RunRecord(run_id, method, Outcome.WINNER, day, seed, winner=winner)
            continue

        m = derive_rpv_samples(states, cfg.sample_count, analysis_rng)
        loss_arr = compute_expected_loss(m)
        pbb = compute_pbb(m)
        decision = decide(loss_arr, pbb, cfg.epsilon, control, day)
        losses = decision.expected_losses
        if trace:
            snapshots.append(_snapshot(day, m, loss_arr, pbb, control, str(decision)))
        if decision.verdict is Verdict.STOP_WINNER:
            return RunRecord(run_id, method, Outcome.WINNER, day, seed, decision.winner, losses,
                             tuple(snapshots) if trace else None)
        if decision.verdict is Verdict.STOP_FUTILITY:
            return RunRecord(run_id, method, Outcome.FUTILITY, day, seed, None, losses,
                             tuple(snapshots) if trace else None)

    return RunRecord(run_id, method, Outcome.TIMED_OUT, scenario.max_days, seed, None, losses,
                     tuple(snapshots) if trace else None)


@dataclass(frozen=True)
class MethodSummary:
    """Aggregate of one method's runs; percentages are in [0, 100].

    ``avg_duration`` averages only runs that reached a conclusion (winner or
    futility); ``avg_duration_all`` also counts timeouts at ``max_days``.
    """

    method: str
    n_runs: int
    outcome_pct: dict
    correct_pct: float
    false_positive_pct: float
    inconclusive_pct: float
    avg_duration: float
    avg_duration_all: float

    def pct(self, label: str) -> float:
        return self.outcome_pct.get(label, 0.0)


@dataclass(frozen=True)
class AggregateReport:
    scenario: ScenarioConfig
    n_runs: int
    summaries: dict
    records: tuple = field(repr=False, default=())

    def __getitem__(self, method: str) -> MethodSummary:
        return self.summaries[method]


def is_correct(record: RunRecord, scenario: ScenarioConfig) -> bool:
    if scenario.correct_winner is None:
        return record.outcome is not Outcome.WINNER
    return record.outcome is Outcome.WINNER and record.winner == scenario.correct_winner


def summarize(records: Sequence[RunRecord], scenario: ScenarioConfig, method: str) -> MethodSummary:
    recs = [r for r in records if r.method == method]
    n = len(recs)
    if n == 0:
        raise ValueError(f"no records for method {method!r}")
    names = scenario.names
    labels = [f"Winner({nm})" for i, nm in enumerate(names) if i != scenario.control]
    labels += [Outcome.FUTILITY.value, Outcome.TIMED_OUT.value]
    counts = dict.fromkeys(labels, 0)
    for r in recs:
        counts[r.label(names)] = counts.get(r.label(names), 0) + 1
    outcome_pct = {k: 100.0 * c / n for k, c in counts.items()}
    correct = sum(is_correct(r, scenario) for r in recs)
    winners = [r for r in recs if r.outcome is Outcome.WINNER]
    false_pos = sum(r.winner != scenario.correct_winner for r in winners)
    concluded = [r.duration_days for r in recs if r.outcome is not Outcome.TIMED_OUT]
    return MethodSummary(
        method=method,
        n_runs=n,
        outcome_pct=outcome_pct,
        correct_pct=100.0 * correct / n,
        false_positive_pct=100.0 * false_pos / n,
        inconclusive_pct=100.0 * (n - len(winners)) / n,
        avg_duration=float(np.mean(concluded)) if concluded else math.nan,
        avg_duration_all=float(np.mean([r.duration_days for r in recs])),
    )


def _run_pair(args) -> tuple[RunRecord, ...]:
    scenario, cfg, run_id, methods = args
    return tuple(run_experiment(scenario, m, cfg, run_id) for m in methods)


def run_study(
    scenario: ScenarioConfig,
    cfg: EngineConfig,
    n_runs: int,
    jobs: int = 1,
    methods: Sequence[str] = METHODS,
) -> AggregateReport:
    """Run ``n_runs`` paired experiments (run ids 0..n_runs-1) and aggregate.

    Records are ordered by run id, then method, regardless of ``jobs``.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    tasks = [(scenario, cfg, r, tuple(methods)) for r in range(n_runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_pair, tasks, chunksize=max(1, n_runs // (4 * jobs))))
    else:
        results = [_run_pair(t) for t in tasks]
    records = tuple(rec for pair in results for rec in pair)
    summaries = {m: summarize(records, scenario, m) for m in methods}
    return AggregateReport(scenario, n_runs, summaries, records)


def _variants(*rows) -> tuple:
    return tuple(VariantTruth(*row) for row in rows)


PRESETS = {
    "revenue-trap": ScenarioConfig(
        "revenue-trap",
        4000,
        _variants(("A", 0.030, 100.0, 40.0), ("B", 0.032, 90.0, 35.0)),
    ),
    "clear-winner": ScenarioConfig(
        "clear-winner",
        4000,
        _variants(
            ("A", 0.030, 100.0, 40.0),
            ("B", 0.029, 100.0, 40.0),
            ("C", 0.031, 105.0, 45.0),
            ("D", 0.030, 100.0, 40.0),
        ),
        correct_winner=2,
    ),
    "futility": ScenarioConfig(
        "futility",
        3000,
        _variants(("A", 0.0300, 100.0, 40.0), ("B", 0.0301, 100.0, 40.0), ("C", 0.0300, 100.2, 40.0)),
    ),
}


def preset(name: str, **overrides) -> ScenarioConfig:
    try:
        sc = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(sc, **overrides) if overrides else sc
