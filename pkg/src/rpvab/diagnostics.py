"""Posterior predictive checks for a variant's fitted two-part model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decision import VariantState
from .posterior import ValueSummary

STATISTICS = ("mean", "variance", "max", "zero_fraction")


@dataclass(frozen=True)
class PpcResult:
    statistic_name: str
    observed_value: float
    replicated_values: np.ndarray
    ppc_p_value: float


def _transaction_stat(name: str, x: np.ndarray) -> float:
    # statistics of an empty transaction set are defined as 0
    if x.size == 0:
        return 0.0
    if name == "mean":
        return float(x.mean())
    if name == "variance":
        return float(x.var())
    return float(x.max())


def _check_consistent(state: VariantState, x: np.ndarray, rtol: float = 1e-6) -> None:
    obs = ValueSummary.from_values(x)
    vs = state.value_summary
    if obs.count != vs.count:
        raise ValueError(
            f"variant {state.id}: {obs.count} observed transactions but value_summary.count is {vs.count}"
        )
    for field_name in ("sum", "sum_sq"):
        a, b = getattr(obs, field_name), getattr(vs, field_name)
        if not math.isclose(a, b, rel_tol=rtol, abs_tol=1e-9):
            raise ValueError(
                f"variant {state.id}: observed transactions give {field_name}={a!r}, "
                f"value_summary has {b!r}"
            )


def posterior_predictive_check(
    state: VariantState,
    observed_transactions,
    statistic: str,
    replicates: int,
    rng: np.random.Generator,
) -> PpcResult:
    """Compare a statistic of the observed data with its posterior predictive distribution.

    Each replicate draws ``p ~ Beta``, ``sigma2 ~ InvGamma(alpha_k, beta_k)``
    and ``mu ~ Normal(mu_k, sigma2 / n_k)``, then simulates ``state.visitors``
    visitors with Normal transaction values (negative values are kept).
    ``zero_fraction`` is computed over the per-visitor revenue vector; the
    other statistics over transaction values only.  The p-value is the
    fraction of replicates at or above the observed value.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; valid: {', '.join(STATISTICS)}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    x = np.asarray(observed_transactions, dtype=float).ravel()
    _check_consistent(state, x)

    n = state.visitors
    if statistic == "zero_fraction":
        observed = (n - x.size + int(np.count_nonzero(x == 0))) / n if n else 0.0
    else:
        observed = _transaction_stat(statistic, x)

    conv = state.conversion_posterior()
    nig = state.value_posterior()
    reps = np.empty(replicates)
    for r in range(replicates):
        p = rng.beta(conv.alpha, conv.beta)
        sigma2 = nig.beta / rng.gamma(nig.alpha)
        mu = rng.normal(nig.mu, math.sqrt(sigma2 / nig.n_pseudo))
        k = int(rng.binomial(n, p))
        if statistic == "zero_fraction":
            y = rng.normal(mu, math.sqrt(sigma2), size=k)
            reps[r] = (n - k + int(np.count_nonzero(y == 0))) / n if n else 0.0
        else:
            reps[r] = _transaction_stat(statistic, rng.normal(mu, math.sqrt(sigma2), size=k))
    return PpcResult(statistic, float(observed), reps, float(np.mean(reps >= observed)))
