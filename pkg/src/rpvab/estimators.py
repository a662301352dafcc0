"""scikit-learn style front ends for the Bayesian engine and the peeking baseline.

Both estimators learn from per-visitor revenue ``X`` (zero for visitors who
did not buy) and variant labels ``y``::

    est = BayesianRpvTest(epsilon=0.01).fit(revenue, variant)
    est.decision_, est.pbb_, est.expected_loss_
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_control, check_generator, check_revenue
from .decision import (
    VariantState,
    compute_expected_loss,
    compute_pbb,
    decide,
    derive_rpv_samples,
)
from .frequentist import peeking_step, two_proportion_z
from .posterior import BetaPosterior, NigPosterior, ValueSummary, marginal_mean


def _aggregate(X, y, classes) -> list[tuple[int, int, ValueSummary]]:
    out = []
    for c in classes:
        r = X[y == c]
        bought = r[r > 0]
        out.append((int(r.size), int(bought.size), ValueSummary.from_values(bought)))
    return out


class _VariantDataMixin:
    def _accumulate(self, X, y, classes=None, reset=False):
        X, y = check_revenue(X, y)
        if reset or not hasattr(self, "classes_"):
            self.classes_ = np.unique(y) if classes is None else np.asarray(classes)
            cp, vp = self._priors()
            self.n_days_ = 0
            self.states_ = [VariantState(i, conv_prior=cp, value_prior=vp) for i in range(len(self.classes_))]
        unknown = np.setdiff1d(np.unique(y), self.classes_)
        if unknown.size:
            raise ValueError(f"labels {unknown.tolist()} not seen in classes_ {self.classes_.tolist()}")
        for i, (n, k, vs) in enumerate(_aggregate(X, y, self.classes_)):
            self.states_[i] = self.states_[i].add(n, k, vs)
        self.control_index_ = check_control(self.control, self.classes_)

    def _priors(self):
        return BetaPosterior(), NigPosterior()


class BayesianRpvTest(_VariantDataMixin, BaseEstimator):
    """Expected-loss decision on revenue per visitor across A/B/n variants.

    Parameters
    ----------
    epsilon : float
        Expected-loss tolerance in currency per visitor.
    n_samples : int
        Monte Carlo draws per variant.
    control : label or None
        Label of the control variant; defaults to the first sorted label.
    conv_prior_alpha, conv_prior_beta : float
        Beta prior on the conversion rate.
    value_prior_mu, value_prior_n, value_prior_alpha, value_prior_beta : float
        Normal-Inverse-Gamma prior on transaction values.
    random_state : None, int or Generator
        ``None`` uses a fixed default seed.

    Attributes
    ----------
    classes_, states_, rpv_samples_, pbb_, expected_loss_, decision_
    """

    def __init__(
        self,
        epsilon: float = 0.01,
        n_samples: int = 20000,
        control=None,
        conv_prior_alpha: float = 1.0,
        conv_prior_beta: float = 1.0,
        value_prior_mu: float = 100.0,
        value_prior_n: float = 1.0,
        value_prior_alpha: float = 1.0,
        value_prior_beta: float = 1.0,
        random_state=None,
    ):
        self.epsilon = epsilon
        self.n_samples = n_samples
        self.control = control
        self.conv_prior_alpha = conv_prior_alpha
        self.conv_prior_beta = conv_prior_beta
        self.value_prior_mu = value_prior_mu
        self.value_prior_n = value_prior_n
        self.value_prior_alpha = value_prior_alpha
        self.value_prior_beta = value_prior_beta
        self.random_state = random_state

    def _priors(self):
        return (
            BetaPosterior(self.conv_prior_alpha, self.conv_prior_beta),
            NigPosterior(self.value_prior_mu, self.value_prior_n, self.value_prior_alpha, self.value_prior_beta),
        )

    def fit(self, X, y):
        self._accumulate(X, y, reset=True)
        self._rng = check_generator(self.random_state)
        return self._evaluate()

    def partial_fit(self, X, y, classes=None):
        """Add a batch (e.g. one day of traffic) to the cumulative totals and re-decide."""
        first = not hasattr(self, "classes_")
        self._accumulate(X, y, classes=classes)
        if first:
            self._rng = check_generator(self.random_state)
        return self._evaluate()

    def fit_states(self, states: Sequence[VariantState], classes=None):
        """Fit directly from cumulative aggregates (priors come from ``states``)."""
        self.classes_ = np.arange(len(states)) if classes is None else np.asarray(classes)
        if len(self.classes_) != len(states):
            raise ValueError("classes must have one label per state")
        self.states_ = list(states)
        self.n_days_ = 0
        self.control_index_ = check_control(self.control, self.classes_)
        self._rng = check_generator(self.random_state)
        return self._evaluate()

    def _evaluate(self):
        self.n_days_ = getattr(self, "n_days_", 0) + 1
        m = derive_rpv_samples(self.states_, self.n_samples, self._rng)
        self.rpv_samples_ = m
        self.pbb_ = compute_pbb(m)
        self.expected_loss_ = compute_expected_loss(m)
        self.decision_ = decide(self.expected_loss_, self.pbb_, self.epsilon, self.control_index_, self.n_days_)
        return self

    def winner(self):
        """Label of the declared winner, or None when continuing or stopped for futility."""
        check_is_fitted(self, "decision_")
        w = self.decision_.winner
        return None if w is None else self.classes_[w]

    def posterior_summary(self) -> list[dict]:
        check_is_fitted(self, "decision_")
        rows = []
        for i, st in enumerate(self.states_):
            conv = st.conversion_posterior()
            t = marginal_mean(st.value_posterior())
            rows.append({
                "variant": self.classes_[i],
                "visitors": st.visitors,
                "conversions": st.conversions,
                "conv_mean": conv.mean,
                "value_dof": t.dof,
                "value_loc": t.loc,
                "value_scale": t.scale,
                "rpv_mean": float(self.rpv_samples_.samples[:, i].mean()),
                "pbb": float(self.pbb_[i]),
                "expected_loss": float(self.expected_loss_[i]),
            })
        return rows


class PeekingZTest(_VariantDataMixin, BaseEstimator):
    """Two-proportion Z-test of each variant's conversion rate against the control.

    ``partial_fit`` once per day reproduces the peeking practice; ``winner_``
    is the label declared on the latest look (None when nothing qualifies).
    """

    def __init__(self, alpha: float = 0.05, control=None, alternative: str = "larger"):
        self.alpha = alpha
        self.control = control
        self.alternative = alternative

    def fit(self, X, y):
        self._accumulate(X, y, reset=True)
        return self._evaluate()

    def partial_fit(self, X, y, classes=None):
        self._accumulate(X, y, classes=classes)
        return self._evaluate()

    def _evaluate(self):
        c = self.control_index_
        ctrl = self.states_[c]
        z = np.zeros(len(self.states_))
        p = np.ones(len(self.states_))
        for i, st in enumerate(self.states_):
            if i != c and st.visitors and ctrl.visitors:
                res = two_proportion_z(ctrl.conversions, ctrl.visitors, st.conversions, st.visitors, i)
                z[i], p[i] = res.z, res.p_value
        self.z_ = z
        self.p_values_ = p
        w: Optional[int] = None
        if all(st.visitors for st in self.states_):
            w = peeking_step(self.states_, self.alpha, c, self.alternative)
        self.winner_ = None if w is None else self.classes_[w]
        return self
