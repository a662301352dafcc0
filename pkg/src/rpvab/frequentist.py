"""Daily "peeking" baseline: pooled two-proportion Z-tests against the control."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from scipy.special import ndtr

from .decision import VariantState

ALTERNATIVES = ("larger", "two-sided")


@dataclass(frozen=True)
class ZTestResult:
    z: float
    p_value: float
    variant: int = 1


def two_proportion_z(k_a: int, n_a: int, k_b: int, n_b: int, variant: int = 1) -> ZTestResult:
    """Pooled Z-test of B's rate against A's; ``p_value`` is two-sided."""
    if n_a <= 0 or n_b <= 0:
        raise ValueError(f"sample sizes must be positive, got n_a={n_a}, n_b={n_b}")
    if not (0 <= k_a <= n_a and 0 <= k_b <= n_b):
        raise ValueError(f"successes must lie in [0, n], got {k_a}/{n_a}, {k_b}/{n_b}")
    pooled = (k_a + k_b) / (n_a + n_b)
    if pooled <= 0.0 or pooled >= 1.0:
        return ZTestResult(0.0, 1.0, variant)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n_a + 1.0 / n_b))
    z = (k_b / n_b - k_a / n_a) / se
    return ZTestResult(z, float(2.0 * ndtr(-abs(z))), variant)


def one_sided_p(result: ZTestResult) -> float:
    """P(Z >= z): evidence that the variant's rate is higher."""
    return float(ndtr(-result.z))


def peeking_step(
    states: Sequence[VariantState],
    alpha: float = 0.05,
    control: int = 0,
    alternative: str = "larger",
) -> Optional[int]:
    """Return the index of the variant declared winner today, or None.

    Each non-control variant is tested against the control on cumulative
    counts without multiplicity correction.  A variant qualifies when its
    p-value is below ``alpha`` and its observed rate beats the control's;
    among qualifiers the smallest p-value (then lowest index) wins.
    ``alternative="larger"`` uses the one-sided p-value P(Z >= z);
    ``"two-sided"`` uses the two-sided one.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    ctrl = states[control]
    best = None
    for i, st in enumerate(states):
        if i == control:
            continue
        res = two_proportion_z(ctrl.conversions, ctrl.visitors, st.conversions, st.visitors, variant=i)
        p = one_sided_p(res) if alternative == "larger" else res.p_value
        higher = st.conversions * ctrl.visitors > ctrl.conversions * st.visitors
        if p < alpha and higher and (best is None or p < best[1]):
            best = (i, p)
    return None if best is None else best[0]
