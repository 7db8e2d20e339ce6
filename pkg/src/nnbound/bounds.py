"""Closed-form risk bounds driven by prior mass, redundancy and sparsity.

Five bound forms are exposed, identified as T1..T5 in results and CSV
output:

* T1: for a hypothesis consistent with the sample, risk is at most
  (ln(1/P) + ln(1/delta)) / m where P is the prior mass of the
  hypothesis (or of its equivalence class).
* T2: agnostic form; empirical risk plus sqrt((ln(1/P) + ln(1/delta)) / (2m)).
* T3: T1 with the counting prior 2^r / 3^m written out for a
  nearest-neighbour solution with r redundant examples:
  (m ln3 - r ln2 + ln(1/delta)) / m.  The exact-prior variant (with
  3^m - 1) is available as T1 over ``simple_prior_mass``.
* T4: T1 with the sparsity prior ``refined_prior_mass``; evaluated as
  that composition, so the structural identity is exact by construction.
* T5: T2 with the sparsity prior; the radicand is clamped at zero (the
  closed-form prior mass can exceed 1 in the corner r = m with sparsity
  near 1, see ``refined_prior_mass``).

All logarithms are natural: the consistent-case argument rests on
(1 - R)^m <= exp(-m R), whose constants are only exact in base e.
Risks are probabilities, so every bound value is clamped to [0, 1] with
flags recording whether clamping happened.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigurationError

LN2 = math.log(2.0)
LN3 = math.log(3.0)

SPARSITY_MAX = 1.0 - 1e-9


@dataclass(frozen=True)
class LogPriorMass:
    """Natural log of a prior probability mass.

    Non-positive for genuine masses.  The closed-form sparsity prior can
    exceed probability 1 in the corner r = m with sparsity close to 1
    (the closed form does not exclude the all-zero pattern there), so
    slightly positive values are representable; downstream bounds clamp.
    """

    log_p: float


@dataclass(frozen=True)
class BoundResult:
    """A bound value in [0, 1] plus the raw pre-clamp value and flags."""

    value: float
    raw: float
    theorem: str
    clamped_low: bool
    clamped_high: bool
    radicand_clamped: bool = False


def _check_m(m: int) -> int:
    if int(m) != m or m < 1:
        raise ConfigurationError(f"m must be an integer >= 1, got {m!r}")
    return int(m)


def _check_delta(delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta!r}")
    return float(delta)


def _check_r(r: int, m: int) -> int:
    if int(r) != r or not 0 <= r <= m:
        raise ConfigurationError(f"r must be an integer in 0..{m}, got {r!r}")
    return int(r)


def _check_sparsity(sparsity: float) -> float:
    if not 0.0 <= sparsity < 1.0:
        raise ConfigurationError(
            f"sparsity must lie in [0, 1[, got {sparsity!r}"
        )
    return float(sparsity)


def _check_risk(empirical_risk: float) -> float:
    if not 0.0 <= empirical_risk <= 1.0:
        raise ConfigurationError(
            f"empirical risk must lie in [0, 1], got {empirical_risk!r}"
        )
    return float(empirical_risk)


def _clamp(raw: float, theorem: str, *, radicand_clamped: bool = False) -> BoundResult:
    value = min(1.0, max(0.0, raw))
    return BoundResult(
        value=value,
        raw=raw,
        theorem=theorem,
        clamped_low=raw < 0.0,
        clamped_high=raw > 1.0,
        radicand_clamped=radicand_clamped,
    )


def thm1_bound(log_prior: LogPriorMass, m: int, delta: float) -> BoundResult:
    """Consistent-hypothesis bound: (ln(1/P) + ln(1/delta)) / m."""
    m = _check_m(m)
    delta = _check_delta(delta)
    raw = (-log_prior.log_p - math.log(delta)) / m
    return _clamp(raw, "T1")


def thm2_bound(
    log_prior: LogPriorMass, m: int, delta: float, empirical_risk: float
) -> BoundResult:
    """Agnostic bound: R_emp + sqrt((ln(1/P) + ln(1/delta)) / (2m))."""
    m = _check_m(m)
    delta = _check_delta(delta)
    empirical_risk = _check_risk(empirical_risk)
    radicand = -log_prior.log_p - math.log(delta)
    clamped = radicand < 0.0
    raw = empirical_risk + math.sqrt(max(0.0, radicand) / (2.0 * m))
    return _clamp(raw, "T2", radicand_clamped=clamped)


def simple_prior_mass(m: int, r: int) -> LogPriorMass:
    """ln(2^r / (3^m - 1)): uniform prior over ternary coefficient vectors.

    Computed in log space as r ln2 - m ln3 - ln(1 - 3^-m); for m beyond
    a few hundred the correction term underflows to zero, which is the
    correct limit.
    """
    m = _check_m(m)
    r = _check_r(r, m)
    correction = math.log1p(-(3.0 ** (-m)))
    return LogPriorMass(r * LN2 - m * LN3 - correction)


def refined_prior_mass(m: int, r: int, sparsity: float) -> LogPriorMass:
    """ln of the sparsity-prior mass of the classifiers matching on r positions.

    (1-S)^(m-r) (1+S)^r / (2^m (1 - S^m)) with S the a-priori
    probability of a zero coefficient.  Reduces to ``simple_prior_mass``
    at S = 1/3.  Evaluated in log space; S^m goes through expm1/log1p so
    that S close to 1 keeps full precision and S = 0 costs nothing.
    """
    m = _check_m(m)
    r = _check_r(r, m)
    s = _check_sparsity(sparsity)
    if s == 0.0:
        tail = 0.0
    else:
        # ln(1 - S^m) = ln(-expm1(m ln S))
        tail = math.log(-math.expm1(m * math.log(s)))
    log_p = (m - r) * math.log1p(-s) + r * math.log1p(s) - m * LN2 - tail
    return LogPriorMass(log_p)


def thm3_bound(m: int, r: int, delta: float) -> BoundResult:
    """Counting-prior bound: (m ln3 - r ln2 + ln(1/delta)) / m.

    Uses m ln3 verbatim rather than the exact ln(3^m - 1); the gap is at
    most -ln(1 - 3^-m) / m and vanishes rapidly with m.  Use T1 over
    ``simple_prior_mass`` for the exact-prior variant.
    """
    m = _check_m(m)
    r = _check_r(r, m)
    delta = _check_delta(delta)
    raw = (m * LN3 - r * LN2 - math.log(delta)) / m
    return _clamp(raw, "T3")


def thm4_bound(m: int, r: int, delta: float, sparsity: float) -> BoundResult:
    """Sparsity-prior bound; identical to T1 over ``refined_prior_mass``."""
    res = thm1_bound(refined_prior_mass(m, r, sparsity), m, delta)
    return replace(res, theorem="T4")


def thm5_bound(
    m: int, r: int, delta: float, sparsity: float, empirical_risk: float
) -> BoundResult:
    """Agnostic sparsity-prior bound; identical to T2 over ``refined_prior_mass``.

    Returns empirical risk plus the bound on the risk gap; the radicand
    is clamped at zero (flag recorded) where the closed-form prior mass
    exceeds 1.
    """
    res = thm2_bound(refined_prior_mass(m, r, sparsity), m, delta, empirical_risk)
    return replace(res, theorem="T5")


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section_min(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def optimize_sparsity(
    m: int,
    r: int,
    delta: float,
    theorem: str = "T4",
    *,
    tolerance: float = 1e-6,
    empirical_risk: float = 0.0,
) -> tuple[float, float]:
    """Sparsity value minimising the T4 (or T5) bound for fixed m, r, delta.

    Returns (s_opt, bound value at s_opt).  A coarse scan over
    [0, 1 - 1e-9] brackets the minimum of the observed convex profile,
    then golden-section search narrows it to within ``tolerance``; the
    test-suite cross-checks the result against a fine grid.
    """
    m = _check_m(m)
    r = _check_r(r, m)
    delta = _check_delta(delta)
    if theorem not in ("T4", "T5"):
        raise ConfigurationError(f"optimisable theorems are T4/T5, got {theorem!r}")
    if theorem == "T4":
        def objective(s: float) -> float:
            return thm4_bound(m, r, delta, s).raw
    else:
        empirical_risk = _check_risk(empirical_risk)

        def objective(s: float) -> float:
            return thm5_bound(m, r, delta, s, empirical_risk).raw

    grid = [i * SPARSITY_MAX / 256 for i in range(257)]
    values = [objective(s) for s in grid]
    best = min(range(len(grid)), key=values.__getitem__)
    lo = grid[max(0, best - 1)]
    hi = grid[min(len(grid) - 1, best + 1)]
    s_opt = _golden_section_min(objective, lo, hi, tolerance)
    if theorem == "T4":
        value = thm4_bound(m, r, delta, s_opt).value
    else:
        value = thm5_bound(m, r, delta, s_opt, empirical_risk).value
    return s_opt, value
