"""Redundant training subsets and hypothesis equivalence.

A subset of the training sample is redundant for the K-NN classifier
when removing it changes no prediction at any query point.  "Any query
point" is operationalised against a finite probe domain: every check in
this module quantifies over explicit probes, and every report records
the probe provenance, so a probe-relative redundancy count can never be
mistaken for a domain-exact one.

Two search strategies are provided.  The exhaustive search enumerates
all proper subsets (feasible up to a size threshold) and certifies a
maximum-cardinality redundant subset.  The greedy search accumulates
candidates one at a time, re-checking the whole accumulated set at each
step because redundancy is not closed under unions; its result is sound
but possibly sub-maximal, i.e. a lower bound on the exhaustive count,
which only makes downstream risk bounds more conservative.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import knn
from .data import LabeledSample, Metric, ProbeDomain
from .errors import ConfigurationError, InvalidSubsetError
from .kernel import softmin_predict_batch

DEFAULT_EXHAUSTIVE_LIMIT = 14

GREEDY_ORDERS = ("by-margin-desc", "by-index")


@dataclass(frozen=True)
class RedundancyReport:
    """A certified redundant subset and how it was found."""

    k: int
    removed: tuple[int, ...]
    probe_kind: str
    probe_size: int
    probe_descriptor: str
    method: str
    maximal_certified: bool

    @property
    def r(self) -> int:
        return len(self.removed)

    def to_record(self) -> dict:
        return {
            "K": self.k,
            "r": self.r,
            "removed": list(self.removed),
            "probe": {
                "kind": self.probe_kind,
                "size": self.probe_size,
                "descriptor": self.probe_descriptor,
            },
            "method": self.method,
            "maximal_certified": self.maximal_certified,
        }


class _VoteContext:
    """Per-probe neighbour orderings for fast keep-mask predictions.

    ``order[j]`` lists training indices by (distance, index) for probe j;
    restricting to a keep mask preserves that order, so the reduced
    model's neighbourhood is the first K kept entries.
    """

    def __init__(self, sample: LabeledSample, probes: ProbeDomain, metric: Metric, k: int):
        dists = metric.pairwise(sample.points, probes.points)
        self.order = np.argsort(dists, axis=0, kind="stable").T
        self.labels_sorted = sample.labels[self.order]
        self.m = sample.m
        self.k = k

    def predictions(self, keep: np.ndarray) -> np.ndarray:
        kept_in_order = keep[self.order]
        ranks = np.cumsum(kept_in_order, axis=1)
        chosen = kept_in_order & (ranks <= self.k)
        votes = np.where(chosen, self.labels_sorted, 0).sum(axis=1)
        return np.sign(votes)


def _normalise_subset(subset, m: int) -> np.ndarray:
    idx = np.array(sorted(set(int(i) for i in subset)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= m):
        raise InvalidSubsetError(f"subset indices must lie in 0..{m - 1}")
    if idx.size >= m:
        raise InvalidSubsetError("cannot remove the whole sample")
    return idx


def is_redundant_subset(
    sample: LabeledSample,
    subset,
    k: int,
    probes: ProbeDomain,
    metric: Metric,
) -> bool:
    """True iff removing ``subset`` leaves every probe prediction unchanged.

    Ternary equality: an abstention on the full sample must remain an
    abstention after removal.
    """
    idx = _normalise_subset(subset, sample.m)
    if k > sample.m - idx.size:
        raise ConfigurationError(
            f"k={k} exceeds the {sample.m - idx.size} examples left after removal"
        )
    ctx = _VoteContext(sample, probes, metric, k)
    keep = np.ones(sample.m, dtype=bool)
    full = ctx.predictions(keep)
    keep[idx] = False
    return bool(np.array_equal(full, ctx.predictions(keep)))


def _report(k, removed, probes, method, certified) -> RedundancyReport:
    return RedundancyReport(
        k=k,
        removed=tuple(int(i) for i in removed),
        probe_kind=probes.kind,
        probe_size=len(probes),
        probe_descriptor=probes.descriptor,
        method=method,
        maximal_certified=certified,
    )


def max_redundant_exhaustive(
    sample: LabeledSample,
    k: int,
    probes: ProbeDomain,
    metric: Metric,
    *,
    max_exhaustive_m: int = DEFAULT_EXHAUSTIVE_LIMIT,
) -> RedundancyReport:
    """Certified maximum-cardinality redundant subset by full enumeration.

    Checks subsets in decreasing size and, within a size, in
    lexicographic index order, so the returned set is the
    lexicographically smallest maximiser.  Refuses samples above
    ``max_exhaustive_m`` (the search visits up to 2^m subsets); use
    the greedy search there.
    """
    m = sample.m
    if m > max_exhaustive_m:
        raise ConfigurationError(
            f"m={m} exceeds the exhaustive limit {max_exhaustive_m}; "
            "use max_redundant_greedy instead"
        )
    if not 1 <= k <= m:
        raise ConfigurationError(f"k must be in 1..{m}, got {k}")
    ctx = _VoteContext(sample, probes, metric, k)
    full = ctx.predictions(np.ones(m, dtype=bool))
    for size in range(min(m - k, m - 1), 0, -1):
        for combo in combinations(range(m), size):
            keep = np.ones(m, dtype=bool)
            keep[list(combo)] = False
            if np.array_equal(full, ctx.predictions(keep)):
                return _report(k, combo, probes, "exhaustive", True)
    return _report(k, (), probes, "exhaustive", True)


def max_redundant_greedy(
    sample: LabeledSample,
    k: int,
    probes: ProbeDomain,
    metric: Metric,
    *,
    order: str = "by-margin-desc",
) -> RedundancyReport:
    """Sound redundant subset by incremental accumulation.

    Candidates are tried in the requested order; one is kept only if the
    whole accumulated removal set still passes the redundancy check.
    Passes repeat until a fixpoint.  The result may be sub-maximal, so
    its size is a lower bound on the exhaustive count.

    ``by-margin-desc`` tries high-margin (well-inside-their-class)
    points first, which tend to be removable; ``by-index`` is the
    order-deterministic fallback.
    """
    m = sample.m
    if not 1 <= k <= m:
        raise ConfigurationError(f"k must be in 1..{m}, got {k}")
    if order not in GREEDY_ORDERS:
        raise ConfigurationError(f"unknown candidate order {order!r}")
    if order == "by-margin-desc":
        model = knn.KnnModel(sample, metric, k)
        margins = knn.margins_batch(model, sample.points, sample.labels)
        candidates = np.argsort(-margins, kind="stable")
    else:
        candidates = np.arange(m)

    ctx = _VoteContext(sample, probes, metric, k)
    keep = np.ones(m, dtype=bool)
    full = ctx.predictions(keep)
    removed: list[int] = []
    cap = min(m - k, m - 1)
    changed = True
    while changed and len(removed) < cap:
        changed = False
        for cand in candidates:
            if not keep[cand] or len(removed) >= cap:
                continue
            keep[cand] = False
            if np.array_equal(full, ctx.predictions(keep)):
                removed.append(int(cand))
                changed = True
            else:
                keep[cand] = True
    return _report(k, sorted(removed), probes, "greedy", False)


def hypothesis_equivalent(
    sample: LabeledSample,
    alpha,
    probes: ProbeDomain,
    metric: Metric,
) -> bool:
    """True iff the coefficient vector predicts like alpha = labels on every probe.

    Evaluated through the exact vanishing-bandwidth classifier, which is
    an independent code path from the keep-mask machinery above; the two
    cross-validate each other in the test-suite.
    """
    ref = softmin_predict_batch(sample, sample.labels, probes.points, metric)
    got = softmin_predict_batch(sample, alpha, probes.points, metric)
    return bool(np.array_equal(ref, got))


def equivalence_count_lower_bound(r: int) -> int:
    """Number of zero-patterns over a redundant set of size r: 2**r.

    Exact arbitrary-precision integer; callers needing the log scale can
    take ``r * math.log(2)`` directly.
    """
    if r < 0:
        raise ConfigurationError(f"r must be >= 0, got {r}")
    return 2 ** int(r)
