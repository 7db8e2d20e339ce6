"""K-nearest-neighbour classification with exact tie semantics.

The K-neighbourhood of a query is the K training points with smallest
distance, ordered by (distance, index); when several points sit at
exactly the same distance as the K-th one, the lower indices win and the
rest are discarded, so the neighbourhood always has exactly K members.
The prediction is the sign of the label sum over the neighbourhood; with
K even the sum can be 0, which is reported as an abstention.

Also provided: the vote margin (true label times label sum), its minimum
over the training sample, and a reject-option rule that withholds the
prediction unless the vote magnitude reaches a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Final

import numpy as np

from .data import LabeledSample, Metric
from .errors import ConfigurationError

REJECT: Final = "REJECT"

VOTING_TIE_POLICIES = ("abstain", "require-odd-k")


@dataclass(frozen=True)
class KnnModel:
    """Training sample, metric and neighbour count.

    ``voting_tie_policy`` is ``abstain`` (even K may predict 0) or
    ``require-odd-k`` (construction fails for even K, so voting ties
    cannot occur).
    """

    sample: LabeledSample
    metric: Metric
    k: int
    voting_tie_policy: str = "abstain"

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.sample.m:
            raise ConfigurationError(
                f"k must be in 1..{self.sample.m}, got {self.k}"
            )
        if self.voting_tie_policy not in VOTING_TIE_POLICIES:
            raise ConfigurationError(
                f"unknown voting tie policy {self.voting_tie_policy!r}"
            )
        if self.voting_tie_policy == "require-odd-k" and self.k % 2 == 0:
            raise ConfigurationError(
                f"policy require-odd-k forbids even k={self.k}"
            )


def _as_queries(query) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64)
    if q.ndim == 1:
        q = q.reshape(1, -1)
    return q


def neighbourhoods(model: KnnModel, queries) -> np.ndarray:
    """(q, K) array of neighbour indices, each row sorted by (distance, index)."""
    queries = _as_queries(queries)
    dists = model.metric.pairwise(model.sample.points, queries)
    # Stable sort on distance keeps the original (ascending-index) order
    # among bitwise-equal distances, which is exactly the tie rule.
    order = np.argsort(dists, axis=0, kind="stable")
    return order[: model.k].T


def neighbourhood(model: KnnModel, query) -> np.ndarray:
    """Indices of the K nearest training points for one query."""
    return neighbourhoods(model, query)[0]


def votes(model: KnnModel, queries) -> np.ndarray:
    """Label sum over each query's neighbourhood (integer array)."""
    nb = neighbourhoods(model, queries)
    return model.sample.labels[nb].sum(axis=1)


def predict_batch(model: KnnModel, queries) -> np.ndarray:
    """Predictions in {-1, 0, +1}; 0 only possible for even K."""
    return np.sign(votes(model, queries)).astype(np.int64)


def predict(model: KnnModel, query) -> int:
    return int(predict_batch(model, query)[0])


def empirical_risk(
    model: KnnModel,
    eval_set: LabeledSample,
    *,
    abstain_as_half: bool = False,
) -> float:
    """Fraction of eval examples where the prediction misses the label.

    Abstentions (prediction 0) count as full errors by default since
    0 != +-1; with ``abstain_as_half`` they cost 0.5 instead.
    """
    preds = predict_batch(model, eval_set.points)
    wrong = preds != eval_set.labels
    if abstain_as_half:
        cost = wrong.astype(np.float64)
        cost[preds == 0] = 0.5
        return float(cost.mean())
    return float(wrong.mean())


def margins_batch(model: KnnModel, queries, true_labels) -> np.ndarray:
    """True label times neighbourhood label sum, per query.

    Values lie on the lattice {-K, -K+2, ..., K-2, K}.
    """
    labs = np.asarray(true_labels, dtype=np.int64)
    return labs * votes(model, queries)


def margin(model: KnnModel, query, true_label: int) -> int:
    return int(margins_batch(model, query, [true_label])[0])


def training_margin(model: KnnModel) -> int:
    """Minimum margin over the training sample itself."""
    gams = margins_batch(model, model.sample.points, model.sample.labels)
    return int(gams.min())


def _check_reject_threshold(model: KnnModel, vote_threshold: int) -> None:
    if vote_threshold <= model.k / 2:
        raise ConfigurationError(
            f"reject threshold must exceed k/2 = {model.k / 2:g}, "
            f"got {vote_threshold}"
        )


def kl_predict_batch(model: KnnModel, queries, vote_threshold: int) -> list:
    """Reject-option predictions: sign(vote) when |vote| >= threshold, else REJECT.

    The test is on the vote magnitude, i.e. the margin the prediction
    would have if it were correct; the true label is unknown at query
    time.  Valid thresholds exceed k/2.
    """
    _check_reject_threshold(model, vote_threshold)
    vs = votes(model, queries)
    return [
        int(np.sign(v)) if abs(int(v)) >= vote_threshold else REJECT
        for v in vs
    ]


def kl_predict(model: KnnModel, query, vote_threshold: int):
    return kl_predict_batch(model, query, vote_threshold)[0]


def rejection_rate(model: KnnModel, vote_threshold: int, test_points) -> float:
    """Fraction of test points the reject-option rule refuses to label."""
    preds = kl_predict_batch(model, test_points, vote_threshold)
    if not preds:
        raise ConfigurationError("test set must be non-empty")
    return sum(1 for p in preds if p == REJECT) / len(preds)
