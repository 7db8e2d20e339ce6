"""Kernel-space view of nearest-neighbour classification.

An RBF kernel k(o, o') = exp(-d^2(o, o')/sigma^2) turns the training
sample into a linear classifier sign(sum_i alpha_i * k(o, o_i)) with
ternary coefficients alpha_i in {-1, 0, +1}.  As sigma shrinks, the
nearest point with a non-zero coefficient dominates the sum, so the
classifier converges to 1-NN restricted to the non-zero entries.

The sigma -> 0 case is evaluated exactly (``softmin_predict``) rather
than by plugging in a tiny bandwidth: exp(-d^2/sigma^2) underflows long
before the limit is reached.  Finite-sigma vote sums are shifted by the
per-query minimum squared distance in log space, which rescales each
vote by a positive factor and therefore never changes its sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import knn
from .data import EuclideanMetric, LabeledSample, Metric, ProbeDomain
from .errors import ConfigurationError, UndefinedHypothesisError, ValidationError


@dataclass(frozen=True)
class RbfKernel:
    """exp(-d^2/sigma^2), optionally normalised to unit integral.

    The unnormalised form takes values in (0, 1] with the maximum at
    d = 0 and is what classification uses.  Density estimation divides
    by (pi * sigma^2)^(n/2) so that the kernel integrates to one over
    R^n.
    """

    sigma: float
    normalised: bool = False

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be > 0, got {self.sigma}")

    def normaliser(self, n_dims: int) -> float:
        return (math.pi * self.sigma**2) ** (-n_dims / 2)

    def value_from_d2(self, d2, n_dims: int = 1) -> np.ndarray:
        out = np.exp(-np.asarray(d2, dtype=np.float64) / self.sigma**2)
        if self.normalised:
            out = out * self.normaliser(n_dims)
        return out


def rbf_eval(kernel: RbfKernel, a, b, metric: Metric | None = None) -> float:
    """Kernel value for one pair of objects under the given metric."""
    metric = metric or EuclideanMetric()
    d = metric.dist(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    n_dims = np.atleast_1d(np.asarray(a)).shape[-1]
    return float(kernel.value_from_d2(d * d, n_dims))


def validate_coefficients(alpha, m: int) -> np.ndarray:
    """Check a ternary coefficient vector: length m, entries in {-1,0,+1}, not all zero."""
    arr = np.asarray(alpha, dtype=np.int64)
    if arr.shape != (m,):
        raise ValidationError(f"expected {m} coefficients, got shape {arr.shape}")
    if not np.isin(arr, (-1, 0, 1)).all():
        raise ValidationError("coefficients must be -1, 0 or +1")
    if not arr.any():
        raise UndefinedHypothesisError(
            "all-zero coefficient vector does not define a classifier"
        )
    return arr


@dataclass(frozen=True)
class KernelClassifier:
    """Ternary-coefficient kernel expansion over a training sample."""

    sample: LabeledSample
    alpha: np.ndarray
    kernel: RbfKernel
    metric: Metric = field(default_factory=EuclideanMetric)

    def __post_init__(self) -> None:
        arr = validate_coefficients(self.alpha, self.sample.m)
        arr.setflags(write=False)
        object.__setattr__(self, "alpha", arr)


def _squared_distances(metric: Metric, points, queries) -> np.ndarray:
    d = metric.pairwise(points, queries)
    return d * d


def kernel_votes(clf: KernelClassifier, queries) -> np.ndarray:
    """Per-query vote sums, rescaled by a positive per-query factor.

    The shift by the minimum squared distance over non-zero coefficients
    keeps the dominant term at exp(0) = 1, so votes stay representable
    for bandwidths far below the point spacing.  Only the sign is
    meaningful across queries.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    d2 = _squared_distances(clf.metric, clf.sample.points, queries)
    active = clf.alpha != 0
    shift = d2[active].min(axis=0)
    w = np.exp(-(d2 - shift[None, :]) / clf.kernel.sigma**2)
    return (clf.alpha[:, None] * w).sum(axis=0)


def kernel_predict_batch(clf: KernelClassifier, queries) -> np.ndarray:
    """sign of the kernel vote; exactly zero sums abstain (prediction 0)."""
    return np.sign(kernel_votes(clf, queries)).astype(np.int64)


def kernel_predict(clf: KernelClassifier, query) -> int:
    return int(kernel_predict_batch(clf, query)[0])


def softmin_predict_batch(
    sample: LabeledSample,
    alpha,
    queries,
    metric: Metric | None = None,
) -> np.ndarray:
    """Exact vanishing-bandwidth limit of the kernel classifier.

    The prediction is the coefficient of the nearest point among those
    with a non-zero coefficient; among equidistant candidates the lowest
    index wins, matching the K-NN tie rule on the restricted sample.
    """
    metric = metric or EuclideanMetric()
    arr = validate_coefficients(alpha, sample.m)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    dists = metric.pairwise(sample.points, queries)
    masked = np.where((arr != 0)[:, None], dists, np.inf)
    # argmin returns the first minimiser, i.e. the lowest index among
    # bitwise-equal distances.
    winners = np.argmin(masked, axis=0)
    return arr[winners]


def softmin_predict(sample: LabeledSample, alpha, query, metric: Metric | None = None) -> int:
    return int(softmin_predict_batch(sample, alpha, query, metric)[0])


@dataclass(frozen=True)
class ParzenEstimate:
    """Class-conditional kernel density estimates for both labels."""

    pos_points: np.ndarray
    neg_points: np.ndarray
    sigma: float
    n_dims: int

    @property
    def m_pos(self) -> int:
        return self.pos_points.shape[0]

    @property
    def m_neg(self) -> int:
        return self.neg_points.shape[0]

    def _density(self, points: np.ndarray, queries) -> np.ndarray:
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        kern = RbfKernel(self.sigma, normalised=True)
        d2 = _squared_distances(EuclideanMetric(), points, queries)
        vals = kern.value_from_d2(d2, self.n_dims)
        return vals.sum(axis=0) / points.shape[0]

    def density_pos(self, queries) -> np.ndarray:
        return self._density(self.pos_points, queries)

    def density_neg(self, queries) -> np.ndarray:
        return self._density(self.neg_points, queries)


def fit_parzen(sample: LabeledSample, sigma: float) -> ParzenEstimate:
    """Split the sample by label and attach a normalised RBF window."""
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be > 0, got {sigma}")
    pos = sample.points[sample.labels == 1]
    neg = sample.points[sample.labels == -1]
    if pos.shape[0] == 0 or neg.shape[0] == 0:
        raise ConfigurationError(
            "density classification needs at least one example of each class"
        )
    return ParzenEstimate(pos, neg, float(sigma), sample.n_dims)


def parzen_classify_batch(estimate: ParzenEstimate, queries) -> np.ndarray:
    """sign of the class-density difference at each query."""
    diff = estimate.density_pos(queries) - estimate.density_neg(queries)
    return np.sign(diff).astype(np.int64)


def parzen_classify(estimate: ParzenEstimate, query) -> int:
    return int(parzen_classify_batch(estimate, query)[0])


def min_distance_tie_mask(sample: LabeledSample, queries, metric: Metric) -> np.ndarray:
    """True where the minimum training distance is attained more than once."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    dists = metric.pairwise(sample.points, queries)
    dmin = dists.min(axis=0)
    return (dists == dmin[None, :]).sum(axis=0) > 1


def convergence_sweep(
    sample: LabeledSample,
    sigmas,
    probes: ProbeDomain,
    metric: Metric | None = None,
    *,
    exclude_ties: bool = True,
) -> list[tuple[float, float, int]]:
    """Agreement of the finite-bandwidth classifier (alpha = labels) with 1-NN.

    Returns (sigma, agreement fraction, probes compared) per bandwidth.
    Probes whose nearest training distance is tied are excluded by
    default since the kernel sum and the index tie rule may differ
    there.  Agreement is expected to rise as sigma shrinks; the trend is
    reported, not enforced.
    """
    metric = metric or EuclideanMetric()
    model = knn.KnnModel(sample, metric, 1)
    ref = knn.predict_batch(model, probes.points)
    keep = np.ones(len(probes), dtype=bool)
    if exclude_ties:
        keep = ~min_distance_tie_mask(sample, probes.points, metric)
    if not keep.any():
        raise ConfigurationError("every probe is a distance tie; nothing to compare")
    out = []
    for sigma in sigmas:
        clf = KernelClassifier(sample, sample.labels, RbfKernel(float(sigma)), metric)
        preds = kernel_predict_batch(clf, probes.points)
        agree = float(np.mean(preds[keep] == ref[keep]))
        out.append((float(sigma), agree, int(keep.sum())))
    return out
