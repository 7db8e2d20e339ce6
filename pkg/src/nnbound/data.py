"""Datasets, labels, metrics, distance matrices and probe domains.

Conventions used throughout the package:

* Training objects are indexed 0..m-1 in file/row order.  Row order is
  significant: distance ties are broken towards the lower index.
* Labels are exactly -1 or +1 (stored as int64); no other encoding.
* Distances are compared with exact floating-point equality.  A
  "distance tie" means bitwise-equal distances; no epsilon is applied,
  since an epsilon would silently change neighbourhood membership.
* A ProbeDomain is a finite, ordered list of query points that stands in
  for the whole object space whenever a "for all objects" condition has
  to be checked.  Results quantified over probes are tagged with the
  probe provenance so they cannot be mistaken for domain-exact claims.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    DataError,
    EmptySampleError,
    ParseError,
    ValidationError,
)

VALID_LABELS = (-1, 1)


def validate_label(value: int) -> int:
    """Return the label as a plain int, rejecting anything but -1/+1."""
    iv = int(value)
    if iv != value or iv not in VALID_LABELS:
        raise ValidationError(f"label must be -1 or +1, got {value!r}")
    return iv


@dataclass(frozen=True)
class LabeledSample:
    """An ordered training sample of m points with binary labels.

    ``points`` is an (m, n) float64 array.  When a precomputed-matrix
    metric is used, the single coordinate of each point is its integer
    row id in the matrix.
    """

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ValidationError(f"points must be 2-D, got shape {pts.shape}")
        labs = np.asarray(self.labels, dtype=np.int64)
        if labs.ndim != 1 or labs.shape[0] != pts.shape[0]:
            raise ValidationError(
                f"{pts.shape[0]} points but {labs.shape} labels"
            )
        if pts.shape[0] < 1:
            raise EmptySampleError("a sample needs at least one example")
        if pts.shape[1] < 1:
            raise ValidationError("points need at least one coordinate")
        bad = np.nonzero(~np.isin(labs, VALID_LABELS))[0]
        if bad.size:
            raise ValidationError(
                f"label must be -1 or +1, got {labs[bad[0]]} at row {bad[0]}"
            )
        pts.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n_dims(self) -> int:
        return self.points.shape[1]

    def subset(self, keep: np.ndarray) -> "LabeledSample":
        """Sample restricted to ``keep`` (bool mask or index array), order kept."""
        return LabeledSample(self.points[keep], self.labels[keep])


class Metric:
    """Distance measure between objects.

    ``dist`` evaluates one pair; ``pairwise`` evaluates an (a, b) block
    and must agree with ``dist`` entry for entry.
    """

    name = "abstract"

    def dist(self, a: np.ndarray, b: np.ndarray) -> float:
        raise NotImplementedError

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        out = np.empty((a.shape[0], b.shape[0]))
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                out[i, j] = self.dist(a[i], b[j])
        return out


class EuclideanMetric(Metric):
    """Standard Euclidean distance on coordinate vectors."""

    name = "euclidean"

    def dist(self, a, b) -> float:
        diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
        return float(np.sqrt(np.dot(diff, diff)))

    def pairwise(self, a, b) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        if a.shape[1] != b.shape[1]:
            raise ConfigurationError(
                f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
            )
        # Differences first so that d(x, x) is exactly 0 and symmetric
        # configurations produce bitwise-equal distances (tie detection
        # relies on exact equality).
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


class SquaredEuclideanMetric(Metric):
    """Squared Euclidean distance.

    A strictly increasing transform of the Euclidean distance; it keeps
    the full ordering and tie structure, so rank-based predictions are
    unchanged while kernel evaluations see d^2 directly.
    """

    name = "sqeuclidean"

    def __init__(self) -> None:
        self._inner = EuclideanMetric()

    def dist(self, a, b) -> float:
        d = self._inner.dist(a, b)
        return d * d

    def pairwise(self, a, b) -> np.ndarray:
        d = self._inner.pairwise(a, b)
        return d * d


class PrecomputedMetric(Metric):
    """Distance lookup in a stored square matrix.

    Objects are single-coordinate points whose value is an integer row
    id.  Lookups return the stored entries bit-exactly, which makes the
    metric usable for structural data (strings, graphs) that has no
    vector representation.
    """

    name = "precomputed"

    def __init__(self, matrix: np.ndarray, *, require_symmetric: bool = True):
        mat = np.asarray(matrix, dtype=np.float64)
        if mat.ndim != 2:
            raise ValidationError("distance matrix must be 2-D")
        if np.any(mat < 0):
            raise ValidationError("distance matrix entries must be >= 0")
        if require_symmetric:
            if mat.shape[0] != mat.shape[1]:
                raise ValidationError(
                    f"square matrix required, got {mat.shape}"
                )
            if not np.array_equal(mat, mat.T):
                raise ValidationError("distance matrix is not symmetric")
            if np.any(np.diag(mat) != 0.0):
                raise ValidationError("self-distances must be exactly 0")
        mat.setflags(write=False)
        self.matrix = mat

    def _ids(self, x) -> np.ndarray:
        arr = np.atleast_2d(np.asarray(x, dtype=np.float64))
        ids = arr[:, 0].astype(np.int64)
        if np.any(arr[:, 0] != ids):
            raise ConfigurationError("precomputed metric needs integer ids")
        if np.any(ids < 0) or np.any(ids >= self.matrix.shape[0]):
            raise ConfigurationError(
                f"object id out of range 0..{self.matrix.shape[0] - 1}"
            )
        return ids

    def dist(self, a, b) -> float:
        ia = self._ids(np.atleast_1d(a))[0]
        ib = self._ids(np.atleast_1d(b))[0]
        return float(self.matrix[ia, ib])

    def pairwise(self, a, b) -> np.ndarray:
        return self.matrix[np.ix_(self._ids(a), self._ids(b))]


METRICS = {
    "euclidean": EuclideanMetric,
    "sqeuclidean": SquaredEuclideanMetric,
}


@dataclass(frozen=True)
class ProbeDomain:
    """Finite ordered set of query points used for "for all objects" checks.

    ``kind`` is one of ``grid``, ``dataset`` or ``user-file``; the
    descriptor spells out how the probes were produced so that every
    downstream report can state what its redundancy figures are relative
    to.
    """

    points: np.ndarray
    kind: str
    descriptor: str

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[0] < 1:
            raise ValidationError("probe domain must be non-empty")
        if self.kind not in ("grid", "dataset", "user-file"):
            raise ValidationError(f"unknown probe kind {self.kind!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @staticmethod
    def from_grid(axes: list[tuple[float, float, int]]) -> "ProbeDomain":
        """Cartesian grid; ``axes`` holds (min, max, steps) per axis."""
        if not axes:
            raise ConfigurationError("grid needs at least one axis")
        coords = []
        for lo, hi, steps in axes:
            if steps < 1:
                raise ConfigurationError("grid steps must be >= 1")
            if hi < lo:
                raise ConfigurationError(f"grid axis {lo}..{hi} is inverted")
            coords.append(np.linspace(lo, hi, int(steps)))
        mesh = np.meshgrid(*coords, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        desc = "grid:" + ";".join(
            f"{lo:g},{hi:g},{int(steps)}" for lo, hi, steps in axes
        )
        return ProbeDomain(pts, "grid", desc)

    @staticmethod
    def from_dataset(sample: LabeledSample) -> "ProbeDomain":
        return ProbeDomain(
            sample.points, "dataset", f"dataset:m={sample.m}"
        )

    @staticmethod
    def from_points(points: np.ndarray, source: str) -> "ProbeDomain":
        pts = np.asarray(points, dtype=np.float64)
        return ProbeDomain(pts, "user-file", f"file:{source}")


def _split_row(line: str) -> list[str]:
    return [cell.strip() for cell in line.split(",")]


def load_dataset(path: str, fmt: str = "csv", *, has_header: bool = False) -> LabeledSample:
    """Read a dataset file: one row per example, ``x1,...,xn,label``.

    Labels must be -1, 1 or +1.  UTF-8, LF or CRLF line endings.  Raises
    ParseError/ValidationError with the offending 1-based line number,
    EmptySampleError when no data rows are present.
    """
    if fmt != "csv":
        raise ConfigurationError(f"unknown dataset format {fmt!r}")
    try:
        with open(path, "r", encoding="utf-8", newline=None) as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path!r}: {exc}") from exc
    rows: list[list[float]] = []
    labels: list[int] = []
    n_dims = None
    for lineno, line in enumerate(lines, start=1):
        if lineno == 1 and has_header:
            continue
        if not line.strip():
            continue
        cells = _split_row(line)
        if len(cells) < 2:
            raise ParseError(
                f"{path}:{lineno}: expected 'x1,...,xn,label', got {line!r}"
            )
        *coords, label_cell = cells
        try:
            row = [float(c) for c in coords]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad coordinate: {exc}") from exc
        try:
            label = int(label_cell)
        except ValueError as exc:
            raise ParseError(
                f"{path}:{lineno}: bad label {label_cell!r}"
            ) from exc
        if label not in VALID_LABELS:
            raise ValidationError(
                f"{path}:{lineno}: label must be -1 or +1, got {label_cell}"
            )
        if n_dims is None:
            n_dims = len(row)
        elif len(row) != n_dims:
            raise ParseError(
                f"{path}:{lineno}: expected {n_dims} coordinates, got {len(row)}"
            )
        rows.append(row)
        labels.append(label)
    if not rows:
        raise EmptySampleError(f"{path}: dataset is empty")
    return LabeledSample(np.array(rows), np.array(labels))


def save_dataset(sample: LabeledSample, path: str) -> None:
    """Write a sample in the dataset CSV format (no header, LF endings).

    Floats are written with shortest round-trip formatting, so a
    save/load cycle reproduces the sample exactly.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row, label in zip(sample.points, sample.labels):
            cells = [repr(float(x)) for x in row]
            cells.append(str(int(label)))
            fh.write(",".join(cells) + "\n")


def load_distance_matrix(path: str) -> np.ndarray:
    """Read a distance matrix file: first row ``m p``, then m rows of p entries."""
    try:
        with open(path, "r", encoding="utf-8", newline=None) as fh:
            lines = [ln for ln in fh.read().split("\n") if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read matrix {path!r}: {exc}") from exc
    if not lines:
        raise ParseError(f"{path}:1: empty matrix file")
    header = lines[0].replace(",", " ").split()
    if len(header) != 2:
        raise ParseError(f"{path}:1: expected 'm p' header, got {lines[0]!r}")
    try:
        m, p = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ParseError(f"{path}:1: bad header: {exc}") from exc
    if len(lines) - 1 != m:
        raise ParseError(f"{path}: expected {m} data rows, got {len(lines) - 1}")
    mat = np.empty((m, p))
    for i, line in enumerate(lines[1:], start=2):
        cells = line.replace(",", " ").split()
        if len(cells) != p:
            raise ParseError(f"{path}:{i}: expected {p} entries, got {len(cells)}")
        try:
            mat[i - 2] = [float(c) for c in cells]
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: bad entry: {exc}") from exc
    if np.any(mat < 0):
        raise ValidationError(f"{path}: negative distance entry")
    return mat


def save_distance_matrix(matrix: np.ndarray, path: str) -> None:
    mat = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{mat.shape[0]} {mat.shape[1]}\n")
        for row in mat:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def pairwise_distances(
    sample: LabeledSample,
    probes: ProbeDomain,
    metric: Metric,
    *,
    workers: int = 1,
) -> np.ndarray:
    """(m, p) matrix with entry [i, j] = dist(o_i, probe_j).

    May be chunked over probes across ``workers`` threads; every probe
    column is computed independently, so the result does not depend on
    the worker count.
    """
    pts = probes.points
    if workers <= 1 or pts.shape[0] < 2 * workers:
        return metric.pairwise(sample.points, pts)
    bounds = np.linspace(0, pts.shape[0], workers + 1, dtype=int)
    chunks = [pts[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        blocks = list(pool.map(lambda c: metric.pairwise(sample.points, c), chunks))
    return np.concatenate(blocks, axis=1)


@dataclass
class MetricDiagnostics:
    """Sampled axiom violations; empty lists mean none were observed."""

    trials: int
    negativity: list = field(default_factory=list)
    identity: list = field(default_factory=list)
    symmetry: list = field(default_factory=list)
    triangle: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.negativity or self.identity or self.symmetry or self.triangle)

    def summary(self) -> str:
        return (
            f"trials={self.trials} negativity={len(self.negativity)} "
            f"identity={len(self.identity)} symmetry={len(self.symmetry)} "
            f"triangle={len(self.triangle)}"
        )


def check_metric_axioms(
    metric: Metric,
    objects: np.ndarray,
    trials: int = 1000,
    *,
    seed: int = 0,
) -> MetricDiagnostics:
    """Probe metric axioms on sampled tuples and report violations.

    Diagnostics only: nothing in the classifier requires the triangle
    inequality, so violations are reported with their witnessing tuples
    but never raised as errors.
    """
    objs = np.atleast_2d(np.asarray(objects, dtype=np.float64))
    n = objs.shape[0]
    if n < 3:
        raise ConfigurationError("need at least 3 objects to sample triples")
    rng = np.random.Generator(np.random.PCG64(seed))
    report = MetricDiagnostics(trials=trials)
    for _ in range(trials):
        i, j, k = rng.integers(0, n, size=3)
        dij = metric.dist(objs[i], objs[j])
        dji = metric.dist(objs[j], objs[i])
        dii = metric.dist(objs[i], objs[i])
        dik = metric.dist(objs[i], objs[k])
        dkj = metric.dist(objs[k], objs[j])
        if dij < 0 or dji < 0:
            report.negativity.append((int(i), int(j), dij))
        if dii != 0.0:
            report.identity.append((int(i), dii))
        if dij != dji:
            report.symmetry.append((int(i), int(j), dij, dji))
        if dij > dik + dkj + 1e-12 * max(1.0, abs(dik + dkj)):
            report.triangle.append((int(i), int(k), int(j), dij, dik, dkj))
    return report
