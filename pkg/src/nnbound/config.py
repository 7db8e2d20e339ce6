"""Run configuration: key=value files, probe specs and generator specs.

Config files are plain text, one ``key = value`` per line; ``#`` starts
a comment.  Every key is validated against the known set before any
computation happens, and command-line flags override file values.
"""

from __future__ import annotations

import os

import numpy as np

from .data import (
    EuclideanMetric,
    LabeledSample,
    Metric,
    PrecomputedMetric,
    ProbeDomain,
    SquaredEuclideanMetric,
    load_dataset,
    load_distance_matrix,
)
from .errors import ConfigurationError, DataError
from .synth import GENERATORS, SyntheticSpec, generate

KNOWN_KEYS = {
    "dataset": "path to a dataset CSV",
    "generator": "synthetic data spec, e.g. two-gaussians:count=50,spread=0.25",
    "header": "true when the dataset CSV has a header row",
    "metric": "euclidean | sqeuclidean | matrix:<path>",
    "k": "neighbour count",
    "sigmas": "comma-separated kernel bandwidths",
    "probe": "grid:<axes> | file:<path> | dataset",
    "delta": "confidence parameter in (0,1)",
    "sparsity": "comma-separated sparsity prior values in [0,1[",
    "redundancy_method": "greedy | exhaustive",
    "exhaustive_threshold": "max m for the exhaustive search",
    "greedy_order": "by-margin-desc | by-index",
    "reject_threshold": "vote threshold L for the reject-option rule",
    "outdir": "output directory",
    "seed": "RNG seed",
    "abstain_as_half": "true to score abstentions as 0.5 errors",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def load_config(path: str) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"{path}:{lineno}: expected 'key = value', got {line!r}"
            )
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigurationError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_bool(value: str, key: str) -> bool:
    low = value.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ConfigurationError(f"{key} must be a boolean, got {value!r}")


def parse_float_list(value: str, key: str) -> list[float]:
    try:
        items = [float(v) for v in value.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"{key}: {exc}") from exc
    if not items:
        raise ConfigurationError(f"{key} must list at least one value")
    return items


def make_metric(spec: str) -> Metric:
    if spec == "euclidean":
        return EuclideanMetric()
    if spec == "sqeuclidean":
        return SquaredEuclideanMetric()
    if spec.startswith("matrix:"):
        return PrecomputedMetric(load_distance_matrix(spec.split(":", 1)[1]))
    raise ConfigurationError(f"unknown metric {spec!r}")


def parse_generator_spec(text: str, seed: int) -> SyntheticSpec:
    """``<generator-id>[:k=v,...]``, e.g. two-gaussians:count=50,spread=0.25."""
    name, _, rest = text.partition(":")
    if name not in GENERATORS:
        raise ConfigurationError(
            f"unknown generator {name!r} (choose from {', '.join(GENERATORS)})"
        )
    params: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            if "=" not in item:
                raise ConfigurationError(
                    f"generator parameter {item!r} must look like key=value"
                )
            key, value = item.split("=", 1)
            params[key.strip()] = value.strip()
    return SyntheticSpec(generator=name, seed=int(seed), params=params)


def parse_probe_spec(
    text: str,
    sample: LabeledSample | None = None,
) -> ProbeDomain:
    """``grid:min,max,steps[,dims]`` (or ;-separated per-axis triples),
    ``file:<path>`` or ``dataset``."""
    if text == "dataset":
        if sample is None:
            raise ConfigurationError("probe 'dataset' needs a dataset in context")
        return ProbeDomain.from_dataset(sample)
    if text.startswith("file:"):
        path = text.split(":", 1)[1]
        probe_sample_path = path
        try:
            with open(path, "r", encoding="utf-8", newline=None) as fh:
                rows = [
                    [float(c) for c in line.split(",")]
                    for line in fh.read().split("\n")
                    if line.strip()
                ]
        except OSError as exc:
            raise DataError(f"cannot read probe file {path!r}: {exc}") from exc
        except ValueError as exc:
            raise DataError(f"probe file {path!r}: {exc}") from exc
        if not rows:
            raise DataError(f"probe file {path!r} is empty")
        return ProbeDomain.from_points(np.array(rows), probe_sample_path)
    if text.startswith("grid:"):
        body = text.split(":", 1)[1]
        segments = [seg for seg in body.split(";") if seg.strip()]
        if not segments:
            raise ConfigurationError(f"empty grid spec {text!r}")
        axes: list[tuple[float, float, int]] = []
        if len(segments) == 1 and len(segments[0].split(",")) == 4:
            lo, hi, steps, dims = segments[0].split(",")
            try:
                axis = (float(lo), float(hi), int(steps))
                ndims = int(dims)
            except ValueError as exc:
                raise ConfigurationError(f"bad grid spec {text!r}: {exc}") from exc
            axes = [axis] * ndims
        else:
            for seg in segments:
                parts = seg.split(",")
                if len(parts) != 3:
                    raise ConfigurationError(
                        f"grid axis {seg!r} must be min,max,steps"
                    )
                try:
                    axes.append((float(parts[0]), float(parts[1]), int(parts[2])))
                except ValueError as exc:
                    raise ConfigurationError(f"bad grid axis {seg!r}: {exc}") from exc
        return ProbeDomain.from_grid(axes)
    raise ConfigurationError(f"unknown probe spec {text!r}")


def resolve_sample(cfg: dict[str, str]) -> LabeledSample:
    """Load the dataset or generate synthetic data, as configured."""
    has_dataset = "dataset" in cfg
    has_generator = "generator" in cfg
    if has_dataset and has_generator:
        raise ConfigurationError("give either 'dataset' or 'generator', not both")
    if has_dataset:
        header = parse_bool(cfg.get("header", "false"), "header")
        return load_dataset(cfg["dataset"], has_header=header)
    if has_generator:
        seed = int(cfg.get("seed", "0"))
        return generate(parse_generator_spec(cfg["generator"], seed))
    raise ConfigurationError("missing key 'dataset' (or 'generator')")


def require(cfg: dict[str, str], key: str) -> str:
    if key not in cfg:
        raise ConfigurationError(f"missing key {key!r}")
    return cfg[key]


def resolve_outdir(cfg: dict[str, str]) -> str:
    outdir = require(cfg, "outdir")
    os.makedirs(outdir, exist_ok=True)
    return outdir
