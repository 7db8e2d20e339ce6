"""Command-line front end.

Every command is a pipeline of pure stages over an effective
configuration assembled from an optional ``--config`` file plus flag
overrides.  Output files are written atomically (temp file + rename)
with fixed 15-significant-digit float formatting, so a command run
twice with the same inputs produces byte-identical files regardless of
the worker count.

Exit codes: 0 ok, 2 usage/config, 3 data, 4 failed internal verification.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

import numpy as np

from . import bounds, kernel, knn, redundancy
from .config import (
    KNOWN_KEYS,
    load_config,
    make_metric,
    parse_bool,
    parse_float_list,
    parse_probe_spec,
    require,
    resolve_outdir,
    resolve_sample,
)
from .csvio import (
    fmt_float,
    write_csv_atomic,
    write_json_atomic,
    write_jsonl_atomic,
    write_text_atomic,
)
from .data import save_dataset
from .errors import (
    ConfigurationError,
    DataError,
    NnboundError,
    VerificationError,
)
from .parallel import worker_count

DEFAULT_SIGMAS = "5,0.4,0.02"
DEFAULT_FIG1_GRID = "grid:-1,1,200,2"


def _effective(args: argparse.Namespace) -> dict[str, str]:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    for key in KNOWN_KEYS:
        value = getattr(args, key, None)
        if value is None or value is False:
            continue
        cfg[key] = "true" if value is True else str(value)
    return cfg


@contextmanager
def _stage(name: str):
    try:
        yield
    except NnboundError as exc:
        raise type(exc)(f"stage {name}: {exc}") from exc


def _chunked(fn, points: np.ndarray, workers: int) -> np.ndarray:
    """Apply a per-row-independent batch function in ordered chunks."""
    if workers <= 1 or points.shape[0] < 2 * workers:
        return np.asarray(fn(points))
    edges = np.linspace(0, points.shape[0], workers + 1, dtype=int)
    chunks = [points[a:b] for a, b in zip(edges[:-1], edges[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: np.asarray(fn(c)), chunks))
    return np.concatenate(parts)


# ---------------------------------------------------------------- classify


def _classification_summary(cfg, sample, metric, model) -> tuple[dict, np.ndarray]:
    vote = knn.votes(model, sample.points)
    margins = sample.labels * vote
    abstain_as_half = parse_bool(cfg.get("abstain_as_half", "false"), "abstain_as_half")
    summary = {
        "m": sample.m,
        "k": model.k,
        "metric": metric.name,
        "R_emp": knn.empirical_risk(model, sample, abstain_as_half=abstain_as_half),
        "gamma_Z": int(margins.min()),
    }
    if "reject_threshold" in cfg:
        threshold = int(cfg["reject_threshold"])
        summary["L"] = threshold
        summary["rho_L"] = knn.rejection_rate(model, threshold, sample.points)
    return summary, vote


def _summary_text(summary: dict) -> str:
    lines = []
    for key, value in summary.items():
        if isinstance(value, float):
            lines.append(f"{key}={value:.6f}")
        else:
            lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def cmd_classify(args: argparse.Namespace) -> None:
    cfg = _effective(args)
    sample = resolve_sample(cfg)
    metric = make_metric(cfg.get("metric", "euclidean"))
    k = int(require(cfg, "k"))
    model = knn.KnnModel(sample, metric, k)
    outdir = resolve_outdir(cfg)

    summary, vote = _classification_summary(cfg, sample, metric, model)
    preds = np.sign(vote).astype(np.int64)
    margins = sample.labels * vote
    rows = [
        [str(i), str(int(p)), str(int(v)), str(int(g))]
        for i, (p, v, g) in enumerate(zip(preds, vote, margins))
    ]
    write_csv_atomic(
        os.path.join(outdir, "predictions.csv"),
        ["query_index", "prediction", "vote", "margin"],
        rows,
    )
    text = _summary_text(summary)
    write_text_atomic(os.path.join(outdir, "summary.txt"), text)
    sys.stdout.write(text)


# -------------------------------------------------------------- redundancy


def _run_redundancy(cfg, sample, metric, k):
    probes = parse_probe_spec(require(cfg, "probe"), sample)
    method = cfg.get("redundancy_method", "greedy")
    if method == "exhaustive":
        threshold = int(cfg.get("exhaustive_threshold", redundancy.DEFAULT_EXHAUSTIVE_LIMIT))
        report = redundancy.max_redundant_exhaustive(
            sample, k, probes, metric, max_exhaustive_m=threshold
        )
    elif method == "greedy":
        order = cfg.get("greedy_order", "by-margin-desc")
        report = redundancy.max_redundant_greedy(sample, k, probes, metric, order=order)
    else:
        raise ConfigurationError(f"unknown redundancy_method {method!r}")
    # Soundness gate: never emit a report whose removal set does not
    # re-verify against the stored probe domain.
    if not redundancy.is_redundant_subset(sample, report.removed, k, probes, metric):
        raise VerificationError(
            "redundancy report failed re-verification; refusing to emit it"
        )
    return report, probes


def cmd_redundancy(args: argparse.Namespace) -> None:
    cfg = _effective(args)
    sample = resolve_sample(cfg)
    metric = make_metric(cfg.get("metric", "euclidean"))
    k = int(require(cfg, "k"))
    outdir = resolve_outdir(cfg)
    report, _ = _run_redundancy(cfg, sample, metric, k)
    write_jsonl_atomic(os.path.join(outdir, "redundancy.jsonl"), [report.to_record()])
    sys.stdout.write(
        f"method={report.method} r={report.r} removed={list(report.removed)} "
        f"probe={report.probe_descriptor} maximal_certified={report.maximal_certified}\n"
    )


# ------------------------------------------------------------------- bound


def _bound_rows(thms, m, r, delta, s_values, r_emp, log_prior):
    rows = []
    for thm in thms:
        if thm in (1, 2):
            prior = (
                bounds.LogPriorMass(log_prior)
                if log_prior is not None
                else bounds.simple_prior_mass(m, r)
            )
            if thm == 1:
                res = bounds.thm1_bound(prior, m, delta)
                rows.append((res, None, None))
            else:
                res = bounds.thm2_bound(prior, m, delta, r_emp)
                rows.append((res, None, r_emp))
        elif thm == 3:
            rows.append((bounds.thm3_bound(m, r, delta), None, None))
        elif thm in (4, 5):
            if not s_values:
                raise ConfigurationError(
                    f"--S is required for theorem {thm} (sparsity in [0,1[)"
                )
            for s in s_values:
                if thm == 4:
                    rows.append((bounds.thm4_bound(m, r, delta, s), s, None))
                else:
                    rows.append((bounds.thm5_bound(m, r, delta, s, r_emp), s, r_emp))
        else:
            raise ConfigurationError(f"unknown theorem {thm}; choose 1..5")
    return rows


def _bound_csv_lines(rows, m, r, delta) -> list[str]:
    lines = ["theorem,m,r,delta,S,R_emp,bound,raw,clamped"]
    for res, s, r_emp in rows:
        clamped = int(res.clamped_low or res.clamped_high or res.radicand_clamped)
        cells = [
            res.theorem,
            str(m),
            str(r),
            fmt_float(delta),
            "" if s is None else fmt_float(s),
            "" if r_emp is None else fmt_float(r_emp),
            fmt_float(res.value),
            fmt_float(res.raw),
            str(clamped),
        ]
        lines.append(",".join(cells))
    return lines


def cmd_bound(args: argparse.Namespace) -> None:
    try:
        thms = [int(t) for t in str(args.thm).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"--thm: {exc}") from exc
    if not thms:
        raise ConfigurationError("--thm must name at least one theorem")
    m = int(args.m)
    r = int(args.r)
    delta = float(args.delta)
    s_values = parse_float_list(args.S, "--S") if args.S else []
    r_emp = float(args.r_emp)
    log_prior = float(args.log_prior) if args.log_prior is not None else None
    rows = _bound_rows(thms, m, r, delta, s_values, r_emp, log_prior)
    lines = _bound_csv_lines(rows, m, r, delta)
    text = "\n".join(lines) + "\n"
    if args.out:
        write_text_atomic(args.out, text)
    sys.stdout.write(text)


# ----------------------------------------------------------------- figures


def cmd_fig2(args: argparse.Namespace) -> None:
    m = int(args.m)
    delta = float(args.delta)
    r_list = [int(v) for v in str(args.r_list).split(",") if v.strip()]
    if not r_list:
        raise ConfigurationError("--r-list must name at least one r")
    step = float(args.s_step)
    if not 0.0 < step < 1.0:
        raise ConfigurationError(f"--s-step must lie in (0,1), got {step}")
    n_steps = int(round(1.0 / step))
    s_grid = [i * step for i in range(n_steps) if i * step < 1.0]
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)

    header = ["S"] + [f"bound_r{r}" for r in r_list]
    rows = []
    for s in s_grid:
        rows.append(
            [fmt_float(s)]
            + [fmt_float(bounds.thm4_bound(m, r, delta, s).value) for r in r_list]
        )
    write_csv_atomic(os.path.join(outdir, "fig2.csv"), header, rows)

    sopt_rows = []
    for r in r_list:
        s_opt, best = bounds.optimize_sparsity(m, r, delta, "T4")
        sopt_rows.append(
            [
                str(r),
                fmt_float(s_opt),
                fmt_float(best),
                fmt_float(r / m),
                str(int(s_opt < r / m)),
            ]
        )
    write_csv_atomic(
        os.path.join(outdir, "fig2_sopt.csv"),
        ["r", "S_opt", "bound_at_opt", "r_over_m", "s_opt_lt_r_over_m"],
        sopt_rows,
    )
    sys.stdout.write(f"wrote fig2.csv and fig2_sopt.csv for m={m} delta={delta:g}\n")


def cmd_fig3(args: argparse.Namespace) -> None:
    m = int(args.m)
    delta = float(args.delta)
    s_values = parse_float_list(args.s_list, "--s-list")
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)
    header = ["r"] + [f"bound_S{format(s, 'g')}" for s in s_values]
    rows = []
    for r in range(m + 1):
        rows.append(
            [str(r)]
            + [fmt_float(bounds.thm4_bound(m, r, delta, s).value) for s in s_values]
        )
    write_csv_atomic(os.path.join(outdir, "fig3.csv"), header, rows)
    sys.stdout.write(f"wrote fig3.csv for m={m} delta={delta:g}\n")


def cmd_fig1(args: argparse.Namespace) -> None:
    cfg = _effective(args)
    if "dataset" not in cfg and "generator" not in cfg:
        cfg["generator"] = "two-gaussians"
    sample = resolve_sample(cfg)
    if sample.n_dims != 2:
        raise ConfigurationError(f"fig1 needs 2-D data, got {sample.n_dims}-D")
    if np.any(np.abs(sample.points) > 1.0):
        raise ConfigurationError("fig1 data must lie inside [-1,1]^2")
    metric = make_metric(cfg.get("metric", "euclidean"))
    sigmas = parse_float_list(cfg.get("sigmas", DEFAULT_SIGMAS), "sigmas")
    probes = parse_probe_spec(cfg.get("probe", DEFAULT_FIG1_GRID), sample)
    if probes.points.shape[1] != 2:
        raise ConfigurationError("fig1 probe grid must be 2-D")
    outdir = resolve_outdir(cfg)
    workers = worker_count()

    model = knn.KnnModel(sample, metric, 1)
    nn_raster = _chunked(lambda q: knn.predict_batch(model, q), probes.points, workers)
    rasters = []
    for sigma in sigmas:
        clf = kernel.KernelClassifier(
            sample, sample.labels, kernel.RbfKernel(float(sigma)), metric
        )
        rasters.append(
            _chunked(lambda q, c=clf: kernel.kernel_predict_batch(c, q), probes.points, workers)
        )
    ties = kernel.min_distance_tie_mask(sample, probes.points, metric)
    keep = ~ties

    header = (
        ["x", "y"]
        + [f"pred_sigma_{format(s, 'g')}" for s in sigmas]
        + ["pred_1nn"]
    )
    rows = []
    for j in range(len(probes)):
        row = [fmt_float(probes.points[j, 0]), fmt_float(probes.points[j, 1])]
        row += [str(int(r[j])) for r in rasters]
        row.append(str(int(nn_raster[j])))
        rows.append(row)
    write_csv_atomic(os.path.join(outdir, "fig1.csv"), header, rows)

    agree_rows = []
    for sigma, raster in zip(sigmas, rasters):
        agreement = float(np.mean(raster[keep] == nn_raster[keep])) if keep.any() else 0.0
        agree_rows.append([fmt_float(sigma), fmt_float(agreement), str(int(keep.sum()))])
        sys.stdout.write(f"sigma={sigma:g} agreement={agreement:.6f}\n")
    write_csv_atomic(
        os.path.join(outdir, "fig1_agreement.csv"),
        ["sigma", "agreement", "n_compared"],
        agree_rows,
    )
    save_dataset(sample, os.path.join(outdir, "dataset.csv"))


# --------------------------------------------------------------- selfbound


def cmd_selfbound(args: argparse.Namespace) -> None:
    cfg = _effective(args)
    sample = resolve_sample(cfg)
    metric = make_metric(cfg.get("metric", "euclidean"))
    k = int(require(cfg, "k"))
    delta = float(cfg.get("delta", "0.05"))
    s_values = parse_float_list(require(cfg, "sparsity"), "sparsity")
    if len(s_values) != 1:
        raise ConfigurationError("selfbound needs exactly one sparsity value")
    sparsity = s_values[0]
    outdir = resolve_outdir(cfg)

    with _stage("classify"):
        model = knn.KnnModel(sample, metric, k)
        summary, _ = _classification_summary(cfg, sample, metric, model)
    with _stage("redundancy"):
        report, _ = _run_redundancy(cfg, sample, metric, k)
    with _stage("bound"):
        if k == 1:
            res = bounds.thm4_bound(sample.m, report.r, delta, sparsity)
        else:
            res = bounds.thm5_bound(
                sample.m, report.r, delta, sparsity, summary["R_emp"]
            )

    record = {
        "K": k,
        "m": sample.m,
        "delta": delta,
        "sparsity": sparsity,
        "empirical_risk": summary["R_emp"],
        "training_margin": summary["gamma_Z"],
        "redundancy": report.to_record(),
        "r_scope": "probe-relative",
        "caveat": (
            "r counts removals that preserve predictions on the stated "
            "probe domain only; the bound is conditional on that domain "
            "standing in for the whole object space"
        ),
        "theorem": res.theorem,
        "bound": res.value,
        "raw": res.raw,
        "clamped_low": res.clamped_low,
        "clamped_high": res.clamped_high,
        "radicand_clamped": res.radicand_clamped,
    }
    if "rho_L" in summary:
        record["rejection_rate"] = summary["rho_L"]
        record["L"] = summary["L"]
    write_json_atomic(os.path.join(outdir, "selfbound.json"), record)
    save_dataset(sample, os.path.join(outdir, "dataset.csv"))
    sys.stdout.write(
        f"K={k} m={sample.m} R_emp={summary['R_emp']:.6f} r={report.r} "
        f"probe={report.probe_descriptor} S={sparsity:g} "
        f"theorem={res.theorem} bound={res.value:.6f}\n"
    )


# ------------------------------------------------------------------ parser


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--dataset", help="dataset CSV path")
    p.add_argument("--generator", help="synthetic data spec")
    p.add_argument("--header", action="store_true", default=None,
                   help="dataset CSV has a header row")
    p.add_argument("--metric", help="euclidean | sqeuclidean | matrix:<path>")
    p.add_argument("--seed", type=int, help="RNG seed for generators")
    p.add_argument("--outdir", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnbound",
        description=(
            "Nearest-neighbour classification with redundancy certificates "
            "and self-computed risk bounds"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="batch predictions plus risk/margin summary")
    _add_data_flags(p)
    p.add_argument("--k", type=int, help="neighbour count")
    p.add_argument("--reject-threshold", dest="reject_threshold", type=int,
                   help="vote threshold L for the reject-option rule")
    p.add_argument("--abstain-as-half", dest="abstain_as_half", action="store_true",
                   default=None, help="score abstentions as 0.5 errors")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("redundancy", help="certify a redundant training subset")
    _add_data_flags(p)
    p.add_argument("--k", type=int, help="neighbour count")
    p.add_argument("--probe", help="probe spec: grid:... | file:... | dataset")
    p.add_argument("--redundancy-method", dest="redundancy_method",
                   choices=["greedy", "exhaustive"])
    p.add_argument("--exhaustive-threshold", dest="exhaustive_threshold", type=int)
    p.add_argument("--greedy-order", dest="greedy_order",
                   choices=["by-margin-desc", "by-index"])
    p.set_defaults(func=cmd_redundancy)

    p = sub.add_parser("bound", help="evaluate risk bounds to a CSV table")
    p.add_argument("--thm", required=True, help="theorem ids, e.g. 4 or 3,4,5")
    p.add_argument("--m", required=True, type=int, help="sample size")
    p.add_argument("--r", required=True, type=int, help="redundancy count")
    p.add_argument("--delta", required=True, type=float, help="confidence in (0,1)")
    p.add_argument("--S", help="comma-separated sparsity values in [0,1[")
    p.add_argument("--r-emp", dest="r_emp", type=float, default=0.0,
                   help="empirical risk for theorems 2 and 5")
    p.add_argument("--log-prior", dest="log_prior", type=float,
                   help="override ln prior mass for theorems 1 and 2")
    p.add_argument("--out", help="also write the table to this file")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("fig1", help="decision-boundary rasters vs the 1-NN raster")
    _add_data_flags(p)
    p.add_argument("--sigmas", help="comma-separated bandwidths")
    p.add_argument("--probe", help="probe grid spec")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fig2", help="bound vs sparsity, one column per r")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--r-list", dest="r_list", default="60,75,90,99")
    p.add_argument("--s-step", dest="s_step", type=float, default=0.001)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", help="bound vs redundancy, one column per sparsity")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--s-list", dest="s_list", default="0,0.33,0.9,0.99")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("selfbound", help="classify, certify redundancy, bound the risk")
    _add_data_flags(p)
    p.add_argument("--k", type=int, help="neighbour count")
    p.add_argument("--probe", help="probe spec")
    p.add_argument("--delta", type=float)
    p.add_argument("--sparsity", help="sparsity prior value")
    p.add_argument("--redundancy-method", dest="redundancy_method",
                   choices=["greedy", "exhaustive"])
    p.add_argument("--exhaustive-threshold", dest="exhaustive_threshold", type=int)
    p.add_argument("--greedy-order", dest="greedy_order",
                   choices=["by-margin-desc", "by-index"])
    p.add_argument("--reject-threshold", dest="reject_threshold", type=int)
    p.set_defaults(func=cmd_selfbound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigurationError as exc:
        print(f"nnbound: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"nnbound: {exc}", file=sys.stderr)
        return 3
    except VerificationError as exc:
        print(f"nnbound: internal verification failed: {exc}", file=sys.stderr)
        return 4
    except NnboundError as exc:
        print(f"nnbound: {exc}", file=sys.stderr)
        return 4
    return 0
