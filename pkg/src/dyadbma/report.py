"""Result files and ranked determinant tables.

All floats are written with 6 significant digits so reruns produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, SchemaError


def fmt(x):
    """6 significant digits, no negative zero, fixed spellings for non-finite values."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = format(x, ".6g")
    return "0" if s in ("-0", "0") else s


@dataclass(frozen=True)
class RankedRow:
    name: str
    pip: float
    post_mean: float
    post_sd: float
    robust: bool


def render_ranked_table(result, threshold=0.8):
    """Rows by descending PIP (ties: larger |posterior mean|, then name); rows
    with PIP at or above ``threshold`` are marked robust."""
    rows = [RankedRow(n, float(p), float(m), float(s), bool(p >= threshold))
            for n, p, m, s in zip(result.names, result.pip, result.post_mean, result.post_sd)]
    return sorted(rows, key=lambda r: (-r.pip, -abs(r.post_mean), r.name))


def format_ranked_table(rows, n_obs):
    """Markdown table; robust rows in bold, observation count as the last row."""
    lines = ["| | PI prob. | Pt. Mean | Pt. Std. |", "|---|---|---|---|"]
    for r in rows:
        name = f"**{r.name}**" if r.robust else r.name
        lines.append(f"| {name} | {fmt(r.pip)} | {fmt(r.post_mean)} | {fmt(r.post_sd)} |")
    lines.append(f"| Observations | {n_obs} | {n_obs} | {n_obs} |")
    return "\n".join(lines) + "\n"


def render_prior_comparison(results):
    """Long-format ``(regressor, prior_label, pip)`` records for plotting.

    ``results`` is a list of ``(label, BmaResult)``; regressors follow the
    ranked order of the first result.
    """
    if not results:
        return []
    base = set(results[0][1].names)
    for label, res in results[1:]:
        if set(res.names) != base:
            raise InputError(f"result {label!r} has a different regressor set")
    order = [r.name for r in render_ranked_table(results[0][1])]
    records = []
    for name in order:
        for label, res in results:
            records.append((name, label, float(res.pip[list(res.names).index(name)])))
    return records


def write_prior_comparison(records, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["regressor", "prior", "pip"])
        for name, label, pip in records:
            w.writerow([name, label, fmt(pip)])


def read_prior_comparison(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [(r["regressor"], r["prior"], float(r["pip"])) for r in csv.DictReader(fh)]


@dataclass
class LoadedBma:
    """BMA results read back from disk (enough for tables, nothing more)."""

    names: tuple
    pip: np.ndarray
    post_mean: np.ndarray
    post_sd: np.ndarray
    n: int | None = None
    label: str = ""


def write_bma(result, out_dir):
    """``results.csv``, ``top_models.csv``, ``metadata.json`` (deterministic) and
    ``timing.json`` (wall time only)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "pip", "post_mean", "post_sd"])
        for n, p, m, s in zip(result.names, result.pip, result.post_mean, result.post_sd):
            w.writerow([n, fmt(p), fmt(m), fmt(s)])
    with (out / "top_models.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "mask", "posterior_prob", "size", "regressors"])
        for rank, (mask, prob) in enumerate(result.top_models, 1):
            bits = format(mask, f"0{result.k}b") if result.k else ""
            w.writerow([rank, bits, fmt(prob), bin(mask).count("1"), ";".join(result.mask_names(mask))])
    meta = {
        "method": result.method,
        "n": result.n,
        "k": result.k,
        "g": fmt(result.g),
        "g_rule": result.prior.g_label(),
        "model_prior": result.prior.label(),
        "log_evidence": fmt(result.log_evidence),
        "regressors": list(result.names),
        "fixed": list(result.extra.get("fixed", ())),
        "mask_bit_order": "rightmost character is the first regressor",
    }
    for key in ("steps", "burn_in", "seed"):
        if key in result.extra:
            meta[key] = result.extra[key]
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "timing.json").write_text(json.dumps({"wall_time_s": result.wall_time}) + "\n", encoding="utf-8")


def read_bma(path):
    path = Path(path)
    if path.is_dir():
        path = path / "results.csv"
        if not path.exists():
            raise SchemaError(f"{path.parent} holds no BMA results")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "pip" not in reader.fieldnames:
            raise SchemaError(f"{path} is not a BMA results file")
        rows = list(reader)
    meta = path.parent / "metadata.json"
    n = json.loads(meta.read_text(encoding="utf-8"))["n"] if meta.exists() else None
    return LoadedBma(
        names=tuple(r["name"] for r in rows),
        pip=np.array([float(r["pip"]) for r in rows]),
        post_mean=np.array([float(r["post_mean"]) for r in rows]),
        post_sd=np.array([float(r["post_sd"]) for r in rows]),
        n=n,
    )


def wals_rows(result, t_robust=2.0, include_intercept=False):
    return [(result.names[r], float(result.coef[r]), float(result.se[r]), float(result.t[r]),
             bool(abs(result.t[r]) > t_robust))
            for r in result.ranked(include_intercept)]


def write_wals(result, out_dir, t_robust=2.0):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "wals_results.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "coef", "se", "t", "robust"])
        for name, c, s, t, rob in wals_rows(result, t_robust, include_intercept=True):
            w.writerow([name, fmt(c), fmt(s), fmt(t), int(rob)])
    meta = {"n": result.n, "sigma": fmt(result.sigma), "focus": list(result.focus),
            "laplace_c": fmt(result.config.laplace_c), "t_robust": fmt(t_robust),
            "dropped_directions": result.dropped_directions}
    (out / "wals_metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")


def read_wals_rows(path):
    path = Path(path)
    if path.is_dir():
        path = path / "wals_results.csv"
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "t" not in reader.fieldnames:
            raise SchemaError(f"{path} is not a WALS results file")
        return [(r["name"], float(r["coef"]), float(r["se"]), float(r["t"])) for r in reader]


def format_wals_table(rows, n_obs, t_robust=2.0):
    """Markdown table ordered by descending |t|; |t| above ``t_robust`` in bold."""
    rows = sorted(rows, key=lambda r: (-abs(r[3]), r[0]))
    lines = ["| | Coef. | Std. | t-stat. |", "|---|---|---|---|"]
    for name, c, s, t in rows:
        label = f"**{name}**" if abs(t) > t_robust else name
        lines.append(f"| {label} | {fmt(c)} | {fmt(s)} | {fmt(t)} |")
    lines.append(f"| Observations | {n_obs} | {n_obs} | {n_obs} |")
    return "\n".join(lines) + "\n"


def write_summary(summary, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variable", "n", "mean", "sd", "min", "max"])
        for name, s in summary.items():
            w.writerow([name, s.n, *("" if v is None else fmt(v) for v in (s.mean, s.sd, s.min, s.max))])


def write_recovery(report, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = report.rows()
    with (out / "recovery.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([r["name"]] + [fmt(v) for k, v in r.items() if k != "name"])
    with (out / "recovery_pips.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replication", "n_dyads", *report.names])
        for r, pips in zip(report.replications, report.pips):
            w.writerow([r, int(report.n_dyads[r]), *(fmt(p) for p in pips)])
    meta = {
        "replications": len(report.replications),
        "seed": report.seed,
        "threshold": fmt(report.threshold),
        "prior": report.prior.label(),
        "g_rule": report.prior.g_label(),
        "true_positive_rate": fmt(report.true_positive_rate()),
        "false_positive_rate": fmt(report.false_positive_rate()),
    }
    (out / "recovery_metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                                encoding="utf-8")
