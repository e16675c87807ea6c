"""Command-line driver: ``prep``, ``bma``, ``wals``, ``simulate``, ``report``.

Exit codes: 0 success, 2 input or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import report
from .bma import PriorSpec, compute_sufficient_stats, enumerate_bma, mc3_bma
from .dyads import (
    ColumnKind,
    DyadFilter,
    FilterKind,
    build_dyads,
    load_attributes,
    load_nominations,
    load_specs,
    read_dyads,
    reciprocal_links,
    specs_schema,
    summarize,
    write_dyads,
)
from .errors import DyadBMAError, InputError, NumericalError
from .synth import ReplicationError, load_dgp, paper_scale_spec, run_recovery
from .wals import WalsConfig, wals_fit

logger = logging.getLogger("dyadbma")


def _existing(path):
    p = Path(path).resolve()
    if not p.exists():
        raise argparse.ArgumentTypeError(f"{path} does not exist")
    return p


def _out(path):
    return Path(path).resolve()


def _g_rule(text):
    t = text.lower()
    if t in ("bric", "uip"):
        return t
    if t.startswith("fixed:"):
        try:
            v = float(t.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad g value {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError("fixed g must be positive")
        return v
    raise argparse.ArgumentTypeError("expected bric, uip or fixed:<value>")


def _prior_args(p):
    p.add_argument("--model-prior", choices=["uniform", "fixed", "random"], default="uniform")
    p.add_argument("--mbar", type=float, default=None, help="prior mean model size (default K/2)")
    p.add_argument("--g", type=_g_rule, default="bric", help="bric | uip | fixed:<value>")


def build_parser():
    parser = argparse.ArgumentParser(prog="dyadbma", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="nodes + nominations + specs -> dyads file")
    p.add_argument("--nodes", type=_existing, required=True)
    p.add_argument("--nominations", type=_existing, required=True)
    p.add_argument("--specs", type=_existing, required=True)
    p.add_argument("--out", type=_out, required=True, help="dyads file to write")
    p.add_argument("--filter", action="append", default=[],
                   help="all | female | male | ego:<col>=<v> | exclude-p1-nodes | exclude-p1-pairs")
    p.add_argument("--summary", type=_out, default=None, help="optional summary-statistics CSV")

    p = sub.add_parser("bma", help="exhaustive (or MC3) BMA on a dyads file")
    p.add_argument("--dyads", type=_existing, required=True)
    p.add_argument("--specs", type=_existing, default=None, help="roles of the regressors")
    p.add_argument("--out", type=_out, required=True, help="output directory")
    _prior_args(p)
    p.add_argument("--top-models", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--method", choices=["exhaustive", "mc3"], default="exhaustive")
    p.add_argument("--steps", type=int, default=200_000, help="MC3 post-burn-in steps")
    p.add_argument("--burn-in", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("wals", help="weighted average least squares on a dyads file")
    p.add_argument("--dyads", type=_existing, required=True)
    p.add_argument("--specs", type=_existing, default=None)
    p.add_argument("--out", type=_out, required=True)
    p.add_argument("--focus", action="append", default=[])
    p.add_argument("--laplace-c", type=float, default=math.log(2.0))
    p.add_argument("--t-robust", type=float, default=2.0)

    p = sub.add_parser("simulate", help="synthetic recovery study")
    p.add_argument("--dgp", type=_existing, default=None,
                   help="JSON data-generating process (default: paper-scale population)")
    p.add_argument("--out", type=_out, required=True)
    p.add_argument("--replications", type=int, default=20)
    p.add_argument("--seed", type=int, default=None, help="overrides the DGP seed")
    _prior_args(p)
    p.add_argument("--filter", action="append", default=[])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--pip-bold", type=float, default=0.8)
    p.add_argument("--dump", action="store_true", help="also write every generated dyads file")

    p = sub.add_parser("report", help="format previously written result files")
    p.add_argument("--results", type=_existing, action="append", required=True,
                   help="BMA or WALS results file or directory; repeat to compare priors")
    p.add_argument("--labels", default=None, help="comma-separated labels for --results")
    p.add_argument("--out", type=_out, required=True)
    p.add_argument("--pip-bold", type=float, default=0.8)
    p.add_argument("--t-robust", type=float, default=2.0)
    return parser


def _roles(specs_path):
    if specs_path is None:
        return None
    return {s.name: s.role for s in load_specs(specs_path)}


def cmd_prep(args):
    specs = load_specs(args.specs)
    filters = [DyadFilter.parse(f) for f in args.filter]
    schema = specs_schema(specs)
    for f in filters:
        if f.kind is FilterKind.EGO_GENDER and f.column not in schema:
            schema[f.column] = ColumnKind.BINARY
    attrs = load_attributes(args.nodes, schema)
    noms = load_nominations(args.nominations)
    dyads = build_dyads(attrs, specs, reciprocal_links(noms[2]), reciprocal_links(noms[1]), filters)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_dyads(dyads, args.out)
    if args.summary:
        report.write_summary(summarize(attrs), args.summary)
    logger.info("wrote %d dyads to %s", len(dyads), args.out)


def _prior(args):
    return PriorSpec(args.model_prior, args.mbar, args.g)


def cmd_bma(args):
    dyads = read_dyads(args.dyads, _roles(args.specs))
    stats = compute_sufficient_stats(dyads)
    prior = _prior(args)
    if args.method == "exhaustive":
        res = enumerate_bma(stats, prior, top=args.top_models, workers=args.workers)
    else:
        res = mc3_bma(stats, prior, steps=args.steps, burn_in=args.burn_in, seed=args.seed,
                      top=args.top_models)
    report.write_bma(res, args.out)
    (args.out / "ranked_table.md").write_text(
        report.format_ranked_table(report.render_ranked_table(res), res.n), encoding="utf-8")


def cmd_wals(args):
    dyads = read_dyads(args.dyads, _roles(args.specs))
    res = wals_fit(dyads, WalsConfig(tuple(args.focus), args.laplace_c))
    report.write_wals(res, args.out, args.t_robust)


def cmd_simulate(args):
    spec = load_dgp(args.dgp) if args.dgp else paper_scale_spec()
    if args.seed is not None:
        d = spec.to_dict()
        d["seed"] = args.seed
        spec = type(spec).from_dict(d)
    args.out.mkdir(parents=True, exist_ok=True)
    rep = run_recovery(spec, args.replications, _prior(args), args.pip_bold,
                       [DyadFilter.parse(f) for f in args.filter], args.workers,
                       dump_dir=args.out / "datasets" if args.dump else None)
    report.write_recovery(rep, args.out)


def _labels(args):
    if args.labels:
        labels = [s.strip() for s in args.labels.split(",")]
        if len(labels) != len(args.results):
            raise InputError("--labels must name every --results entry")
        return labels
    return [p.parent.name if p.is_file() else p.name for p in args.results]


def cmd_report(args):
    args.out.mkdir(parents=True, exist_ok=True)
    labels = _labels(args)
    bma, wals = [], []
    for path, label in zip(args.results, labels):
        try:
            res = report.read_bma(path)
            res.label = label
            bma.append(res)
        except InputError:
            wals.append((path, label))
    for res in bma:
        rows = report.render_ranked_table(res, args.pip_bold)
        n = res.n if res.n is not None else ""
        (args.out / f"ranked_{res.label}.md").write_text(report.format_ranked_table(rows, n),
                                                         encoding="utf-8")
    if len(bma) > 1:
        records = report.render_prior_comparison([(r.label, r) for r in bma])
        report.write_prior_comparison(records, args.out / "prior_comparison.csv")
    for path, label in wals:
        rows = [r for r in report.read_wals_rows(path) if r[0] != "(intercept)"]
        meta = (path if path.is_dir() else path.parent) / "wals_metadata.json"
        n = ""
        if meta.exists():
            n = json.loads(meta.read_text(encoding="utf-8"))["n"]
        (args.out / f"wals_{label}.md").write_text(report.format_wals_table(rows, n, args.t_robust),
                                                   encoding="utf-8")


COMMANDS = {"prep": cmd_prep, "bma": cmd_bma, "wals": cmd_wals,
            "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ReplicationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.__cause__, InputError) else 3
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DyadBMAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
