"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import os
import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from dyadbma.bma import (
    PriorSpec,
    conditional_posterior_moments,
    enumerate_bma,
    g_value,
    log_bayes_factor,
    log_model_prior,
    log_prior_by_size,
    stats_from_arrays,
    sweep_r2,
    compute_sufficient_stats,
)
from dyadbma.dyads import AttributeTable, DyadFilter, VariableSpec, build_dyads, LAG_NAME
from dyadbma.report import format_ranked_table, render_prior_comparison, render_ranked_table
from dyadbma.synth import generate_population, paper_scale_spec, population_dyads, run_recovery
from dyadbma.wals import WalsConfig, laplace_shrink, wals_arrays
from oracles import gprior_quadrature, naive_bma

GOLDEN = Path(__file__).parent / "golden"


def test_oracle_equivalence(criterion):
    criterion("1 oracle equivalence (25 instances, K<=6, N<=200, 1e-10, <10 s)")
    priors = [PriorSpec(), PriorSpec("fixed", 1.5), PriorSpec("random"), PriorSpec("uniform", g="uip"),
              PriorSpec("random", 2.0, 30.0)]
    worst = 0.0
    t0 = time.perf_counter()
    for inst in range(25):
        rng = np.random.default_rng(1000 + inst)
        K = int(rng.integers(1, 7))
        n = int(rng.integers(K + 10, 201))
        X = rng.normal(size=(n, K)) * rng.uniform(0.2, 4.0, K)
        if inst % 3 == 0:
            X[:, 0] = rng.integers(0, 2, n)  # dummy regressor
        beta = rng.normal(size=K) * (rng.random(K) < 0.5) * 0.3
        y = (rng.random(n) < np.clip(0.3 + X @ beta * 0.2, 0, 1)).astype(float) if inst % 2 \
            else 1.0 + X @ beta + rng.normal(size=n)
        prior = priors[inst % len(priors)]
        stats = stats_from_arrays(X, y)
        res = enumerate_bma(stats, prior, keep_model_probs=True)
        G = g_value(prior.g, n, K)
        p, pip, pm, psd = naive_bma(X, y, G, log_prior_by_size(prior, K))
        for a, b in ((res.model_probs, p), (res.pip, pip), (res.post_mean, pm), (res.post_sd, psd)):
            worst = max(worst, float(np.max(np.abs(a - b))))
    elapsed = time.perf_counter() - t0
    criterion.note(f"max abs diff {worst:.2e}, {elapsed:.2f} s")
    assert worst <= 1e-10
    assert elapsed < 10.0


def test_evidence_against_quadrature(criterion):
    criterion("2 evidence and moments vs numerical integration (10 instances, 1e-4 / 1e-6)")
    worst_bf = worst_mom = 0.0
    for inst in range(10):
        rng = np.random.default_rng(2000 + inst)
        k = 1 if inst < 5 else 2
        n = int(rng.integers(6 + k, 11))
        X = rng.normal(size=(n, k)) * rng.uniform(0.5, 2.0, k)
        y = 0.5 + X @ rng.normal(size=k) * 0.7 + rng.normal(size=n) * 0.6
        G = float(rng.choice([1.0, float(n), 10.0, 50.0]))
        lbf, qmean, qcov = gprior_quadrature(X, y, G, z_pts=121 if k == 1 else 81)
        stats = stats_from_arrays(X, y)
        mask = (1 << k) - 1
        mean, cov = conditional_posterior_moments(stats, mask, G)
        worst_bf = max(worst_bf, abs(log_bayes_factor(stats, mask, G) - lbf))
        worst_mom = max(worst_mom, float(np.max(np.abs(mean - qmean))), float(np.max(np.abs(cov - qcov))))
    criterion.note(f"log BF max diff {worst_bf:.1e}, moments max diff {worst_mom:.1e}")
    assert worst_bf <= 1e-4
    assert worst_mom <= 1e-6


def paper_dyads(n_nodes, seed=7, replication=0):
    spec = paper_scale_spec(n_nodes=n_nodes, seed=seed)
    return population_dyads(spec, generate_population(spec, replication))


def test_incremental_sweep(criterion):
    criterion("3 incremental factorization vs fresh factorizations (K=20, 10,000 models, 1e-9)")
    d = paper_dyads(100)
    stats = compute_sufficient_stats(d)
    assert stats.k == 20
    r2 = sweep_r2(stats)
    X, y = d.x, d.y
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    S, s, tss = Xc.T @ Xc, Xc.T @ yc, yc @ yc
    rng = np.random.default_rng(3)
    worst = 0.0
    for mask in rng.integers(1, 1 << 20, 10_000):
        idx = [h for h in range(20) if mask >> h & 1]
        L = np.linalg.cholesky(S[np.ix_(idx, idx)])
        z = np.linalg.solve(L, s[idx])
        worst = max(worst, abs(r2[mask] - z @ z / tss))
    criterion.note(f"max abs diff {worst:.1e}")
    assert worst <= 1e-9


def test_performance(criterion):
    criterion("4 2^20 models at N=8515, K=20: <60 s single worker, bit-identical, >=3x at 8 workers")
    d = paper_dyads(131, seed=8)  # 131 nodes give exactly 8515 pairs
    stats = compute_sufficient_stats(d)
    assert (stats.n, stats.k) == (8515, 20)
    enumerate_bma(compute_sufficient_stats(paper_dyads(20)))  # warm the JIT cache
    runs, times = {}, {}
    for w in (1, 2, 8):
        t0 = time.perf_counter()
        runs[w] = enumerate_bma(stats, workers=w)
        times[w] = time.perf_counter() - t0
    identical = all(
        np.array_equal(runs[w].pip, runs[1].pip) and np.array_equal(runs[w].post_mean, runs[1].post_mean)
        and np.array_equal(runs[w].post_sd, runs[1].post_sd) and runs[w].log_evidence == runs[1].log_evidence
        and runs[w].top_models == runs[1].top_models
        for w in (2, 8))
    speedup = times[1] / times[8]
    criterion.note(f"1 worker {times[1]:.2f} s, 8 workers {times[8]:.2f} s, speedup {speedup:.2f}x "
                   f"on {os.cpu_count()} CPU(s), bit-identical={identical}")
    assert identical
    assert times[1] < 60.0
    assert speedup >= 3.0


def test_synthetic_recovery(criterion):
    criterion("5 synthetic recovery at 150 nodes, 20 replications")
    spec = paper_scale_spec(n_nodes=150)
    t0 = time.perf_counter()
    rep = run_recovery(spec, 20, PriorSpec())
    elapsed = time.perf_counter() - t0
    names = list(rep.names)
    sec = rep.pips[:, names.index("Common Section")]
    lag = rep.pips[:, names.index(LAG_NAME)]
    noise = [h for h, nm in enumerate(names) if rep.true_coef[h] == 0]
    med_noise = float(np.median(rep.pips[:, noise]))
    gender = rep.pips[:, names.index("Common Gender")]
    smokers = rep.pips[:, names.index("Both Smokers")]
    criterion.note(f"section>=0.95 in {np.mean(sec >= 0.95):.0%}, lag>=0.95 in {np.mean(lag >= 0.95):.0%}, "
                   f"median noise PIP {med_noise:.3f}, gender PIP median {np.median(gender):.2f}, "
                   f"smokers PIP median {np.median(smokers):.2f}, {elapsed:.0f} s")
    assert len(noise) == 16
    assert rep.n_dyads.max() <= 11_175
    assert np.mean(sec >= 0.95) >= 0.9
    assert np.mean(lag >= 0.95) >= 0.9
    assert med_noise <= 0.05
    assert elapsed < 30 * 60


def test_prior_equivalence(criterion):
    criterion("6 fixed(K/2) equals uniform to 1e-12; binomial-beta(K/2) flat over size; comparison records")
    d = paper_dyads(60, seed=6)
    stats = compute_sufficient_stats(d)
    K = stats.k
    u = enumerate_bma(stats, PriorSpec("uniform"), keep_model_probs=True)
    f = enumerate_bma(stats, PriorSpec("fixed", K / 2), keep_model_probs=True)
    worst = max(float(np.max(np.abs(getattr(u, a) - getattr(f, a))))
                for a in ("pip", "post_mean", "post_sd", "model_probs"))
    worst = max(worst, abs(u.log_evidence - f.log_evidence),
                max(abs(p - q) for (_, p), (_, q) in zip(u.top_models, f.top_models)))
    assert [m for m, _ in u.top_models] == [m for m, _ in f.top_models]
    assert worst <= 1e-12

    k10 = 10
    prior = PriorSpec("random", k10 / 2)
    by_size = np.zeros(k10 + 1)
    for mask in range(1 << k10):
        by_size[bin(mask).count("1")] += math.exp(log_model_prior(mask, prior, k10))
    size_err = float(np.max(np.abs(by_size - 1 / (k10 + 1))))
    assert size_err <= 1e-12

    r = enumerate_bma(stats, PriorSpec("random"))
    recs = render_prior_comparison([("uniform", u), ("fixed", f), ("random", r)])
    assert len(recs) == 3 * K
    assert len({(a, b) for a, b, _ in recs}) == 3 * K
    criterion.note(f"fixed vs uniform {worst:.1e}, size-prior deviation {size_err:.1e}, {len(recs)} records")


def test_wals(criterion):
    criterion("7 WALS: OLS limit 1e-12, shrinkage grid 1e-12, asymptote 1e-3, order invariance 1e-9")
    rng = np.random.default_rng(7)
    n = 300
    X = rng.normal(size=(n, 6)) @ rng.normal(size=(6, 6)) * 0.4
    y = 0.3 + X @ np.array([0.8, 0.0, -0.4, 0.1, 0.0, 0.05]) + rng.normal(size=n)
    names = tuple(f"v{h}" for h in range(6))

    ols = wals_arrays(X, y, names, WalsConfig(focus=names))
    D = np.column_stack([np.ones(n), X])
    b = np.linalg.solve(D.T @ D, D.T @ y)
    e = y - D @ b
    se = np.sqrt(e @ e / (n - 7) * np.diag(np.linalg.inv(D.T @ D)))
    ols_err = max(float(np.max(np.abs(ols.coef - b))), float(np.max(np.abs(ols.se - se))))
    assert ols_err <= 1e-12

    xs = np.linspace(-10, 10, 801)
    mv = np.array([laplace_shrink(x) for x in xs])
    m, v = mv[:, 0], mv[:, 1]
    assert np.max(np.abs(m + m[::-1])) <= 1e-12
    assert np.max(np.abs(v - v[::-1])) <= 1e-12
    assert np.all(np.diff(m) > 0)
    assert np.all(np.abs(m[xs != 0]) < np.abs(xs[xs != 0]))

    c = math.log(2.0)
    asym = max(abs(laplace_shrink(8.0)[0] - (8.0 - c)), abs(laplace_shrink(-8.0)[0] + (8.0 - c)))
    assert asym <= 1e-3

    base = wals_arrays(X, y, names)
    order_err = 0.0
    for seed in range(5):
        perm = np.random.default_rng(seed).permutation(6)
        alt = wals_arrays(X[:, perm], y, [names[p] for p in perm])
        for nm in names:
            order_err = max(order_err, float(np.max(np.abs(np.array(alt.row(nm)) - np.array(base.row(nm))))))
    assert order_err <= 1e-9
    criterion.note(f"OLS {ols_err:.1e}, asymptote {asym:.1e}, order {order_err:.1e}")


SIX_SPECS = (
    VariableSpec("Common Gender", "female", "match"),
    VariableSpec("Common Section", "section", "match"),
    VariableSpec("Both Smokers", "smoker", "shared"),
    VariableSpec("BMI diff.", "bmi", "absdiff"),
    VariableSpec(LAG_NAME, "", "lagged"),
)

# hand-enumerated: node c lacks bmi, so every pair involving c is deleted
SIX_EXPECTED = [
    # i, j, gender, section, smokers, bmi, lag, y
    ("a", "b", 0, 1, 0, 2.5, 1, 0),
    ("a", "d", 0, 0, 0, 1.0, 0, 0),
    ("a", "e", 1, 1, 0, 5.0, 0, 1),
    ("a", "f", 0, 0, 0, 1.0, 0, 0),
    ("b", "d", 1, 0, 0, 3.5, 0, 1),
    ("b", "e", 0, 1, 1, 2.5, 0, 0),
    ("b", "f", 1, 0, 1, 1.5, 0, 0),
    ("d", "e", 0, 0, 0, 6.0, 0, 0),
    ("d", "f", 1, 0, 0, 2.0, 0, 0),
    ("e", "f", 0, 0, 1, 4.0, 0, 0),
]


def test_pipeline_fixture(criterion):
    criterion("8 six-node fixture: hand-enumerated dyads; period-1 pair exclusion removes one row")
    attrs = AttributeTable(
        ("f", "c", "a", "e", "b", "d"),  # deliberately unsorted
        {"female": np.array([0, 1, 1, 1, 0, 0.0]),
         "section": np.array([3, 2, 1, 1, 1, 2.0]),
         "smoker": np.array([1, 1, 0, 1, 1, 0.0]),
         "bmi": np.array([21, np.nan, 20, 25, 22.5, 19.0])},
        {"female": "binary", "section": "numeric", "smoker": "binary", "bmi": "numeric"},
    )
    period1 = {("a", "b")}
    period2 = {("a", "e"), ("b", "d"), ("a", "c")}
    d = build_dyads(attrs, SIX_SPECS, period2, period1)
    exp = np.array([row[2:] for row in SIX_EXPECTED], dtype=float)
    assert list(zip(d.i, d.j)) == [row[:2] for row in SIX_EXPECTED]
    assert d.names == tuple(s.name for s in SIX_SPECS)
    assert np.array_equal(d.x, exp[:, :5])
    assert np.array_equal(d.lagged, exp[:, 4])
    assert np.array_equal(d.y, exp[:, 5])
    ex = build_dyads(attrs, SIX_SPECS, period2, period1, [DyadFilter.parse("exclude-p1-pairs")])
    removed = set(zip(d.i, d.j)) - set(zip(ex.i, ex.j))
    assert removed == {("a", "b")} and len(ex) == len(d) - 1
    criterion.note(f"{len(d)} rows, exclusion removed {sorted(removed)}")


# printed Table 3 values: name, PIP, posterior mean, posterior sd
TABLE3 = [
    ("Common Gender", 1.0, 0.017, 0.003),
    ("Common Section", 1.0, 0.064, 0.003),
    (LAG_NAME, 1.0, 0.435, 0.023),
    ("Both Smokers", 0.97, 0.034, 0.010),
    ("Inconsistent diff.", 0.22, -0.022, 0.005),
    ("Altruism diff.", 0.08, -0.003, 0.001),
    ("CRT diff.", 0.04, -0.0001, 0.0008),
    ("Both Reflective", 0.03, 0.0002, 0.011),
    ("Time pref. diff.", 0.02, -0.0, 0.0001),
    ("Income diff.", 0.02, -0.0, 0.0003),
    ("Risk diff.", 0.01, 0.0, 0.0001),
    ("Reciprocity diff.", 0.01, 0.0, 0.0002),
    ("Self-confidence diff.", 0.01, -0.0, 0.0002),
    ("BMI diff.", 0.01, -0.0, 0.0001),
    ("Parent educ. diff.", 0.01, -0.0, 0.0001),
    ("Both volunteers", 0.01, -0.0, 0.0012),
    ("Both STEM best grade", 0.01, 0.0, 0.0006),
    ("Both STEM pref.", 0.01, 0.0, 0.0006),
    ("Both altruism learner", 0.01, -0.0, 0.0003),
    ("Both right", 0.01, 0.0, 0.0004),
]


def table3_result():
    rows = TABLE3[::-1]  # feed in reverse so input order cannot leak into the output
    return SimpleNamespace(names=tuple(r[0] for r in rows), pip=np.array([r[1] for r in rows]),
                           post_mean=np.array([r[2] for r in rows]), post_sd=np.array([r[3] for r in rows]))


def test_report_golden(criterion):
    criterion("9 ranked table: Table 3 ordering, four bold rows, byte-identical across runs and workers")
    text = format_ranked_table(render_ranked_table(table3_result()), 8515)
    golden = (GOLDEN / "ranked_table.md").read_text(encoding="utf-8")
    assert text == golden
    assert format_ranked_table(render_ranked_table(table3_result()), 8515) == text

    body = text.splitlines()[2:-1]
    names = [line.split(" | ")[0].lstrip("| ").strip("*") for line in body]
    pips = [float(line.split(" | ")[1]) for line in body]
    bold = [line.startswith("| **") for line in body]
    # same PIP column as Table 3 and the same regressors within every PIP level
    assert pips == [r[1] for r in TABLE3]
    for level in sorted(set(pips)):
        assert {n for n, p in zip(names, pips) if p == level} == {r[0] for r in TABLE3 if r[1] == level}
    assert sum(bold) == 4 and all(bold[:4])
    assert names[4] == "Inconsistent diff."

    rng = np.random.default_rng(9)
    X = rng.normal(size=(400, 12))
    y = 0.3 * X[:, 0] + 0.1 * X[:, 5] + rng.normal(size=400)
    stats = stats_from_arrays(X, y)
    tables = {w: format_ranked_table(render_ranked_table(enumerate_bma(stats, workers=w)), 400)
              for w in (1, 2, 8)}
    assert tables[1] == tables[2] == tables[8]
    criterion.note(f"golden {len(golden)} bytes, {sum(bold)} bold rows")
