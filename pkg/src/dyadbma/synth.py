"""Synthetic populations with planted link-formation effects, and a recovery harness.

Links form by the linear probability model itself: the period-2 link
probability of a pair is the planted intercept plus the planted effects of
its regressors, clamped to ``[0, 1]``.  Period-1 links are sparse
independent Bernoulli draws and feed the lagged regressor.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bma import PriorSpec, compute_sufficient_stats, enumerate_bma
from .dyads import (
    LAG_NAME,
    AttributeTable,
    ColumnKind,
    Transform,
    VariableSpec,
    build_dyads,
    write_dyads,
)
from .errors import ConfigurationError, DyadBMAError

logger = logging.getLogger(__name__)

_ATTRS, _PERIOD1, _PERIOD2 = 0, 1, 2


@dataclass(frozen=True)
class Binary:
    p: float

    kind = ColumnKind.BINARY

    def draw(self, rng, n):
        return (rng.random(n) < self.p).astype(float)


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sd: float

    kind = ColumnKind.NUMERIC

    def draw(self, rng, n):
        return rng.normal(self.mean, self.sd, n)


@dataclass(frozen=True)
class UniformInt:
    low: int
    high: int

    kind = ColumnKind.NUMERIC

    def draw(self, rng, n):
        return rng.integers(self.low, self.high + 1, n).astype(float)


_GENERATORS = {"binary": Binary, "gaussian": Gaussian, "uniform_int": UniformInt}


@dataclass(frozen=True)
class DgpSpec:
    """Declarative data-generating process.

    ``variables`` define the regressors (as in the dyad pipeline) and
    ``true_model`` maps regressor names to planted coefficients; regressors
    missing from it have a zero effect.  ``node_ids`` optionally relabels the
    generated nodes (default ``n000, n001, ...``).
    """

    n_nodes: int
    attributes: dict
    variables: tuple
    true_model: dict
    intercept: float = 0.0
    p1: float = 0.01
    seed: int = 0
    node_ids: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        names = {v.name for v in self.variables}
        unknown = set(self.true_model) - names
        if unknown:
            raise ConfigurationError(f"true_model names without a variable: {sorted(unknown)}")
        for v in self.variables:
            if v.transform is not Transform.LAGGED and v.source_column not in self.attributes:
                raise ConfigurationError(f"variable {v.name!r} uses unknown attribute {v.source_column!r}")
        if self.n_nodes < 2:
            raise ConfigurationError("need at least two nodes")
        if not 0.0 <= self.p1 <= 1.0:
            raise ConfigurationError("p1 must be a probability")
        if self.node_ids is not None and len(self.node_ids) != self.n_nodes:
            raise ConfigurationError("node_ids length differs from n_nodes")

    def ids(self):
        if self.node_ids is not None:
            return tuple(str(v) for v in self.node_ids)
        width = len(str(self.n_nodes - 1))
        return tuple(f"n{k:0{width}d}" for k in range(self.n_nodes))

    def coef_vector(self, names):
        return np.array([float(self.true_model.get(n, 0.0)) for n in names])

    @classmethod
    def from_dict(cls, d):
        attrs = {}
        for name, g in d["attributes"].items():
            g = dict(g)
            kind = g.pop("kind")
            try:
                attrs[name] = _GENERATORS[kind](**g)
            except KeyError:
                raise ConfigurationError(f"unknown generator kind {kind!r}") from None
        variables = tuple(
            VariableSpec(v["name"], v.get("source_column", ""), v["transform"],
                         v.get("role", "candidate"))
            for v in d["variables"]
        )
        return cls(
            n_nodes=int(d["n_nodes"]),
            attributes=attrs,
            variables=variables,
            true_model=dict(d.get("true_model", {})),
            intercept=float(d.get("intercept", 0.0)),
            p1=float(d.get("p1", 0.01)),
            seed=int(d.get("seed", 0)),
            node_ids=tuple(d["node_ids"]) if d.get("node_ids") else None,
        )

    def to_dict(self):
        rev = {v: k for k, v in _GENERATORS.items()}
        return {
            "n_nodes": self.n_nodes,
            "intercept": self.intercept,
            "p1": self.p1,
            "seed": self.seed,
            "attributes": {n: {"kind": rev[type(g)], **g.__dict__} for n, g in self.attributes.items()},
            "variables": [{"name": v.name, "source_column": v.source_column,
                           "transform": v.transform.value, "role": v.role.value}
                          for v in self.variables],
            "true_model": dict(self.true_model),
            **({"node_ids": list(self.node_ids)} if self.node_ids is not None else {}),
        }


def load_dgp(path):
    return DgpSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _rng(seed, replication, purpose):
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replication), purpose))))


@dataclass(frozen=True)
class Population:
    attrs: AttributeTable
    period1: frozenset
    period2: frozenset
    link_prob: np.ndarray = field(repr=False)


def _pairs(ids, iu, ju, hit):
    out = set()
    for u, v in zip(iu[hit], ju[hit]):
        a, b = ids[u], ids[v]
        out.add((a, b) if a < b else (b, a))
    return frozenset(out)


def generate_population(spec, replication=0):
    """Draw attributes and period-1/period-2 reciprocal links for one replication.

    Random streams are keyed by ``(seed, replication, purpose)``, so adding
    replications never changes earlier ones.  Pair draws follow generation
    order, not node labels, so relabelling nodes only relabels the output.
    """
    ids = spec.ids()
    n = spec.n_nodes
    rng = _rng(spec.seed, replication, _ATTRS)
    cols = {name: g.draw(rng, n) for name, g in spec.attributes.items()}
    kinds = {name: g.kind for name, g in spec.attributes.items()}
    attrs = AttributeTable(ids, cols, kinds)

    iu, ju = np.triu_indices(n, 1)
    p1_hit = _rng(spec.seed, replication, _PERIOD1).random(iu.size) < spec.p1
    period1 = _pairs(ids, iu, ju, p1_hit)

    x = _design(cols, spec.variables, iu, ju, p1_hit)
    beta = spec.coef_vector([v.name for v in spec.variables])
    prob = np.clip(spec.intercept + x @ beta, 0.0, 1.0)
    p2_hit = _rng(spec.seed, replication, _PERIOD2).random(iu.size) < prob
    period2 = _pairs(ids, iu, ju, p2_hit)
    return Population(attrs, period1, period2, prob)


def _design(cols, variables, iu, ju, lagged):
    x = np.zeros((iu.size, len(variables)))
    for k, v in enumerate(variables):
        if v.transform is Transform.LAGGED:
            x[:, k] = lagged
            continue
        a, b = cols[v.source_column][iu], cols[v.source_column][ju]
        if v.transform is Transform.ABS_DIFF:
            x[:, k] = np.abs(a - b)
        elif v.transform is Transform.SHARED_DUMMY:
            x[:, k] = (a == 1) & (b == 1)
        else:
            x[:, k] = a == b
    return x


def population_dyads(spec, pop, filters=()):
    return build_dyads(pop.attrs, spec.variables, pop.period2, pop.period1, filters)


class ReplicationError(DyadBMAError):
    def __init__(self, replication, cause):
        self.replication = replication
        super().__init__(f"replication {replication}: {type(cause).__name__}: {cause}")


@dataclass
class RecoveryReport:
    names: tuple
    true_coef: np.ndarray
    pips: np.ndarray  # replications x K
    post_means: np.ndarray
    threshold: float
    replications: tuple
    seed: int
    prior: PriorSpec
    n_dyads: np.ndarray

    QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)

    @property
    def mean_pip(self):
        return self.pips.mean(axis=0)

    def pip_quantiles(self):
        return np.quantile(self.pips, self.QUANTILES, axis=0)

    def detection_rate(self):
        """Share of replications with PIP at or above the threshold, per regressor."""
        return (self.pips >= self.threshold).mean(axis=0)

    @property
    def planted(self):
        return self.true_coef != 0

    def true_positive_rate(self):
        det = self.pips[:, self.planted] >= self.threshold
        return float(det.mean()) if det.size else float("nan")

    def false_positive_rate(self):
        det = self.pips[:, ~self.planted] >= self.threshold
        return float(det.mean()) if det.size else float("nan")

    def rows(self):
        q = self.pip_quantiles()
        det = self.detection_rate()
        out = []
        for h, name in enumerate(self.names):
            out.append({
                "name": name,
                "true_coef": float(self.true_coef[h]),
                "mean_pip": float(self.mean_pip[h]),
                **{f"q{int(round(p * 100)):02d}": float(q[a, h]) for a, p in enumerate(self.QUANTILES)},
                "detect_rate": float(det[h]),
                "mean_post_mean": float(self.post_means[:, h].mean()),
            })
        return out


def run_recovery(spec, replications, prior=PriorSpec(), threshold=0.8, filters=(),
                 workers=1, dump_dir=None):
    """Generate, build dyads, run exhaustive BMA and collect PIPs per replication."""
    if replications < 1:
        raise ConfigurationError("replications must be at least 1")
    pips, means, sizes = [], [], []
    names = None
    for r in range(replications):
        try:
            pop = generate_population(spec, r)
            dyads = population_dyads(spec, pop, filters)
            if dump_dir is not None:
                Path(dump_dir).mkdir(parents=True, exist_ok=True)
                write_dyads(dyads, Path(dump_dir) / f"dyads_rep{r:04d}.csv")
            stats = compute_sufficient_stats(dyads)
            res = enumerate_bma(stats, prior, workers=workers)
        except Exception as exc:
            raise ReplicationError(r, exc) from exc
        names = res.names
        pips.append(res.pip)
        means.append(res.post_mean)
        sizes.append(len(dyads))
        logger.info("replication %d: %d dyads, max PIP %.3f", r, len(dyads), res.pip.max())
    return RecoveryReport(
        names=names,
        true_coef=spec.coef_vector(names),
        pips=np.array(pips),
        post_means=np.array(means),
        threshold=threshold,
        replications=tuple(range(replications)),
        seed=spec.seed,
        prior=prior,
        n_dyads=np.array(sizes),
    )


# Table 3 planted effects; remaining regressors are pure noise with marginals
# shaped like the summary-statistics table.
PAPER_EFFECTS = {
    "Common Section": 0.064,
    LAG_NAME: 0.435,
    "Both Smokers": 0.034,
    "Common Gender": 0.017,
}

_NOISE = (
    ("Inconsistent diff.", "inconsistency", "absdiff", UniformInt(0, 1)),
    ("Altruism diff.", "altruism", "absdiff", UniformInt(0, 5)),
    ("CRT diff.", "crt", "absdiff", UniformInt(0, 3)),
    ("Both Reflective", "reflective", "shared", Binary(0.54)),
    ("Time pref. diff.", "time_pref", "absdiff", UniformInt(0, 11)),
    ("Income diff.", "income", "absdiff", UniformInt(0, 5)),
    ("Risk diff.", "risk", "absdiff", UniformInt(0, 10)),
    ("Reciprocity diff.", "reciprocity", "absdiff", UniformInt(1, 7)),
    ("Self-confidence diff.", "self_confidence", "absdiff", UniformInt(1, 7)),
    ("BMI diff.", "bmi", "absdiff", Gaussian(22.53, 3.23)),
    ("Parent educ. diff.", "parent_educ", "absdiff", UniformInt(0, 5)),
    ("Both volunteers", "volunteer", "shared", Binary(0.17)),
    ("Both STEM best grade", "stem_best", "shared", Binary(0.28)),
    ("Both STEM pref.", "stem_pref", "shared", Binary(0.30)),
    ("Both altruism learner", "altruism_learner", "shared", Binary(0.38)),
    ("Both right", "right", "shared", Binary(0.44)),
)


def paper_scale_spec(n_nodes=150, seed=20101001, effects=None, n_noise=16, intercept=0.013, p1=0.01):
    """Four planted determinants plus up to 16 noise regressors.

    Female share 0.44, smoker share 0.22 and four equally likely sections.
    """
    effects = dict(PAPER_EFFECTS if effects is None else effects)
    attributes = {
        "female": Binary(0.44),
        "smoker": Binary(0.22),
        "section": UniformInt(1, 4),
    }
    variables = [
        VariableSpec("Common Gender", "female", "match"),
        VariableSpec("Common Section", "section", "match"),
        VariableSpec(LAG_NAME, "", "lagged"),
        VariableSpec("Both Smokers", "smoker", "shared"),
    ]
    for name, col, transform, gen in _NOISE[:n_noise]:
        attributes[col] = gen
        variables.append(VariableSpec(name, col, transform))
    return DgpSpec(
        n_nodes=n_nodes,
        attributes=attributes,
        variables=tuple(variables),
        true_model=effects,
        intercept=intercept,
        p1=p1,
        seed=seed,
    )
