"""Robust determinants of dyadic link formation by exhaustive Bayesian model averaging."""

from .bma import (
    BmaResult,
    PriorSpec,
    SufficientStats,
    compute_sufficient_stats,
    conditional_posterior_moments,
    enumerate_bma,
    g_value,
    log_bayes_factor,
    log_model_prior,
    mc3_bma,
    stats_from_arrays,
)
from .dyads import (
    AttributeTable,
    DyadFilter,
    DyadTable,
    NominationList,
    VariableSpec,
    build_dyads,
    load_attributes,
    load_nominations,
    load_specs,
    read_dyads,
    reciprocal_links,
    summarize,
    write_dyads,
)
from .report import render_prior_comparison, render_ranked_table
from .synth import DgpSpec, generate_population, paper_scale_spec, run_recovery
from .wals import WalsConfig, WalsResult, laplace_shrink, wals_fit

__version__ = "0.1.0"

__all__ = [
    "AttributeTable",
    "BmaResult",
    "DgpSpec",
    "DyadFilter",
    "DyadTable",
    "NominationList",
    "PriorSpec",
    "SufficientStats",
    "VariableSpec",
    "WalsConfig",
    "WalsResult",
    "build_dyads",
    "compute_sufficient_stats",
    "conditional_posterior_moments",
    "enumerate_bma",
    "g_value",
    "generate_population",
    "laplace_shrink",
    "load_attributes",
    "load_nominations",
    "load_specs",
    "log_bayes_factor",
    "log_model_prior",
    "mc3_bma",
    "paper_scale_spec",
    "read_dyads",
    "reciprocal_links",
    "render_prior_comparison",
    "render_ranked_table",
    "run_recovery",
    "stats_from_arrays",
    "summarize",
    "wals_fit",
    "write_dyads",
]
