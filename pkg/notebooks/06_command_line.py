"""
The command-line workflow
=========================

Writes input files for a synthetic class, then drives ``prep``, ``bma``,
``wals`` and ``report`` exactly as a shell user would.
"""

# %%
import csv
import tempfile
from pathlib import Path

from dyadbma.cli import main
from dyadbma.synth import generate_population, paper_scale_spec

work = Path(tempfile.mkdtemp())
pop = generate_population(paper_scale_spec(n_nodes=80, seed=6))
cols = ["female", "section", "smoker", "bmi"]
with (work / "nodes.csv").open("w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["id"] + cols)
    for k, node in enumerate(pop.attrs.node_ids):
        w.writerow([node] + [pop.attrs.columns[c][k] for c in cols])
with (work / "nominations.csv").open("w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["period", "nominator", "nominee"])
    for period, pairs in ((1, pop.period1), (2, pop.period2)):
        for a, b in sorted(pairs):
            w.writerows([[period, a, b], [period, b, a]])
(work / "specs.csv").write_text(
    "name,source_column,transform,role\n"
    "Common Gender,female,match,candidate\n"
    "Common Section,section,match,candidate\n"
    "Both Smokers,smoker,shared,candidate\n"
    "BMI diff.,bmi,absdiff,candidate\n"
    "Friends_t-1,,lagged,candidate\n")

# %%
def run(*args):
    code = main([str(a) for a in args])
    print(" ".join(map(str, args[:1])), "->", code)


run("prep", "--nodes", work / "nodes.csv", "--nominations", work / "nominations.csv",
    "--specs", work / "specs.csv", "--out", work / "dyads.csv")
for prior in ("uniform", "random"):
    run("bma", "--dyads", work / "dyads.csv", "--out", work / prior, "--model-prior", prior)
run("wals", "--dyads", work / "dyads.csv", "--out", work / "wals")
run("report", "--results", work / "uniform", "--results", work / "random", "--results", work / "wals",
    "--out", work / "report")

# %%
print((work / "report" / "ranked_uniform.md").read_text())
print((work / "report" / "prior_comparison.csv").read_text())
