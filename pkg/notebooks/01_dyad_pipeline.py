"""
From node attributes to a dyadic design
=======================================

Builds the pairwise regression table for a toy classroom: one row per
unordered pair of students, a reciprocal-friendship outcome, and homophily
regressors derived from the two students' attributes.
"""

# %%
# Six students.  Student c did not report a BMI, so every pair involving c
# is removed by listwise deletion.
import numpy as np

from dyadbma import AttributeTable, DyadFilter, VariableSpec, build_dyads, reciprocal_links, NominationList

attrs = AttributeTable(
    ("a", "b", "c", "d", "e", "f"),
    {"female": np.array([1, 0, 1, 0, 1, 0.0]),
     "section": np.array([1, 1, 2, 2, 1, 3.0]),
     "smoker": np.array([0, 1, 1, 0, 1, 1.0]),
     "bmi": np.array([20, 22.5, np.nan, 19, 25, 21])},
    {"female": "binary", "section": "numeric", "smoker": "binary", "bmi": "numeric"},
)

# %%
# Directed nominations.  Only mutual nominations count as friendships.
october = NominationList(1, [("a", "b"), ("b", "a"), ("d", "e")])
may = NominationList(2, [("a", "e"), ("e", "a"), ("b", "d"), ("d", "b"), ("f", "e")])
print("period 1 friends:", sorted(reciprocal_links(october)))
print("period 2 friends:", sorted(reciprocal_links(may)))

# %%
# Regressors: same gender and same section are match indicators, "both
# smokers" is a shared dummy, BMI enters as an absolute difference and the
# earlier friendship is the lagged outcome.
specs = [
    VariableSpec("Common Gender", "female", "match"),
    VariableSpec("Common Section", "section", "match"),
    VariableSpec("Both Smokers", "smoker", "shared"),
    VariableSpec("BMI diff.", "bmi", "absdiff"),
    VariableSpec("Friends_t-1", "", "lagged"),
]
dyads = build_dyads(attrs, specs, reciprocal_links(may), reciprocal_links(october))
print(f"{len(dyads)} dyads")
for r in range(len(dyads)):
    print(dyads.i[r], dyads.j[r], int(dyads.y[r]), dyads.x[r])

# %%
# Subsamples: women as the lexicographically smaller node, and the sample
# without pairs that were already friends.
for token in ("female", "exclude-p1-pairs"):
    sub = build_dyads(attrs, specs, reciprocal_links(may), reciprocal_links(october), [DyadFilter.parse(token)])
    print(token, len(sub))
