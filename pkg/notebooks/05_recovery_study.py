"""
Does the method find planted determinants?
==========================================

Repeatedly draws a synthetic population with known effects, runs the full
pipeline and records how often each regressor clears the PIP >= 0.8 rule.
"""

# %%
from dyadbma import PriorSpec, paper_scale_spec, run_recovery

spec = paper_scale_spec(n_nodes=150, seed=5)
report = run_recovery(spec, replications=5, prior=PriorSpec())

# %%
for row in report.rows():
    print(f"{row['name']:24s} true {row['true_coef']:.3f}  mean PIP {row['mean_pip']:.2f}  "
          f"detected {row['detect_rate']:.0%}")
print("true positive rate", report.true_positive_rate())
print("false positive rate", report.false_positive_rate())

# %%
# Halving every planted effect moves the smaller ones below the detection
# boundary at this sample size.
half = {k: v / 2 for k, v in spec.true_model.items()}
weak = run_recovery(paper_scale_spec(n_nodes=150, seed=5, effects=half), replications=5)
for name, pip in zip(weak.names, weak.mean_pip):
    if name in half:
        print(f"{name:24s} half effect {half[name]:.4f}  mean PIP {pip:.2f}")
