"""Trial run of the reduced desk-scale sweep (criterion 8 probe)."""

import time

import numpy as np

from fdsic.harness import HyperParamSpace, SweepConfig, run_sweep
from fdsic.signals import ImpairmentConfig, OfdmConfig, synthesize_dataset
from fdsic.specs import CancellerSpec

specs = []
specs += [CancellerSpec("poly", P=p) for p in (3, 5, 7, 9)]
for kind in ("ffnn", "rnn"):
    specs += [CancellerSpec(kind, widths=(w,)) for w in (2, 6, 10)]
    specs += [CancellerSpec(kind, widths=(w, w, w)) for w in (2, 6, 10)]
specs += [CancellerSpec("cvnn", widths=(w,)) for w in (1, 3, 5, 7)]
specs += [CancellerSpec("cvnn", widths=(w, w, w)) for w in (1, 3, 5, 7)]

cfg = SweepConfig(
    specs=tuple(specs),
    final_inits=3,
    final_epochs=20,
    space=HyperParamSpace(n_samples=3, k_folds=2, inits_per_fold=1, epochs=8),
)

ds = synthesize_dataset(OfdmConfig(), ImpairmentConfig(), seed=1)
t0 = time.time()
report = run_sweep(cfg, ds, seed=7, jobs=4)
print(f"sweep took {time.time() - t0:.0f}s")
for row in sorted(report.rows, key=lambda r: r["params"]):
    err = f" ERROR {row['error']}" if row["error"] else ""
    print(f"{row['spec']:18s} params={row['params']:5d} flops={row['flops']:6d} "
          f"mean={row['mean_db'] if row['mean_db'] is None else round(row['mean_db'],2)}"
          f" std={row['std_db'] if row['std_db'] is None else round(row['std_db'],2)}{err}")

# Pareto check: no real-valued row with fewer params and >= mean
cv = [r for r in report.rows if r["spec"].startswith("cvnn") and not r["error"]]
rv = [r for r in report.rows if r["spec"].startswith(("ffnn", "rnn")) and not r["error"]]
bad = []
for c in cv:
    for r in rv:
        if r["params"] < c["params"] and r["mean_db"] >= c["mean_db"]:
            bad.append((c["spec"], c["params"], round(c["mean_db"], 2),
                        r["spec"], r["params"], round(r["mean_db"], 2)))
print("pareto violations:", bad if bad else "none")
