"""
Correlation versus confounding
==============================

Sweep the confounding strength of the colored-digit spec, measure the
confounding between digit and color on sampled assignments, and compare
with the closed form.  Writes ``confounding_curve.svg`` to the working
directory.
"""

import numpy as np

from deconfound.causal import analytic_confounding, analytic_joint
from deconfound.experiments import curve_csv, table3
from deconfound.metrics import confounding, mutual_information
from deconfound.presets import cm
from deconfound.svg import curve_svg

# The joint of (digit, color) at p = 0.95 puts 0.0955 on each diagonal cell
# and 0.0005 everywhere else.
joint = analytic_joint(cm(d=10, p=0.95), ("digit", "color"))
print(np.round(joint.table[:3, :3], 4))

# Confounding is the sum of the two directed informations.  With the
# interventional tables equal to the marginals it collapses to 2 * MI.
print("confounding", confounding(joint), "2 * MI", 2 * mutual_information(joint))

# Sampled estimates on 60000 assignments track the closed form closely.
rows = table3(d=10, n=60000, seed=0)
print(curve_csv(rows))
for r in rows:
    print(f"p={r.p:.2f}  measured {r.confounding:.4f}  closed form {analytic_confounding(cm(d=10, p=r.p), ('digit', 'color')):.4f}")

with open("confounding_curve.svg", "w") as fh:
    fh.write(curve_svg(rows))
print("wrote confounding_curve.svg")
