"""Energy growth exponent gamma against epsilon for the model equation."""
import argparse
import dataclasses

import numpy as np

from nullwave.diagnostics import growth_exponent, snapshot_energy
from nullwave.radial_solver import Scenario, run

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--eps", type=float, nargs="+", default=[0.02, 0.01, 0.005, 0.0025])
ap.add_argument("--t-end", type=float, default=200.0)
ap.add_argument("--dr", type=float, default=0.025)
args = ap.parse_args()

base = Scenario(nonlinearity="model", dr=args.dr, t_end=args.t_end, output_every=0.2)
prev = None
print("epsilon,gamma,ratio_to_previous")
for eps in args.eps:
    tr = run(dataclasses.replace(base, epsilon=eps))
    g = growth_exponent(tr.times, np.array([snapshot_energy(s) for s in tr.snapshots])).gamma
    print(f"{eps},{g:.6g},{'' if prev is None else f'{g / prev:.3f}'}")
    prev = g
