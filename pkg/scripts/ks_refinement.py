"""Klainerman-Sobolev constant C(t) on the model run at two grid spacings."""
import argparse

import numpy as np

from nullwave.diagnostics import klainerman_sobolev_check, log_spaced_indices, snapshot_windows
from nullwave.radial_solver import Scenario, run

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--t-end", type=float, default=60.0)
ap.add_argument("--samples", type=int, default=12)
args = ap.parse_args()

rows = {}
for dr in (0.025, 0.0125):
    tr = run(Scenario(nonlinearity="model", epsilon=0.01, dr=dr, t_end=args.t_end, output_every=0.2))
    idx = log_spaced_indices(tr.times, 0.0, args.t_end, args.samples)
    rep = klainerman_sobolev_check(snapshot_windows(tr, idx))
    rows[dr] = (rep.times, rep.extra["C_t"])
    print(f"dr {dr}: max C {rep.constant:.5f}")
print("t,C_dr0.025,C_dr0.0125")
for t, a, b in zip(rows[0.025][0], rows[0.025][1], rows[0.0125][1]):
    print(f"{t:.2f},{a:.5f},{b:.5f}")
