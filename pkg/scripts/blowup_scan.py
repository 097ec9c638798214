"""Blow-up time t* and location r* for the semilinear (d_t phi)^2 equation over a range of amplitudes."""
import argparse
import dataclasses

import numpy as np

from nullwave.config import load_run_config
from nullwave.radial_solver import run

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--config", default="configs/blowup.yaml")
ap.add_argument("--eps", type=float, nargs="+", default=list(np.round(np.linspace(0.2, 1.0, 9), 3)))
args = ap.parse_args()

base = load_run_config(args.config).scenario
print("epsilon,termination,t_star,r_star,eps_ln_t_star")
for eps in args.eps:
    tr = run(dataclasses.replace(base, epsilon=eps))
    if tr.t_star is None:
        print(f"{eps},{tr.termination.value},,,")
        continue
    print(f"{eps},{tr.termination.value},{tr.t_star:.4f},{tr.r_star:.4f},{eps * np.log(tr.t_star):.4f}")
