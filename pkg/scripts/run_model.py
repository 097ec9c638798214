"""Run the small-data model scenario through the full pipeline and print headline numbers."""
import argparse
import json

from nullwave.config import load_run_config
from nullwave.pipeline import run_pipeline

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--config", default="configs/model.yaml")
ap.add_argument("--out", default="out/model")
args = ap.parse_args()

code, summary = run_pipeline(load_run_config(args.config), args.out)
print(json.dumps({k: summary[k] for k in ("termination", "decay_exponent", "gamma", "eikonal_c1_hypothesis",
                                          "energy_constant", "poincare_constant", "ks_constant")}, indent=1))
raise SystemExit(code)
