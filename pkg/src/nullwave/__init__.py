"""Numerical laboratory for quasilinear wave equations satisfying the weak null condition."""
from .asymptotic import Kind, classify, parse_nonlinearity
from .config import RunConfig, SweepConfig, load_run_config, load_sweep_config
from .radial_solver import Profile, Scenario, Termination, Trajectory, run

__all__ = [
    "Kind", "classify", "parse_nonlinearity",
    "RunConfig", "SweepConfig", "load_run_config", "load_sweep_config",
    "Profile", "Scenario", "Termination", "Trajectory", "run",
]
__version__ = "0.1.0"
