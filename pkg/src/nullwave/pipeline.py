"""Solver, eikonal and diagnostics chained into one run directory.

Files written by :func:`run_pipeline`:

``config.json``      resolved configuration
``trajectory.csv``   ``t, r, phi, dphi_dt, dphi_dr, dphi_dq, H_LL`` on a strided grid
``manifest.json``    scenario echo, termination and the list of files written
``energy.csv``       ``t, E`` (unweighted energy at every stored time)
``eikonal.csv``      ``label_rho, s, t, r, q`` for a strided set of labels
``eikonal_fields.csv`` ``t, r, rho, rho_q_fd, rho_q_factor, valid`` on the strided grid
``reports.json``     inequality reports, eikonal bounds and fits
``summary.json``     termination status and headline numbers (see :data:`SUMMARY_FIELDS`)
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .config import RunConfig
from .diagnostics import (
    SpaceTimeBump,
    decay_fit,
    energy_inequality_check,
    growth_exponent,
    hormander_check,
    hormander_forcing,
    klainerman_sobolev_check,
    log_spaced_indices,
    poincare_check,
    snapshot_energy,
    snapshot_windows,
)
from .eikonal import default_labels, rho_fields, trace_characteristics, verify_eikonal_bounds
from .io import write_csv, write_json
from .radial_solver import H_LL_of_phi, Profile, Scenario, Termination, Trajectory, run

SUMMARY_FIELDS = (
    "epsilon", "nonlinearity", "termination", "t_star", "r_star", "t_final",
    "gamma", "gamma_low_quality",
    "decay_quantity", "decay_exponent", "decay_constant",
    "eikonal_c1_hypothesis", "eikonal_margin1", "eikonal_margin2", "min_rho_q",
    "energy_constant", "energy_holds", "poincare_constant", "poincare_holds",
    "ks_constant", "hormander_constant",
)

EXIT_CODES = {Termination.COMPLETED: 0, Termination.BLOWUP: 2, Termination.ERROR: 1}


def hormander_trajectory(sc: Scenario, F: SpaceTimeBump = SpaceTimeBump(), t_end: float = 30.0) -> Trajectory:
    """Zero-data linear run forced by ``F`` on the grid of ``sc``."""
    forced = dataclasses.replace(
        sc, nonlinearity="linear", profile=Profile(kind="none"), t_end=min(sc.t_end, t_end), r_max=None,
    )
    return run(forced, forcing=hormander_forcing(F))


def analyse(cfg: RunConfig, traj: Trajectory) -> tuple[dict, dict, object, object]:
    """Diagnostics on a finished trajectory: ``(summary, reports, bundle, fields)``."""
    sc = cfg.scenario
    diag = cfg.diagnostics
    summary = {k: None for k in SUMMARY_FIELDS}
    summary.update(
        epsilon=sc.epsilon, nonlinearity=sc.nonlinearity, termination=traj.termination.value,
        t_star=traj.t_star, r_star=traj.r_star, t_final=float(traj.times[-1]),
    )
    reports: dict = {"termination": {"status": traj.termination.value, "diagnostic": traj.diagnostic}}

    times = traj.times
    E = np.array([snapshot_energy(s) for s in traj.snapshots])
    if times.size >= 3 and np.all(E > 0):
        g = growth_exponent(times, E)
        summary.update(gamma=g.gamma, gamma_low_quality=g.low_quality)
        reports["growth"] = g.to_dict()

    if traj.termination is not Termination.COMPLETED:
        return summary, reports, None, None

    bundle = fields = None
    c2 = None
    if cfg.eikonal.enabled:
        labels = default_labels(float(times[-1]), traj.dr, cfg.eikonal.fine_extent, cfg.eikonal.growth)
        bundle = trace_characteristics(traj, labels, record_dp=cfg.eikonal.record_dp)
        fields = rho_fields(bundle, traj)
        eb = verify_eikonal_bounds(fields, traj, sc.epsilon, cfg.eikonal.nu, bundle=bundle)
        c2 = eb.c2_eikonal6
        reports["eikonal"] = eb.to_dict()
        summary.update(eikonal_c1_hypothesis=eb.c1_hypothesis, eikonal_margin1=eb.margin_eikonal1,
                       eikonal_margin2=eb.margin_eikonal2, min_rho_q=eb.min_rho_q)

    fits = {}
    for q in diag.fits:
        try:
            f = decay_fit(traj, q, near_cone_only=diag.near_cone_only, fields=fields, nu=cfg.eikonal.nu)
        except ValueError as exc:
            fits[q] = {"error": str(exc)}
            continue
        fits[q] = f.to_dict()
    reports["fits"] = fits
    if diag.fits and "error" not in fits[diag.fits[0]]:
        head = fits[diag.fits[0]]
        summary.update(decay_quantity=diag.fits[0], decay_exponent=head["exponent"], decay_constant=head["constant"])

    ineq = {}
    for name in diag.inequalities:
        if name == "energy_weighted":
            rep = energy_inequality_check(traj, fields, diag.kappa, sc.epsilon, diag.nu_prime,
                                          residual_stride=diag.residual_stride)
            summary.update(energy_constant=rep.constant, energy_holds=rep.holds)
        elif name == "poincare":
            rep = poincare_check(traj, fields, diag.kappa, sc.epsilon, diag.nu_prime, c2=c2)
            summary.update(poincare_constant=rep.constant, poincare_holds=rep.holds)
        elif name == "klainerman_sobolev":
            if diag.ks_samples > 0:
                idx = log_spaced_indices(times, 0.0, float(times[-1]), diag.ks_samples)
            else:
                idx = np.arange(times.size)
            rep = klainerman_sobolev_check(snapshot_windows(traj, idx))
            summary.update(ks_constant=rep.constant)
        else:
            F = SpaceTimeBump()
            rep = hormander_check(hormander_trajectory(sc, F), F)
            summary.update(hormander_constant=rep.constant)
        ineq[name] = rep.to_dict()
    reports["inequalities"] = ineq
    return summary, reports, bundle, fields


def _keep(n: int, stride: int) -> list[int]:
    return [k for k in range(n) if k % stride == 0 or k == n - 1]


def _trajectory_rows(traj: Trajectory, snap_stride: int, r_stride: int):
    sl = slice(None, None, r_stride)
    for k in _keep(len(traj.snapshots), snap_stride):
        s = traj.snapshots[k]
        phi = s.phi
        H = H_LL_of_phi(traj.scenario, phi)
        cols = (s.r, phi, s.dphi_dt, s.dphi_dr, s.dphi_dq, H)
        for row in zip(*(c[sl] for c in cols)):
            yield (s.t,) + row


def _field_rows(fields, snap_stride: int, r_stride: int):
    sl = slice(None, None, r_stride)
    r = fields.r[sl]
    for k in _keep(len(fields.times), snap_stride):
        cols = (r, fields.rho[k, sl], fields.rho_q_fd[k, sl], fields.rho_q_factor[k, sl], fields.valid[k, sl])
        for row in zip(*cols):
            yield (fields.times[k],) + row


def run_pipeline(cfg: RunConfig, out_dir: str | Path | None = None) -> tuple[int, dict]:
    """Execute one configured run; returns ``(exit code, summary)``."""
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg.to_dict())
    traj = run(cfg.scenario)
    summary, reports, bundle, fields = analyse(cfg, traj)
    ostr, rstr = cfg.output.snapshot_stride, cfg.output.r_stride
    files = ["config.json", "trajectory.csv", "energy.csv"]
    write_csv(out / "trajectory.csv", ("t", "r", "phi", "dphi_dt", "dphi_dr", "dphi_dq", "H_LL"),
              _trajectory_rows(traj, ostr, rstr))
    E = [snapshot_energy(s) for s in traj.snapshots]
    write_csv(out / "energy.csv", ("t", "E"), zip(traj.times, E))
    if bundle is not None:
        keep = set(bundle.labels[:: cfg.eikonal.csv_label_stride].tolist())
        rows = (row for row in bundle.rows() if row[0] in keep)
        write_csv(out / "eikonal.csv", ("label_rho", "s", "t", "r", "q"), rows)
        write_csv(out / "eikonal_fields.csv", ("t", "r", "rho", "rho_q_fd", "rho_q_factor", "valid"),
                  _field_rows(fields, ostr, rstr))
        files += ["eikonal.csv", "eikonal_fields.csv"]
    write_json(out / "reports.json", reports)
    write_json(out / "summary.json", summary)
    files += ["reports.json", "summary.json"]
    write_json(out / "manifest.json", {
        "scenario": dataclasses.asdict(cfg.scenario),
        "termination": {"status": traj.termination.value, "t_star": traj.t_star, "r_star": traj.r_star,
                        "diagnostic": traj.diagnostic},
        "snapshot_times": [float(traj.times[k]) for k in _keep(len(traj.snapshots), ostr)],
        "files": files,
    })
    return EXIT_CODES[traj.termination], summary


def summary_row(summary: dict) -> list:
    return [summary.get(k) for k in SUMMARY_FIELDS]
