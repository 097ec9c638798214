"""Acceptance criteria 1-10, one test each, each printing a PASS/FAIL line."""
import dataclasses
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from nullwave.asymptotic import (
    Kind,
    asymptotic_coefficients,
    classify,
    fibonacci_sphere,
    integrate_asymptotic,
    model_family,
    null_form_q0,
    plateau_profile,
    q_grid,
    riccati_blowup_oracle,
    semilinear_dt_squared,
)
from nullwave.config import load_run_config
from nullwave.diagnostics import (
    decay_fit,
    energy_inequality_check,
    gronwall_extremal,
    gronwall_hypothesis_holds,
    gronwall_oracle,
    growth_exponent,
    klainerman_sobolev_check,
    log_spaced_indices,
    poincare_check,
    snapshot_energy,
    snapshot_windows,
)
from nullwave.eikonal import verify_eikonal_bounds
from nullwave.nullframe import MINKOWSKI, NullComponents, decompose, reconstruct
from nullwave.radial_solver import (
    Scenario,
    Termination,
    exact_linear_solution,
    linear_energy,
    run,
)

ROOT = Path(__file__).resolve().parents[1]


def test_criterion_01_frame_roundtrip(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        a = rng.normal(size=(4, 4))
        g = 0.5 * (a + a.T)
        w = rng.normal(size=3)
        worst = max(worst, float(np.max(np.abs(reconstruct(decompose(g, w), w) - g))))
    flat = True
    for w in np.eye(3):
        c = decompose(MINKOWSKI, w)
        flat &= bool(c.gLLbar == -0.5 and c.gLL == 0 and c.gLbarLbar == 0 and np.all(c.gLA == 0)
                     and np.all(c.gLbarA == 0) and np.all(c.gAB == np.eye(2)))
    # off the axes the identity holds to rounding in the normalised direction
    flat_ab = 0.0
    for w in rng.normal(size=(200, 3)):
        c = decompose(MINKOWSKI, w)
        ref = NullComponents(0.0, -0.5, 0.0, np.zeros(2), np.zeros(2), np.eye(2))
        flat_ab = max(flat_ab, float(np.max(np.abs(c.as_array() - ref.as_array()))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-12 and flat and flat_ab < 1e-15 and dt < 1.0
    acceptance(1, "frame roundtrip", ok,
               f"max error {worst:.2e}, Minkowski identity exact on axes {flat}, off-axis {flat_ab:.1e}, {dt:.2f} s")


def test_criterion_02_classifier(acceptance):
    t0 = time.perf_counter()
    q0 = classify(null_form_q0())
    dirs = fibonacci_sphere(32)
    a11 = [asymptotic_coefficients(semilinear_dt_squared(), w).A[1, 1] for w in dirs]
    c1 = 1.0
    worst_other, worst_a02 = 0.0, 0.0
    for w in dirs:
        A = asymptotic_coefficients(model_family(c1), w).A.copy()
        worst_a02 = max(worst_a02, abs(A[0, 2] + c1 / 2))
        A[0, 2] = 0.0
        worst_other = max(worst_other, float(np.max(np.abs(A))))
    dt = time.perf_counter() - t0
    ok = (q0.kind is Kind.CLASSICAL_NULL and q0.max_abs_A < 1e-12 and all(a == 0.25 for a in a11)
          and worst_a02 < 1e-12 and worst_other < 1e-12 and dt < 1.0)
    acceptance(2, "null-condition classifier", ok,
               f"Q0 {q0.kind.value} max|A| {q0.max_abs_A:.1e}; A11 exact 0.25 {all(a == 0.25 for a in a11)}; "
               f"model |A02 + c'(0)/2| {worst_a02:.1e}, others {worst_other:.1e}; {dt:.2f} s")


def test_criterion_03_riccati(acceptance):
    t0 = time.perf_counter()
    A = np.zeros((3, 3))
    A[1, 1] = 0.25
    q = q_grid()
    details, ok = [], True
    for v0 in (1.0, 0.5, 0.2):
        oracle = riccati_blowup_oracle(0.25, v0)
        errs = []
        for ds in (0.02, 0.01, 0.005):
            _, out = integrate_asymptotic(A, plateau_profile(q, v0), 10 * oracle, ds=ds)
            errs.append(abs(out.s_star - oracle) / oracle if out.blew_up else np.inf)
        ok &= errs[-1] < 0.01 and errs[2] <= errs[1] <= errs[0]
        details.append(f"V0 {v0}: rel err {errs[-1]:.1e}")
    dt = time.perf_counter() - t0
    ok &= dt < 10.0
    acceptance(3, "Riccati blow-up", ok, "; ".join(details) + f"; {dt:.1f} s")


def test_criterion_04_solver_convergence(acceptance):
    t0 = time.perf_counter()
    errs = []
    for dr in (0.04, 0.02, 0.01):
        sc = Scenario(nonlinearity="linear", epsilon=1.0, dr=dr, t_end=4.0, output_every=4.0)
        s = run(sc).snapshots[-1]
        errs.append(float(np.max(np.abs(s.phi - exact_linear_solution(sc, 4.0, s.r)))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    tr = run(Scenario(nonlinearity="linear", epsilon=1.0, dr=0.025, t_end=100.0, output_every=5.0))
    E = np.array([linear_energy(s) for s in tr.snapshots])
    drift = float(np.max(np.abs(E / E[0] - 1)))
    dt = time.perf_counter() - t0
    ok = bool(np.all(orders >= 1.9)) and drift < 1e-3 and dt < 120
    acceptance(4, "solver convergence", ok,
               f"orders {np.round(orders, 3).tolist()}, energy drift to t=100 {drift:.1e}, {dt:.1f} s")


def test_criterion_05_small_data(model_run, model_eikonal, acceptance):
    t0 = time.perf_counter()
    _, fields = model_eikonal
    fit = decay_fit(model_run, "sup_dphi", near_cone_only=True, fields=fields)
    gammas = {}
    for eps in (0.01, 0.005, 0.0025):
        tr = model_run if eps == 0.01 else run(dataclasses.replace(model_run.scenario, epsilon=eps))
        E = np.array([snapshot_energy(s) for s in tr.snapshots])
        gammas[eps] = growth_exponent(tr.times, E).gamma
    ratios = [gammas[0.005] / gammas[0.01], gammas[0.0025] / gammas[0.005]]
    dt = time.perf_counter() - t0
    ok = (model_run.termination is Termination.COMPLETED and -1.15 <= fit.exponent <= -0.85
          and gammas[0.01] <= 0.5 and all(0.3 <= r <= 0.8 for r in ratios))
    acceptance(5, "small-data global behaviour", ok,
               f"{model_run.termination.value}; decay exponent {fit.exponent:.3f}; gamma {gammas[0.01]:.4f}; "
               f"ratios {np.round(ratios, 3).tolist()}; {dt:.1f} s plus the shared run")


def test_criterion_06_blowup(acceptance):
    t0 = time.perf_counter()
    base = load_run_config(ROOT / "configs" / "blowup.yaml").scenario
    stars, ok = [], True
    for eps in (0.3, 0.5, 0.8):
        tr = run(dataclasses.replace(base, epsilon=eps))
        if tr.termination is not Termination.BLOWUP:
            ok = False
            stars.append((np.inf, np.inf))
            continue
        stars.append((tr.t_star, tr.r_star))
    t5, r5 = stars[1]
    ts = [s[0] for s in stars]
    dt = time.perf_counter() - t0
    ok &= abs(r5 - t5) < 2 and ts[0] > ts[1] > ts[2] and dt < 300
    acceptance(6, "blow-up contrast", ok,
               f"t* {np.round(ts, 3).tolist()} for eps 0.3/0.5/0.8; eps 0.5 |r*-t*| {abs(r5 - t5):.2f}; {dt:.1f} s")


def test_criterion_07_eikonal(model_run, model_eikonal, acceptance):
    t0 = time.perf_counter()
    bundle, fields = model_eikonal
    rep = verify_eikonal_bounds(fields, model_run, 0.01, 0.9, bundle=bundle)
    dt = time.perf_counter() - t0
    ok = (rep.rho_q_positive and rep.method_rel_diff < 0.05 and rep.eikonal1_holds and rep.eikonal2_holds
          and rep.outside_exact)
    acceptance(7, "eikonal bounds", ok,
               f"min rho_q {rep.min_rho_q:.4f}; methods differ {100 * rep.method_rel_diff:.2f}%; c1 {rep.c1_hypothesis:.2f} "
               f"vs needed {rep.c1_eikonal1:.2f}/{rep.c1_eikonal2:.2f}; exact outside strip {rep.outside_exact}; "
               f"{dt:.1f} s on stored output")


def test_criterion_08_inequalities(model_run, model_eikonal, acceptance):
    t0 = time.perf_counter()
    bundle, fields = model_eikonal
    poin = poincare_check(model_run, fields, 1.0, 0.01, 0.5)
    en = energy_inequality_check(model_run, fields, 1.0, 0.01, 0.5, residual_stride=5)
    ks = klainerman_sobolev_check(snapshot_windows(model_run, np.arange(len(model_run.snapshots))))
    ks_ok = ks.holds and ks.margin.size == len(model_run.snapshots)
    consts = []
    for dr in (0.025, 0.0125):
        tr = run(dataclasses.replace(model_run.scenario, dr=dr, t_end=60.0))
        idx = log_spaced_indices(tr.times, 0.0, 60.0, 12)
        consts.append(klainerman_sobolev_check(snapshot_windows(tr, idx)).constant)
    rel = abs(consts[1] / consts[0] - 1)
    dt = time.perf_counter() - t0
    ok = poin.holds and en.holds and ks_ok and rel < 0.1 and dt < 300
    acceptance(8, "inequality suite", ok,
               f"Poincare constant {poin.constant:.3f} (<= 1 with 32 folded in), energy C {en.constant:.3f}, "
               f"KS C {ks.constant:.4f} over {ks.margin.size} times; KS refinement change {100 * rel:.2f}%; {dt:.1f} s")


def _admissible_energy(E0, A, B, eps, lam, theta, t):
    """Solution of ``E' = theta B eps/(1+t) (E + A (1+t)^{B eps})`` from ``E(0+) = 4 lam E0``.

    For ``lam, theta`` in ``[0, 1]`` it satisfies the integral hypothesis by construction.
    """
    k = B * eps
    x = np.log1p(t)
    E1 = 4.0 * lam * E0
    if theta == 1.0 or k == 0.0:
        return np.exp(theta * k * x) * (E1 + theta * k * A * x)
    return np.exp(theta * k * x) * (E1 + theta * A * np.expm1((1 - theta) * k * x) / (1 - theta))


def test_criterion_09_gronwall(acceptance):
    t0 = time.perf_counter()
    t = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 1500)])
    n = bad = unverified = 0
    for A in (0.0, 0.1, 1.0, 10.0, 100.0):
        for B in (0.0, 0.5, 1.0, 5.0, 20.0):
            for eps in (1e-3, 1e-2, 0.05, 0.1, 0.3):
                for lam in (0.5, 0.95):
                    for theta in (0.0, 0.5, 0.9, 1.0):
                        E0 = 1.0
                        E = _admissible_energy(E0, A, B, eps, lam, theta, t)
                        E[0] = E0
                        unverified += int(not gronwall_hypothesis_holds(t, E, A, B, eps, rtol=1e-4))
                        n += 1
                        bad += int(np.any(E[1:] > gronwall_oracle(E0, A, B, eps, t[1:]) * (1 + 1e-12)))
    dt = time.perf_counter() - t0
    ok = n >= 1000 and bad == 0 and unverified == 0 and dt < 5
    acceptance(9, "Gronwall oracle", ok,
               f"{n} cases ({unverified} failing the sampled hypothesis check), {bad} violations, {dt:.2f} s")


DET_CONFIG = """\
scenario:
  nonlinearity: model
  epsilon: 0.01
  dr: 0.05
  t_end: 20
  output_every: 0.25
diagnostics:
  inequalities: [energy_weighted, poincare, klainerman_sobolev]
  fits: [sup_dphi]
  ks_samples: 6
"""


def test_criterion_10_determinism(tmp_path, acceptance):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(DET_CONFIG)
    dirs = [tmp_path / "a", tmp_path / "b"]
    codes = [
        subprocess.run([sys.executable, "-m", "nullwave.cli", "--quiet", "run", "--config", str(cfg), "--out", str(d)],
                       check=False).returncode
        for d in dirs
    ]
    names = sorted(p.name for p in dirs[0].iterdir())
    same = names == sorted(p.name for p in dirs[1].iterdir()) and all(
        (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names)
    acceptance(10, "determinism", codes == [0, 0] and same,
               f"exit codes {codes}; {len(names)} files byte-identical {same}")
