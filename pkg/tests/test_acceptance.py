"""Acceptance gate: each criterion at its stated tolerance and runtime budget.

Run alone with ``pytest tests/test_acceptance.py -v``; a summary block lists one
pass/fail line per criterion at the end of the session.
"""
import math
import time

import numpy as np
import pytest

from fillvol.harness import (
    fit_power_law,
    fit_sqrtlog,
    integrate_slice_fv,
    perturbation_check,
    run_concentration_experiment,
    run_scaling_experiment,
)
from fillvol.models import OrientedSubspace, RngStream, sample_great_spheres, sample_iid_zero_cycle, sample_random_jump
from fillvol.slicing import slice_great_spheres
from fillvol.transport import fv_bruteforce, fv_cube, fv_interval, mass_F0
from fillvol.winding import fv_winding
from fillvol.witness import (
    build_grid_witness,
    build_interval_witness,
    build_multiscale_witness,
    witness_lower_bound,
)

pytestmark = pytest.mark.acceptance

N_GRID = [512, 1024, 2048, 4096]


def test_oracle_equivalence(criterion):
    t0 = time.perf_counter()
    g = np.random.default_rng(101)
    worst = 0.0
    for d in (1, 2, 3):
        for _ in range(500):
            Z = sample_iid_zero_cycle(int(g.integers(1, 7)), d, g)
            worst = max(worst, abs(fv_cube(Z)[0] - fv_bruteforce(Z)))
    worst_1d = 0.0
    for _ in range(500):
        Z = sample_iid_zero_cycle(int(g.integers(1, 201)), 1, g)
        worst_1d = max(worst_1d, abs(fv_cube(Z)[0] - fv_interval(Z)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and worst_1d <= 1e-9 and elapsed < 60
    criterion(1, ok, f"max |flow - brute| = {worst:.2e}, max |flow - interval| = {worst_1d:.2e}, {elapsed:.1f}s")
    assert ok


def test_one_dimensional_constants(criterion):
    t0 = time.perf_counter()
    N, trials = 400, 10_000
    vals = np.array([mass_F0(sample_iid_zero_cycle(N, 1, RngStream(202, t))) for t in range(trials)])
    mean = vals.mean()
    half = 2.5758 * vals.std(ddof=1) / math.sqrt(trials)
    lo_b, hi_b = math.sqrt(N / 32), math.sqrt(N) / 2
    elapsed = time.perf_counter() - t0
    ok = lo_b <= mean <= hi_b and 3.0 < mean - half and mean + half < 10.5 and elapsed < 60
    criterion(2, ok, f"mean mass_F0 = {mean:.4f}, 99% CI [{mean - half:.4f}, {mean + half:.4f}], "
                     f"target [{lo_b:.3f}, {hi_b:.3f}] inside (3.0, 10.5), {elapsed:.1f}s")
    assert ok


def test_akt_exponents(criterion):
    t0 = time.perf_counter()
    fits = {}
    # d=1 values fluctuate at the scale of their mean; extra trials are cheap there
    trials = {1: 1000, 2: 50, 3: 50}
    for d in (1, 2, 3):
        res = run_scaling_experiment(dict(model="iid0cycle", n=d, k=0, N_grid=N_GRID, trials=trials[d],
                                          master_seed=303, observables=["fv"]))
        assert not res.errors
        means = res.means("fv")
        fits[d] = (fit_power_law(means), fit_sqrtlog(means))
    elapsed = time.perf_counter() - t0
    e1, e2, e3 = (fits[d][0][0] for d in (1, 2, 3))
    slope, _, r2 = fits[2][1]
    ok = (0.45 <= e1 <= 0.55 and 0.62 <= e3 <= 0.72 and 0.50 <= e2 <= 0.60
          and slope > 0 and r2 >= 0.8 and elapsed < 1800)
    criterion(3, ok, f"exponents d=1 {e1:.3f}, d=2 {e2:.3f}, d=3 {e3:.3f}; "
                     f"d=2 sqrt-log slope {slope:.4f} R^2 {r2:.3f}, {elapsed:.0f}s")
    assert ok


def test_duality_soundness(criterion):
    g = np.random.default_rng(404)
    violations = {"grid": 0, "multiscale": 0, "interval": 0}
    for _ in range(1000):
        Z = sample_iid_zero_cycle(int(g.integers(1, 200)), 3, g)
        r = [None, 1 / 2, 1 / 3, 1 / 4][int(g.integers(4))]
        W = build_grid_witness(Z, r)
        violations["grid"] += witness_lower_bound(W, Z) > fv_cube(Z)[0] + 1e-9
    for _ in range(1000):
        Z = sample_iid_zero_cycle(int(g.integers(1, 300)), 2, g)
        W = build_multiscale_witness(Z, [None, 1, 2, 3][int(g.integers(4))], float(g.choice([0.25, 1.0, 4.0])))
        violations["multiscale"] += witness_lower_bound(W, Z) > fv_cube(Z)[0] + 1e-9
    for _ in range(1000):
        Z = sample_iid_zero_cycle(int(g.integers(1, 500)), 1, g)
        W = build_interval_witness(Z, int(g.integers(1, 33)), float(g.choice([0.5, 1.0, 2.0])))
        violations["interval"] += witness_lower_bound(W, Z) > fv_interval(Z) + 1e-9
    ratios = []
    for t in range(100):
        Z = sample_iid_zero_cycle(1000, 2, RngStream(405, t))
        ratios.append(witness_lower_bound(build_multiscale_witness(Z), Z) / fv_cube(Z)[0])
    med = float(np.median(ratios))
    ok = sum(violations.values()) == 0 and med >= 0.02
    criterion(4, ok, f"violations {violations}; multiscale median bound/fv at N=1000 = {med:.4f}")
    assert ok


def test_codimension_one(criterion):
    t0 = time.perf_counter()
    h = 1 / 1024
    means, bad, worst_gap = [], 0, -np.inf
    for i, N in enumerate([128, 256, 512, 1024]):
        vals = []
        for t in range(40):
            Z = sample_random_jump(N, 2, RngStream(505, (i << 32) | t))
            val, err = fv_winding(Z, h)
            est, se = integrate_slice_fv(Z, [0], 32, RngStream(506, (i << 32) | t))
            gap = est - (val + err + 3 * se)
            worst_gap = max(worst_gap, gap)
            bad += gap > 0
            vals.append(val)
        means.append((N, float(np.mean(vals))))
    e, se_e, _ = fit_power_law(means)
    elapsed = time.perf_counter() - t0
    ok = 0.43 <= e <= 0.57 and bad == 0 and elapsed < 600
    criterion(5, ok, f"fv_winding exponent {e:.3f} +- {se_e:.3f}; slice bound violations {bad}/160 "
                     f"(max slack used {worst_gap:.3f}), {elapsed:.0f}s")
    assert ok


def test_codimension_two_knots(criterion):
    t0 = time.perf_counter()
    res = run_scaling_experiment(dict(model="jump", n=3, k=1, N_grid=N_GRID, trials=100, master_seed=606,
                                      observables=["slice_fv"]))
    assert not res.errors
    means = res.means("slice_fv")
    e, se, _ = fit_power_law(means)
    slope, _, _ = fit_sqrtlog(means)
    elapsed = time.perf_counter() - t0
    ok = 0.50 <= e <= 0.60 and slope > 0 and elapsed < 1200
    criterion(6, ok, f"slice fv exponent {e:.3f} +- {se:.3f}; sqrt-log slope {slope:.4f}, {elapsed:.0f}s")
    assert ok


def test_sphere_slices(criterion):
    t0 = time.perf_counter()
    subs = sample_great_spheres(10_000, 3, 1, RngStream(707))
    zc = slice_great_spheres(subs, OrientedSubspace(np.eye(4)[:, :3]))
    P = zc.positions.reshape(-1, 2, 3)
    S = zc.signs.reshape(-1, 2)
    dev = float(np.abs((P[:, 0] * P[:, 1]).sum(axis=1) + 1).max())
    opposite = bool(np.all(S[:, 0] == -S[:, 1]))
    res = run_scaling_experiment(dict(model="spheres", n=3, k=1, N_grid=N_GRID, trials=20, master_seed=708,
                                      observables=["slice_fv"]))
    assert not res.errors
    slope, _, r2 = fit_sqrtlog(res.means("slice_fv"))
    elapsed = time.perf_counter() - t0
    ok = dev <= 1e-9 and opposite and slope > 0 and elapsed < 1200
    criterion(7, ok, f"max |<x,y> + 1| = {dev:.1e}, opposite signs {opposite}; "
                     f"sqrt-log slope {slope:.4f} (R^2 {r2:.3f}), {elapsed:.0f}s")
    assert ok


def test_concentration(criterion):
    rep = run_concentration_experiment(dict(model="iid0cycle", n=2, k=0, N_grid=[500, 2000], trials=500,
                                            master_seed=808, observables=["fv"]))
    ratios = {N: s["std_over_sqrtN"] for N, s in rep["per_N"].items()}
    spread = rep["std_ratio_spread"]
    pert = perturbation_check(200, 2, 1000, RngStream(809))
    ok = spread <= 2.0 and pert["violations"] == 0
    criterion(8, ok, f"std/sqrt(N) {', '.join(f'N={N}: {r:.4f}' for N, r in ratios.items())} "
                     f"(spread {spread:.2f}); perturbation violations {pert['violations']}/1000")
    assert ok


def test_excluded_by_design(criterion):
    criterion(9, "EXCLUDED", "absolute constants, the minimal filling surface and regularity claims "
                             "are outside desk-scale reproduction")
