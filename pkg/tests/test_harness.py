import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fillvol.chains import PolyCycle
from fillvol.harness import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    directional_slice_sums,
    fit_power_law,
    fit_sqrtlog,
    fits_from_rows,
    integrate_slice_fv,
    perturbation_check,
    run_concentration_experiment,
    run_correlation_test,
    run_scaling_experiment,
    tail_summary,
)
from fillvol.models import RngStream, sample_cube_planes, sample_random_jump


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("nope", 2, 1, [10], 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("jump", 2, 2, [10], 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("jump", 3, 1, [0], 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("jump", 3, 1, [10], 0)
    with pytest.raises(ConfigError):
        ExperimentConfig("jump", 3, 1, [10], 1, observables=["fv_winding"])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"model": "jump", "n": 3, "k": 1, "N_grid": [5], "trials": 1, "extra": 1})
    cfg = ExperimentConfig.from_dict({"model": "jump", "n": 3, "k": 1, "N_grid": [5], "trials": 1})
    assert cfg.slice_at == [0.5] and cfg.quadrature_m == 32


def test_integrate_empty():
    Z = PolyCycle(2, 1, np.zeros((0, 2, 2)), np.zeros(0, dtype=np.int64))
    assert integrate_slice_fv(Z, [0], 8, 0) == (0.0, 0.0)


def test_integrate_needs_k_axes():
    with pytest.raises(ValueError):
        integrate_slice_fv(sample_random_jump(5, 3, 0), [0, 1], 4, 0)


def test_directional_square(square_loop):
    res = directional_slice_sums(square_loop, 200, RngStream(1))
    assert set(res) == {(0,), (1,)}
    (a, sa), (b, sb) = res[(0,)], res[(1,)]
    assert abs(a - b) <= 3 * math.hypot(sa, sb)


@pytest.mark.parametrize("n", [3, 4])
def test_direction_count(n):
    res = directional_slice_sums(sample_random_jump(20, n, 0), 2, 0)
    assert len(res) == n


def test_directional_knot_isotropy():
    Z = sample_random_jump(1000, 3, RngStream(2))
    est = [v for v, _ in directional_slice_sums(Z, 16, RngStream(3)).values()]
    assert max(est) <= 2 * min(est)


def test_integrate_planes():
    planes = sample_cube_planes(40, 3, 1, RngStream(4))
    est, se = integrate_slice_fv(planes, [1], 8, 0)
    assert est > 0 and se >= 0


def test_fit_power_law_examples():
    xs = [100, 200, 400, 800, 1600]
    e, se, r2 = fit_power_law([(x, 4 * x ** (2 / 3)) for x in xs])
    assert e == pytest.approx(2 / 3, abs=1e-12) and r2 == pytest.approx(1.0)
    e, _, _ = fit_power_law([(x, 3.0) for x in xs])
    assert e == pytest.approx(0.0, abs=1e-12)
    s, b, r2 = fit_sqrtlog([(x, math.sqrt(x * math.log(x))) for x in xs])
    assert s == pytest.approx(1.0, abs=1e-6) and r2 == pytest.approx(1.0)


@given(st.floats(0.1, 2.0), st.floats(0.1, 10.0), st.integers(0, 2**32 - 1))
def test_fit_recovers_planted_exponent(alpha, c, seed):
    g = np.random.default_rng(seed)
    xs = np.sort(g.choice(np.arange(10, 100_000), size=6, replace=False))
    noise = np.exp(g.normal(0, 1e-5, size=6))
    e, _, _ = fit_power_law(list(zip(xs, c * xs**alpha * noise)))
    assert round(e, 3) == pytest.approx(round(alpha, 3), abs=1.5e-3)


def test_fit_excludes_nonpositive():
    pairs = [(10, 1.0), (20, 2.0), (40, 4.0), (80, 0.0)]
    with pytest.warns(RuntimeWarning):
        e, _, _ = fit_power_law(pairs)
    assert e == pytest.approx(1.0)
    with pytest.raises(ValueError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit_power_law([(10, 1.0), (20, 2.0), (20, 0.0)])


CFG = dict(model="jump", n=2, k=1, N_grid=[16, 32, 64], trials=3, master_seed=5, quadrature_m=4,
           observables=["slice_fv", "slice_witness", "slice_integral", "fv_winding", "winding_error"])


def test_scaling_rows_and_reproducibility():
    a = run_scaling_experiment(CFG, workers=1)
    b = run_scaling_experiment(CFG, workers=3)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == ",".join(CSV_HEADER)
    assert len(a.rows) == 3 * 3 * 5 and not a.errors
    keys = [(r[3], r[4]) for r in a.rows]
    assert keys == sorted(keys)
    assert a.fits == fits_from_rows(a.rows)


def test_estimator_ordering():
    res = run_scaling_experiment(CFG)
    by = {}
    for r in res.rows:
        by.setdefault((r[3], r[4]), {})[r[6]] = r[7]
    for v in by.values():
        assert v["slice_witness"] <= v["slice_fv"] + 1e-9


def test_worker_env(monkeypatch):
    monkeypatch.setenv("FILLVOL_WORKERS", "2")
    assert run_scaling_experiment(CFG).to_csv() == run_scaling_experiment(CFG, workers=1).to_csv()


@pytest.mark.parametrize("model,n,k,obs", [
    ("iid0cycle", 1, 0, ["fv", "mass_F0", "witness_bound"]),
    ("iid0cycle", 3, 0, ["fv", "witness_bound"]),
    ("planes", 3, 1, ["slice_fv", "slice_witness", "slice_integral"]),
    ("planes", 4, 2, ["slice_fv", "slice_points"]),
    ("spheres", 2, 1, ["slice_fv", "slice_points"]),
    ("jump", 3, 1, ["slice_fv", "slice_points"]),
])
def test_models_run(model, n, k, obs):
    res = run_scaling_experiment(dict(model=model, n=n, k=k, N_grid=[8, 16, 32], trials=2, observables=obs,
                                      quadrature_m=2))
    assert not res.errors
    assert all(math.isfinite(r[7]) and r[7] >= 0 for r in res.rows)
    if model == "spheres":
        assert "note" in res.metadata
        pts = res.values("slice_points")
        assert all(np.all(v == 2 * N) for N, v in pts.items())


def test_failures_are_recorded(monkeypatch):
    from fillvol import harness
    from fillvol.transport import SolverError

    def boom(zc):
        raise SolverError("forced")

    monkeypatch.setattr(harness, "_fv_of_slice", boom)
    res = run_scaling_experiment(dict(model="iid0cycle", n=2, k=0, N_grid=[5], trials=2, observables=["fv"]))
    assert len(res.errors) == 2 and all(math.isnan(r[7]) for r in res.rows)


def test_tail_summary_constant():
    s = tail_summary([2.0] * 10)
    assert s["std"] == 0.0 and s["mean"] == 2.0


def test_concentration_requires_trials():
    with pytest.raises(ConfigError):
        run_concentration_experiment(dict(model="iid0cycle", n=2, k=0, N_grid=[10], trials=50))


def test_concentration_report():
    rep = run_concentration_experiment(dict(model="iid0cycle", n=2, k=0, N_grid=[50, 100], trials=200,
                                            observables=["fv"]))
    assert set(rep["per_N"]) == {50, 100}
    for s in rep["per_N"].values():
        assert s["std"] > 0 and 0 <= s["exceedance"]["3sigma"] <= s["exceedance"]["1sigma"] <= 1
    assert "sqrt(N)" in rep["note"]


def test_perturbation_check():
    rep = perturbation_check(80, 2, 100, RngStream(6))
    assert rep["violations"] == 0 and rep["max_ratio"] <= 1 + 1e-9


def test_correlation_flags_sparse_events():
    rep = run_correlation_test(n=3, k=1, samples=2000, inner=4, ells=(1 / 4, 1 / 32))
    assert rep["rows"][1]["flagged"]


def test_correlation_rejects_bad_x():
    with pytest.raises(ConfigError):
        run_correlation_test(n=3, k=1, samples=10, x=0.1)
