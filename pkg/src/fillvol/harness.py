"""Experiment drivers: slice estimators, scaling runs, fits, concentration and correlation."""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .chains import Ambient, PolyCycle, ZeroCycle
from .models import (
    AffineKPlane,
    OrientedSubspace,
    RngStream,
    _as_generator,
    sample_cube_planes,
    sample_great_spheres,
    sample_iid_zero_cycle,
    sample_random_jump,
    trial_stream,
)
from .slicing import DegenerateSlice, SliceSpec, _slice_cells, slice_great_spheres, slice_planes, slice_polycycle, slice_with_retry
from .transport import SolverError, fv_cube, fv_interval, fv_sphere, mass_F0
from .winding import fv_winding
from .witness import WitnessError, build_witness, witness_lower_bound

CSV_HEADER = ("model", "n", "k", "N", "trial", "seed", "observable", "value")
MODELS = ("jump", "planes", "spheres", "iid0cycle")
WORKERS_ENV = "FILLVOL_WORKERS"

SPHERE_NOTE = (
    "sphere slices use a single fixed great sphere span(e_0..e_{n-k}); "
    "the slice is an exact antipodal matching problem"
)
TAIL_NOTE = (
    "tails are reported for r measured in units of sigma, with sigma/sqrt(N) "
    "tracked across N; this matches a tail of the form exp(-C r / sqrt(N)). "
    "The alternative normalisation exp(-C sqrt(N) r) is inconsistent with a "
    "sqrt(N)-Lipschitz dependence on the points and is not used."
)

_DEFAULT_OBSERVABLES = {
    "iid0cycle": ("fv", "witness_bound"),
    "jump": ("slice_fv", "slice_witness", "slice_integral"),
    "planes": ("slice_fv", "slice_witness", "slice_integral"),
    "spheres": ("slice_fv",),
}
_ALLOWED_OBSERVABLES = {
    "iid0cycle": {"fv", "mass_F0", "witness_bound"},
    "jump": {"slice_fv", "slice_witness", "slice_integral", "slice_integral_stderr",
             "fv_winding", "winding_error", "slice_points"},
    "planes": {"slice_fv", "slice_witness", "slice_integral", "slice_integral_stderr", "slice_points"},
    "spheres": {"slice_fv", "slice_points"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: str
    n: int
    k: int
    N_grid: list
    trials: int
    master_seed: int = 0
    quadrature_m: int = 32
    observables: Optional[list] = None
    slice_at: Optional[list] = None
    winding_h: float = 1.0 / 256
    witness: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        self.n, self.k, self.trials = int(self.n), int(self.k), int(self.trials)
        self.N_grid = [int(N) for N in self.N_grid]
        if not self.n > self.k >= 0:
            raise ConfigError("need n > k >= 0")
        if not self.N_grid or min(self.N_grid) < 1:
            raise ConfigError("N_grid must be a non-empty list of positive integers")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.quadrature_m < 1:
            raise ConfigError("quadrature_m must be >= 1")
        if self.model == "iid0cycle" and self.k != 0:
            raise ConfigError("iid0cycle is a 0-cycle model; use k = 0 and n = d")
        if self.model == "jump" and self.k != 1:
            raise ConfigError("random-jump model has k = 1")
        if self.model in ("jump", "planes") and self.n < 2:
            raise ConfigError("cube models need n >= 2")
        if self.model == "planes" and self.k < 1:
            raise ConfigError("planes model needs k >= 1")
        obs = list(self.observables) if self.observables else list(_DEFAULT_OBSERVABLES[self.model])
        bad = set(obs) - _ALLOWED_OBSERVABLES[self.model]
        if bad:
            raise ConfigError(f"observables {sorted(bad)} not available for model {self.model}")
        if ("fv_winding" in obs or "winding_error" in obs) and self.n != 2:
            raise ConfigError("fv_winding needs n = 2")
        if "mass_F0" in obs and self.n != 1:
            raise ConfigError("mass_F0 needs d = 1")
        self.observables = obs
        if self.slice_at is None:
            self.slice_at = [0.5] * self.k
        self.slice_at = [float(v) for v in self.slice_at]
        if len(self.slice_at) != self.k:
            raise ConfigError("slice_at needs one value per fixed axis")

    @property
    def d(self) -> int:
        return self.n - self.k

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScalingResult:
    config: ExperimentConfig
    rows: list
    errors: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def values(self, observable: str) -> dict:
        """``{N: array of finite values}`` for one observable."""
        out: dict = {}
        for r in self.rows:
            if r[6] == observable and math.isfinite(r[7]):
                out.setdefault(r[3], []).append(r[7])
        return {N: np.array(v) for N, v in out.items()}

    def means(self, observable: str) -> list:
        return [(N, float(v.mean())) for N, v in sorted(self.values(observable).items())]

    @property
    def fits(self) -> dict:
        return fits_from_rows(self.rows)

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


# slice estimators


def _slice_zero_cycle(Z, spec: SliceSpec) -> ZeroCycle:
    if isinstance(Z, PolyCycle):
        return slice_polycycle(Z, spec, atoms=False)[0]
    return slice_planes(list(Z), spec)[0]


def _fv_of_slice(zc: ZeroCycle) -> float:
    if len(zc) == 0:
        return 0.0
    if zc.ambient.kind == "sphere":
        return fv_sphere(zc)[0]
    if zc.ambient.d == 1:
        return fv_interval(zc)
    return fv_cube(zc)[0]


def _reorder(Z, axes):
    # put the chosen axes first so that slicing fixes them; returns the re-indexed object
    n = Z.n if isinstance(Z, PolyCycle) else Z[0].n
    order = list(axes) + [a for a in range(n) if a not in axes]
    if isinstance(Z, PolyCycle):
        return PolyCycle(Z.n, Z.k, Z.verts[:, :, order], Z.coefs, relative=Z.relative)
    # permuting coordinates flips orientation by the permutation parity; keep the
    # original orientation by flipping the first basis vector when it is odd
    parity = np.linalg.det(np.eye(n)[order])
    out = []
    for P in Z:
        B = P.basis[order].copy()
        if parity < 0:
            B[:, 0] = -B[:, 0]
        out.append(AffineKPlane(B, P.offset[order]))
    return out


def integrate_slice_fv(Z, axes, m: int, rng) -> tuple[float, float]:
    """Monte Carlo estimate of the integral over x of fv(Z sliced at {x_axes = x}).

    ``Z`` is a PolyCycle or a list of AffineKPlane. The estimate is unbiased
    and lower-bounds the filling volume; returns ``(estimate, stderr)``.
    """
    axes = [int(a) for a in axes]
    if isinstance(Z, PolyCycle):
        k, n, empty = Z.k, Z.n, len(Z) == 0
    else:
        Z = list(Z)
        empty = len(Z) == 0
        k, n = (Z[0].k, Z[0].n) if Z else (len(axes), len(axes) + 1)
    if len(axes) != k:
        raise ValueError("need exactly k axes")
    if m < 1:
        raise ValueError("m must be >= 1")
    if empty:
        return 0.0, 0.0
    g = _as_generator(rng)
    Zr = _reorder(Z, axes) if axes != list(range(k)) else Z
    fixed = tuple(range(k))
    vals = np.empty(m)
    for i in range(m):
        spec = SliceSpec(fixed, tuple(g.random(k)))
        zc, _ = slice_with_retry(lambda s: _slice_zero_cycle(Zr, s), spec, g)
        vals[i] = _fv_of_slice(zc)
    se = float(vals.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return float(vals.mean()), se


def directional_slice_sums(Z, m: int, rng) -> dict:
    """integrate_slice_fv for each of the (n choose k) coordinate axis sets.

    The sum over directions is an upper-bound proxy: the true bound carries an
    unspecified dimensional constant.
    """
    g = _as_generator(rng)
    n, k = (Z.n, Z.k) if isinstance(Z, PolyCycle) else (Z[0].n, Z[0].k)
    return {axes: integrate_slice_fv(Z, axes, m, g) for axes in itertools.combinations(range(n), k)}


# scaling experiments


def _sample(cfg: ExperimentConfig, N: int, g):
    if cfg.model == "iid0cycle":
        return sample_iid_zero_cycle(N, cfg.n, g)
    if cfg.model == "jump":
        return sample_random_jump(N, cfg.n, g)
    if cfg.model == "planes":
        return sample_cube_planes(N, cfg.n, cfg.k, g)
    return sample_great_spheres(N, cfg.n, cfg.k, g)


def _fixed_sphere(n: int, k: int) -> OrientedSubspace:
    return OrientedSubspace(np.eye(n + 1)[:, : n + 1 - k])


def _observe(cfg: ExperimentConfig, N: int, g) -> dict:
    """Observable name -> value (float) or exception instance."""
    obs = cfg.observables
    out: dict = {}
    sample = _sample(cfg, N, g)
    if cfg.model == "iid0cycle":
        zc = sample
        if "fv" in obs:
            out["fv"] = _guard(lambda: _fv_of_slice(zc))
        if "mass_F0" in obs:
            out["mass_F0"] = mass_F0(zc)
        if "witness_bound" in obs:
            out["witness_bound"] = _guard(lambda: _witness(zc, cfg.witness))
        return out
    if cfg.model == "spheres":
        zc = slice_great_spheres(sample, _fixed_sphere(cfg.n, cfg.k))
    else:
        spec = SliceSpec(tuple(range(cfg.k)), tuple(cfg.slice_at))
        try:
            zc, _ = slice_with_retry(lambda s: _slice_zero_cycle(sample, s), spec, g)
        except DegenerateSlice as exc:
            return {name: exc for name in obs}
    if "slice_points" in obs:
        out["slice_points"] = float(len(zc))
    if "slice_fv" in obs:
        out["slice_fv"] = _guard(lambda: _fv_of_slice(zc))
    if "slice_witness" in obs:
        out["slice_witness"] = _guard(lambda: _witness(zc, cfg.witness))
    if "slice_integral" in obs or "slice_integral_stderr" in obs:
        try:
            est, se = integrate_slice_fv(sample, range(cfg.k), cfg.quadrature_m, g)
        except (DegenerateSlice, SolverError) as exc:
            est = se = exc
        if "slice_integral" in obs:
            out["slice_integral"] = est
        if "slice_integral_stderr" in obs:
            out["slice_integral_stderr"] = se
    if "fv_winding" in obs or "winding_error" in obs:
        try:
            val, err = fv_winding(sample, cfg.winding_h, g)
        except ArithmeticError as exc:
            val = err = exc
        if "fv_winding" in obs:
            out["fv_winding"] = val
        if "winding_error" in obs:
            out["winding_error"] = err
    return out


def _witness(zc: ZeroCycle, params: dict) -> float:
    if len(zc) == 0:
        return 0.0
    W = build_witness(zc, params)
    return witness_lower_bound(W, zc)


def _guard(fn):
    try:
        return fn()
    except (SolverError, WitnessError, DegenerateSlice) as exc:
        return exc


def _run_trial(cfg: ExperimentConfig, n_index: int, trial: int):
    N = cfg.N_grid[n_index]
    stream = trial_stream(cfg.master_seed, n_index, trial)
    values = _observe(cfg, N, stream.generator())
    rows, errors = [], []
    for name in cfg.observables:
        v = values[name]
        if isinstance(v, Exception):
            errors.append((N, trial, name, f"{type(v).__name__}: {v}"))
            v = float("nan")
        rows.append((cfg.model, cfg.n, cfg.k, N, trial, stream.stream_id, name, float(v)))
    return rows, errors


def _run_trial_star(args):
    return _run_trial(*args)


def worker_count(workers: Optional[int] = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


def run_scaling_experiment(config, workers: Optional[int] = None) -> ScalingResult:
    """Every (N, trial) pair is an independent task; results merge in key order."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    tasks = [(cfg, i, t) for i in range(len(cfg.N_grid)) for t in range(cfg.trials)]
    nw = worker_count(workers)
    if nw == 1:
        results = [_run_trial_star(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(_run_trial_star, tasks, chunksize=max(1, len(tasks) // (4 * nw))))
    rows, errors = [], []
    for r, e in results:
        rows.extend(r)
        errors.extend(e)
    meta = {"config": cfg.to_dict()}
    if cfg.model == "spheres":
        meta["note"] = SPHERE_NOTE
    return ScalingResult(cfg, rows, errors, meta)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([*r[:7], format(r[7], ".17g")])
    return buf.getvalue()


def read_rows_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ConfigError("unexpected CSV header")
        return [(m, int(n), int(k), int(N), int(t), int(s), obs, float(v))
                for m, n, k, N, t, s, obs, v in reader]


# fits


def _clean_pairs(pairs):
    arr = np.array([(float(N), float(v)) for N, v in pairs], dtype=np.float64).reshape(-1, 2)
    arr = arr[np.isfinite(arr[:, 1])]
    bad = arr[:, 1] <= 0
    if bad.any():
        warnings.warn(f"excluding {int(bad.sum())} nonpositive value(s) from the fit", RuntimeWarning)
        arr = arr[~bad]
    if len(np.unique(arr[:, 0])) < 3:
        raise ValueError("need at least 3 distinct N")
    return arr[:, 0], arr[:, 1]


def fit_power_law(pairs) -> tuple[float, float, float]:
    """Least squares of log(value) on log(N): ``(exponent, stderr, R^2)``."""
    N, v = _clean_pairs(pairs)
    res = stats.linregress(np.log(N), np.log(v))
    return float(res.slope), float(res.stderr), float(res.rvalue**2)


def fit_sqrtlog(pairs) -> tuple[float, float, float]:
    """Linear fit of value^2 / N on ln N: ``(slope, intercept, R^2)``."""
    N, v = _clean_pairs(pairs)
    res = stats.linregress(np.log(N), v**2 / N)
    return float(res.slope), float(res.intercept), float(res.rvalue**2)


def fits_from_rows(rows) -> dict:
    """Power-law and sqrt-log fits of the per-N mean of every observable."""
    groups: dict = {}
    for r in rows:
        if math.isfinite(r[7]):
            groups.setdefault(r[6], {}).setdefault(r[3], []).append(r[7])
    out = {}
    for obs, byN in groups.items():
        pairs = [(N, float(np.mean(v))) for N, v in sorted(byN.items())]
        entry: dict = {"means": pairs}
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                e, se, r2 = fit_power_law(pairs)
                s, b, r2s = fit_sqrtlog(pairs)
            entry.update(exponent=e, stderr=se, r2=r2, sqrtlog_slope=s, sqrtlog_intercept=b, sqrtlog_r2=r2s)
        except ValueError:
            pass
        out[obs] = entry
    return out


# concentration


def tail_summary(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    std = float(v.std(ddof=1)) if len(v) > 1 else 0.0
    dev = np.abs(v - mean)
    exceed = {}
    for mult in (1, 2, 3):
        exceed[f"{mult}sigma"] = float(np.mean(dev >= mult * std)) if std > 0 else 0.0
    return {"mean": mean, "std": std, "exceedance": exceed}


def run_concentration_experiment(config, workers: Optional[int] = None) -> dict:
    """Mean, spread and tail frequencies of the first observable per N."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    if cfg.trials < 200:
        raise ConfigError("concentration experiments need trials >= 200")
    result = run_scaling_experiment(cfg, workers)
    obs = cfg.observables[0]
    per_N = {}
    for N, vals in sorted(result.values(obs).items()):
        summary = tail_summary(vals)
        summary["std_over_sqrtN"] = summary["std"] / math.sqrt(N)
        per_N[N] = summary
    ratios = [s["std_over_sqrtN"] for s in per_N.values()]
    spread = max(ratios) / min(ratios) if ratios and min(ratios) > 0 else float("nan")
    return {"observable": obs, "per_N": per_N, "std_ratio_spread": spread, "note": TAIL_NOTE,
            "errors": result.errors}


def perturbation_check(N: int, d: int, instances: int, rng, tol: float = 1e-9) -> dict:
    """Move one point of a random 0-cycle; fv must change by at most the distance moved."""
    g = _as_generator(rng)
    violations, worst = 0, 0.0
    for _ in range(instances):
        Z = sample_iid_zero_cycle(N, d, g)
        i = int(g.integers(N))
        pos = Z.positions.copy()
        # half the time a small move, otherwise a uniform relocation
        if g.random() < 0.5:
            step = g.normal(size=d) * 0.01
            pos[i] = np.clip(pos[i] + step, 0.0, 1.0)
        else:
            pos[i] = g.random(d)
        moved = float(np.linalg.norm(pos[i] - Z.positions[i]))
        Z2 = ZeroCycle(Z.ambient, pos, Z.signs, check=False)
        delta = abs(_fv_of_slice(Z) - _fv_of_slice(Z2))
        if delta > moved + tol:
            violations += 1
        if moved > 0:
            worst = max(worst, delta / moved)
    return {"instances": instances, "violations": violations, "max_ratio": worst}


# correlation of adjacent slice points


def _slice_points(verts: np.ndarray, x: np.ndarray):
    present, pts, signs, _ = _slice_cells(verts, np.ones(len(verts), dtype=np.int64), x)
    return present, pts, signs


def run_correlation_test(config=None, **overrides) -> dict:
    """P[zeta' in +-Q | zeta = +[y], y in Q] for simplices sharing a (k-1)-face.

    Settings (from ``config.params`` or keyword overrides): n, k, samples
    (outer draws of the conditioning simplex), inner (redraws of the unshared
    vertex per conditioning event), ells, master_seed. Also reports the
    same probability for a vertex-disjoint simplex as an independence control.
    """
    params = {}
    if isinstance(config, ExperimentConfig):
        params.update(n=config.n, k=config.k, master_seed=config.master_seed)
        params.update(config.params)
    elif isinstance(config, dict):
        params.update(config)
    params.update(overrides)
    n = int(params.get("n", 3))
    k = int(params.get("k", 1))
    samples = int(params.get("samples", 10**6))
    inner = int(params.get("inner", 64))
    ells = [float(e) for e in params.get("ells", (1 / 4, 1 / 8, 1 / 16, 1 / 32))]
    x = np.full(k, float(params.get("x", 0.5)))
    min_events = int(params.get("min_events", 30))
    if not 1 <= k < n:
        raise ConfigError("need 1 <= k < n")
    if np.any(x < 0.25) or np.any(x > 0.75):
        raise ConfigError("x must lie in [1/4, 3/4]^k")
    if any(not 0 < e <= 0.5 for e in ells):
        raise ConfigError("cube side lengths must lie in (0, 1/2]")
    g = RngStream(int(params.get("master_seed", 0)), 0x636F7272).generator()

    # conditioning simplices: shared face (k vertices) + unshared vertex w
    face = g.random((samples, k, n))
    w = g.random((samples, 1, n))
    present, pts, signs = _slice_points(np.concatenate([face, w], axis=1), x)
    cond = present & (signs > 0)
    rows = []
    for ell in ells:
        lo, hi = 0.5 - ell / 2, 0.5 + ell / 2
        inQ = cond & np.all((pts >= lo) & (pts <= hi), axis=1)
        idx = np.nonzero(inQ)[0]
        events = len(idx)
        hits = np.zeros(events)
        if events:
            # redraw w' for the adjacent simplex, sharing the face
            f = np.repeat(face[idx], inner, axis=0)
            w2 = g.random((events * inner, 1, n))
            pr, p2, _ = _slice_points(np.concatenate([f, w2], axis=1), x)
            ok = pr & np.all((p2 >= lo) & (p2 <= hi), axis=1)
            hits = ok.reshape(events, inner).mean(axis=1)
        p = float(hits.mean()) if events else float("nan")
        se = float(hits.std(ddof=1) / math.sqrt(events)) if events > 1 else float("nan")
        # vertex-disjoint control: a fresh simplex
        fresh = g.random((max(events, 1) * inner, k + 1, n))
        pr, p3, _ = _slice_points(fresh, x)
        p_ind = float(np.mean(pr & np.all((p3 >= lo) & (p3 <= hi), axis=1)))
        rows.append({
            "ell": ell,
            "events": events,
            "p": p,
            "stderr": se,
            "C": p / math.sqrt(ell) if events else float("nan"),
            "C_stderr": se / math.sqrt(ell) if events > 1 else float("nan"),
            "p_disjoint": p_ind,
            "flagged": events < min_events,
        })
    good = [(r["ell"], r["p"]) for r in rows if r["events"] > 1 and r["p"] > 0]
    exponent = stderr = r2 = float("nan")
    if len({e for e, _ in good}) >= 3:
        exponent, stderr, r2 = fit_power_law(good)
    return {"n": n, "k": k, "samples": samples, "inner": inner, "rows": rows,
            "exponent": exponent, "exponent_stderr": stderr, "r2": r2}
