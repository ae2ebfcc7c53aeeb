"""Command-line interface. Exit codes: 0 success, 2 config error, 3 solver error."""
from __future__ import annotations

import argparse
import json
import sys

from . import io as fio
from .chains import PolyCycle, StructuralError, ZeroCycle
from .harness import (
    ConfigError,
    ExperimentConfig,
    fits_from_rows,
    read_rows_csv,
    run_concentration_experiment,
    run_correlation_test,
    run_scaling_experiment,
)
from .models import SamplingError, sample_cube_planes, sample_great_spheres, sample_random_jump
from .slicing import DegenerateSlice, SliceSpec, slice_planes, slice_polycycle, slice_with_retry
from .transport import SolverError, filling_volume, fv_cube, fv_sphere
from .winding import WindingDegeneracy, fv_winding
from .witness import (
    WitnessError,
    build_grid_witness,
    build_interval_witness,
    build_multiscale_witness,
    integrate_witness,
    lip_bound,
)

EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_generate(args):
    if args.model == "jump":
        if args.k != 1:
            raise ConfigError("random-jump model has k = 1")
        obj = fio.to_dict(sample_random_jump(args.num, args.n, args.seed))
    elif args.model == "planes":
        obj = fio.planes_to_dict(sample_cube_planes(args.num, args.n, args.k, args.seed), args.n, args.k)
    else:
        obj = fio.subspaces_to_dict(sample_great_spheres(args.num, args.n, args.k, args.seed), args.n, args.k)
    _emit(json.dumps(obj), args.out)


def cmd_slice(args):
    obj = fio.load(args.input)
    spec = SliceSpec(tuple(_ints(args.axes)), tuple(_floats(args.at)))
    if isinstance(obj, PolyCycle):
        fn = lambda s: slice_polycycle(obj, s, atoms=False)[0]  # noqa: E731
    elif isinstance(obj, list):
        fn = lambda s: slice_planes(obj, s)[0]  # noqa: E731
    else:
        raise ConfigError("slice needs a PolyCycle or plane list")
    zc, used = slice_with_retry(fn, spec, args.seed)
    doc = fio.zerocycle_to_dict(zc)
    if used != spec:
        doc["slice_values"] = list(used.values)
    _emit(json.dumps(doc), args.out)


def cmd_fv(args):
    obj = fio.load(args.input)
    if args.method == "winding":
        if not isinstance(obj, PolyCycle):
            raise ConfigError("--method winding needs a PolyCycle with n=2, k=1")
        value, err = fv_winding(obj, args.h, args.seed)
        _emit(json.dumps({"fv": value, "error_bound": err, "h": args.h}), args.out)
        return
    if not isinstance(obj, ZeroCycle):
        raise ConfigError("fv needs a ZeroCycle document")
    plan = None
    if args.method in ("auto", "flow") and not (args.method == "auto" and obj.ambient.d == 1
                                                and obj.ambient.kind == "cube"):
        value, plan = fv_sphere(obj) if obj.ambient.kind == "sphere" else fv_cube(obj)
    else:
        value = filling_volume(obj, args.method)
    _emit(json.dumps({"fv": value, "plan": plan.to_dict() if plan is not None else None}), args.out)


def cmd_witness(args):
    zc = fio.load(args.input)
    if not isinstance(zc, ZeroCycle) or zc.ambient.kind != "cube":
        raise ConfigError("witness needs a cube ZeroCycle document")
    if args.kind == "grid":
        W = build_grid_witness(zc, args.r)
    elif args.kind == "multiscale":
        W = build_multiscale_witness(zc, args.scales, args.cap)
    else:
        W = build_interval_witness(zc, args.R, args.C)
    integral = integrate_witness(W, zc)
    lip = lip_bound(W)
    bound = max(0.0, integral / lip) if lip > 0 else 0.0
    doc = {"integral": integral, "lip": lip, "bound": bound}
    if args.atoms:
        doc["atoms"] = W.to_dict()["atoms"]
    _emit(json.dumps(doc), args.out)


def cmd_experiment_run(args):
    with open(args.config) as fh:
        data = json.load(fh)
    kind = data.pop("experiment", "scaling")
    if kind == "correlation":
        report = run_correlation_test(data)
        _emit(json.dumps(report, default=float), args.out)
        return
    cfg = ExperimentConfig.from_dict(data)
    if kind == "concentration":
        report = run_concentration_experiment(cfg, args.workers)
        _emit(json.dumps(report, default=float), args.out)
        return
    if kind != "scaling":
        raise ConfigError(f"unknown experiment {kind!r}")
    result = run_scaling_experiment(cfg, args.workers)
    _emit(result.to_csv(), args.out)
    for N, trial, obs, msg in result.errors:
        print(f"warning: N={N} trial={trial} {obs}: {msg}", file=sys.stderr)


def cmd_experiment_fit(args):
    rows = read_rows_csv(args.rows)
    _emit(json.dumps(fits_from_rows(rows), indent=2), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fillvol", description="Filling volumes of random cycles")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a random cycle")
    g.add_argument("--model", choices=("jump", "planes", "spheres"), required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--num", type=int, required=True, help="number of vertices / planes / spheres")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("slice", help="slice a cycle by coordinate planes")
    s.add_argument("input")
    s.add_argument("--axes", required=True, help="comma-separated 0-based axes")
    s.add_argument("--at", required=True, help="comma-separated slice values")
    s.add_argument("--seed", type=int, default=0, help="seed for degenerate-slice retries")
    s.add_argument("--out")
    s.set_defaults(func=cmd_slice)

    f = sub.add_parser("fv", help="filling volume of a 0-cycle (or a planar loop)")
    f.add_argument("input")
    f.add_argument("--method", choices=("auto", "interval", "flow", "brute", "winding"), default="auto")
    f.add_argument("--h", type=float, default=1.0 / 256)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fv)

    w = sub.add_parser("witness", help="dual lower bound from a pyramid witness")
    w.add_argument("input")
    w.add_argument("--kind", choices=("grid", "multiscale", "interval"), required=True)
    w.add_argument("--cap", type=float, default=1.0)
    w.add_argument("--scales", type=int, default=None)
    w.add_argument("--R", type=int, default=16)
    w.add_argument("--C", type=float, default=1.0)
    w.add_argument("--r", type=float, default=None)
    w.add_argument("--atoms", action="store_true", help="include the atom list")
    w.add_argument("--out")
    w.set_defaults(func=cmd_witness)

    e = sub.add_parser("experiment", help="run or fit experiments")
    esub = e.add_subparsers(dest="action", required=True)
    er = esub.add_parser("run")
    er.add_argument("config")
    er.add_argument("--workers", type=int, default=None)
    er.add_argument("--out")
    er.set_defaults(func=cmd_experiment_run)
    ef = esub.add_parser("fit")
    ef.add_argument("rows")
    ef.add_argument("--out")
    ef.set_defaults(func=cmd_experiment_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (SolverError, WitnessError, DegenerateSlice, WindingDegeneracy, SamplingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, StructuralError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
