"""Command-line front end: grids, weights, transforms, reconstruction,
descriptors, benchmarks and figure/table suites.

Exit codes: 0 success, 1 invalid configuration or usage, 2 an acceptance
gate failed under ``--assert``, 3 weight solve failure.
"""

import argparse
import json
import math
import re
import sys

import numpy as np

from . import __version__, cache
from .descriptors import default_sigma, shd_for_cloud
from .experiments import (DESK_PRESETS, GRID_ALIASES, SUITES,
                          fibonacci_points_for_bandwidth, get_weights,
                          suite_fig7, suite_fig11, suite_table1, write_report)
from .grids import GENERATORS, SphericalGrid, gen_equiangular, gen_fibonacci, gen_icosahedral
from .harmonics import ShCoefficients
from .quadrature import QuadratureWeights, SolveFailedError
from .shapes import (PointCloud, enclosed_volume, radial_from_pointcloud,
                     reconstruct_surface, surface_deviation, _radial_model)
from .transform import RadialField, forward_sht, inverse_sht
from . import _kernels


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.exit(f"{self.prog}: error: {message}")


def build_parser():
    p = _Parser(prog="fibsh", description=__doc__)
    p.add_argument("--version", action="version", version=f"fibsh {__version__}")
    p.add_argument("--cache-dir", help="weight cache directory "
                   "(default: FIBSH_CACHE_DIR or ~/.cache/fibsh)")
    p.add_argument("--no-cache", action="store_true",
                   help="solve weights fresh every time")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel workers (default: FIBSH_WORKERS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grid", parents=[], help="generate a sampling grid")
    g.add_argument("--kind", required=True,
                   choices=["fibonacci", "equiangular", "icosahedral"])
    g.add_argument("--n", type=int, help="point count (fibonacci)")
    g.add_argument("--b", type=int, help="bandwidth (equiangular)")
    g.add_argument("--k", type=int, help="subdivision frequency (icosahedral)")
    g.add_argument("--out", required=True)

    w = sub.add_parser("weights", help="compute quadrature weights")
    w.add_argument("--grid", required=True, help="grid JSON path")
    w.add_argument("--b", type=int, required=True)
    w.add_argument("--method", default="analytic",
                   choices=["analytic", "equal", "area", "dh"])
    w.add_argument("--mc-samples", type=int, default=None)
    w.add_argument("--mc-seed", type=int, default=None)
    w.add_argument("--out", required=True)

    s = sub.add_parser("sht", help="forward spherical harmonic transform")
    s.add_argument("--field", required=True, help="field JSON path")
    s.add_argument("--weights", required=True, help="weights JSON path")
    s.add_argument("--b", type=int, required=True)
    s.add_argument("--out", required=True)

    i = sub.add_parser("isht", help="inverse transform at target directions")
    i.add_argument("--coeffs", required=True)
    i.add_argument("--targets", required=True, help="grid JSON with target points")
    i.add_argument("--out", required=True)

    r = sub.add_parser("reconstruct", help="star-shape surface from a point cloud")
    r.add_argument("--cloud", required=True, help="xyz text file")
    r.add_argument("--grid", default="fib",
                   help="fib|equi|ico or a grid JSON path")
    r.add_argument("--b", type=int, default=32)
    r.add_argument("--method", default=None,
                   choices=["analytic", "equal", "area", "dh"])
    r.add_argument("--k", type=int, default=8, help="resampling neighbors")
    r.add_argument("--ico-k", type=int, default=24)
    r.add_argument("--mesh-frequency", type=int, default=64)
    r.add_argument("--out", required=True, help="output OBJ path")
    r.add_argument("--report", help="CSV row of deviation metrics")
    r.add_argument("--shape-id", default="cloud")
    r.add_argument("--deviation-out",
                   help="per-vertex radial deviation sidecar (one value per line)")

    d = sub.add_parser("descriptor", help="multi-shell rotation-invariant descriptor")
    d.add_argument("--cloud", required=True)
    d.add_argument("--shells", type=int, default=8)
    d.add_argument("--b", type=int, default=32)
    d.add_argument("--grid", default="fib", help="fib|equi|ico or grid JSON path")
    d.add_argument("--method", default=None,
                   choices=["analytic", "equal", "area", "dh"])
    d.add_argument("--ico-k", type=int, default=24)
    d.add_argument("--sigma-scale", type=float, default=2.0,
                   help="splat width as a multiple of the mean grid spacing")
    d.add_argument("--out", required=True)

    bench = sub.add_parser("bench", help="benchmark harnesses")
    bsub = bench.add_subparsers(dest="bench_command", required=True)
    br = bsub.add_parser("roundtrip", help="inverse-then-forward error per grid")
    br.add_argument("--b", type=int, default=32)
    br.add_argument("--grids", default="fib,equi,ico")
    br.add_argument("--ico-k", type=int, default=24)
    br.add_argument("--trials", type=int, default=40)
    br.add_argument("--seed", type=int, default=1)
    br.add_argument("--out", required=True)
    _add_report_flags(br)
    bt = bsub.add_parser("rotation", help="rotation-stability comparison")
    bt.add_argument("--corpus", default="synth:10:seed7",
                    help="synth:<count>:seed<seed>")
    bt.add_argument("--b", type=int, default=32)
    bt.add_argument("--rotations", type=int, default=21,
                    help="rotation count (N-1 random + the fixed 90-degree case)")
    bt.add_argument("--rotation-seed", type=int, default=11)
    bt.add_argument("--cloud-points", type=int, default=100_000)
    bt.add_argument("--out", required=True)
    _add_report_flags(bt)
    bc = bsub.add_parser("classify", help="descriptor precision-recall comparison")
    bc.add_argument("--corpus", default="synth4x15:seed3",
                    help="synth<classes>x<per_class>:seed<seed>")
    bc.add_argument("--methods", default="shd-esh,shd-fsh3d")
    bc.add_argument("--b", type=int, default=32)
    bc.add_argument("--shells", type=int, default=8)
    bc.add_argument("--sigma-scale", type=float, default=0.25)
    bc.add_argument("--cloud-points", type=int, default=3000)
    bc.add_argument("--out", required=True)
    _add_report_flags(bc)

    su = sub.add_parser("suite", help="paper-experiment suites with gates")
    su.add_argument("name", choices=sorted(SUITES))
    su.add_argument("--b", type=int, default=None)
    su.add_argument("--trials", type=int, default=None)
    su.add_argument("--seed", type=int, default=None)
    su.add_argument("--methods", default=None, help="fig5/fig6 weight methods")
    su.add_argument("--grids", default=None, help="fig7 grid list")
    su.add_argument("--count", type=int, default=None, help="table1/2 corpus size")
    su.add_argument("--rotations", type=int, default=None)
    su.add_argument("--per-class", type=int, default=None)
    su.add_argument("--desk", action="store_true", help="reduced scales for CI")
    su.add_argument("--assert", dest="assert_gates", action="store_true",
                    help="exit 2 when any gate fails")
    su.add_argument("--out", required=True)
    _add_report_flags(su)

    c = sub.add_parser("cache", help="weight cache management")
    csub = c.add_subparsers(dest="cache_command", required=True)
    csub.add_parser("ls")
    csub.add_parser("clear")
    return p


def _add_report_flags(parser):
    parser.add_argument("--format", default="csv", choices=["csv", "json"])
    parser.add_argument("--timestamps", action="store_true")


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _resolve_grid(spec_str, b, ico_k):
    alias = GRID_ALIASES.get(spec_str)
    if alias == "fibonacci":
        return gen_fibonacci(fibonacci_points_for_bandwidth(b))
    if alias == "equiangular":
        return gen_equiangular(b)
    if alias == "icosahedral":
        return gen_icosahedral(ico_k)
    return SphericalGrid.from_json(_load_json(spec_str))


def _default_method(grid):
    return {"fibonacci": "analytic", "equiangular": "dh",
            "icosahedral": "equal"}.get(grid.kind, "analytic")


def _parse_star_corpus(text):
    m = re.fullmatch(r"synth:(\d+):seed(\d+)", text)
    if not m:
        raise ValueError(f"corpus spec {text!r} (expected synth:<count>:seed<n>)")
    return int(m.group(1)), int(m.group(2))


def _parse_labeled_corpus(text):
    m = re.fullmatch(r"synth(\d+)x(\d+):seed(\d+)", text)
    if not m:
        raise ValueError(
            f"corpus spec {text!r} (expected synth<classes>x<per_class>:seed<n>)")
    return int(m.group(1)), int(m.group(2)), int(m.group(3))


def _emit(result, args):
    write_report(result, args.out, fmt=args.format,
                 timestamps=getattr(args, "timestamps", False))
    for line in result.gate_lines():
        print(line)
    for key in sorted(result.summary):
        print(f"  {key} = {result.summary[key]}")
    print(f"wrote {args.out}")
    if getattr(args, "assert_gates", False) and not result.all_gates_pass:
        return 2
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    import os

    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("FIBSH_WORKERS", "1"))
    _kernels.set_threads(workers if workers > 1 else None)
    cache_dir = args.cache_dir
    use_cache = not args.no_cache
    try:
        return _dispatch(args, cache_dir, use_cache, workers) or 0
    except SolveFailedError as exc:
        print(f"fibsh: solve failed: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError, MemoryError) as exc:
        print(f"fibsh: error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args, cache_dir, use_cache, workers):
    if args.command == "grid":
        return _cmd_grid(args)
    if args.command == "weights":
        return _cmd_weights(args, cache_dir, use_cache)
    if args.command == "sht":
        field = RadialField.from_json(_load_json(args.field))
        weights = QuadratureWeights.from_json(_load_json(args.weights))
        coeffs = forward_sht(field, weights, args.b)
        coeffs.save(args.out)
        print(f"wrote {args.out}")
        return 0
    if args.command == "isht":
        coeffs = ShCoefficients.load(args.coeffs)
        targets = SphericalGrid.from_json(_load_json(args.targets))
        field = inverse_sht(coeffs, targets)
        if np.iscomplexobj(field.values):
            field = RadialField(targets, field.values.real)
        with open(args.out, "w") as fh:
            json.dump(field.to_json(), fh)
        print(f"wrote {args.out}")
        return 0
    if args.command == "reconstruct":
        return _cmd_reconstruct(args, cache_dir, use_cache)
    if args.command == "descriptor":
        return _cmd_descriptor(args, cache_dir, use_cache)
    if args.command == "bench":
        return _cmd_bench(args, cache_dir, use_cache, workers)
    if args.command == "suite":
        return _cmd_suite(args, cache_dir, use_cache, workers)
    if args.command == "cache":
        return _cmd_cache(args, cache_dir)
    raise ValueError(f"unknown command {args.command}")


def _cmd_grid(args):
    params = {"fibonacci": ("n", args.n), "equiangular": ("b", args.b),
              "icosahedral": ("k", args.k)}[args.kind]
    name, value = params
    if value is None:
        raise ValueError(f"--{name} is required for kind={args.kind}")
    grid = GENERATORS[args.kind](value)
    grid.save(args.out)
    print(f"wrote {args.out} ({grid.n_points} points)")
    return 0


def _cmd_weights(args, cache_dir, use_cache):
    grid = SphericalGrid.from_json(_load_json(args.grid))
    w = get_weights(grid, args.b, args.method, cache_dir, use_cache,
                    args.mc_samples, args.mc_seed)
    with open(args.out, "w") as fh:
        json.dump(w.to_json(), fh)
    print(f"wrote {args.out} (method={w.method}, residual={w.residual:.3e})")
    return 0


def _cmd_reconstruct(args, cache_dir, use_cache):
    cloud = PointCloud.from_xyz(args.cloud).normalized()
    grid = _resolve_grid(args.grid, args.b, args.ico_k)
    method = args.method or _default_method(grid)
    weights = get_weights(grid, args.b, method, cache_dir, use_cache)
    star = radial_from_pointcloud(cloud, grid, k=args.k)
    mesh = reconstruct_surface(star, weights, args.b,
                               mesh_frequency=args.mesh_frequency)
    mesh.save_obj(args.out)
    print(f"wrote {args.out} ({mesh.vertices.shape[0]} vertices, "
          f"clamped_fraction={mesh.clamped_fraction:.4f})")
    if args.report or args.deviation_out:
        dev = surface_deviation(mesh, star, mode="radial")
        v_star = enclosed_volume(star, weights)
        ve = abs(mesh.signed_volume() - v_star) / abs(v_star)
        if args.report:
            import csv as _csv

            with open(args.report, "w", newline="") as fh:
                wtr = _csv.writer(fh)
                wtr.writerow(["shape_id", "grid", "b", "rmse", "mae", "ve",
                              "hausdorff_max", "clamped_fraction"])
                wtr.writerow([args.shape_id, grid.kind, args.b,
                              f"{dev.rmse:.17g}", f"{dev.mae:.17g}",
                              f"{ve:.17g}", f"{dev.hausdorff_max:.17g}",
                              f"{mesh.clamped_fraction:.17g}"])
            print(f"wrote {args.report}")
        if args.deviation_out:
            fn, _ = _radial_model(star)
            center = mesh.center
            rel = mesh.vertices - center
            radii = np.linalg.norm(rel, axis=1)
            theta = np.arccos(np.clip(rel[:, 2] / radii, -1, 1))
            phi = np.arctan2(rel[:, 1], rel[:, 0]) % (2 * math.pi)
            per_vertex = np.abs(radii - fn(np.stack([theta, phi], axis=1)))
            np.savetxt(args.deviation_out, per_vertex, fmt="%.17g")
            print(f"wrote {args.deviation_out}")
    return 0


def _cmd_descriptor(args, cache_dir, use_cache):
    cloud = PointCloud.from_xyz(args.cloud).normalized()
    grid = _resolve_grid(args.grid, args.b, args.ico_k)
    method = args.method or _default_method(grid)
    weights = get_weights(grid, args.b, method, cache_dir, use_cache)
    sigma = args.sigma_scale * math.sqrt(4.0 * math.pi / grid.n_points)
    desc = shd_for_cloud(cloud, grid, weights, shells=args.shells, b=args.b,
                         sigma=sigma)
    desc.save(args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_bench(args, cache_dir, use_cache, workers):
    common = dict(cache_dir=cache_dir, use_cache=use_cache, workers=workers)
    if args.bench_command == "roundtrip":
        grids = [g.strip() for g in args.grids.split(",") if g.strip()]
        result = suite_fig7(b=args.b, trials=args.trials, seed=args.seed,
                            grids=grids, ico_k=args.ico_k, **common)
    elif args.bench_command == "rotation":
        count, seed = _parse_star_corpus(args.corpus)
        result = suite_table1(count=count, corpus_seed=seed, b=args.b,
                              rotations=args.rotations,
                              rotation_seed=args.rotation_seed,
                              cloud_points=args.cloud_points, **common)
    else:
        classes, per_class, seed = _parse_labeled_corpus(args.corpus)
        if classes != 4:
            raise ValueError("labeled corpus supports exactly the 4 built-in "
                             "families")
        wanted = {m.strip() for m in args.methods.split(",")}
        if wanted - {"shd-esh", "shd-fsh3d"}:
            raise ValueError(f"unknown methods {wanted}")
        result = suite_fig11(per_class=per_class, seed=seed, shells=args.shells,
                             b=args.b, cloud_points=args.cloud_points,
                             sigma_scale=args.sigma_scale, **common)
        result.rows = [r for r in result.rows if r["method"] in wanted]
    return _emit(result, args)


def _cmd_suite(args, cache_dir, use_cache, workers):
    kwargs = dict(DESK_PRESETS[args.name]) if args.desk else {}
    overrides = {"b": args.b, "trials": args.trials, "seed": args.seed,
                 "count": args.count, "rotations": args.rotations,
                 "per_class": args.per_class}
    if args.methods:
        overrides["methods"] = tuple(m.strip() for m in args.methods.split(","))
    if args.grids:
        overrides["grids"] = tuple(g.strip() for g in args.grids.split(","))
    fn = SUITES[args.name]
    import inspect

    accepted = set(inspect.signature(fn).parameters)
    for key, val in overrides.items():
        if val is not None:
            if key not in accepted:
                raise ValueError(f"suite {args.name} does not accept --{key}")
            kwargs[key] = val
    if args.name == "fig11" and "seed" in kwargs and "seed" not in accepted:
        kwargs.pop("seed")
    result = fn(cache_dir=cache_dir, use_cache=use_cache, workers=workers,
                **kwargs)
    return _emit(result, args)


def _cmd_cache(args, cache_dir):
    directory = cache_dir
    if args.cache_command == "ls":
        entries = cache.list_entries(directory)
        if not entries:
            print("cache is empty")
        for path, desc in entries:
            print(f"{path}  {desc}")
        return 0
    removed = cache.clear(directory)
    print(f"removed {removed} entries")
    return 0


if __name__ == "__main__":
    sys.exit(main())
