"""Command-line interface: ``rpfclust <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from . import io
from .bench import run_benchmark
from .evaluation import evaluate
from .errors import RPFClustError
from .gmm import ALL_MODELS
from .pipeline import PipelineConfig, projection_matrices, run_pipeline, select_d
from .simulate import ScenarioSpec, gen_scenario
from .smoothing import BasisSpec, CoefficientMatrix, select_smoothing, smooth_dataset

log = logging.getLogger("rpfclust")


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _add_smoothing_args(p):
    p.add_argument("--K", type=int, help="number of B-spline basis functions")
    p.add_argument("--lam", type=float, help="roughness penalty weight")
    p.add_argument("--order", type=int, default=None, help="spline order (default 4)")
    p.add_argument("--gcv-K", type=_ints, help="comma-separated K candidates for GCV")
    p.add_argument("--gcv-lam", type=_floats, help="comma-separated lambda candidates for GCV")


def _add_pipeline_args(p):
    p.add_argument("--config", type=Path, help="JSON config (flat, or a previous report.json)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--matrix", choices=["gaussian", "haar"])
    p.add_argument("--criterion", choices=["kl", "wasserstein", "entropy"])
    p.add_argument("--B", type=int, dest="B")
    p.add_argument("--Bstar", type=int, dest="B_star")
    p.add_argument("--d", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--G-heuristic", type=int, dest="G_heuristic")
    p.add_argument("--G-min", type=int, default=None)
    p.add_argument("--G-max", type=int, default=None)
    p.add_argument("--g-fixed", type=int, default=None, help="known number of clusters")
    p.add_argument("--models", help="comma-separated subset of " + ",".join(m.value for m in ALL_MODELS))
    p.add_argument("--restarts", type=int)


def _pipeline_config(args) -> PipelineConfig:
    data = {}
    if args.config is not None:
        raw = io.read_json(args.config)
        data = dict(raw.get("config", raw))
    for key in ("seed", "threads", "matrix", "criterion", "B", "B_star", "d", "a", "G_heuristic", "restarts"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "d_candidates", None) is not None:
        data["d_candidates"] = args.d_candidates
    for key in ("K", "lam", "order"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if args.models:
        data["models"] = [m.strip() for m in args.models.split(",")]
    if args.G_min is not None or args.G_max is not None:
        lo = args.G_min if args.G_min is not None else 2
        hi = args.G_max if args.G_max is not None else 9
        data["G_range"] = list(range(lo, hi + 1))
    cfg = PipelineConfig.from_dict(data)
    if args.g_fixed is not None:
        cfg = cfg.with_fixed_G(args.g_fixed)
    return cfg


def _coefficients_from_args(args, cfg=None):
    if getattr(args, "coefficients", None):
        return CoefficientMatrix(io.read_matrix(args.coefficients))
    curves = io.ingest_curves(args.curves)
    K = args.K if args.K is not None else (cfg.K if cfg else None)
    lam = args.lam if args.lam is not None else (cfg.lam if cfg else None)
    order = args.order or (cfg.order if cfg else 4)
    if args.gcv_K or args.gcv_lam:
        K, lam, score = select_smoothing(curves, args.gcv_K or [K], args.gcv_lam or [lam], order)
        log.info("GCV selected K=%d lambda=%g (score %.6g)", K, lam, score)
    if K is None or lam is None:
        raise SystemExit("curve input needs --K and --lam, or GCV grids via --gcv-K/--gcv-lam")
    if cfg is not None:
        cfg.K, cfg.lam, cfg.order = K, lam, order
    return smooth_dataset(curves, BasisSpec(K, order, lam))


def cmd_simulate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = ScenarioSpec.default(args.scenario, seed=args.seed, u_law=args.u_law)
    for r in range(args.replicates):
        ds = gen_scenario(spec, replicate=r)
        io.write_curves(ds.curves, out / f"curves_{r:03d}.csv")
        io.write_labels(ds.labels, out / f"labels_{r:03d}.csv")
    print(f"wrote {args.replicates} replicate(s) of scenario {args.scenario} to {out}")


def cmd_smooth(args):
    C = _coefficients_from_args(args)
    io.write_matrix(C.C, args.out)
    print(f"wrote {C.shape[0]}x{C.shape[1]} coefficients (K={C.spec.K}, lambda={C.spec.lam:g}) to {args.out}")


def _dump_projections(C, cfg, d, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for b, A in enumerate(projection_matrices(C, cfg, d), start=1):
        io.write_matrix(A.A, out_dir / f"projection_{b:04d}.csv")


def cmd_cluster(args):
    cfg = _pipeline_config(args)
    C = _coefficients_from_args(args, cfg)
    res = run_pipeline(C, cfg)
    io.write_report(res, args.out)
    if args.dump_projections:
        _dump_projections(C, cfg, res.selected_d, args.dump_projections)
    c = res.counts()
    print(f"G={res.k_effective} d={res.selected_d} retained={c['retained']} discarded={c['discarded']} "
          f"unfit={c['unfit']} ({res.wall_time:.1f}s) -> {args.out}")


def cmd_select_d(args):
    cfg = _pipeline_config(args)
    C = _coefficients_from_args(args, cfg)
    d, res = select_d(C, cfg, args.d_candidates)
    io.write_report(res, args.out)
    for row in res.d_search:
        ent = "failed" if row["entropy"] is None else f"{row['entropy']:.4f}"
        print(f"d={row['d']:>3}  entropy={ent}")
    print(f"selected d={d}, G={res.k_effective} -> {args.out}")


def cmd_evaluate(args):
    found = io.read_labels(args.found)
    truth = io.read_labels(args.truth)
    report = evaluate(found, truth).to_dict()
    if args.out:
        io.write_json(report, args.out)
    print(json.dumps({"ari": report["ari"], "selected_G": report["selected_G"]}))


def cmd_bench(args):
    cfg = _pipeline_config(args)
    res = run_benchmark(args.scenario, args.replicates, cfg, seed=cfg.seed,
                        K=args.K, lam=args.lam,
                        callback=lambda r, ari, pr: print(f"replicate {r}: G={pr.k_effective} ARI={ari:.3f}", flush=True))
    print(f"median ARI {res.median_ari:.3f}")
    print("selected G: " + ", ".join(f"{g}: {n}" for g, n in res.count_table().items()))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json({"config": cfg.to_dict(), **res.to_dict()}, out / "bench.json")
        with open(out / "ari.csv", "w") as fh:
            fh.write("replicate,ari,selected_G\n")
            fh.writelines(f"{r},{a!r},{g}\n" for r, (a, g) in enumerate(zip(res.ari, res.selected_G)))


def build_parser():
    parser = argparse.ArgumentParser(prog="rpfclust", description="Random-projection ensemble clustering of curves.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic scenario replicates")
    p.add_argument("--scenario", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--u-law", choices=["gaussian", "uniform"], default="gaussian")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("smooth", help="curves CSV -> coefficients CSV")
    p.add_argument("--curves", required=True)
    _add_smoothing_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_smooth)

    for name, func, helptext in (("cluster", cmd_cluster, "run the projection ensemble"),
                                 ("select-d", cmd_select_d, "choose d by consensus entropy")):
        p = sub.add_parser(name, help=helptext)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--coefficients")
        src.add_argument("--curves")
        _add_smoothing_args(p)
        _add_pipeline_args(p)
        p.add_argument("--out", required=True, help="output directory")
        if name == "cluster":
            p.add_argument("--dump-projections", help="directory to write the projection matrices as CSV")
        else:
            p.add_argument("--d-candidates", type=_ints, required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="compare found labels with the truth")
    p.add_argument("--found", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="replicated scenario benchmark")
    p.add_argument("--scenario", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--K", type=int)
    p.add_argument("--lam", type=float)
    _add_pipeline_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "bench":
        from .simulate import SCENARIO_DEFAULTS
        from .projection import heuristic_dim
        if args.d is None and args.a is None and args.config is None:
            args.d = heuristic_dim(SCENARIO_DEFAULTS[args.scenario]["G"], 5)
    try:
        args.func(args)
    except RPFClustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
