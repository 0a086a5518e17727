"""Command-line interface: ``g2mf fit | benchmark | synth``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dataio import (WA_PRESETS, ParseError, generate_synthetic_scene, load_annotations, load_dataset,
                     preset_config, save_annotations, save_dataset, simulate_weak_annotations)
from .fitter import FitConfig, InfeasibleAnnotation
from .geometry import sampson_distance
from .optimize import EnergyParams, PearlConfig
from .runner import METHODS, RunReport, benchmark, effective_config, format_table, run_method

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("g2mf")


class ConfigError(ValueError):
    pass


def _configure_logging():
    level = os.environ.get("G2MF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _add_task(p):
    p.add_argument("--task", choices=["homography", "fundamental"], required=True)


def _add_fit_options(p):
    p.add_argument("--method", choices=METHODS, default="g2mf-wa")
    g = p.add_argument_group("annealing")
    g.add_argument("--lam", type=float, default=0.1)
    g.add_argument("--sigma", type=float, default=0.1)
    g.add_argument("--h0", type=int, default=10)
    g.add_argument("--T0", type=float, default=1.0)
    g.add_argument("--cooling", type=float, default=0.99)
    g.add_argument("--min-iters", type=int, default=500)
    g.add_argument("--max-iters", type=int, default=5000)
    g.add_argument("--nflag", type=int, choices=[0, 1], default=0)
    g.add_argument("--nlabels", type=int)
    g.add_argument("--plateau-stop", action="store_true")
    e = p.add_argument_group("energy")
    e.add_argument("--smoothness", type=float, default=0.1)
    e.add_argument("--outlier-cost", type=float, default=1.0)
    e.add_argument("--label-cost", type=float, default=20.0)
    e.add_argument("--residual-scale", type=float, default=5.0)
    e.add_argument("--prune-quantile", type=float, default=0.95)
    q = p.add_argument_group("pearl")
    q.add_argument("--pearl-proposals", type=int, default=1000)
    q.add_argument("--pearl-min-iters", type=int, default=10)
    q.add_argument("--pearl-max-iters", type=int, default=20)


def _configs(args):
    if args.nflag == 1 and args.nlabels is None:
        raise ConfigError("--nflag 1 requires --nlabels")
    try:
        energy = EnergyParams(smoothness=args.smoothness, outlier_cost=args.outlier_cost,
                              label_cost=args.label_cost, residual_scale=args.residual_scale)
        fc = FitConfig(lam=args.lam, sigma=args.sigma, h0=args.h0, T0=args.T0, cooling=args.cooling,
                       min_iters=args.min_iters, max_iters=args.max_iters, nflag=args.nflag,
                       nlabels=args.nlabels, energy=energy, prune_quantile=args.prune_quantile,
                       plateau_stop=args.plateau_stop)
        pc = PearlConfig(args.pearl_proposals, args.pearl_min_iters, args.pearl_max_iters)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return fc, pc


def _write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2) + "\n")


def cmd_fit(args):
    fc, pc = _configs(args)
    data = load_dataset(args.dataset)
    annotations = load_annotations(args.annotations) if args.annotations else None
    if args.method == "g2mf-wa" and annotations is None and data.ground_truth is None:
        raise ConfigError("g2mf-wa needs --annotations when the dataset has no labels")
    run = run_method(data, args.task, args.method, args.seed, args.wa_preset, annotations, fc, pc,
                     keep_trace=args.trace)
    report = RunReport(args.method, data.name, args.wa_preset if args.method == "g2mf-wa" else None,
                       effective_config(args.method, replace(fc, seed=args.seed), pc))
    report.add(run)
    doc = report.as_dict()
    doc.update(energy=run.energy, n_models=run.n_models, iterations=run.iterations)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "report.json", doc)
        np.savetxt(out / "labels.txt", run.labels, fmt="%d")
    print(json.dumps({k: v for k, v in doc.items() if k != "traces"}))
    return report


def cmd_benchmark(args):
    fc, pc = _configs(args)
    datasets = [load_dataset(p) for p in args.datasets]
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    reports = benchmark(datasets, args.task, args.methods, args.presets, args.trials, args.seed,
                        args.jobs, fc, pc, keep_trace=args.trace)
    doc = [r.as_dict() for r in reports]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "benchmark.json", doc)
        (out / "benchmark.txt").write_text(format_table(reports) + "\n")
    print(format_table(reports))
    return reports


def cmd_synth(args):
    ds = generate_synthetic_scene(args.task, args.K, args.n, args.outliers, args.noise, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.name or ds.name}.{args.format}"
    save_dataset(ds, path)
    written = [str(path)]
    if args.wa_preset:
        wa = simulate_weak_annotations(ds, preset_config(args.wa_preset, args.seed))
        ap = out / f"{path.stem}.wa{args.wa_preset.upper()}.json"
        save_annotations(wa, ap)
        written.append(str(ap))
    if args.check:
        worst = 0.0
        for k, model in enumerate(ds.true_models, start=1):
            sel = ds.ground_truth == k
            worst = max(worst, float(np.max(sampson_distance(model, ds.x1[sel], ds.x2[sel]), initial=0)))
        if args.noise == 0 and worst > 1e-12:
            raise RuntimeError(f"self-check failed: max inlier residual {worst:.3g}")
        print(f"self-check: max inlier Sampson residual {worst:.3g}")
    for w in written:
        print(w)
    return written


def build_parser():
    p = argparse.ArgumentParser(prog="g2mf", description="Multi-model geometric fitting.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit one dataset with one method")
    _add_task(f)
    _add_fit_options(f)
    f.add_argument("dataset")
    f.add_argument("--annotations", help="JSON annotations; default simulates --wa-preset")
    f.add_argument("--wa-preset", choices=sorted(WA_PRESETS), default="B", type=str.upper)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", help="directory for report.json and labels.txt")
    f.add_argument("--trace", action="store_true", help="embed the per-iteration trace in the report")
    f.set_defaults(func=cmd_fit)

    b = sub.add_parser("benchmark", help="multi-seed medians over datasets and methods")
    _add_task(b)
    _add_fit_options(b)
    b.add_argument("datasets", nargs="+")
    b.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    b.add_argument("--presets", nargs="+", choices=sorted(WA_PRESETS), default=["B"], type=str.upper)
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--seed", type=int, default=0, help="base seed; trial t uses seed + t")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out")
    b.add_argument("--trace", action="store_true")
    b.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("synth", help="generate a synthetic scene")
    _add_task(s)
    s.add_argument("-K", type=int, default=2)
    s.add_argument("-n", type=int, default=100, help="points per model")
    s.add_argument("--outliers", type=int, default=50)
    s.add_argument("--noise", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--wa-preset", choices=sorted(WA_PRESETS), type=str.upper)
    s.add_argument("--name")
    s.add_argument("--out", default=".")
    s.add_argument("--check", action="store_true", help="verify inlier residuals (zero at zero noise)")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, InfeasibleAnnotation) as err:
        parser.exit(EXIT_USAGE, f"g2mf {args.command}: error: {err}\n")
    except (ParseError, OSError, RuntimeError, ValueError) as err:
        print(f"g2mf {args.command}: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
