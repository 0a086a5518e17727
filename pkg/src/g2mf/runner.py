"""Single runs and multi-seed benchmarks for the three fitting methods."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataio import Dataset, preset_config, segmentation_error, simulate_weak_annotations
from .fitter import FitConfig, InfeasibleAnnotation, fit
from .geometry import as_kind, minimal_sample_size
from .graph import build_adjacency
from .optimize import PearlConfig, pearl_fit

log = logging.getLogger(__name__)

METHODS = ("g2mf-wa", "sa-rcm", "pearl")


def check_preset(task, preset):
    """A preset whose per-model count is below the minimal sample can never seed a proposal."""
    cfg = preset_config(preset)
    m = minimal_sample_size(task)
    if cfg.n_per_model < m:
        raise InfeasibleAnnotation(
            f"preset {preset.upper()} annotates {cfg.n_per_model} points per model; "
            f"{as_kind(task).value} proposals need {m}")


@dataclass
class RunResult:
    seed: int
    labels: np.ndarray
    energy: float
    time: float
    n_models: int
    iterations: int
    error: float | None = None
    trace: list | None = None


def run_method(data: Dataset, task, method, seed=0, preset="B", annotations=None,
               fit_config: FitConfig | None = None, pearl_config: PearlConfig | None = None,
               keep_trace=False) -> RunResult:
    """Run one method with one seed; time covers sampling and optimisation only.

    For g2mf-wa, ``annotations`` overrides the simulated ``preset`` annotations.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    base = fit_config or FitConfig()
    trace = None
    if method == "pearl":
        params = base.energy
        pcfg = pearl_config or PearlConfig()
        t0 = time.perf_counter()
        adj = build_adjacency(data.x1, data.x2, base.prune_quantile, params.smoothness)
        res = pearl_fit(task, data.x1, data.x2, adj, params, pcfg, np.random.default_rng(seed))
        elapsed = time.perf_counter() - t0
        labels, energy, n_models, iters = res.labels, res.energy.total, len(res.proposals), res.iterations
        if keep_trace:
            trace = [{"iteration": i + 1, "energy": e} for i, e in enumerate(res.history)]
    else:
        if method == "g2mf-wa":
            cfg = replace(base, seed=seed)
            if annotations is None:
                check_preset(task, preset)
                annotations = simulate_weak_annotations(data, preset_config(preset, seed))
        else:
            cfg = replace(base, seed=seed, lam=1.0, sampling="all")
        t0 = time.perf_counter()
        res = fit(data, annotations, task, cfg)
        elapsed = time.perf_counter() - t0
        labels, energy, n_models, iters = res.labels, res.energy.total, len(res.models), res.iterations
        if keep_trace:
            trace = res.trace_dicts()
    err = None
    if data.ground_truth is not None:
        err = segmentation_error(labels, data.ground_truth)
    return RunResult(seed, labels, float(energy), elapsed, n_models, iters, err, trace)


@dataclass
class RunReport:
    method: str
    dataset: str
    preset: str | None
    config: dict
    seeds: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    traces: list | None = None
    failure: str | None = None

    @property
    def median_error(self):
        errs = [e for e in self.errors if e is not None]
        return float(np.median(errs)) if errs else None

    @property
    def median_time(self):
        return float(np.median(self.times)) if self.times else None

    def add(self, run: RunResult):
        self.seeds.append(run.seed)
        self.errors.append(run.error)
        self.times.append(run.time)
        self.energies.append(run.energy)
        if run.trace is not None:
            self.traces = (self.traces or []) + [run.trace]

    def as_dict(self):
        d = asdict(self)
        d["median_error"] = self.median_error
        d["median_time"] = self.median_time
        if d["traces"] is None:
            del d["traces"]
        return d


def effective_config(method, fit_config, pearl_config):
    if method == "pearl":
        return {"pearl": asdict(pearl_config or PearlConfig()),
                "energy": asdict((fit_config or FitConfig()).energy)}
    cfg = fit_config or FitConfig()
    if method == "sa-rcm":
        cfg = replace(cfg, lam=1.0, sampling="all")
    return cfg.as_dict()


def _job(args):
    data, task, method, seed, preset, fit_config, pearl_config, keep_trace = args
    return run_method(data, task, method, seed, preset, None, fit_config, pearl_config, keep_trace)


def benchmark(datasets, task, methods=METHODS, presets=("B",), trials=1, base_seed=0, jobs=1,
              fit_config=None, pearl_config=None, keep_trace=False):
    """Run ``trials`` seeds per (dataset, method, preset); failures are recorded, not raised.

    Presets only apply to g2mf-wa; the baselines get a single row per dataset.
    """
    reports = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for data in datasets:
            for method in methods:
                for preset in (presets if method == "g2mf-wa" else (None,)):
                    rep = RunReport(method, data.name, preset,
                                    effective_config(method, fit_config, pearl_config))
                    args = [(data, task, method, base_seed + t, preset or "B", fit_config,
                             pearl_config, keep_trace) for t in range(trials)]
                    try:
                        if method == "g2mf-wa":
                            check_preset(task, preset)
                        runs = pool.map(_job, args) if pool else map(_job, args)
                        for run in runs:
                            rep.add(run)
                    except Exception as err:  # recorded per row; the benchmark continues
                        log.warning("%s on %s failed: %s", method, data.name, err)
                        rep.failure = f"{type(err).__name__}: {err}"
                    reports.append(rep)
    finally:
        if pool:
            pool.shutdown()
    return reports


def format_table(reports):
    """Aligned text table: one row per (dataset, method, preset), median error and time."""
    header = ["dataset", "method", "preset", "trials", "median err (%)", "median time (s)"]
    rows = []
    for r in reports:
        if r.failure:
            err, t = "n/a", "n/a"
        else:
            err = "-" if r.median_error is None else f"{r.median_error:.2f}"
            t = f"{r.median_time:.2f}"
        rows.append([r.dataset, r.method, r.preset or "-", str(len(r.seeds)), err, t])
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)


__all__ = ["METHODS", "RunResult", "RunReport", "benchmark", "check_preset", "effective_config",
           "format_table", "run_method"]
