"""Simulated-annealing multi-model fitting driven by a weak-annotation sampling graph."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataio import Dataset, segmentation_error
from .geometry import DegenerateSample, as_kind, estimate, minimal_sample_size, sampson_distance
from .graph import (DEFAULT_PRUNE_QUANTILE, PreferenceTable, SamplingGraph, annotation_arrays,
                    build_adjacency, build_sampling_graph, edge_probabilities, sample_bonds)
from .optimize.energy import EnergyBreakdown, EnergyParams, labeling_energy, model_costs
from .optimize.expansion import expand

log = logging.getLogger(__name__)

H_ADAPT_POOL_SIZE = 100
H_ADAPT_FRACTION = 0.1


class InfeasibleAnnotation(ValueError):
    """The annotations cannot ever yield a proposal for the task."""


@dataclass
class FitConfig:
    lam: float = 0.1
    sigma: float = 0.1
    h0: int = 10
    T0: float = 1.0
    cooling: float = 0.99
    T_min: float | None = None  # defaults to 1e-4 * T0
    min_iters: int = 500
    max_iters: int = 5000
    nflag: int = 0
    nlabels: int | None = None
    seed: int = 0
    energy: EnergyParams = field(default_factory=EnergyParams)
    prune_quantile: float = DEFAULT_PRUNE_QUANTILE
    # "annotations": graph over annotated points; "all": graph over every point
    sampling: str = "annotations"
    # fall back to a random minimal subset when no cluster is large enough
    bootstrap: bool = True
    # "consensus": robust fit inside the cluster; "all": plain fit on every member
    cluster_fit: str = "consensus"
    plateau_stop: bool = False
    plateau_window: int = 50
    plateau_rtol: float = 1e-4

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0 and 0.0 <= self.sigma <= 1.0):
            raise ValueError("lam and sigma must lie in [0, 1]")
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling must lie in (0, 1)")
        if self.T_min is None:
            self.T_min = 1e-4 * self.T0
        if not self.T0 > self.T_min > 0:
            raise ValueError("need T0 > T_min > 0")
        if self.min_iters > self.max_iters:
            raise ValueError("min_iters exceeds max_iters")
        if self.h0 < 1:
            raise ValueError("h0 must be positive")
        if self.nflag not in (0, 1):
            raise ValueError("nflag must be 0 or 1")
        if self.nflag == 1 and (self.nlabels is None or self.nlabels < 1):
            raise ValueError("nlabels is required when nflag=1")
        if self.cluster_fit not in ("consensus", "all"):
            raise ValueError(f"unknown cluster fit {self.cluster_fit!r}")
        if self.sampling not in ("annotations", "all"):
            raise ValueError(f"unknown sampling graph {self.sampling!r}")

    def as_dict(self):
        d = asdict(self)
        d["energy"] = asdict(self.energy)
        return d


def sa_rcm_config(**overrides) -> FitConfig:
    """Preference-only sampling over the full adjacency graph."""
    overrides.setdefault("lam", 1.0)
    overrides.setdefault("sampling", "all")
    return FitConfig(**overrides)


class ProposalPool:
    """Every proposal ever generated, with cached costs and annotated-point residuals."""

    def __init__(self, n_vertices, h0):
        self.h0 = h0
        self.models = []
        self.costs = []
        self.preferences = PreferenceTable(n_vertices)

    def __len__(self):
        return len(self.models)

    @property
    def h(self):
        if len(self) > H_ADAPT_POOL_SIZE:
            return math.ceil(H_ADAPT_FRACTION * len(self))
        return self.h0

    def add(self, model, costs, vertex_residuals):
        self.models.append(model)
        self.costs.append(costs)
        self.preferences.append(vertex_residuals)
        return len(self.models) - 1


@dataclass
class TraceRow:
    iteration: int
    move: str
    accepted: bool
    energy: float
    candidate_energy: float
    best_energy: float
    n_active: int
    pool_size: int
    h: int
    temperature: float
    seg_error: float | None
    elapsed: float


@dataclass
class FitResult:
    models: list
    labels: np.ndarray
    energy: EnergyBreakdown
    trace: list
    iterations: int
    elapsed: float
    pool_size: int

    def trace_dicts(self):
        return [asdict(r) for r in self.trace]


def select_cluster(clusters, minimal_size, rng):
    """Uniform choice among clusters with at least ``minimal_size`` members."""
    ok = [c for c in clusters if len(c) >= minimal_size]
    if not ok:
        return None
    return ok[int(rng.integers(len(ok)))]


def _truncated_cost(model, a, b, inlier_sq):
    return float(np.minimum(sampson_distance(model, a, b) / inlier_sq, 1.0).sum())


def generate_proposal_from_cluster(cluster, task, x1, x2, rng=None, inlier_sq=None, trials=100,
                                   refits=5):
    """Fit a model on a sampled cluster; None when too small, degenerate or unsupported.

    Without ``rng`` the model is the DLT fit on every cluster point. With ``rng``
    and ``inlier_sq`` (squared Sampson threshold) the all-point fit competes with
    ``trials`` minimal-sample fits on the truncated cost sum(min(r / inlier_sq, 1))
    over the cluster, the winner is refitted on its inliers while that lowers the
    cost, and a winner with no more inliers than a minimal sample gives None.
    """
    cluster = np.asarray(cluster, dtype=int)
    m = minimal_sample_size(task)
    if len(cluster) < m:
        return None
    a, b = x1[cluster], x2[cluster]
    try:
        model = estimate(task, a, b)
    except DegenerateSample:
        model = None
    if rng is None or inlier_sq is None or len(cluster) == m:
        return model
    best, best_cost = model, np.inf
    if model is not None:
        best_cost = _truncated_cost(model, a, b, inlier_sq)
    if best_cost > 0.0:
        for _ in range(trials):
            sub = rng.choice(len(cluster), m, replace=False)
            try:
                cand = estimate(task, a[sub], b[sub])
            except DegenerateSample:
                continue
            cost = _truncated_cost(cand, a, b, inlier_sq)
            if cost < best_cost:
                best, best_cost = cand, cost
    if best is None:
        return None
    for _ in range(refits):
        inl = np.flatnonzero(sampson_distance(best, a, b) < inlier_sq)
        if len(inl) < m:
            break
        try:
            cand = estimate(task, a[inl], b[inl])
        except DegenerateSample:
            break
        cost = _truncated_cost(cand, a, b, inlier_sq)
        if cost >= best_cost:
            break
        best, best_cost = cand, cost
    if np.count_nonzero(sampson_distance(best, a, b) < inlier_sq) <= m:
        return None
    return best


def check_feasible(task, annotations):
    """At least one weak-label class must hold a minimal sample."""
    if not annotations:
        raise InfeasibleAnnotation("no weak annotations given")
    _, lab = annotation_arrays(annotations)
    m = minimal_sample_size(task)
    if np.bincount(lab).max() < m:
        raise InfeasibleAnnotation(
            f"no weak-label class has {m} points; {as_kind(task).value} proposals need {m}")


class _Fitter:
    def __init__(self, data: Dataset, annotations, task, config: FitConfig):
        self.data = data
        self.task = as_kind(task)
        self.cfg = config
        self.m = minimal_sample_size(self.task)
        self.rng = np.random.default_rng(config.seed)
        x1, x2 = data.x1, data.x2
        self.adj = build_adjacency(x1, x2, config.prune_quantile, config.energy.smoothness)
        if config.sampling == "all":
            verts = np.arange(len(data))
            self.sgraph = SamplingGraph(verts, verts + 1, self.adj.edges)
        else:
            check_feasible(self.task, annotations)
            idx, lab = annotation_arrays(annotations)
            if idx.max() >= len(data):
                raise InfeasibleAnnotation("annotation index outside the dataset")
            self.sgraph = build_sampling_graph(self.adj.coords, idx, lab, config.prune_quantile)
        self.pool = ProposalPool(self.sgraph.n_vertices, config.h0)

    def _birth(self, labels):
        g, cfg, pool = self.sgraph, self.cfg, self.pool
        h = pool.h
        membership = pool.preferences.membership(h) if len(pool) else None
        w = edge_probabilities(g, membership, cfg.lam, cfg.sigma, h)
        bond_labels = labels[g.vertices]
        if cfg.sampling == "annotations":
            # unexplained annotated points group by weak label (offset past pool ids)
            out = bond_labels == 0
            bond_labels = np.where(out, -g.weak_labels, bond_labels)
        clusters = sample_bonds(g.n_vertices, g.edges, w, bond_labels, self.rng)
        cluster = select_cluster(clusters, self.m, self.rng)
        if cluster is None:
            if not self.cfg.bootstrap or g.n_vertices < self.m:
                return None
            cluster = self.rng.choice(g.n_vertices, self.m, replace=False)
        if cfg.cluster_fit == "consensus":
            model = generate_proposal_from_cluster(
                g.vertices[cluster], self.task, self.data.x1, self.data.x2, self.rng,
                cfg.energy.outlier_cost * cfg.energy.residual_scale**2)
        else:
            model = generate_proposal_from_cluster(g.vertices[cluster], self.task, self.data.x1, self.data.x2)
        if model is None:
            return None
        costs = model_costs(model, self.data.x1, self.data.x2, cfg.energy)
        if np.count_nonzero(costs < cfg.energy.outlier_cost) <= self.m:
            # explains nothing beyond a minimal sample
            return None
        res = sampson_distance(model, self.data.x1[g.vertices], self.data.x2[g.vertices])
        return pool.add(model, costs, res)

    def _cost_matrix(self, active):
        n = len(self.data)
        return np.column_stack([np.full(n, self.cfg.energy.outlier_cost)] + [self.pool.costs[g] for g in active])

    def run(self):
        cfg, rng = self.cfg, self.rng
        gt = self.data.ground_truth
        n = len(self.data)
        edges, weights = self.adj.edges, self.adj.weights
        active = []  # pool ids; column k + 1 of the cost matrix
        labels = np.zeros(n, dtype=int)  # pool id + 1, 0 for outlier
        E = labeling_energy(self._cost_matrix(active), labels, edges, weights)
        best = (E, list(active), labels.copy())
        T = cfg.T0
        trace = []
        t0 = time.perf_counter()
        it = 0
        for it in range(1, cfg.max_iters + 1):
            if cfg.nflag == 0:
                birth = rng.random() < 0.5
            else:
                birth = len(active) < cfg.nlabels
            cand = None
            if birth:
                gid = self._birth(labels)
                move = "birth" if gid is not None else "noop"
                if gid is not None:
                    cand = active + [gid]
            elif active:
                move = "death"
                k = int(rng.integers(len(active)))
                cand = active[:k] + active[k + 1:]
            else:
                move = "noop"

            if cand is None:
                E_new, labels_new, accepted = E, labels, True
            else:
                costs = self._cost_matrix(cand)
                col = np.zeros(len(self.pool) + 1, dtype=int)
                col[np.asarray(cand, dtype=int) + 1] = np.arange(1, len(cand) + 1)
                start = col[labels]
                lab_cols, E_new = expand(costs, start, edges, weights)
                labels_new = np.concatenate([[0], np.asarray(cand, dtype=int) + 1])[lab_cols]
                if E_new.total < E.total:
                    accepted = True
                else:
                    accepted = rng.random() < math.exp((E.total - E_new.total) / T)
                if accepted:
                    active, labels, E = cand, labels_new, E_new
            if E.total < best[0].total:
                best = (E, list(active), labels.copy())
            err = None
            if gt is not None:
                err = segmentation_error(labels, gt)
            trace.append(TraceRow(it, move, bool(accepted), E.total, E_new.total, best[0].total,
                                  len(active), len(self.pool), self.pool.h, T, err,
                                  time.perf_counter() - t0))
            log.debug("iter %d %s acc=%s E=%.4f |Theta|=%d |H|=%d T=%.4g", it, move, accepted,
                      E.total, len(active), len(self.pool), T)
            T *= cfg.cooling
            if it >= cfg.min_iters:
                if T < cfg.T_min:
                    break
                if cfg.plateau_stop and self._plateau(trace):
                    break
        elapsed = time.perf_counter() - t0
        E_best, act, lab = best
        col = np.zeros(len(self.pool) + 1, dtype=int)
        col[np.asarray(act, dtype=int) + 1] = np.arange(1, len(act) + 1)
        models = [self.pool.models[g] for g in act]
        return FitResult(models, col[lab], E_best, trace, it, elapsed, len(self.pool))

    def _plateau(self, trace):
        w = self.cfg.plateau_window
        if len(trace) <= w:
            return False
        old, new = trace[-w - 1].energy, trace[-1].energy
        return abs(old - new) <= self.cfg.plateau_rtol * max(1.0, abs(old))


def fit(data: Dataset, annotations, task, config: FitConfig) -> FitResult:
    """Anneal over birth/death proposal moves, labelling with alpha-expansion.

    ``annotations`` are WeakAnnotation records; they are ignored when
    ``config.sampling == "all"``. Returns the lowest-energy state visited, its
    labels (0 = outlier, k = ``models[k - 1]``) and the per-iteration trace.
    """
    return _Fitter(data, annotations, task, config).run()
