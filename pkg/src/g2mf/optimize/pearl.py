"""PEARL baseline: large random proposal set, expansion with label costs, refit, repeat."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..geometry import DegenerateSample, estimate, minimal_sample_size
from .energy import EnergyBreakdown, EnergyParams, data_cost_matrix, labeling_energy
from .expansion import expand

log = logging.getLogger(__name__)


class NoValidProposal(RuntimeError):
    """Every random minimal sample was degenerate."""


@dataclass
class PearlConfig:
    n_initial_proposals: int = 1000
    min_iters: int = 10
    max_iters: int = 20
    tol: float = 1e-6
    max_attempts_factor: int = 10


@dataclass
class PearlResult:
    proposals: list
    labels: np.ndarray
    energy: EnergyBreakdown
    iterations: int
    converged_at: int | None
    history: list = field(default_factory=list)


def sample_proposals(task, x1, x2, n, rng, max_attempts_factor=10):
    m = minimal_sample_size(task)
    N = len(x1)
    if N < m:
        raise NoValidProposal(f"{N} points cannot support a minimal sample of {m}")
    out = []
    for _ in range(max_attempts_factor * n):
        if len(out) == n:
            break
        idx = rng.choice(N, m, replace=False)
        try:
            out.append(estimate(task, x1[idx], x2[idx]))
        except DegenerateSample:
            continue
    if not out:
        raise NoValidProposal("all minimal samples were degenerate")
    return out


def _refit(task, model, x1, x2, members):
    if len(members) < minimal_sample_size(task):
        return model
    try:
        return estimate(task, x1[members], x2[members])
    except DegenerateSample:
        return model


def pearl_fit(task, x1, x2, adjacency, params: EnergyParams, config: PearlConfig, rng,
              proposals=None) -> PearlResult:
    """Alternate label-cost expansion and inlier refits until the energy settles.

    ``proposals`` overrides the random initial set when given.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if proposals is None:
        proposals = sample_proposals(task, x1, x2, config.n_initial_proposals, rng,
                                     config.max_attempts_factor)
    proposals = list(proposals)
    labels = np.zeros(len(x1), dtype=int)
    edges, weights = adjacency.edges, adjacency.weights
    lc = params.label_cost
    history = []
    converged_at = None
    current = None
    it = 0
    for it in range(1, config.max_iters + 1):
        costs = data_cost_matrix(x1, x2, proposals, params)
        labels, e_exp = expand(costs, labels, edges, weights, lc)
        # keep only models in use, refit each from its inliers
        used = [k for k in np.unique(labels) if k != 0]
        new_props = [_refit(task, proposals[k - 1], x1, x2, np.flatnonzero(labels == k)) for k in used]
        remap = np.zeros(len(proposals) + 1, dtype=int)
        remap[used] = np.arange(1, len(used) + 1)
        labels = remap[labels]
        kept = [proposals[k - 1] for k in used]
        current = labeling_energy(data_cost_matrix(x1, x2, new_props, params), labels, edges, weights, lc)
        if current.total > e_exp.total:
            # algebraic refits can lose to the originals; keep the better set
            new_props = kept
            current = labeling_energy(costs[:, [0] + used], labels, edges, weights, lc)
        proposals = new_props
        history.append(current.total)
        log.debug("pearl iter %d: expansion %.4f refit %.4f models %d", it, e_exp.total,
                  current.total, len(proposals))
        settled = e_exp.total - current.total < config.tol * max(1.0, abs(e_exp.total))
        if settled and converged_at is None:
            converged_at = it
        if settled and it >= config.min_iters:
            break
    return PearlResult(proposals, labels, current, it, converged_at, history)
