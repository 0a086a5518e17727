"""Alpha-expansion for Potts energies, with optional per-label costs."""

from __future__ import annotations

import numpy as np

from .energy import EnergyBreakdown, data_cost_matrix, labeling_energy
from .maxflow import max_flow

_REL_TOL = 1e-12


def _improves(new, old):
    return new < old - _REL_TOL * max(1.0, abs(old))


def expansion_lower_bound(costs, labels, alpha, edges, weights, label_cost=0.0):
    """Lower bound on the energy change of any expansion move on ``alpha``.

    A node can gain at most its data saving plus the weight of its currently
    discontinuous edges; removing labels can save their label cost.
    """
    n = len(labels)
    free = labels != alpha
    if not free.any():
        return 0.0
    b = costs[np.arange(n), alpha] - costs[np.arange(n), labels]
    if len(edges):
        disc = labels[edges[:, 0]] != labels[edges[:, 1]]
        w = np.asarray(weights)[disc]
        slack = np.bincount(edges[disc, 0], w, n) + np.bincount(edges[disc, 1], w, n)
        b = b - slack
    bound = np.minimum(b[free], 0.0).sum()
    if label_cost:
        used = set(np.unique(labels).tolist()) - {0}
        if alpha != 0 and alpha not in used:
            bound += label_cost
        bound -= label_cost * len(used - {alpha})
    return float(bound)


def expansion_move(costs, labels, alpha, edges, weights, label_cost=0.0):
    """Optimal binary move letting any subset of nodes switch to ``alpha``.

    Returns the proposed labelling; the caller decides whether to accept it.
    """
    costs = np.asarray(costs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    free = labels != alpha
    if not free.any():
        return labels.copy()
    idx = np.arange(n)
    # x_i = 1 means node i takes alpha; cost of x=0 in u0, of x=1 in u1
    u0 = np.where(free, costs[idx, labels], 0.0)
    u1 = np.where(free, costs[idx, alpha], 0.0)
    tails, heads, caps = [], [], []

    if len(edges):
        i, j = edges[:, 0], edges[:, 1]
        w = np.asarray(weights, dtype=float)
        fi, fj = free[i], free[j]
        # one endpoint already alpha: the free one pays w unless it switches
        m = fi & ~fj
        np.add.at(u0, i[m], w[m])
        m = ~fi & fj
        np.add.at(u0, j[m], w[m])
        # both free: E00 = w[l_i != l_j], E01 = E10 = w, E11 = 0
        m = fi & fj
        ii, jj, ww = i[m], j[m], w[m]
        a = np.where(labels[ii] != labels[jj], ww, 0.0)
        np.add.at(u1, ii, ww - a)
        np.add.at(u1, jj, -ww)
        tails.append(ii)
        heads.append(jj)
        caps.append(2.0 * ww - a)

    source, sink = n, n + 1
    n_nodes = n + 2
    lo = np.minimum(u0, u1)
    fidx = np.flatnonzero(free)
    tails += [np.full(len(fidx), source), fidx]
    heads += [fidx, np.full(len(fidx), sink)]
    caps += [(u1 - lo)[fidx], (u0 - lo)[fidx]]

    if label_cost:
        used = set(np.unique(labels).tolist()) - {0}
        if alpha != 0 and alpha not in used:
            # pay once if any node switches to alpha
            y = n_nodes
            n_nodes += 1
            tails += [[source], np.full(len(fidx), y)]
            heads += [[y], fidx]
            caps += [[label_cost], np.full(len(fidx), label_cost)]
        for lab in sorted(used - {alpha}):
            # label stays in use unless all of its nodes switch
            members = np.flatnonzero(labels == lab)
            y = n_nodes
            n_nodes += 1
            tails += [members, [y]]
            heads += [np.full(len(members), y), [sink]]
            caps += [np.full(len(members), label_cost), [label_cost]]

    res = max_flow(
        n_nodes,
        np.concatenate([np.asarray(t, dtype=np.int64) for t in tails]),
        np.concatenate([np.asarray(h, dtype=np.int64) for h in heads]),
        np.concatenate([np.asarray(c, dtype=float) for c in caps]),
        source,
        sink,
    )
    switch = free & ~res.source_side[:n]
    out = labels.copy()
    out[switch] = alpha
    return out


def expand(costs, labels, edges, weights, label_cost=0.0, max_sweeps=100, on_move=None):
    """Run expansion sweeps over labels in ascending order until no move helps.

    ``on_move(alpha, energy_before, energy_after)`` is called for each accepted move.
    """
    costs = np.asarray(costs, dtype=float)
    labels = np.asarray(labels, dtype=int).copy()
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float)
    current = labeling_energy(costs, labels, edges, weights, label_cost)
    n_labels = costs.shape[1]
    for _ in range(max_sweeps):
        changed = False
        for alpha in range(n_labels):
            if expansion_lower_bound(costs, labels, alpha, edges, weights, label_cost) >= 0:
                continue
            proposal = expansion_move(costs, labels, alpha, edges, weights, label_cost)
            e = labeling_energy(costs, proposal, edges, weights, label_cost)
            if _improves(e.total, current.total):
                assert e.total <= current.total
                if on_move is not None:
                    on_move(alpha, current.total, e.total)
                labels, current, changed = proposal, e, True
        if not changed:
            break
    return labels, current


def alpha_expansion(x1, x2, proposals, labels, adjacency, params, include_complexity=False):
    """Expansion over the outlier model plus ``proposals`` (labels index 1..K)."""
    costs = data_cost_matrix(x1, x2, proposals, params)
    lc = params.label_cost if include_complexity else 0.0
    if labels is None:
        labels = np.zeros(costs.shape[0], dtype=int)
    return expand(costs, labels, adjacency.edges, adjacency.weights, lc)


__all__ = ["alpha_expansion", "expand", "expansion_move", "expansion_lower_bound", "EnergyBreakdown"]
