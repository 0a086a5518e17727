"""s-t maximum flow / minimum cut on integer-scaled capacities (scipy Dinic backend)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

CAPACITY_SCALE = 1e6
# sentinel for edges that must never be cut; large next to any energy in this package
INFINITE_CAPACITY = 1e4
_INT32_MAX = 2**31 - 1


@dataclass
class MaxFlowResult:
    value: float
    source_side: np.ndarray  # bool mask of nodes reachable from the source in the residual graph
    scale: float

    @property
    def sink_side(self):
        return ~self.source_side


def _scale_for(G, source):
    bound = max(G[source].sum(), G.data.max(initial=0.0), 1e-300)
    return min(CAPACITY_SCALE, 0.45 * _INT32_MAX / bound)


def max_flow(n_nodes, tails, heads, capacities, source, sink) -> MaxFlowResult:
    """Maximum s-t flow on a directed graph given as parallel edge arrays.

    Capacities are real and non-negative; they are multiplied by ``CAPACITY_SCALE``
    and rounded so the flow is computed exactly in integers. The scale shrinks when
    needed to keep every integer inside int32. Parallel edges are merged.
    """
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    caps = np.asarray(capacities, dtype=float)
    if np.any(caps < 0) or not np.all(np.isfinite(caps)):
        raise ValueError("capacities must be finite and non-negative")
    if source == sink:
        raise ValueError("source and sink coincide")
    keep = (tails != heads) & (caps > 0)
    tails, heads, caps = tails[keep], heads[keep], caps[keep]
    G = coo_matrix((caps, (tails, heads)), shape=(n_nodes, n_nodes)).tocsr()
    G.sum_duplicates()
    scale = _scale_for(G, source)
    G.data = np.rint(G.data * scale).astype(np.int32)
    res = maximum_flow(G, source, sink, method="dinic")
    residual = (G - res.flow).tocsr()
    residual.data[residual.data < 0] = 0
    residual.eliminate_zeros()
    reach = breadth_first_order(residual, source, directed=True, return_predecessors=False)
    side = np.zeros(n_nodes, dtype=bool)
    side[reach] = True
    return MaxFlowResult(res.flow_value / scale, side, scale)


def cut_capacity(tails, heads, capacities, source_side):
    """Capacity of the edges leaving the source side."""
    tails = np.asarray(tails, dtype=int)
    heads = np.asarray(heads, dtype=int)
    crossing = source_side[tails] & ~source_side[heads]
    return float(np.asarray(capacities, dtype=float)[crossing].sum())
