"""Labelling energy: clamped data cost + Potts smoothness + per-model label cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import sampson_distance


class InvalidLabel(ValueError):
    """A labelling references a model that is not in the current proposal set."""


@dataclass(frozen=True)
class EnergyParams:
    """Energy constants.

    Data costs are Sampson errors divided by ``residual_scale**2`` (pixels), so the
    outlier cost and clamp are in units of that normalised residual.
    """

    smoothness: float = 0.1
    outlier_cost: float = 1.0
    residual_clamp: float = 2.0
    label_cost: float = 20.0
    residual_scale: float = 5.0

    def __post_init__(self):
        for name in ("smoothness", "outlier_cost", "residual_clamp", "label_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.residual_scale <= 0:
            raise ValueError("residual_scale must be positive")
        if self.residual_clamp < self.outlier_cost:
            raise ValueError("residual_clamp must be >= outlier_cost")


@dataclass(frozen=True)
class EnergyBreakdown:
    data: float
    smoothness: float
    complexity: float = 0.0

    @property
    def total(self):
        return self.data + self.smoothness + self.complexity

    def as_dict(self):
        return {"data": self.data, "smoothness": self.smoothness,
                "complexity": self.complexity, "total": self.total}


def model_costs(model, x1, x2, params: EnergyParams):
    """Per-point data cost of one non-outlier model."""
    r = sampson_distance(model, x1, x2) / params.residual_scale**2
    return np.minimum(r, params.residual_clamp)


def data_cost_matrix(x1, x2, proposals, params: EnergyParams):
    """(N, 1 + K) cost matrix; column 0 is the outlier model."""
    n = len(np.asarray(x1).reshape(-1, 2))
    cols = [np.full(n, params.outlier_cost)]
    cols += [model_costs(m, x1, x2, params) for m in proposals]
    return np.column_stack(cols)


def labeling_energy(costs, labels, edges, weights, label_cost=0.0) -> EnergyBreakdown:
    """Energy of ``labels`` given a precomputed cost matrix (label 0 = outlier)."""
    costs = np.asarray(costs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (costs.shape[0],):
        raise InvalidLabel(f"expected {costs.shape[0]} labels, got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= costs.shape[1]):
        raise InvalidLabel(f"labels must lie in [0, {costs.shape[1] - 1}]")
    data = float(costs[np.arange(len(labels)), labels].sum())
    if len(edges):
        cut = labels[edges[:, 0]] != labels[edges[:, 1]]
        smooth = float(np.asarray(weights)[cut].sum())
    else:
        smooth = 0.0
    used = np.unique(labels)
    complexity = float(label_cost) * int(np.count_nonzero(used))
    return EnergyBreakdown(data, smooth, complexity)


def energy(x1, x2, proposals, labels, adjacency, params: EnergyParams,
           include_complexity=False) -> EnergyBreakdown:
    costs = data_cost_matrix(x1, x2, proposals, params)
    lc = params.label_cost if include_complexity else 0.0
    return labeling_energy(costs, labels, adjacency.edges, adjacency.weights, lc)
