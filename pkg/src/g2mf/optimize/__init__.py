"""Energy evaluation and discrete minimisation."""

from .energy import (EnergyBreakdown, EnergyParams, InvalidLabel, data_cost_matrix, energy,
                     labeling_energy, model_costs)
from .expansion import alpha_expansion, expand, expansion_lower_bound, expansion_move
from .maxflow import INFINITE_CAPACITY, MaxFlowResult, cut_capacity, max_flow
from .pearl import NoValidProposal, PearlConfig, PearlResult, pearl_fit, sample_proposals

__all__ = [
    "EnergyBreakdown", "EnergyParams", "INFINITE_CAPACITY", "InvalidLabel", "MaxFlowResult",
    "NoValidProposal", "PearlConfig", "PearlResult", "alpha_expansion", "cut_capacity",
    "data_cost_matrix", "energy", "expand", "expansion_lower_bound", "expansion_move",
    "labeling_energy", "max_flow", "model_costs", "pearl_fit", "sample_proposals",
]
