"""Simulation designs, population truths and the Monte Carlo harness."""
from .dgp import CdcDgp, ExpSurvivalDgp, gen_cdc, gen_exp_survival
from .harness import ReplicationPlan, monte_carlo, records_frame, replicate, summarize
from .truth import true_phi, true_phi_cdc, true_phi_exp_survival

__all__ = [
    "CdcDgp",
    "ExpSurvivalDgp",
    "ReplicationPlan",
    "gen_cdc",
    "gen_exp_survival",
    "monte_carlo",
    "records_frame",
    "replicate",
    "summarize",
    "true_phi",
    "true_phi_cdc",
    "true_phi_exp_survival",
]
