"""Nuisance fits: least squares, proportional odds, conditional means and discrete hazards."""
from .linear import LinearFit, fit_linear, fit_ols
from .logistic import StackedLogisticFit, fit_stacked_logistic, objective
from .ordinal import WorkingModelFit, fit_po_table, fit_proportional_odds
from .regression import ConditionalCDFModel, ConditionalMeanModel, fit_conditional_cdf, fit_conditional_mean
from .survival import DiscreteSurvivalFit, SurvivalCurves, fit_discrete_survival

__all__ = [
    "ConditionalCDFModel",
    "ConditionalMeanModel",
    "DiscreteSurvivalFit",
    "LinearFit",
    "StackedLogisticFit",
    "SurvivalCurves",
    "WorkingModelFit",
    "fit_conditional_cdf",
    "fit_conditional_mean",
    "fit_discrete_survival",
    "fit_linear",
    "fit_ols",
    "fit_po_table",
    "fit_proportional_odds",
    "fit_stacked_logistic",
    "objective",
]
