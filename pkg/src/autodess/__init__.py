"""Staged AutoML search ending in static, stacked or dynamic ensemble selection."""
from .dataio import DataError, Dataset, SplitSpec, load_table, preprocess, stratified_split
from .ensemble import EnsembleConfiguration, ensemble_predict
from .orchestrator import (AutoDessModel, BudgetPlan, RunReport, RunResult, objective_ensemble,
                           run_autodess, run_splits, run_table)

__version__ = "0.1.0"

__all__ = [
    "AutoDessModel", "BudgetPlan", "DataError", "Dataset", "EnsembleConfiguration", "RunReport",
    "RunResult", "SplitSpec", "ensemble_predict", "load_table", "objective_ensemble",
    "preprocess", "run_autodess", "run_splits", "run_table", "stratified_split",
]
