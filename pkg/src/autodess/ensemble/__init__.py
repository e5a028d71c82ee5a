"""Static, stacked and dynamic ensemble strategies over a fitted pool."""
from .competence import (CompetenceSet, PoolMember, RegionOfCompetence, build_competence_set,
                         kmeans, neighbor_order, region_of_competence)
from .dispatch import (GLOBAL_STRATEGIES, STRATEGIES, EnsembleConfiguration, ensemble_predict,
                       single_best)
from .selection import (DCS_MEASURES, DES_RULES, MCB_MATCH, competences, dcs_competence,
                        des_select, dfp_prune, majority_vote)
from .stacking import META_SPEC, StackedModel, fit_stacked

__all__ = [
    "DCS_MEASURES", "DES_RULES", "GLOBAL_STRATEGIES", "MCB_MATCH", "META_SPEC", "STRATEGIES",
    "CompetenceSet", "EnsembleConfiguration", "PoolMember", "RegionOfCompetence", "StackedModel",
    "build_competence_set", "competences", "dcs_competence", "des_select", "dfp_prune",
    "ensemble_predict", "fit_stacked", "kmeans", "majority_vote", "neighbor_order",
    "region_of_competence", "single_best",
]
