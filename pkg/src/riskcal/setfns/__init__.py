"""Nested set families and their losses, one module per task."""

from riskcal.setfns.classification import (
    LabelDist,
    class_varying_loss,
    class_varying_loss_matrix,
    multilabel_fnr_loss,
    multilabel_loss_matrix,
    threshold_set,
)
from riskcal.setfns.greedy import (
    RiskDensity,
    SimpleRiskDensity,
    greedy_optimality_check,
    greedy_sets,
    greedy_sets_iterative,
    optimal_sets,
)
from riskcal.setfns.hierarchy import (
    LabelTree,
    hierarchical_loss,
    hierarchical_loss_matrix,
    hierarchical_set,
    load_tree,
    tree_distance,
)
from riskcal.setfns.pairwise import (
    IntervalSet,
    metric_loss,
    metric_loss_matrix,
    pairwise_empirical_risk,
    ranking_interval,
    ranking_loss,
    ranking_loss_matrix,
)
from riskcal.setfns.protein import Distogram, distogram_loss, distogram_loss_matrix, distogram_set
from riskcal.setfns.segmentation import (
    connected_components_8,
    segmentation_loss,
    segmentation_loss_matrix,
    segmentation_set,
)

__all__ = [
    "Distogram",
    "IntervalSet",
    "LabelDist",
    "LabelTree",
    "RiskDensity",
    "SimpleRiskDensity",
    "class_varying_loss",
    "class_varying_loss_matrix",
    "connected_components_8",
    "distogram_loss",
    "distogram_loss_matrix",
    "distogram_set",
    "greedy_optimality_check",
    "greedy_sets",
    "greedy_sets_iterative",
    "hierarchical_loss",
    "hierarchical_loss_matrix",
    "hierarchical_set",
    "load_tree",
    "metric_loss",
    "metric_loss_matrix",
    "multilabel_fnr_loss",
    "multilabel_loss_matrix",
    "optimal_sets",
    "pairwise_empirical_risk",
    "ranking_interval",
    "ranking_loss",
    "ranking_loss_matrix",
    "segmentation_loss",
    "segmentation_loss_matrix",
    "segmentation_set",
    "threshold_set",
    "tree_distance",
]
