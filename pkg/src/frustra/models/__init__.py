"""From-scratch classifiers sharing an estimator-style fit/predict surface.

``predict_proba`` returns one positive-class probability per row for every
family.
"""

from .boosting import GradientBoostingClassifier
from .forest import RandomForestClassifier
from .logistic import LogisticRegressionClassifier
from .lstm import LstmSequenceClassifier
from .tree import TreeNodes, build_gini_tree, build_newton_tree

__all__ = [
    "GradientBoostingClassifier",
    "RandomForestClassifier",
    "LogisticRegressionClassifier",
    "LstmSequenceClassifier",
    "TreeNodes",
    "build_gini_tree",
    "build_newton_tree",
]
