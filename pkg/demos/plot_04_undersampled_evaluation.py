"""
Repeated under-sampling and the forest ladder
=============================================

Each iteration balances the classes, splits 70/30 and scores a fresh
model; the report averages metrics and importances.  The ladder then
retrains on ever smaller feature subsets.
"""

import numpy as np

from defiscan import ExperimentConfig, run_experiment
from defiscan.evaluation import format_reports, ladder
from defiscan.features import FeatureMatrix, FeatureSchema

rng = np.random.default_rng(3)
n_v, n_l, d = 47, 600, 15
X = rng.poisson(3.0, size=(n_v + n_l, d)).astype(float)
X[:n_v, 4] += rng.poisson(4.0, n_v)
X[:n_v, 9] = np.maximum(X[:n_v, 9] - 2, 0)
y = np.r_[np.ones(n_v, int), np.zeros(n_l, int)]
matrix = FeatureMatrix(FeatureSchema(tuple(f"OP{i:02d}" for i in range(d))), X, y)

report = run_experiment(matrix, ExperimentConfig(iterations=20, n_trees=30, base_seed=0))
print(report.mean_metrics)
print("top features:", report.top_features(3))

###############################################################################
# The full nine-rung ladder, kept short here

reports = ladder(matrix, "forest", 0, iterations=10, n_trees=30, en_strength=0.02)
print(format_reports(reports))
