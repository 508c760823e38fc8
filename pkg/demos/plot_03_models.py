"""
Three classifiers on the same counts
====================================

Fit the elastic net, logistic regression and random forest on a
synthetic imbalanced matrix and look at what each one picks up.
"""

import numpy as np

from defiscan import fit_standardization
from defiscan.models import feature_importances, fit_elastic_net, fit_logistic, fit_random_forest

rng = np.random.default_rng(0)
n_v, n_l = 40, 400
X = rng.poisson(4.0, size=(n_v + n_l, 8)).astype(float)
y = np.r_[np.ones(n_v, int), np.zeros(n_l, int)]
X[:n_v, 2] += rng.poisson(5.0, n_v)  # column 2 carries the signal

Z = fit_standardization(X).apply(X)

en = fit_elastic_net(Z, y, alpha=0.5, strength=0.02)
print("elastic net non-zero:", en.nonzero, "sweeps:", en.sweeps)

lr = fit_logistic(Z, y)
print("logistic converged:", lr.converged, "weights:", np.round(lr.weights, 2))

rf = fit_random_forest(X, y, n_trees=50, seed=1)
print("forest importances:", np.round(feature_importances(rf), 3))
print("training accuracy:", (rf.predict(X) == y).mean())
