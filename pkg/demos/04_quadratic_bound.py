# The quadratic bound behind the curvature estimate.
#
# Run with:  python demos/04_quadratic_bound.py
#
# Q(X) = -sum b_k X_k^2 - lam (sum X_k)^2 + 4 mu sum c_k X_k is a concave
# quadratic. Its maximum is 4 mu^2 Gamma, where Gamma comes from inverting
# diag(b) + lam 11^T with the Sherman-Morrison formula.

import numpy as np

from levelcurv import concavity as cc
from levelcurv import experiments as ex

rng = np.random.default_rng(7)
b = rng.uniform(0.5, 3.0, 4)
c = rng.uniform(-1.0, 1.0, 4)
lam, mu = 0.8, -0.6

gamma, bound = cc.quadratic_bound(lam, mu, b, c)
best, x = cc.maximize_Q_bruteforce(lam, mu, b, c)
direct = np.linalg.solve(np.diag(b) + lam * np.ones((4, 4)), 2 * mu * c)
print("bound 4 mu^2 Gamma:", bound)
print("brute force max:   ", best)
print("maximizer (search):", x)
print("maximizer (solve): ", direct)

# The same comparison over many random instances, as the CLI runs it.
out = ex.lemma32_experiment(trials=2000, seed=0)
summary = out.documents["summary"]
print(f"\n{summary['trials']} trials: worst excess over the bound "
      f"{summary['worst_excess']:.1e}, worst shortfall {summary['worst_attainment_gap']:.1e}")
