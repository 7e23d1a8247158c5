# What happens at the critical points of phi along a level curve.
#
# Run with:  python demos/03_critical_points.py
#
# On a level curve, the second-order operator L of the linearized equation
# applied to phi = log b_11 reduces to a sum of squares wherever phi_theta
# vanishes. Elsewhere it does not.

import numpy as np

from levelcurv import concavity as cc
from levelcurv import ring2d as rg

problem = rg.ellipses_problem((3.0, 2.5), (1.2, 1.0), n_theta=64, n_t=64)
sol = rg.solve(problem)[0].band_limited()

phi, lhs, rhs = cc.remark_identity_fields(sol)
gap = np.abs(lhs - rhs)
cv = cc.remark_identity_residual(sol)
print("critical angles found on row 10:", np.round(cv.theta[cv.t == sol.t[10]], 6))
print(f"|L(phi) - squares| at critical points: {cv.max_abs:.2e}")
print(f"|L(phi) - squares| anywhere:           {np.nanmax(gap[1:-1]):.2e}")

# The differential inequality: L(exp(-phi_aux)) <= 0 at critical points.
# On these rings the value there tends to 0 from above as the grid is
# refined, an equality case that makes the discrete test delicate.
for n in (32, 64, 128):
    p = rg.ellipses_problem((3.0, 2.5), (1.2, 1.0), n_theta=n, n_t=n)
    s = rg.solve(p)[0].band_limited()
    chk = cc.differential_inequality_check(s)
    print(f"N={n:4d}  worst L(exp(-phi_aux)) at critical points {chk.worst:+.2e}, "
          f"wrong-sign control {cc.wrong_sign_grid(s):+.2f}")

# The maximum principle for subsolutions: if L G >= 0 where G_theta = 0,
# then the max over theta of G is convex in t.
G = -cc.phi_from_grid(sol).phi_level
v = cc.max_convexity_check(sol, G, eps=1e-4, mod_gradient=True)
print("max-principle verdict:", v.passed, "smallest second difference", v.worst_d2)
