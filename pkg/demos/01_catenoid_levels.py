# Level sets of the catenoid, one dimension at a time.
#
# Run with:  python demos/01_catenoid_levels.py
#
# The n-dimensional catenoid through |x| = 2 is the rotationally symmetric
# minimal graph with flux constant c = 1. Its level sets are spheres, so
# every curvature quantity is a function of the radius alone.

import numpy as np

from levelcurv import concavity as cc
from levelcurv import radial as rd

np.set_printoptions(precision=6, suppress=True)

# Closed forms at a few radii. For n = 2 the curvature functional is
# identically 1; in higher dimensions it decays like r^(2-n).
radii = np.array([2.0, 3.0, 5.0, 10.0])
for n in (2, 3, 4):
    grad, K, phi = rd.catenoid_invariants(radii, n)
    print(f"n={n}  |grad u| = {grad}")
    print(f"     K        = {K}")
    print(f"     phi      = {phi}")

# Now treat the band 2 <= r <= 10 as a boundary-value problem, with u = 0
# on the outer sphere. Solving for the flux constant should give c = 1 back.
sol = rd.solve_flux(rd.catenoid_config(3, 10.0))
print("\nflux constant recovered from the heights:", sol.c)

# f(t) = min of phi over the level set {u = t}. Here it is phi itself.
t = np.linspace(0.0, sol.config.height, 129)
prof = cc.f_profile(cc.phi_from_radial(sol, t), t)
print("largest second difference of f:", prof.max_d2f, "(negative means concave)")
print("smallest chordal margin:      ", cc.corollary_margin(prof, 3).min_margin)

# In the plane the profile is flat, so the chord is attained exactly.
flat = rd.catenoid_solution(2, 10.0)
t2 = np.linspace(0.0, flat.config.height, 65)
prof2 = cc.f_profile(cc.phi_from_radial(flat, t2), t2)
print("\nn=2: f ranges over", prof2.f.min(), "to", prof2.f.max())

# The tail R - u(r) against its leading term. For odd n the expansion
# written with s^(1-n) on negative s has the right sign; for even n it does
# not, and the scaled remainder stops being bounded. (At n = 5, r = 80 the
# remainder is below the rounding error of R - u and prints as 0.)
r = np.array([10.0, 20.0, 40.0, 80.0])
for n in (3, 4, 5):
    verb = rd.asymptotic_residual(r, n, "verbatim") / r ** (4 - 3 * n)
    mag = rd.asymptotic_residual(r, n, "magnitude") / r ** (4 - 3 * n)
    print(f"n={n} scaled remainder  verbatim {verb}   magnitude {mag}")
