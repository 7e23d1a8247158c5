"""Rotationally symmetric minimal graphs between concentric spheres.

For u = u(|x|) the minimal surface equation has the first integral

    r^{n-1} |u'| / sqrt(1 + u'^2) = c,

so |u'(r)| = c / sqrt(r^{2(n-1)} - c^2) and the height drop across the
ring [r_inner, r_outer] is a single quadrature in c. In support-function
language the level sets are spheres, h(theta, t) = r(t), and the
transformed equation reduces to r_tt = (n-1)(1 + r_t^2)/r.

The n-dimensional catenoid through the sphere of radius 2 is the member
with c = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, interpolate, optimize

from .errors import DivergentIntegral, NoGraphSolution

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-13
CATENOID_BASE = 2.0
TAIL_CUTOFF = 1e4


def _quad(f, a, b, **kw):
    val, _ = integrate.quad(f, a, b, epsabs=kw.pop("epsabs", QUAD_EPSABS),
                            epsrel=kw.pop("epsrel", QUAD_EPSREL),
                            limit=kw.pop("limit", 200), **kw)
    return val


def _flux_integral(c, a, b, m):
    """int_a^b c / sqrt(s^(2m) - c^2) ds with s = a + w^2 near the inner end.

    The substitution removes the inverse square-root singularity that
    appears at s = a when c = a^m.
    """
    if b <= a:
        return 0.0
    d0 = max(m * math.log(a) - math.log(c), 0.0)

    def integrand(w):
        s = a + w * w
        # s^m - c = c * expm1(m log(s/a) + log(a^m / c)), free of cancellation
        lead = c * math.expm1(d0 + m * math.log1p(w * w / a))
        gap = lead * (s**m + c)
        if gap <= 0.0:
            # w = 0 with c = a^m; the integrand tends to a finite limit
            return 2.0 * c / math.sqrt(2.0 * m * c * c / a)
        return 2.0 * w * c / math.sqrt(gap)

    return _quad(integrand, 0.0, math.sqrt(b - a))


# --------------------------------------------------------------------------
# configuration and flux solve
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialConfig:
    """Concentric ring r_inner < |x| < r_outer with u = 0 outside, u = height inside.

    ``height`` defaults to 1. Other drops are accepted directly because the
    minimal surface equation is not invariant under rescaling u alone.
    """

    dim_n: int
    r_outer: float
    r_inner: float
    height: float = 1.0

    def __post_init__(self):
        if int(self.dim_n) != self.dim_n or self.dim_n < 2:
            raise ValueError("dim_n must be an integer >= 2")
        if not (self.r_outer > self.r_inner > 0):
            raise ValueError("need r_outer > r_inner > 0")
        if not self.height > 0:
            raise ValueError("height must be positive")

    @property
    def m(self) -> int:
        return self.dim_n - 1

    @property
    def c_max(self) -> float:
        return self.r_inner ** self.m


def height_drop(c: float, config: RadialConfig) -> float:
    """u(r_inner) - u(r_outer) for flux constant c in (0, r_inner^(n-1)]."""
    if not 0 < c <= config.c_max * (1 + 1e-15):
        raise ValueError("flux constant outside (0, r_inner^(n-1)]")
    return _flux_integral(c, config.r_inner, config.r_outer, config.m)


def max_height_drop(config: RadialConfig) -> float:
    """Supremum of the height drop over admissible flux constants."""
    return height_drop(config.c_max, config)


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Solved rotationally symmetric minimal graph.

    The level set at height t is the sphere of radius ``r_of_t(t)``.
    """

    config: RadialConfig
    c: float
    residual: float = field(default=np.nan)

    @property
    def dim_n(self) -> int:
        return self.config.dim_n

    # profile ---------------------------------------------------------------
    def u(self, r) -> np.ndarray:
        """Height at radius r (0 on the outer sphere)."""
        cfg = self.config
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < cfg.r_inner * (1 - 1e-14)) or np.any(r > cfg.r_outer * (1 + 1e-14)):
            raise ValueError("radius outside the ring")
        out = np.array([
            cfg.height - _flux_integral(self.c, cfg.r_inner, float(ri), cfg.m)
            for ri in np.clip(r, cfg.r_inner, cfg.r_outer)])
        return out

    def du_dr(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return -self.c / np.sqrt(r ** (2 * self.config.m) - self.c**2)

    @cached_property
    def _inverse_seed(self):
        cfg = self.config
        r = np.geomspace(cfg.r_inner, cfg.r_outer, 2048)
        u = self.u(r)
        # u is decreasing in r; the interpolant needs increasing abscissae
        return interpolate.PchipInterpolator(u[::-1], r[::-1])

    def r_of_t(self, t) -> np.ndarray:
        """Inverse of u: monotone cubic seed, then Newton on the quadrature."""
        cfg = self.config
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < -1e-12) or np.any(t > cfg.height + 1e-12):
            raise ValueError("height outside [0, height]")
        r = np.clip(self._inverse_seed(t), cfg.r_inner, cfg.r_outer)
        for i, ti in enumerate(t):
            if ti <= 0:
                r[i] = cfg.r_outer
                continue
            if ti >= cfg.height:
                r[i] = cfg.r_inner
                continue
            ri = r[i]
            for _ in range(20):
                g = cfg.height - _flux_integral(self.c, cfg.r_inner, ri, cfg.m) - ti
                step = g / float(self.du_dr(ri))
                ri_new = min(max(ri - step, cfg.r_inner), cfg.r_outer)
                if abs(ri_new - ri) <= 1e-15 * ri:
                    ri = ri_new
                    break
                ri = ri_new
            r[i] = ri
        return r

    # level-set quantities --------------------------------------------------
    def grad_norm(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.c / np.sqrt(r ** (2 * self.config.m) - self.c**2)

    def r_t(self, r) -> np.ndarray:
        """dr/dt = h_t = -1/|grad u| (< 0)."""
        r = np.asarray(r, dtype=float)
        return -np.sqrt(r ** (2 * self.config.m) - self.c**2) / self.c

    def r_tt(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        m = self.config.m
        return m * r ** (2 * m - 1) / self.c**2

    def K(self, r) -> np.ndarray:
        return np.asarray(r, dtype=float) ** (-self.config.m)

    def sigma1(self, r) -> np.ndarray:
        return self.config.m / np.asarray(r, dtype=float)

    def phi(self, r) -> np.ndarray:
        """[(|Du|^2/(1+|Du|^2))^((n-3)/2) K]^(1/(n-1)) = c^((n-3)/(n-1)) r^(2-n)."""
        n = self.dim_n
        return self.c ** ((n - 3) / (n - 1)) * np.asarray(r, dtype=float) ** (2 - n)

    def phi_tt(self, r) -> np.ndarray:
        """Exact second t-derivative of phi along the solution."""
        n = self.dim_n
        r = np.asarray(r, dtype=float)
        return self.c ** ((n - 3) / (n - 1)) * (2 - n) * (n - 1) * r ** (-n)

    def first_integral(self, r) -> np.ndarray:
        """r^(n-1)|u'|/sqrt(1+u'^2); equals c on an exact solution."""
        r = np.asarray(r, dtype=float)
        du = self.du_dr(r)
        return r ** self.config.m * np.abs(du) / np.sqrt(1 + du**2)

    def support_grid(self, t) -> np.ndarray:
        """h(theta, t) = r(t) as a column (one value per level)."""
        return self.r_of_t(t)


def solve_flux(config: RadialConfig, xtol: float = 1e-14) -> RadialSolution:
    """Find the flux constant whose height drop equals ``config.height``.

    The drop is strictly increasing in c, so a bracketed root solve on
    (eps, r_inner^(n-1)] is unique.
    """
    c_max = config.c_max
    top = max_height_drop(config)
    if top < config.height:
        raise NoGraphSolution(
            f"height drop {config.height} is not attainable; the largest drop "
            f"over this ring is {top:.12g}", max_drop=top)
    if top == config.height:
        c = c_max
    else:
        eps = 1e-9 * c_max
        c = optimize.brentq(lambda x: height_drop(x, config) - config.height,
                            eps, c_max, xtol=xtol * c_max, rtol=4 * np.finfo(float).eps,
                            maxiter=500)
    res = height_drop(c, config) - config.height
    return RadialSolution(config, c, residual=res)


# --------------------------------------------------------------------------
# catenoid (c = 1, base radius 2)
# --------------------------------------------------------------------------

def _check_n(dim_n):
    if int(dim_n) != dim_n or dim_n < 2:
        raise ValueError("dim_n must be an integer >= 2")


def catenoid_u(r, dim_n: int) -> np.ndarray:
    """int_2^r ds / sqrt(s^(2(n-1)) - 1): height of the catenoid over |x| = r."""
    _check_n(dim_n)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < CATENOID_BASE):
        raise ValueError("catenoid height defined for r >= 2")
    if dim_n == 2:
        return np.arccosh(r) - np.arccosh(CATENOID_BASE)
    m = dim_n - 1
    f = lambda s: 1.0 / math.sqrt(s ** (2 * m) - 1.0)
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        out[i] = _quad(f, CATENOID_BASE, float(ri)) if ri > CATENOID_BASE else 0.0
    return out


def catenoid_invariants(r, dim_n: int):
    """Closed forms (|grad u|, K, phi) on the catenoid at radius r."""
    _check_n(dim_n)
    r = np.asarray(r, dtype=float)
    if np.any(r < CATENOID_BASE):
        raise ValueError("catenoid defined for r >= 2")
    m = dim_n - 1
    grad = 1.0 / np.sqrt(r ** (2 * m) - 1.0)
    K = r ** (1 - dim_n)
    phi = r ** (2 - dim_n)
    return grad, K, phi


def _tail_remainder(s, m):
    """1/sqrt(s^(2m) - 1) - s^(-m), written to avoid cancellation."""
    x = s ** (-2 * m)
    q = math.sqrt(1.0 - x)
    return s ** (-m) * x / (q * (1.0 + q))


def catenoid_tail(r, dim_n: int) -> np.ndarray:
    """R - u(r) = int_r^inf ds / sqrt(s^(2(n-1)) - 1), for n >= 3.

    The leading part int_r^inf s^(1-n) ds = r^(2-n)/(n-2) is analytic; the
    remainder decays like s^(3-3n) and is integrated numerically up to
    ``TAIL_CUTOFF`` plus a two-term asymptotic tail beyond it.
    """
    _check_n(dim_n)
    if dim_n == 2:
        raise DivergentIntegral("the catenoid height is unbounded for n = 2")
    m = dim_n - 1
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty_like(r)
    S = TAIL_CUTOFF
    # beyond S: remainder = s^-m (x/2 + 3x^2/8 + ...) with x = s^(-2m)
    far = S ** (1 - 3 * m) / (2 * (3 * m - 1)) + 3 * S ** (1 - 5 * m) / (8 * (5 * m - 1))
    for i, ri in enumerate(r):
        lead = ri ** (1 - m) / (m - 1)
        rem = _quad(lambda s: _tail_remainder(s, m), float(ri), S,
                    epsabs=0.0, epsrel=1e-13) + far if ri < S else 0.0
        out[i] = lead + rem
    return out


def catenoid_R(dim_n: int) -> float:
    """Total height R = int_2^inf ds / sqrt(s^(2(n-1)) - 1) of the catenoid end."""
    return float(catenoid_tail(CATENOID_BASE, dim_n)[0])


def asymptotic_leading_term(r, dim_n: int) -> np.ndarray:
    """The expansion's leading term (-1)^n r^(2-n) / (2-n), taken verbatim.

    For odd n this equals the true leading term r^(2-n)/(n-2); for even n
    it has the opposite sign (the expansion integrates s^(1-n) over
    negative s where |s|^(1-n) is meant).
    """
    r = np.asarray(r, dtype=float)
    return (-1.0) ** dim_n * r ** (2 - dim_n) / (2 - dim_n)


def asymptotic_residual(r, dim_n: int, convention: str = "verbatim") -> np.ndarray:
    """(R - u(r)) minus the leading asymptotic term.

    ``convention="verbatim"`` uses the signed factor (-1)^n/(2-n);
    ``convention="magnitude"`` uses 1/(n-2), the leading term of the
    positive integrand. Both agree for odd n.
    """
    if dim_n < 3:
        raise DivergentIntegral("asymptotics need n >= 3")
    tail = catenoid_tail(r, dim_n)
    if np.any(tail <= 0):
        raise ArithmeticError("R - u(r) must be positive")
    if convention == "verbatim":
        lead = asymptotic_leading_term(r, dim_n)
    elif convention == "magnitude":
        lead = np.asarray(r, dtype=float) ** (2 - dim_n) / (dim_n - 2)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return tail - lead


def verbatim_sign_consistent(dim_n: int) -> bool:
    """Whether the verbatim leading term has the sign of R - u (> 0)."""
    return bool(asymptotic_leading_term(10.0, dim_n) > 0)


def catenoid_config(dim_n: int, r_max: float) -> RadialConfig:
    """Ring [2, r_max] of the catenoid as a boundary-value problem.

    Heights are reversed relative to the catenoid's own u: the ring
    problem puts u = 0 on the outer sphere.
    """
    if not r_max > CATENOID_BASE:
        raise ValueError("r_max must exceed the catenoid base radius 2")
    drop = float(catenoid_u(r_max, dim_n)[0])
    return RadialConfig(dim_n, r_outer=float(r_max), r_inner=CATENOID_BASE, height=drop)


def catenoid_solution(dim_n: int, r_max: float) -> RadialSolution:
    """The catenoid band 2 <= r <= r_max as an exact RadialSolution (c = 1)."""
    return RadialSolution(catenoid_config(dim_n, r_max), 1.0, residual=0.0)
