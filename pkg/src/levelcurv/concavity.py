"""Curvature functionals of level sets and numerical checks of their concavity.

The central quantity is

    phi_level = [ (1 + h_t^2)^{-(n-3)/2} K ]^{1/(n-1)},

the per-point value whose minimum over a level set defines f(t). It is
the exponential e^{beta phi_aux} of the auxiliary field
phi_aux = (n-3)/2 log(1 + h_t^2) - log K with beta = -1/(n-1).

Grid inputs come from :mod:`levelcurv.ring2d` (n = 2, rows indexed by t,
columns by theta); rotationally symmetric inputs come from
:mod:`levelcurv.radial` and are 1-D in t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoCriticalPoint, PreconditionError
from .numerics import (fd_matrix, periodic_critical_points, periodic_extremum,
                       second_difference, spectral_derivative, trig_coefficients,
                       trig_eval)
from .ring2d import GridSolution, apply_L

CRIT_RTOL = 1e-6
IDENTITY_RTOL = 1e-12


# --------------------------------------------------------------------------
# phi fields
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhiField:
    phi_level: np.ndarray
    phi_aux: np.ndarray
    beta: float
    dim_n: int

    def __post_init__(self):
        if not np.all(self.phi_level > 0):
            raise PreconditionError("phi_level must be positive")

    def exp_aux(self, beta: float | None = None) -> np.ndarray:
        """e^{beta phi_aux}; equals phi_level for the default beta."""
        b = self.beta if beta is None else beta
        return np.exp(b * self.phi_aux)

    def identity_defect(self) -> float:
        """max |e^{beta phi_aux} / phi_level - 1|."""
        return float(np.max(np.abs(self.exp_aux() / self.phi_level - 1.0)))


def phi_field(h_t, K, dim_n: int) -> PhiField:
    """Build both representations of the curvature functional node-wise."""
    h_t = np.asarray(h_t, dtype=float)
    K = np.asarray(K, dtype=float)
    if dim_n < 2:
        raise ValueError("dim_n must be at least 2")
    if not np.all(K > 0):
        raise PreconditionError("K must be positive (strictly convex level sets)")
    if not np.all(h_t < 0):
        raise PreconditionError("h_t must be negative (non-vanishing gradient)")
    a = (dim_n - 3) / 2.0
    p = dim_n - 1
    level = ((1.0 + h_t**2) ** (-a) * K) ** (1.0 / p)
    aux = a * np.log1p(h_t**2) - np.log(K)
    return PhiField(level, aux, -1.0 / p, dim_n)


def phi_from_grid(solution: GridSolution) -> PhiField:
    return phi_field(solution.h_t, solution.K, 2)


def phi_from_radial(radial, t) -> PhiField:
    """PhiField of h(theta, t) = r(t) sampled on ``t`` (rotational symmetry)."""
    r = radial.r_of_t(t)
    return phi_field(radial.r_t(r), radial.K(r), radial.dim_n)


# --------------------------------------------------------------------------
# the height profile f(t) and its second differences
# --------------------------------------------------------------------------

def generalized_second_derivative(f, spacing: float) -> np.ndarray:
    """Centered second difference quotients of f at the interior samples."""
    f = np.asarray(f, dtype=float)
    if f.size < 3:
        raise ValueError("need at least 3 samples")
    return second_difference(f, spacing)


@dataclass(frozen=True, eq=False)
class HeightProfile:
    t: np.ndarray
    f: np.ndarray
    argmin: np.ndarray      # theta of the minimizer (NaN for symmetric data)
    d2f: np.ndarray         # interior t only
    tol: float

    @property
    def spacing(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def concave(self) -> bool:
        return bool(np.max(self.d2f) <= self.tol)

    @property
    def max_d2f(self) -> float:
        return float(np.max(self.d2f))

    def argmin_jump(self, n_theta: int) -> float:
        """Largest change of the minimizer between adjacent rows, in cells."""
        a = self.argmin[~np.isnan(self.argmin)]
        if a.size < 2:
            return 0.0
        d = np.abs(np.diff(a))
        d = np.minimum(d, 2 * np.pi - d)
        return float(d.max() / (2 * np.pi / n_theta))


def row_minima(values) -> tuple:
    """Refined minimum and minimizer of every row of a (t, theta) array."""
    values = np.atleast_2d(values)
    out = np.array([periodic_extremum(row, "min") for row in values])
    return out[:, 0], out[:, 1]


def f_profile(phi: PhiField, t, tol: float = 0.0, beta: float | None = None
              ) -> HeightProfile:
    """f(t) = min over the level set of phi_level (or of e^{beta phi_aux}).

    Grid fields are minimized per t row with sub-grid refinement; 1-D
    (rotationally symmetric) fields are their own minimum.
    """
    t = np.asarray(t, dtype=float)
    vals = phi.phi_level if beta is None else phi.exp_aux(beta)
    if vals.ndim == 1:
        f, where = vals.copy(), np.full(vals.shape, np.nan)
    else:
        f, where = row_minima(vals)
    d2f = generalized_second_derivative(f, t[1] - t[0])
    return HeightProfile(t, f, where, d2f, tol)


def calibrate_eps(d2f_fine, d2f_coarse) -> float:
    """Tolerance from a resolution-doubling pair of second-difference arrays.

    The coarse grid has half the t-cells; its interior nodes coincide with
    the odd-indexed interior nodes of the fine grid.
    """
    fine = np.asarray(d2f_fine)[1::2]
    coarse = np.asarray(d2f_coarse)
    if fine.size != coarse.size:
        raise ValueError("grids are not a doubling pair")
    return float(4.0 * np.max(np.abs(fine - coarse)) + 1e-9)


@dataclass(frozen=True)
class InequalityReport:
    t: np.ndarray
    margin: np.ndarray
    case: str

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))


def corollary_margin(profile: HeightProfile, dim_n: int) -> InequalityReport:
    """f(t) minus the chord through the boundary values f(t_0), f(t_end)."""
    t = profile.t
    s = (t - t[0]) / (t[-1] - t[0])
    chord = (1 - s) * profile.f[0] + s * profile.f[-1]
    return InequalityReport(t, profile.f - chord, "n=3" if dim_n == 3 else "n!=3")


# --------------------------------------------------------------------------
# maximum principle for subsolutions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexityVerdict:
    passed: bool
    worst_d2: float
    worst_t: float
    max_profile: np.ndarray
    L_min: float


def _critical_mask(field, rtol=CRIT_RTOL):
    d = spectral_derivative(field, 1, axis=1)
    scale = np.max(np.abs(field))
    return np.abs(d) <= rtol * max(scale, 1e-300)


def max_convexity_check(solution: GridSolution, G, first_order=None,
                        eps: float = 1e-8, eps_grid: float = 1e-6,
                        mod_gradient: bool = False) -> ConvexityVerdict:
    """Convexity in t of max over theta of a subsolution G of L.

    ``first_order`` optionally adds a(theta, t) * G_theta to L G. With
    ``mod_gradient`` the precondition L G >= -eps is only required where
    G_theta vanishes, which is the setting of G = -e^{beta phi_aux}.
    """
    G = np.asarray(G, dtype=float)
    LG = apply_L(solution, G)
    if first_order is not None:
        LG = LG + np.asarray(first_order) * spectral_derivative(G, 1, axis=1)
    inner = LG[1:-1]
    if mod_gradient:
        mask = _critical_mask(G[1:-1])
        inner = inner[mask] if mask.any() else inner[:0]
    L_min = float(inner.min()) if inner.size else np.inf
    if L_min < -eps:
        raise PreconditionError(f"G is not a subsolution: min L(G) = {L_min:.3e}")
    M = np.array([periodic_extremum(row, "max")[0] for row in G])
    d2 = generalized_second_derivative(M, solution.t[1] - solution.t[0])
    k = int(np.argmin(d2))
    return ConvexityVerdict(bool(d2[k] >= -eps_grid), float(d2[k]),
                            float(solution.t[k + 1]), M, L_min)


# --------------------------------------------------------------------------
# checks at theta-critical points
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalValues:
    """Values of a field sampled at theta-critical points of another field."""
    t: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    rows_without_critical: tuple

    @property
    def worst(self) -> float:
        return float(np.max(self.values)) if self.values.size else np.nan

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else np.nan


def sample_at_critical(field, target, t, rtol: float = CRIT_RTOL,
                       strict: bool = False) -> CriticalValues:
    """Interpolate ``target`` at the theta-critical points of ``field``.

    Only interior t rows are scanned. Rows without a critical point are
    recorded (or raise :class:`NoCriticalPoint` when ``strict``).
    """
    ts, ths, vals, missing = [], [], [], []
    for j in range(1, field.shape[0] - 1):
        row = field[j]
        tol = rtol * max(np.max(np.abs(row)), 1e-300)
        crit = periodic_critical_points(row, tol)
        if crit.size == 0:
            if strict:
                raise NoCriticalPoint(f"no theta-critical point at t = {t[j]:.6g}")
            missing.append(j)
            continue
        C = trig_coefficients(target[j])
        ts.extend([t[j]] * crit.size)
        ths.extend(crit)
        vals.extend(trig_eval(C, crit))
    return CriticalValues(np.array(ts), np.array(ths), np.array(vals), tuple(missing))


def remark_identity_fields(solution: GridSolution):
    """(L(phi), sum-of-squares right side) on the grid, phi = log b_11.

    At theta-critical points of phi the two agree:
    L(phi) = [b^11 b_11,t - h_t b^11]^2 + (b^11)^2 h_t1^2 + (b^11)^2.
    """
    b11 = solution.b11
    binv = 1.0 / b11
    phi = np.log(b11)
    lhs = apply_L(solution, phi)
    b11_t = solution.h_t + spectral_derivative(solution.h_tth, 1, axis=1)
    rhs = (binv * b11_t - solution.h_t * binv) ** 2 \
        + binv**2 * solution.h_tth**2 + binv**2
    return phi, lhs, rhs


def remark_identity_residual(solution: GridSolution, strict: bool = False
                             ) -> CriticalValues:
    """|L(phi) - right side| at the theta-critical points of phi = -log K."""
    phi, lhs, rhs = remark_identity_fields(solution)
    diff = np.abs(lhs - rhs)
    diff[0] = diff[-1] = 0.0
    return sample_at_critical(phi, diff, solution.t, strict=strict)


def remark_roundoff_floor(solution: GridSolution, samples: int = 3, seed: int = 0) -> float:
    """Change of L(phi) minus the right side when h moves by one ulp.

    h is perturbed by independent relative noise of size machine epsilon,
    without mode projection, and the largest pointwise change over interior
    nodes is returned. A residual below this level cannot be resolved from
    the stored solution.
    """
    rng = np.random.default_rng(seed)
    _, lhs, rhs = remark_identity_fields(solution)
    base = (lhs - rhs)[1:-1]
    eps = np.finfo(float).eps
    worst = 0.0
    for _ in range(samples):
        h = solution.h * (1.0 + eps * rng.standard_normal(solution.h.shape))
        _, l2, r2 = remark_identity_fields(GridSolution(solution.problem, h))
        worst = max(worst, float(np.max(np.abs((l2 - r2)[1:-1] - base))))
    return worst


@dataclass(frozen=True)
class InequalityCheck:
    worst: float
    worst_t: float
    n_points: int
    rows_without_critical: tuple = ()


def differential_inequality_check(solution: GridSolution, beta: float = -1.0,
                                  strict: bool = False) -> InequalityCheck:
    """max of L(e^{beta phi_aux}) over theta-critical points of phi_aux (n = 2)."""
    phi = phi_from_grid(solution)
    G = phi.exp_aux(beta)
    LG = apply_L(solution, G)
    LG[0] = LG[-1] = 0.0
    cv = sample_at_critical(phi.phi_aux, LG, solution.t, strict=strict)
    k = int(np.argmax(cv.values))
    return InequalityCheck(float(cv.values[k]), float(cv.t[k]), int(cv.values.size),
                           cv.rows_without_critical)


def radial_inequality_values(radial, n_t: int = 128, beta: float | None = None,
                             order: int = 4):
    """L(e^{beta phi_aux}) on a rotationally symmetric solution.

    Every theta is critical and L reduces to d^2/dt^2, applied with a
    finite-difference stencil of the given order on ``n_t + 1`` samples of
    [0, height]. Returns (t, values) including the boundary rows.
    """
    H = radial.config.height
    t = np.linspace(0.0, H, n_t + 1)
    phi = phi_from_radial(radial, t)
    G = phi.exp_aux(beta)
    return t, fd_matrix(n_t + 1, H / n_t, 2, order) @ G


def wrong_sign_grid(solution: GridSolution) -> float:
    """max over interior nodes of L(e^{+phi_aux}) (control for beta = -1)."""
    phi = phi_from_grid(solution)
    return float(np.nanmax(apply_L(solution, phi.exp_aux(+1.0))))


# --------------------------------------------------------------------------
# elementary quadratic bound
# --------------------------------------------------------------------------

def _check_quadratic_args(lam, b):
    b = np.asarray(b, dtype=float)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if b.size == 0 or np.any(b <= 0):
        raise ValueError("all b_k must be positive")
    return b


def quadratic_Q(X, lam, mu, b, c) -> np.ndarray:
    """Q(X) = -sum b_k X_k^2 - lam (sum X_k)^2 + 4 mu sum c_k X_k (rows of X)."""
    X = np.asarray(X, dtype=float)
    return (-(X**2) @ b - lam * X.sum(-1) ** 2 + 4 * mu * (X @ c))


def quadratic_bound(lam: float, mu: float, b, c) -> tuple:
    """Return (Gamma, 4 mu^2 Gamma), an upper bound for Q."""
    b = _check_quadratic_args(lam, b)
    c = np.asarray(c, dtype=float)
    inv = 1.0 / b
    gamma = np.sum(c * c * inv) - lam / (1.0 + lam * inv.sum()) * np.sum(c * inv) ** 2
    return float(gamma), float(4 * mu * mu * gamma)


LATTICE_POINTS = {1: 41, 2: 9, 3: 7, 4: 5, 5: 4, 6: 3}


def maximize_Q_bruteforce(lam, mu, b, c, sweeps: int = 200,
                          points: int | None = None) -> tuple:
    """Lattice search followed by exact coordinate ascent.

    The lattice spans the box where Q can be positive; the best lattice
    point seeds cyclic one-variable maximization, each step of which is
    exact. Returns (max Q found, argmax).
    """
    b = _check_quadratic_args(lam, b)
    c = np.asarray(c, dtype=float)
    d = b.size
    m = points or LATTICE_POINTS.get(d, 3)
    # Q(X) > 0 forces b_k X_k^2 < 4|mu| |c| |X| componentwise
    radius = 4 * abs(mu) * np.linalg.norm(c) / b.min() + 1e-12
    axis = np.linspace(-radius, radius, m)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1).reshape(-1, d)
    vals = quadratic_Q(grid, lam, mu, b, c)
    x = grid[int(np.argmax(vals))].copy()
    best = quadratic_Q(x, lam, mu, b, c)
    for _ in range(sweeps):
        for k in range(d):
            rest = x.sum() - x[k]
            x[k] = (2 * mu * c[k] - lam * rest) / (b[k] + lam)
        q = quadratic_Q(x, lam, mu, b, c)
        if q - best <= 1e-16 * max(1.0, abs(q)):
            best = max(best, q)
            break
        best = q
    return float(max(best, vals.max())), x
