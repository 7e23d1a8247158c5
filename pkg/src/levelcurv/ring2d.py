"""Support-function boundary-value problem for planar convex rings.

Unknown: h(theta, t) on S^1 x [0, H], the support function of the
super-level set {u >= t} of a minimal graph with u = 0 on the outer and
u = H on the inner boundary curve. In these coordinates the minimal
surface equation reads

    h_tt = (1 + h_t^2 + h_{t theta}^2) / (h + h_{theta theta}).

Discretization is spectral in theta and finite differences in t (6th
order by default; ``t_order`` = 2 or 4 select lower-order stencils). The
discrete system is solved by damped Newton with a block-banded direct
solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np
from scipy import interpolate, spatial

from .errors import ConvexityLoss, NoConvergence, OrientationLoss, PreconditionError
from .numerics import (fd_matrix, fourier_support, project_modes, fourier_resample, solve_block_sparse,
                       spectral_derivative, spectral_matrix, trig_coefficients,
                       trig_eval)
from .support_geometry import (SupportSlice, build_grid, circle_support, recover_points,
                               ellipse_support, second_fundamental_form)

log = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def _t_operators(n_t: int, height: float, order: int):
    dt = height / n_t
    return fd_matrix(n_t + 1, dt, 1, order), fd_matrix(n_t + 1, dt, 2, order)


@lru_cache(maxsize=16)
def _theta_operators(n_theta: int):
    return spectral_matrix(n_theta, 1), spectral_matrix(n_theta, 2)


# --------------------------------------------------------------------------
# problem definition
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RingProblem:
    """Two nested convex curves given by support functions on a common grid.

    ``outer`` sits at level t = 0 and ``inner`` at t = ``height``.
    """

    outer: SupportSlice
    inner: SupportSlice
    n_t: int
    height: float = 1.0
    t_order: int = 6

    def __post_init__(self):
        if self.outer.grid.dim_n != 2 or self.inner.grid.dim_n != 2:
            raise ValueError("ring problems are planar (n = 2)")
        if self.outer.h.shape != self.inner.h.shape:
            raise ValueError("boundary slices must share one theta grid")
        if self.t_order not in (2, 4, 6):
            raise ValueError("t_order must be 2, 4 or 6")
        if self.n_t < 8:
            raise ValueError("n_t must be at least 8")
        if not self.height > 0:
            raise ValueError("height must be positive")
        second_fundamental_form(self.outer)
        second_fundamental_form(self.inner)
        gap = self.outer.h - self.inner.h
        if not np.all(gap > 0):
            k = int(np.argmin(gap))
            raise PreconditionError(
                f"inner body not strictly inside the outer body "
                f"(h_outer - h_inner = {gap[k]:.3e} at node {k})")

    @property
    def n_theta(self) -> int:
        return self.outer.h.size

    @property
    def theta(self) -> np.ndarray:
        return self.outer.grid.coords[0]

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.height, self.n_t + 1)

    @property
    def operators(self):
        Dt, Dtt = _t_operators(self.n_t, float(self.height), self.t_order)
        Dth, Dthth = _theta_operators(self.n_theta)
        return Dt, Dtt, Dth, Dthth

    def minkowski_guess(self) -> np.ndarray:
        """(1-s) h_outer + s h_inner, a convex body at every level."""
        s = (self.t / self.height)[:, None]
        return (1 - s) * self.outer.h[None, :] + s * self.inner.h[None, :]

    def rotated(self, shift: int) -> "RingProblem":
        """Both boundaries rotated by ``shift`` grid cells."""
        return replace(self,
                       outer=replace(self.outer, h=np.roll(self.outer.h, shift)),
                       inner=replace(self.inner, h=np.roll(self.inner.h, shift)))

    def scaled(self, s: float) -> "RingProblem":
        """Boundaries and height scaled by s (the equation's symmetry)."""
        return replace(self,
                       outer=replace(self.outer, h=s * self.outer.h),
                       inner=replace(self.inner, h=s * self.inner.h),
                       height=s * self.height)


def make_problem(outer_h, inner_h, n_t: int, height: float = 1.0,
                 t_order: int = 6) -> RingProblem:
    """Problem from raw support samples on a uniform theta grid."""
    outer_h = np.asarray(outer_h, dtype=float)
    grid = build_grid(2, outer_h.size)
    return RingProblem(SupportSlice(grid, outer_h, t=0.0),
                       SupportSlice(grid, np.asarray(inner_h, dtype=float), t=height),
                       n_t, height, t_order)


def circles_problem(r_outer, r_inner, inner_center=(0.0, 0.0), n_theta=64,
                    n_t=64, outer_center=(0.0, 0.0), **kw) -> RingProblem:
    """Ring between two circles."""
    th = build_grid(2, n_theta).coords[0]
    return make_problem(circle_support(th, r_outer, outer_center),
                        circle_support(th, r_inner, inner_center), n_t, **kw)


def ellipses_problem(outer_axes, inner_axes, n_theta=64, n_t=64, **kw) -> RingProblem:
    th = build_grid(2, n_theta).coords[0]
    return make_problem(ellipse_support(th, *outer_axes),
                        ellipse_support(th, *inner_axes), n_t, **kw)


def resample_problem(problem: RingProblem, n_theta: int, n_t: int) -> RingProblem:
    """Same boundary curves on another grid (Fourier resampling in theta)."""
    return make_problem(fourier_resample(problem.outer.h, n_theta),
                        fourier_resample(problem.inner.h, n_theta),
                        n_t, problem.height, problem.t_order)


# --------------------------------------------------------------------------
# discrete operators
# --------------------------------------------------------------------------

def _fields(h, problem: RingProblem, modes=None) -> dict:
    Dt, Dtt, _, _ = problem.operators
    h_t = Dt @ h
    f = {
        "h_theta": spectral_derivative(h, 1, axis=1),
        "h_thth": spectral_derivative(h, 2, axis=1),
        "h_t": h_t,
        "h_tt": Dtt @ h,
        "h_tth": spectral_derivative(h_t, 1, axis=1),
    }
    if modes is not None:
        f = {k: project_modes(v, modes, axis=1) for k, v in f.items()}
    return f


def _interior_check(B, what="b_11 = h + h_theta_theta"):
    inner = B[1:-1]
    if not np.all(inner > 0):
        j, k = np.unravel_index(int(np.argmin(inner)), inner.shape)
        raise ConvexityLoss(f"{what} <= 0 at node (t index {j + 1}, theta index {k})",
                            node=(j + 1, k))


def discrete_residual(h, problem: RingProblem) -> np.ndarray:
    """h_tt - (1 + h_t^2 + h_{t theta}^2)/(h + h_theta_theta).

    Full-grid array; boundary rows are NaN.
    """
    h = np.asarray(h, dtype=float)
    f = _fields(h, problem)
    B = h + f["h_thth"]
    _interior_check(B)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = f["h_tt"] - (1 + f["h_t"] ** 2 + f["h_tth"] ** 2) / B
    F[0] = F[-1] = np.nan
    return F


def _jacobian_blocks(h, problem: RingProblem, f: dict) -> dict:
    Dt, Dtt, Dth, Dthth = problem.operators
    n_t, n = problem.n_t, problem.n_theta
    I = np.eye(n)
    B = h + f["h_thth"]
    N = 1 + f["h_t"] ** 2 + f["h_tth"] ** 2
    blocks = {}
    for j in range(1, n_t):
        a = 2 * f["h_t"][j] / B[j]
        c = 2 * f["h_tth"][j] / B[j]
        first = np.diag(a) + c[:, None] * Dth
        cols = np.flatnonzero((Dt[j] != 0) | (Dtt[j] != 0))
        for m in cols:
            if m == 0 or m == n_t:
                continue
            blk = Dtt[j, m] * I - Dt[j, m] * first
            if m == j:
                blk = blk + (N[j] / B[j] ** 2)[:, None] * (I + Dthth)
            blocks[(j - 1, m - 1)] = blk
    return blocks


# --------------------------------------------------------------------------
# solution containers
# --------------------------------------------------------------------------

@dataclass
class SolverReport:
    iterations: int = 0
    residual_norm: float = np.inf
    damping: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    convexity_margin: float = np.nan
    orientation_margin: float = np.nan
    physical_residual: float = np.nan
    converged: bool = False
    tol: float = np.nan

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "tol": self.tol,
            "converged": self.converged,
            "damping": list(self.damping),
            "residual_history": list(self.residual_history),
            "convexity_margin": self.convexity_margin,
            "orientation_margin": self.orientation_margin,
            "physical_residual": self.physical_residual,
        }


@dataclass(frozen=True, eq=False)
class GridSolution:
    """Support function h[j, k] = h(theta_k, t_j) of a solved ring."""

    problem: RingProblem
    h: np.ndarray
    modes: np.ndarray | None = None   # theta modes retained by band_limited()

    def project(self, G) -> np.ndarray:
        """Restrict a grid field to the retained theta modes (if any)."""
        G = np.asarray(G, dtype=float)
        return G if self.modes is None else project_modes(G, self.modes, axis=1)

    @property
    def theta(self) -> np.ndarray:
        return self.problem.theta

    @property
    def t(self) -> np.ndarray:
        return self.problem.t

    @cached_property
    def _f(self) -> dict:
        return _fields(self.h, self.problem, self.modes)

    @property
    def h_theta(self):
        return self._f["h_theta"]

    @property
    def h_thth(self):
        return self._f["h_thth"]

    @property
    def h_t(self):
        return self._f["h_t"]

    @property
    def h_tt(self):
        return self._f["h_tt"]

    @property
    def h_tth(self):
        return self._f["h_tth"]

    @property
    def b11(self) -> np.ndarray:
        return self.h + self.h_thth

    @property
    def K(self) -> np.ndarray:
        """Curvature of the level curves (1/b_11)."""
        return 1.0 / self.b11

    @property
    def convexity_margin(self) -> float:
        return float(self.b11.min())

    @property
    def orientation_margin(self) -> float:
        """max h_t over all nodes; must be negative."""
        return float(self.h_t.max())

    def residual(self) -> np.ndarray:
        return discrete_residual(self.h, self.problem)

    def band_limited(self, rtol: float = 1e-13) -> "GridSolution":
        """Copy restricted to the theta modes that carry signal.

        Modes whose amplitude stays below ``rtol`` times the largest one in
        every row hold only roundoff; derived fields are projected onto the
        same modes, which keeps high-order derivative checks at the
        discretization error instead of the amplified roundoff floor.
        """
        keep = fourier_support(self.h, rtol)
        return GridSolution(self.problem, project_modes(self.h, keep, axis=1), keep)

    def level(self, j: int) -> SupportSlice:
        return SupportSlice(self.problem.outer.grid, self.h[j], t=float(self.t[j]))


# --------------------------------------------------------------------------
# Newton solve
# --------------------------------------------------------------------------

def _margins_ok(h, problem) -> bool:
    f = _fields(h, problem)
    B = h + f["h_thth"]
    return bool(np.all(B[1:-1] > 0) and np.all(f["h_t"][1:-1] < 0))


def solve(problem: RingProblem, tol: float = 1e-10, max_iter: int = 40,
          initial=None, min_step: float = 2.0 ** -30):
    """Damped Newton for the discrete support-function equation.

    Returns ``(GridSolution, SolverReport)``. The step is halved until the
    max-norm residual decreases and the iterate keeps b_11 > 0 and h_t < 0
    at interior nodes.
    """
    h = problem.minkowski_guess() if initial is None else np.array(initial, dtype=float)
    h[0] = problem.outer.h
    h[-1] = problem.inner.h
    report = SolverReport(tol=tol)
    if not _margins_ok(h, problem):
        raise ConvexityLoss("initial guess violates the convexity/orientation margins")
    F = discrete_residual(h, problem)
    norm = float(np.nanmax(np.abs(F)))
    report.residual_history.append(norm)
    n_t = problem.n_t
    while norm > tol:
        if report.iterations >= max_iter:
            report.residual_norm = norm
            raise NoConvergence(
                f"no convergence after {max_iter} Newton steps (residual {norm:.3e})",
                report=report)
        f = _fields(h, problem)
        blocks = _jacobian_blocks(h, problem, f)
        rhs = [-F[j] for j in range(1, n_t)]
        delta = np.array(solve_block_sparse(blocks, rhs))
        lam = 1.0
        while True:
            trial = h.copy()
            trial[1:-1] += lam * delta
            ok = _margins_ok(trial, problem)
            if ok:
                F_new = discrete_residual(trial, problem)
                norm_new = float(np.nanmax(np.abs(F_new)))
                if norm_new < norm:
                    break
            lam *= 0.5
            if lam < min_step:
                report.residual_norm = norm
                if not ok:
                    raise ConvexityLoss(
                        "line search could not keep the iterate strictly convex "
                        "and correctly oriented")
                raise NoConvergence(
                    f"line search stalled at residual {norm:.3e}", report=report)
        h, F, norm = trial, F_new, norm_new
        report.iterations += 1
        report.damping.append(lam)
        report.residual_history.append(norm)
        log.debug("newton %d: residual %.3e (step %.3g)", report.iterations, norm, lam)
    sol = GridSolution(problem, h)
    report.residual_norm = norm
    report.converged = True
    report.convexity_margin = sol.convexity_margin
    report.orientation_margin = sol.orientation_margin
    if report.orientation_margin >= 0:
        raise OrientationLoss("converged solution has h_t >= 0 somewhere")
    if report.convexity_margin <= 0:
        raise ConvexityLoss("converged solution lost strict convexity")
    return sol, report


# --------------------------------------------------------------------------
# linearized operator
# --------------------------------------------------------------------------

def apply_L(solution: GridSolution, G) -> np.ndarray:
    """Elliptic operator of the linearized equation applied to a grid field.

    L G = (1 + h_t^2 + h_{t theta}^2) (b^11)^2 G_thth
          - 2 h_{t theta} b^11 G_{t theta} + G_tt

    using the solver's stencils. Boundary rows are NaN.
    """
    G = np.asarray(G, dtype=float)
    if G.shape != solution.h.shape:
        raise ValueError("G must live on the solution grid")
    Dt, Dtt, _, _ = solution.problem.operators
    G_t = Dt @ G
    G_tth = spectral_derivative(G_t, 1, axis=1)
    G_thth = spectral_derivative(G, 2, axis=1)
    binv = 1.0 / solution.b11
    LG = ((1 + solution.h_t**2 + solution.h_tth**2) * binv**2 * G_thth
          - 2 * solution.h_tth * binv * G_tth + Dtt @ G)
    LG[0] = LG[-1] = np.nan
    return LG


# --------------------------------------------------------------------------
# physical-space reconstruction and residual
# --------------------------------------------------------------------------

class LevelMap:
    """Inverse of x(theta, t) = h Y + h_theta T for a solved ring.

    ``h`` is interpolated by a quintic spline in t and its Fourier series
    in theta; points are located by Newton iteration from the nearest
    grid node.
    """

    def __init__(self, solution: GridSolution):
        self.solution = solution
        t = solution.t
        self.height = solution.problem.height
        self._spl = interpolate.make_interp_spline(t, solution.h, k=5, axis=0)
        self._dspl = self._spl.derivative()
        th = solution.theta
        Y = np.stack([np.cos(th), np.sin(th)], -1)
        T = np.stack([-np.sin(th), np.cos(th)], -1)
        nodes = (solution.h[..., None] * Y + solution.h_theta[..., None] * T)
        self._nodes_theta = np.broadcast_to(th, solution.h.shape).ravel()
        self._nodes_t = np.broadcast_to(t[:, None], solution.h.shape).ravel()
        self._tree = spatial.cKDTree(nodes.reshape(-1, 2))

    def _eval(self, theta, t):
        C = trig_coefficients(self._spl(t))
        Ct = trig_coefficients(self._dspl(t))
        h = trig_eval(C, theta)
        h1 = trig_eval(C, theta, 1)
        h11 = trig_eval(C, theta, 2)
        ht = trig_eval(Ct, theta)
        ht1 = trig_eval(Ct, theta, 1)
        return h, h1, h11, ht, ht1

    def locate(self, points, max_iter: int = 30, atol: float = 1e-12):
        """Return ``(theta, t, converged)`` for an array of points (P, 2)."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        _, idx = self._tree.query(p)
        theta = self._nodes_theta[idx].copy()
        t = self._nodes_t[idx].copy()
        done = np.zeros(len(p), dtype=bool)
        for _ in range(max_iter):
            h, h1, h11, ht, ht1 = self._eval(theta, t)
            Y = np.stack([np.cos(theta), np.sin(theta)], -1)
            T = np.stack([-np.sin(theta), np.cos(theta)], -1)
            x = h[:, None] * Y + h1[:, None] * T
            r = p - x
            err = np.hypot(r[:, 0], r[:, 1])
            done = err <= atol * (1 + np.hypot(p[:, 0], p[:, 1]))
            if done.all():
                break
            rY = np.einsum("pa,pa->p", r, Y)
            rT = np.einsum("pa,pa->p", r, T)
            with np.errstate(divide="ignore", invalid="ignore"):
                dt = rY / ht
                dth = (rT - ht1 * dt) / (h + h11)
            dt = np.clip(np.nan_to_num(dt), -0.25 * self.height, 0.25 * self.height)
            dth = np.clip(np.nan_to_num(dth), -0.5, 0.5)
            t = np.where(done, t, t + dt)
            theta = np.where(done, theta, theta + dth)
        return theta % (2 * np.pi), t, done

    def u(self, points) -> np.ndarray:
        """Height u at each point; NaN outside the closed ring or on failure."""
        _, t, ok = self.locate(points)
        tol = 1e-12 * self.height
        inside = ok & (t >= -tol) & (t <= self.height + tol)
        return np.where(inside, np.clip(t, 0, self.height), np.nan)


def _support_gap(points, h_row, n_fine: int = 2048) -> np.ndarray:
    """max_theta (<x, Y> - h(theta)): negative inside the body."""
    hf = fourier_resample(h_row, n_fine)
    th = 2 * np.pi * np.arange(n_fine) / n_fine
    Y = np.stack([np.cos(th), np.sin(th)], -1)
    return (points @ Y.T - hf).max(axis=1)


@dataclass(frozen=True)
class PhysicalResidual:
    max_residual: float
    n_points: int
    spacing: float
    boundary_mismatch: float

    @property
    def boundary_ok(self) -> bool:
        return self.boundary_mismatch <= 1e-8


def minimal_surface_operator(u: np.ndarray, dx: float) -> np.ndarray:
    """div(grad u / sqrt(1+|grad u|^2)) by 2nd-order central differences.

    Expanded form (1+u_y^2)u_xx - 2 u_x u_y u_xy + (1+u_x^2)u_yy over
    (1+|grad u|^2)^(3/2); values at the outermost rows/columns are NaN.
    """
    out = np.full_like(u, np.nan)
    c = u[1:-1, 1:-1]
    ux = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * dx)
    uy = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * dx)
    uxx = (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / dx**2
    uyy = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / dx**2
    uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * dx**2)
    num = (1 + uy**2) * uxx - 2 * ux * uy * uxy + (1 + ux**2) * uyy
    out[1:-1, 1:-1] = num / (1 + ux**2 + uy**2) ** 1.5
    return out


def field_residual(u_func, problem: RingProblem, n_cart: int,
                   margin_frac: float = 0.1) -> PhysicalResidual:
    """Check a candidate u(x) against the minimal surface equation.

    ``u_func`` maps points (P, 2) to heights. The residual is the max over
    Cartesian nodes at least ``margin_frac`` of the narrowest ring width
    away from both boundaries; the boundary mismatch compares u with the
    prescribed heights at the boundary curves.
    """
    R = float(problem.outer.h.max())
    xs = np.linspace(-R, R, n_cart + 1)
    dx = xs[1] - xs[0]
    X, Yg = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([X.ravel(), Yg.ravel()], -1)
    g_out = _support_gap(pts, problem.outer.h)
    g_in = _support_gap(pts, problem.inner.h)
    width = float((problem.outer.h - problem.inner.h).min())
    margin = margin_frac * width
    ring = (g_out <= 0) & (g_in >= 0)
    u = np.full(len(pts), np.nan)
    u[ring] = u_func(pts[ring])
    u = u.reshape(X.shape)
    res = minimal_surface_operator(u, dx)
    well = ((g_out <= -margin) & (g_in >= margin)).reshape(X.shape) & np.isfinite(res)
    max_res = float(np.abs(res[well]).max()) if well.any() else np.nan
    # boundary heights
    xo = recover_points(problem.outer)
    xi = recover_points(problem.inner)
    uo = u_func(xo)
    ui = u_func(xi)
    mismatch = float(max(np.nanmax(np.abs(uo - 0.0)),
                         np.nanmax(np.abs(ui - problem.height))))
    if np.any(np.isnan(uo)) or np.any(np.isnan(ui)):
        mismatch = np.inf
    return PhysicalResidual(max_res, int(well.sum()), float(dx), mismatch)


def physical_residual(solution: GridSolution, n_cart: int | None = None,
                      margin_frac: float = 0.1) -> PhysicalResidual:
    """Residual of the minimal surface equation for u rebuilt from h."""
    lm = LevelMap(solution)
    n_cart = solution.problem.n_theta if n_cart is None else n_cart
    return field_residual(lm.u, solution.problem, n_cart, margin_frac)
