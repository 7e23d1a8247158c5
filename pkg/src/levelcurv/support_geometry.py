"""Convex bodies through their support functions on the unit sphere.

A body is stored as samples of ``h(theta)`` on a grid of ``S^{n-1}``. All
tensors are expressed in the orthonormal frame ``(T_1, ..., T_{n-1})``
built from the coordinate directions, so the second fundamental form of
the boundary is ``b_ij = h delta_ij + h_ij`` with ``h_ij`` the covariant
Hessian of h on the round sphere.

Supported grids:

* n = 2: uniform periodic circle, derivatives spectral (or 4th-order
  central differences with ``method="fd4"``).
* n = 3: latitude/longitude grid with the poles offset by half a cell,
  2nd-order central differences and round-metric Christoffel symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import NonConvexSlice, OrientationError, UnsupportedDimension
from .numerics import periodic_fd_derivative, spectral_derivative

CONVEXITY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Nodes on S^{n-1} with unit normals Y and an orthonormal tangent frame.

    For n = 2, ``coords`` is a single array of angles. For n = 3 it is the
    pair ``(polar, azimuth)`` of 1-D arrays; nodes are laid out as
    ``(len(polar), len(azimuth))``.
    """

    dim_n: int
    resolution: int
    coords: tuple
    Y: np.ndarray = field(repr=False)
    frame: np.ndarray = field(repr=False)  # (..., n-1, n): rows T_i

    @property
    def shape(self) -> tuple:
        return self.Y.shape[:-1]

    @property
    def spacing(self) -> float:
        if self.dim_n == 2:
            return 2.0 * np.pi / self.resolution
        return np.pi / self.resolution

    @property
    def theta(self) -> np.ndarray:
        """Node parameters, shape ``grid.shape + (n-1,)``."""
        if self.dim_n == 2:
            return self.coords[0][:, None]
        pol, az = np.meshgrid(*self.coords, indexing="ij")
        return np.stack([pol, az], axis=-1)


def build_grid(dim_n: int, resolution: int) -> SphereGrid:
    """Uniform grid on S^1 (n=2) or latitude/longitude grid on S^2 (n=3).

    >>> build_grid(2, 8).shape
    (8,)
    >>> build_grid(3, 16).shape
    (16, 32)
    """
    if dim_n not in (2, 3):
        raise UnsupportedDimension(
            f"sphere grids are built for n in (2, 3), got n={dim_n}; "
            "rotationally symmetric problems go through levelcurv.radial")
    if resolution < 8:
        raise ValueError("resolution must be at least 8 nodes per direction")
    if dim_n == 2:
        th = 2.0 * np.pi * np.arange(resolution) / resolution
        Y = np.stack([np.cos(th), np.sin(th)], axis=-1)
        T = np.stack([-np.sin(th), np.cos(th)], axis=-1)[:, None, :]
        return SphereGrid(2, resolution, (th,), Y, T)
    pol = (np.arange(resolution) + 0.5) * np.pi / resolution
    az = 2.0 * np.pi * np.arange(2 * resolution) / (2 * resolution)
    P, A = np.meshgrid(pol, az, indexing="ij")
    sp, cp, sa, ca = np.sin(P), np.cos(P), np.sin(A), np.cos(A)
    Y = np.stack([sp * ca, sp * sa, cp], axis=-1)
    e_pol = np.stack([cp * ca, cp * sa, -sp], axis=-1)
    e_az = np.stack([-sa, ca, np.zeros_like(sa)], axis=-1)
    T = np.stack([e_pol, e_az], axis=-2)
    return SphereGrid(3, resolution, (pol, az), Y, T)


# --------------------------------------------------------------------------
# n = 3 coordinate derivatives
# --------------------------------------------------------------------------

def _pole_extend(f: np.ndarray) -> np.ndarray:
    """Append ghost rows across both poles: f(-p, a) = f(p, a + pi)."""
    half = f.shape[1] // 2
    top = np.roll(f[:1], -half, axis=1)
    bottom = np.roll(f[-1:], -half, axis=1)
    return np.concatenate([top, f, bottom], axis=0)


def _partials_s2(h: np.ndarray, dp: float, da: float) -> dict:
    """Second-order central partial derivatives in (polar, azimuth)."""
    e = _pole_extend(h)

    def d_az(f):
        return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * da)

    def d_pol(f):
        return (f[2:] - f[:-2]) / (2 * dp)

    e_a = d_az(e)
    return {
        "p": d_pol(e),
        "a": e_a[1:-1],
        "pp": (e[2:] - 2 * e[1:-1] + e[:-2]) / dp**2,
        "aa": (np.roll(e, -1, axis=1) - 2 * e + np.roll(e, 1, axis=1))[1:-1] / da**2,
        "pa": d_pol(e_a),
    }


# --------------------------------------------------------------------------
# support slices and curvature
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SupportSlice:
    """Support function samples of one convex body (one level t).

    ``method`` selects the n=2 differentiation scheme: ``"spectral"``
    (default) or ``"fd4"``.
    """

    grid: SphereGrid
    h: np.ndarray
    t: Optional[float] = None
    method: str = "spectral"

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.shape != self.grid.shape:
            raise ValueError(f"h has shape {h.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("support values must be finite")
        object.__setattr__(self, "h", h)

    @classmethod
    def from_function(cls, grid: SphereGrid, func: Callable, **kw) -> "SupportSlice":
        """Sample ``func(Y)`` (Y of shape (..., n)) on the grid."""
        return cls(grid, func(grid.Y), **kw)

    @property
    def contains_origin(self) -> bool:
        return bool(np.all(self.h > 0))

    @cached_property
    def derivatives(self):
        return covariant_derivatives(self)

    def translate(self, v) -> "SupportSlice":
        """Support function of the body translated by ``v``: h + <v, Y>."""
        return replace(self, h=self.h + self.grid.Y @ np.asarray(v, dtype=float))


def covariant_derivatives(slc: SupportSlice):
    """First and second covariant derivatives of h in the orthonormal frame.

    Returns ``(h_i, h_ij)`` with shapes ``grid.shape + (n-1,)`` and
    ``grid.shape + (n-1, n-1)``.
    """
    g = slc.grid
    if g.dim_n == 2:
        if slc.method == "spectral":
            d1 = spectral_derivative(slc.h, 1)
            d2 = spectral_derivative(slc.h, 2)
        elif slc.method == "fd4":
            d1 = periodic_fd_derivative(slc.h, 1, 4)
            d2 = periodic_fd_derivative(slc.h, 2, 4)
        else:
            raise ValueError(f"unknown derivative method {slc.method!r}")
        return d1[:, None], d2[:, None, None]
    pol = g.coords[0][:, None]
    s, c = np.sin(pol), np.cos(pol)
    P = _partials_s2(slc.h, g.coords[0][1] - g.coords[0][0],
                     g.coords[1][1] - g.coords[1][0])
    H_pp = P["pp"]
    H_pa = P["pa"] - (c / s) * P["a"]
    H_aa = P["aa"] + s * c * P["p"]
    hi = np.stack([P["p"], P["a"] / s], axis=-1)
    hij = np.empty(g.shape + (2, 2))
    hij[..., 0, 0] = H_pp
    hij[..., 0, 1] = hij[..., 1, 0] = H_pa / s
    hij[..., 1, 1] = H_aa / s**2
    return hi, hij


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Second fundamental form of a level hypersurface and derived curvatures.

    ``b`` is in length units, ``b_inv`` and ``kappa`` in 1/length, ``K`` in
    length^(1-n).
    """

    b: np.ndarray
    b_inv: Optional[np.ndarray] = None
    K: Optional[np.ndarray] = None
    sigma1: Optional[np.ndarray] = None
    kappa: Optional[np.ndarray] = None
    convex: bool = True
    convexity_margin: float = np.nan


def _sym_eigvalsh(m: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of stacked symmetric 1x1 or 2x2 matrices."""
    if m.shape[-1] == 1:
        return m[..., 0, :].copy()
    a, b, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]
    mid = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    return np.stack([mid - rad, mid + rad], axis=-1)


def _sym_inv(m: np.ndarray) -> np.ndarray:
    if m.shape[-1] == 1:
        return 1.0 / m
    a, b, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]
    det = a * d - b * b
    out = np.empty_like(m)
    out[..., 0, 0] = d / det
    out[..., 1, 1] = a / det
    out[..., 0, 1] = out[..., 1, 0] = -b / det
    return out


def check_convexity(b: np.ndarray, rtol: float = CONVEXITY_RTOL) -> float:
    """Return the smallest eigenvalue of b over all nodes, or raise.

    A slice is accepted when ``min eig > rtol * max eig``; borderline
    slices are rejected.
    """
    ev = _sym_eigvalsh(b)
    lo = float(ev[..., 0].min())
    hi = float(ev[..., -1].max())
    if not lo > rtol * max(hi, 0.0) or hi <= 0:
        flat = int(np.argmin(ev[..., 0]))
        node = tuple(int(i) for i in np.unravel_index(flat, ev.shape[:-1]))
        raise NonConvexSlice(
            f"b_ij not positive definite: min eigenvalue {lo:.3e} at node {node}",
            node=node, margin=lo)
    return lo


def second_fundamental_form(slc: SupportSlice) -> CurvatureField:
    """b_ij = h delta_ij + h_ij, with the convexity check applied."""
    _, hij = slc.derivatives
    m = slc.grid.dim_n - 1
    b = slc.h[..., None, None] * np.eye(m) + hij
    margin = check_convexity(b)
    return CurvatureField(b=b, convexity_margin=margin)


def curvatures(fld: CurvatureField) -> CurvatureField:
    """Complete a field: inverse, Gaussian and mean curvature, principal curvatures."""
    b = fld.b
    margin = check_convexity(b)
    b_inv = _sym_inv(b)
    if b.shape[-1] == 1:
        det = b[..., 0, 0]
    else:
        det = b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] ** 2
    K = 1.0 / det
    sigma1 = np.trace(b_inv, axis1=-2, axis2=-1)
    kappa = _sym_eigvalsh(b_inv)
    return replace(fld, b_inv=b_inv, K=K, sigma1=sigma1, kappa=kappa,
                   convex=True, convexity_margin=margin)


def curvature_field(slc: SupportSlice) -> CurvatureField:
    """Shorthand for ``curvatures(second_fundamental_form(slc))``."""
    return curvatures(second_fundamental_form(slc))


# --------------------------------------------------------------------------
# reconstruction of the level surface and of u
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfacePoint:
    x: np.ndarray
    theta: np.ndarray
    t: Optional[float]


def recover_points(slc: SupportSlice) -> np.ndarray:
    """x = h Y + sum_i h_i T_i at every node, shape ``grid.shape + (n,)``."""
    hi, _ = slc.derivatives
    g = slc.grid
    return slc.h[..., None] * g.Y + np.einsum("...i,...ia->...a", hi, g.frame)


def recover_point(slc: SupportSlice, node) -> SurfacePoint:
    """Boundary point whose outward normal is Y at ``node``."""
    node = tuple(np.atleast_1d(node))
    x = recover_points(slc)[node]
    return SurfacePoint(x=x, theta=slc.grid.theta[node], t=slc.t)


def _check_orientation(h_t):
    h_t = np.asarray(h_t, dtype=float)
    if np.any(~(h_t < 0)):
        bad = np.unravel_index(int(np.argmax(h_t)), h_t.shape) if h_t.ndim else ()
        raise OrientationError(
            f"h_t must be negative everywhere (max h_t = {np.max(h_t):.3e})",
            node=bad)
    return h_t


def reconstruct_gradient(h_t, Y) -> np.ndarray:
    """Du = Y / h_t, so |Du| = -1/h_t."""
    h_t = _check_orientation(h_t)
    return np.asarray(Y) / h_t[..., None]


def reconstruct_hessian(slc: SupportSlice, h_t, h_ti, h_tt) -> np.ndarray:
    """Hessian of u at x(theta, t) from support-function data.

    ``h_ti`` holds the frame components of the mixed derivative, shape
    ``grid.shape + (n-1,)``. Returns ``grid.shape + (n, n)``.
    """
    h_t = _check_orientation(h_t)
    h_ti = np.asarray(h_ti, dtype=float)
    h_tt = np.asarray(h_tt, dtype=float)
    fld = curvature_field(slc)
    Y, T = slc.grid.Y, slc.grid.frame
    ht = h_t[..., None, None]
    left = -h_ti[..., None] * Y[..., None, :] / ht**2 + T / ht
    right = T - h_ti[..., None] * Y[..., None, :] / ht
    H = np.einsum("...ia,...ij,...jb->...ab", left, fld.b_inv, right)
    H -= (h_tt / h_t**3)[..., None, None] * Y[..., :, None] * Y[..., None, :]
    return 0.5 * (H + np.swapaxes(H, -1, -2))


# --------------------------------------------------------------------------
# Codazzi property
# --------------------------------------------------------------------------

def codazzi_residual(slc: SupportSlice, polar_margin: float = np.pi / 6) -> float:
    """max |b_{ij,k} - b_{ik,j}| over nodes of a latitude band.

    The band excludes polar caps of angular radius ``polar_margin``: the
    coordinate singularity amplifies stencil error near the poles and
    would mask the order of convergence. For n = 2 the statement is
    vacuous and 0 is returned.
    """
    g = slc.grid
    if g.dim_n == 2:
        return 0.0
    pol = g.coords[0]
    dp = pol[1] - pol[0]
    da = g.coords[1][1] - g.coords[1][0]
    s = np.sin(pol)[:, None]
    c = np.cos(pol)[:, None]
    P = _partials_s2(slc.h, dp, da)
    h = slc.h
    # coordinate components of b = h g + Hess h
    bc = np.empty(g.shape + (2, 2))
    bc[..., 0, 0] = h + P["pp"]
    bc[..., 0, 1] = bc[..., 1, 0] = P["pa"] - (c / s) * P["a"]
    bc[..., 1, 1] = h * s**2 + P["aa"] + s * c * P["p"]
    second_fundamental_form(slc)  # convexity precondition

    # partials of b at rows 1..M-2
    db = np.empty((g.shape[0] - 2, g.shape[1], 2, 2, 2))  # [..., k, i, j]
    db[..., 0, :, :] = (bc[2:] - bc[:-2]) / (2 * dp)
    db[..., 1, :, :] = ((np.roll(bc, -1, axis=1) - np.roll(bc, 1, axis=1))
                        / (2 * da))[1:-1]
    s_i, c_i = s[1:-1], c[1:-1]
    Gam = np.zeros(db.shape[:2] + (2, 2, 2))  # [m, i, j]
    Gam[..., 0, 1, 1] = -s_i * c_i
    Gam[..., 1, 0, 1] = Gam[..., 1, 1, 0] = c_i / s_i
    b_in = bc[1:-1]
    cov = (db
           - np.einsum("...mki,...mj->...kij", Gam, b_in)
           - np.einsum("...mkj,...im->...kij", Gam, b_in))
    scale = np.ones(cov.shape[:2] + (2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                scale[..., k, i, j] = s_i ** ((k == 1) + (i == 1) + (j == 1))
    cov = cov / scale
    # b_{ij,k} - b_{ik,j}: cov[k, i, j] - cov[j, i, k]
    diff = cov - np.swapaxes(cov, -3, -1)
    rows = (pol[1:-1] >= polar_margin) & (pol[1:-1] <= np.pi - polar_margin)
    return float(np.abs(diff[rows]).max())


# --------------------------------------------------------------------------
# closed-form support functions
# --------------------------------------------------------------------------

def circle_support(theta, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return radius + center[0] * np.cos(theta) + center[1] * np.sin(theta)


def ellipse_support(theta, a: float, b: float, center=(0.0, 0.0),
                    angle: float = 0.0) -> np.ndarray:
    """Support function of an ellipse with semi-axes a, b rotated by ``angle``."""
    theta = np.asarray(theta, dtype=float)
    phi = theta - angle
    return (np.sqrt((a * np.cos(phi)) ** 2 + (b * np.sin(phi)) ** 2)
            + center[0] * np.cos(theta) + center[1] * np.sin(theta))


def ellipsoid_support(Y, axes) -> np.ndarray:
    """sqrt(sum a_k^2 Y_k^2) for an axis-aligned ellipsoid (any n)."""
    axes = np.asarray(axes, dtype=float)
    return np.sqrt(np.sum((np.asarray(Y) * axes) ** 2, axis=-1))
