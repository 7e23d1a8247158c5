"""Discretization primitives shared by the geometry, solver and analysis modules.

Periodic directions are handled spectrally (FFT on a uniform grid of
[0, 2*pi)); the height direction uses finite-difference matrices whose
weights come from Fornberg's recursion, so that interior and one-sided
boundary stencils share one construction.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg, optimize


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------

def fd_weights(z: float, x, m: int) -> np.ndarray:
    """Weights of the m-th derivative at ``z`` from values at nodes ``x``.

    Fornberg, "Generation of finite difference formulas on arbitrarily
    spaced grids", Math. Comp. 51 (1988).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if m >= n:
        raise ValueError("need more nodes than the derivative order")
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def fd_matrix(n_nodes: int, spacing: float, deriv: int, order: int) -> np.ndarray:
    """Dense differentiation matrix on a uniform, non-periodic grid.

    Interior rows use centered stencils of formal accuracy ``order``;
    rows too close to an end use one-sided windows of ``deriv + order``
    nodes, which keeps the same formal accuracy.
    """
    if order % 2:
        raise ValueError("order must be even")
    half = (deriv + order - 1) // 2
    width_b = deriv + order
    if n_nodes < width_b:
        raise ValueError(f"need at least {width_b} nodes for this stencil")
    D = np.zeros((n_nodes, n_nodes))
    for j in range(n_nodes):
        if j - half >= 0 and j + half <= n_nodes - 1:
            idx = np.arange(j - half, j + half + 1)
        elif j - half < 0:
            idx = np.arange(0, width_b)
        else:
            idx = np.arange(n_nodes - width_b, n_nodes)
        D[j, idx] = fd_weights(float(j), idx.astype(float), deriv)
    return D / spacing**deriv


def second_difference(values, spacing: float) -> np.ndarray:
    """Centered second difference quotient at interior samples."""
    v = np.asarray(values, dtype=float)
    return (v[2:] - 2.0 * v[1:-1] + v[:-2]) / spacing**2


# --------------------------------------------------------------------------
# periodic (spectral) differentiation and interpolation
# --------------------------------------------------------------------------

def _wavenumbers(n: int) -> np.ndarray:
    return np.arange(n // 2 + 1, dtype=float)


def spectral_derivative(f, order: int = 1, axis: int = -1) -> np.ndarray:
    """Derivative of periodic samples on a uniform grid of [0, 2*pi)."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    k = _wavenumbers(n)
    mult = (1j * k) ** order
    if n % 2 == 0 and order % 2 == 1:
        mult[-1] = 0.0
    shape = [1] * f.ndim
    shape[axis] = k.size
    F = np.fft.rfft(f, axis=axis) * mult.reshape(shape)
    return np.fft.irfft(F, n=n, axis=axis)


def spectral_matrix(n: int, order: int) -> np.ndarray:
    """Matrix form of :func:`spectral_derivative` (acts on column vectors)."""
    return spectral_derivative(np.eye(n), order=order, axis=0)


def periodic_fd_derivative(f, order: int = 1, accuracy: int = 4, axis: int = -1):
    """Centered finite-difference derivative with periodic wraparound."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    h = 2.0 * np.pi / n
    half = (order + accuracy - 1) // 2
    offsets = np.arange(-half, half + 1)
    w = fd_weights(0.0, offsets.astype(float), order)
    out = np.zeros_like(f)
    for o, wi in zip(offsets, w):
        out += wi * np.roll(f, -o, axis=axis)
    return out / h**order


def trig_coefficients(samples) -> np.ndarray:
    """rfft coefficients, scaled so that :func:`trig_eval` reproduces samples."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[-1]
    C = np.fft.rfft(samples, axis=-1) / n
    C[..., 1:] *= 2.0
    if n % 2 == 0:
        C[..., -1] /= 2.0
    return C


def trig_eval(coeffs, theta, deriv: int = 0) -> np.ndarray:
    """Evaluate the trigonometric interpolant (or a derivative) at ``theta``.

    ``coeffs`` has shape (..., n//2 + 1) and broadcasts against ``theta``
    with the trailing axis added.
    """
    coeffs = np.asarray(coeffs)
    theta = np.asarray(theta, dtype=float)
    k = np.arange(coeffs.shape[-1], dtype=float)
    phase = np.exp(1j * theta[..., None] * k)
    terms = coeffs * phase * (1j * k) ** deriv
    return np.real(terms.sum(axis=-1))


def periodic_extremum(row, kind: str = "min", newton_steps: int = 8):
    """Extremum of a periodic sample row, refined on its Fourier interpolant.

    The discrete extremum (smallest index on ties) seeds a 3-point
    parabolic estimate, which Newton iteration on the interpolant then
    polishes. Returns ``(value, theta)``.
    """
    row = np.asarray(row, dtype=float)
    sign = 1.0 if kind == "min" else -1.0
    n = row.size
    dth = 2.0 * np.pi / n
    k = int(np.argmin(sign * row))
    fm, f0, fp = row[(k - 1) % n], row[k], row[(k + 1) % n]
    denom = fm - 2.0 * f0 + fp
    shift = 0.5 * (fm - fp) / denom if sign * denom > 0 else 0.0
    shift = float(np.clip(shift, -0.5, 0.5))
    theta0 = (k + shift) * dth
    C = trig_coefficients(row)
    theta = theta0
    for _ in range(newton_steps):
        d1 = trig_eval(C, theta, 1)
        d2 = trig_eval(C, theta, 2)
        if sign * d2 <= 0:
            break
        step = d1 / d2
        theta_new = theta - step
        if abs(theta_new - k * dth) > 1.5 * dth:
            break
        theta = theta_new
        if abs(step) < 1e-15:
            break
    value = float(trig_eval(C, theta))
    # the refined value can only improve on the grid value
    if sign * value > sign * f0:
        return float(f0), k * dth
    return value, float(theta % (2.0 * np.pi))


def periodic_critical_points(row, tol: float) -> np.ndarray:
    """Zeros of the derivative of a periodic sample row.

    Collects grid nodes where the spectral derivative is within ``tol`` of
    zero and roots of the interpolated derivative inside every cell where
    it changes sign. Returns sorted angles in [0, 2*pi).
    """
    row = np.asarray(row, dtype=float)
    n = row.size
    dth = 2.0 * np.pi / n
    C = trig_coefficients(row)
    d = spectral_derivative(row, 1)
    found = [k * dth for k in np.flatnonzero(np.abs(d) <= tol)]
    for k in range(n):
        a, b = d[k], d[(k + 1) % n]
        if abs(a) <= tol or abs(b) <= tol:
            continue
        if a * b < 0:
            lo, hi = k * dth, (k + 1) * dth
            root = optimize.brentq(lambda th: trig_eval(C, th, 1), lo, hi,
                                   xtol=1e-14)
            found.append(root % (2.0 * np.pi))
    return np.array(sorted(found))


def fourier_resample(samples, n_new: int) -> np.ndarray:
    """Resample a periodic row to ``n_new`` uniform nodes via its interpolant."""
    theta = 2.0 * np.pi * np.arange(n_new) / n_new
    return trig_eval(trig_coefficients(samples), theta)


# --------------------------------------------------------------------------
# block-sparse direct solve
# --------------------------------------------------------------------------

def solve_block_sparse(blocks: dict, rhs: list) -> list:
    """Solve a block system by block Gaussian elimination.

    ``blocks`` maps ``(i, j)`` to dense square blocks; absent keys are zero
    blocks. Pivoting happens only inside diagonal blocks, which is adequate
    for the elliptic Jacobians assembled by the ring solver. Fill-in stays
    inside the block band, so cost is linear in the number of block rows.
    """
    nb = len(rhs)
    A = {key: np.array(val, dtype=float, copy=True) for key, val in blocks.items()}
    b = [np.array(r, dtype=float, copy=True) for r in rhs]
    rows_below: dict[int, set] = {}
    cols_right: dict[int, set] = {}
    for (i, j) in A:
        if i > j:
            rows_below.setdefault(j, set()).add(i)
        elif j > i:
            cols_right.setdefault(i, set()).add(j)
    factors = []
    for k in range(nb):
        lu = linalg.lu_factor(A[(k, k)], check_finite=False)
        factors.append(lu)
        right = sorted(cols_right.get(k, ()))
        for i in sorted(rows_below.get(k, ())):
            # L = A_ik A_kk^{-1}
            L = linalg.lu_solve(lu, A.pop((i, k)).T, trans=1, check_finite=False).T
            for j in right:
                upd = L @ A[(k, j)]
                if (i, j) in A:
                    A[(i, j)] -= upd
                else:
                    A[(i, j)] = -upd
                    if i > j:
                        rows_below.setdefault(j, set()).add(i)
                    elif j > i:
                        cols_right.setdefault(i, set()).add(j)
            b[i] -= L @ b[k]
    x = [None] * nb
    for k in range(nb - 1, -1, -1):
        acc = b[k].copy()
        for j in cols_right.get(k, ()):
            acc -= A[(k, j)] @ x[j]
        x[k] = linalg.lu_solve(factors[k], acc, check_finite=False)
    return x



def fourier_support(f, rtol: float = 1e-13, axis: int = -1) -> np.ndarray:
    """Mask of the rfft modes whose amplitude exceeds ``rtol`` times the
    largest amplitude in at least one row."""
    F = np.fft.rfft(np.asarray(f, dtype=float), axis=axis)
    amp = np.abs(np.moveaxis(F, axis, -1)).reshape(-1, F.shape[axis]).max(axis=0)
    return amp > rtol * amp.max()


def project_modes(f, keep, axis: int = -1) -> np.ndarray:
    """Keep only the rfft modes flagged in ``keep``."""
    f = np.asarray(f, dtype=float)
    F = np.fft.rfft(f, axis=axis)
    shape = [1] * f.ndim
    shape[axis] = len(keep)
    return np.fft.irfft(F * np.asarray(keep).reshape(shape), n=f.shape[axis], axis=axis)


def band_limit(f, rtol: float = 1e-13, axis: int = -1) -> np.ndarray:
    """Remove the Fourier modes that carry nothing but roundoff.

    Roundoff left by a converged solve is spread evenly over all modes, and
    fourth theta-derivatives amplify it by k^4. Smooth fields carry no
    signal in those modes, so removing them changes the data only at the
    roundoff level.
    """
    return project_modes(f, fourier_support(f, rtol, axis), axis)
