"""Internal quadrature helpers: Gauss-Legendre segments, sphere product rules,
and oscillatory integrals against the Bessel function J0.

Everything here is deterministic; rules are cached by their defining integers.
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import j0 as _j0, jn_zeros as _jn_zeros

from .errors import DecayError


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = leggauss(n)
    return x, w


def gl_nodes(a: float, b: float, n: int):
    """Gauss-Legendre nodes/weights on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def gl_segments(edges, n: int):
    """Concatenated Gauss-Legendre rule over consecutive segments."""
    edges = np.asarray(edges, dtype=float)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gl_nodes(a, b, n)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def geometric_edges(a: float, b: float, factor: float = 2.0):
    """Segment edges a, a*factor, ..., capped at b."""
    edges = [a]
    while edges[-1] < b:
        edges.append(min(edges[-1] * factor, b))
    return np.array(edges)


def circle_rule(n: int):
    """Uniform midpoint rule on the unit circle; exact for trigonometric
    polynomials of degree < n and spectrally accurate for smooth integrands.

    Returns (points (n,2), weights (n,)) with weights summing to 2*pi.
    """
    th = (np.arange(n) + 0.5) * (2.0 * np.pi / n)
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    w = np.full(n, 2.0 * np.pi / n)
    return pts, w


@lru_cache(maxsize=16)
def sphere_rule(d: int, n_polar: int = 48, n_azimuth: int = 96):
    """Product quadrature on the unit sphere S^{d-1}.

    Gauss-Legendre in each polar angle (weight sin^{d-2-j}), uniform in
    azimuth.  Weights sum to the sphere surface area.  d >= 2.
    """
    if d < 2:
        raise ValueError("sphere_rule requires d >= 2")
    if d == 2:
        return circle_rule(n_azimuth)
    # polar angles theta_1..theta_{d-2} in [0, pi], azimuth in [0, 2pi)
    az_pts, az_w = circle_rule(n_azimuth)          # (m, 2)
    pts = az_pts
    w = az_w
    for j in range(d - 2):                          # innermost angle first
        power = j + 1                               # sin^power weight
        t, tw = gl_nodes(0.0, np.pi, n_polar)
        st, ct = np.sin(t), np.cos(t)
        # prepend coordinate: x = (cos t, sin t * previous)
        n_old = pts.shape[0]
        new_pts = np.empty((n_polar * n_old, pts.shape[1] + 1))
        new_w = np.empty(n_polar * n_old)
        for i in range(n_polar):
            sl = slice(i * n_old, (i + 1) * n_old)
            new_pts[sl, 0] = ct[i]
            new_pts[sl, 1:] = st[i] * pts
            new_w[sl] = tw[i] * (st[i] ** power) * w
        pts, w = new_pts, new_w
    return pts, w


# ---------------------------------------------------------------------------
# Oscillatory integrals  B(f, rho) = int_0^inf f(s) J0(s * rho) ds
# ---------------------------------------------------------------------------
#
# The integration axis is cut at the zeros of J0(s*rho); each cell gets a
# Gauss-Legendre rule in the phase variable z = s*rho, so the node set is
# shared by every rho.  The alternating cell sums are accelerated by iterated
# averaging of the partial sums (Euler-style), which handles the conditionally
# convergent tails that appear when f(s) ~ const/s.

@lru_cache(maxsize=8)
def _j0_cells(n_cells: int, n_gl: int):
    zeros = np.concatenate([[0.0], _jn_zeros(0, n_cells)])
    gx, gw = _leggauss(n_gl)
    half = 0.5 * (zeros[1:] - zeros[:-1])
    mid = 0.5 * (zeros[1:] + zeros[:-1])
    zn = half[:, None] * gx[None, :] + mid[:, None]       # (cells, n_gl)
    zw = half[:, None] * np.broadcast_to(gw, (n_cells, n_gl))
    return zn, zw, _j0(zn)


def _averaged_limit(psums: np.ndarray, depth: int):
    """Iterated averaging of the trailing `depth` partial sums (last axis)."""
    tail = psums[..., -(depth + 1):].copy()
    while tail.shape[-1] > 1:
        tail = 0.5 * (tail[..., 1:] + tail[..., :-1])
    return tail[..., 0]


def bessel_j0_integral(f, rho, n_cells: int = 80, n_gl: int = 16,
                       avg_depth: int = 40, check_decay: bool = True):
    """Evaluate B(f, rho) = int_0^inf f(s) J0(s rho) ds for rho > 0.

    `f` must accept numpy arrays elementwise.  `rho` may be a scalar or a
    1-D array; the result has the shape of `rho`.  Raises DecayError when the
    trailing cell sums fail to settle (integrand grows instead of decaying).
    """
    rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho_arr <= 0):
        raise ValueError("bessel_j0_integral requires rho > 0")
    zn, zw, j0z = _j0_cells(n_cells, n_gl)
    s = zn[None, :, :] / rho_arr[:, None, None]
    vals = f(s) * j0z[None, :, :] * zw[None, :, :]
    terms = vals.sum(axis=2) / rho_arr[:, None]           # (n_rho, cells)
    psums = np.cumsum(terms, axis=1)
    depth = min(avg_depth, n_cells - 2)
    out = _averaged_limit(psums, depth)
    if check_decay:
        # classical convergence needs the cell magnitudes to decay; growing
        # tails mean the averaging would only Abel-regularize a divergent
        # integral, which is not what callers are asking for
        mid = n_cells // 2
        tail_mean = np.abs(terms[:, -8:]).mean(axis=1)
        mid_mean = np.abs(terms[:, mid - 4:mid + 4]).mean(axis=1)
        scale = np.abs(terms).max(axis=1)
        bad = (tail_mean > 1.2 * mid_mean) & (tail_mean > 1e-10 * scale)
        if np.any(bad):
            raise DecayError(
                "oscillation-cell magnitudes grow along the tail; the "
                "integrand decays too slowly for the J0 quadrature")
    return out if np.ndim(rho) else float(out[0])


def decaying_integral(f, t_max: float, n_seg: int = 16, n_gl: int = 32):
    """int_0^t_max f(t) dt for a smooth decaying f, by segmented GL."""
    edges = np.linspace(0.0, t_max, n_seg + 1)
    x, w = gl_segments(edges, n_gl)
    return float(np.sum(w * f(x)))
