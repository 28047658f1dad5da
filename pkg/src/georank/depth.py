"""Depth contours {|R(x)| = beta}, probability content of regions through the
surface-integral identity, and probability-content re-indexing of the rank.

The contour of order beta is the image of the quantile map over directions at
fixed order, equivalently the level set of |R|.  For a measure with a density
the rank Jacobian is positive definite, so contours are smooth manifolds and
|R(t u)| is strictly increasing along rays, which the per-ray root finder
exploits.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import specfun as sf
from ._quadrature import sphere_rule
from .errors import ParityError
from .measures import RadialClosedForm, sample
from .rankfield import RankEvaluator

_RAY_CAP = 1e9


@dataclass
class DepthContour:
    """Level set {|R| = beta}: a single radius for radial measures, or a fan
    of rays with per-ray radii otherwise."""

    beta: float
    kind: str                       # "radial" | "rayfan"
    r_beta: float = None
    directions: np.ndarray = None   # (n, d)
    radii: np.ndarray = None        # (n,)
    achieved: np.ndarray = None     # |R| at the emitted points
    skipped: list = dc_field(default_factory=list)

    def points(self) -> np.ndarray:
        if self.kind == "radial":
            raise ValueError("radial contour is a sphere; sample directions "
                             "yourself or request a rayfan")
        return self.directions * self.radii[:, None]

    def save_csv(self, path):
        """One row per ray: direction components, radius, achieved |R|."""
        if self.kind == "radial":
            raise ValueError("rayfan contours only")
        d = self.directions.shape[1]
        names = [f"u{i+1}" for i in range(d)] + ["radius", "rank_norm"]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(names) + "\n")
            for u, r, a in zip(self.directions, self.radii, self.achieved):
                row = list(u) + [r, a]
                fh.write(",".join("%.17g" % v for v in row) + "\n")

    def summary(self) -> dict:
        out = {"beta": self.beta, "kind": self.kind,
               "skipped_rays": list(self.skipped)}
        if self.kind == "radial":
            out["r_beta"] = self.r_beta
        else:
            out["n_rays"] = int(len(self.radii))
        return out


def load_contour_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    d = data.shape[1] - 2
    return {"directions": data[:, :d], "radii": data[:, d],
            "rank_norm": data[:, d + 1]}


def _ray_directions(d: int, n: int) -> np.ndarray:
    if d == 2:
        th = 2.0 * np.pi * np.arange(n) / n
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if d == 3:
        # Fibonacci lattice: near-uniform spread without a seed
        k = np.arange(n) + 0.5
        phi = np.pi * (1.0 + np.sqrt(5.0)) * k
        z = 1.0 - 2.0 * k / n
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    rng = np.random.Generator(np.random.PCG64(0))
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def contour(ev: RankEvaluator, beta: float, n_rays: int = 64,
            tol: float = 1e-10) -> DepthContour:
    """Depth contour at level beta.

    Radial measures invert g(r) = beta directly.  Otherwise each ray solves
    |R(t u)| = beta by bracket expansion and Brent's method, with a coarse
    scan fallback when the first expansion step overshoots a non-monotone
    stretch.  Rays whose bracket never closes are reported as skipped.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if beta == 0.0:
        if ev.mode == "radial":
            return DepthContour(beta, "radial", r_beta=0.0)
        dirs = _ray_directions(ev.d, n_rays)
        zero = np.zeros(n_rays)
        return DepthContour(beta, "rayfan", directions=dirs, radii=zero,
                            achieved=zero.copy())
    if ev.mode == "radial":
        prof = ev.profile
        hi = 1.0
        while prof.g(hi) < beta:
            hi *= 2.0
        r = brentq(lambda t: prof.g(t) - beta, 0.0, hi, xtol=1e-14)
        return DepthContour(beta, "radial", r_beta=float(r))

    atoms = ev.atoms()[0] if ev.mode in ("exact", "mc") else None
    dirs = _ray_directions(ev.d, n_rays)
    radii = np.full(n_rays, np.nan)
    achieved = np.full(n_rays, np.nan)
    skipped = []
    for i, u in enumerate(dirs):
        u_use = u
        if atoms is not None:
            # keep rays clear of atoms (the rank is discontinuous there)
            t_proj = atoms @ u
            perp = atoms - np.outer(t_proj, u)
            dist = np.linalg.norm(perp, axis=1)
            if np.any((dist < 1e-9) & (t_proj > 0)):
                tweak = np.zeros(ev.d)
                tweak[(i + 1) % ev.d] = 1e-6
                u_use = (u + tweak)
                u_use = u_use / np.linalg.norm(u_use)
        fun = lambda t: np.linalg.norm(ev.rank(t * u_use)) - beta
        lo, hi = 0.0, 1.0
        f_hi = fun(hi)
        while f_hi < 0.0 and hi < _RAY_CAP:
            lo, hi = hi, 2.0 * hi
            f_hi = fun(hi)
        if f_hi < 0.0:
            skipped.append(i)
            continue
        if fun(lo) > 0.0:
            # overshot a non-monotone stretch; scan for the first crossing
            grid = np.linspace(0.0, hi, 256)
            vals = np.array([fun(t) for t in grid])
            idx = np.nonzero(vals > 0.0)[0]
            if len(idx) == 0 or idx[0] == 0:
                skipped.append(i)
                continue
            lo, hi = grid[idx[0] - 1], grid[idx[0]]
        t_star = brentq(fun, lo, hi, xtol=min(tol, 1e-12))
        radii[i] = t_star
        achieved[i] = np.linalg.norm(ev.rank(t_star * u_use))
        dirs[i] = u_use
    ok = ~np.isnan(radii)
    return DepthContour(beta, "rayfan", directions=dirs[ok], radii=radii[ok],
                        achieved=achieved[ok], skipped=skipped)


# ---------------------------------------------------------------------------
# Probability content through the surface integral
# ---------------------------------------------------------------------------

def probability_content_surface(ev: RankEvaluator, radius: float,
                                path: str = "analytic",
                                fd_step: float = 0.05,
                                n_polar: int = 48, n_azimuth: int = 96
                                ) -> float:
    """P[B_R] as the flux integral gamma_d * int_{|x|=R} ((-Delta)^{(d-1)/2}
    R(x), x/R) dS.  Odd d only (the integrand needs integer Laplacians).

    d=1 reduces to (R(R) - R(-R))/2.  For d=3 the analytic path uses the
    radial identity (-Delta)(g(r) xhat) = -h'(r) xhat; the grid path applies
    a centered second-difference Laplacian to the sampled rank at sphere
    quadrature nodes.
    """
    d = ev.d
    if d % 2 == 0:
        raise ParityError("surface-integral content requires odd d "
                          "(fractional surface integrand otherwise)")
    R = float(radius)
    if d == 1:
        lo = ev.rank(np.array([-R]))[0]
        hi = ev.rank(np.array([R]))[0]
        return float(0.5 * (hi - lo))
    if d != 3:
        raise ValueError("implemented for d in {1, 3}")
    gd = sf.gamma_d(3)
    if path == "analytic":
        if ev.mode != "radial":
            raise ValueError("analytic path requires a radial closed form")
        return float(gd * 4.0 * np.pi * R * R * (-ev.profile.h_prime(R)))
    if path != "grid":
        raise ValueError("path must be 'analytic' or 'grid'")
    omega, w_ang = sphere_rule(3, n_polar, n_azimuth)
    nodes = R * omega
    lap = -2.0 * d * ev.rank_many(nodes)
    for axis in range(d):
        e = np.zeros(d)
        e[axis] = fd_step
        lap += ev.rank_many(nodes + e) + ev.rank_many(nodes - e)
    neg_lap = -lap / fd_step ** 2                     # (-Delta) R per node
    flux = np.einsum("nk,nk->n", neg_lap, omega)
    return float(gd * R * R * np.dot(flux, w_ang))


def radial_content_oracle(m: RadialClosedForm, radius: float) -> float:
    """P[B_R] by direct radial quadrature of the density (independent of the
    rank field); used as the reference for the surface-integral identity."""
    from .measures import radial_profile
    prof = radial_profile(m)
    S = 2.0 * np.pi ** (m.d / 2.0) / sf.gamma_fn(m.d / 2.0)
    val, _ = quad(lambda r: S * r ** (m.d - 1) * prof.f(r), 0.0, radius,
                  limit=200)
    return float(val)


# ---------------------------------------------------------------------------
# Probability-content re-indexing
# ---------------------------------------------------------------------------

def rank_norm_cdf(ev: RankEvaluator, mc_budget: int = 100_000,
                  seed: int = 0):
    """Estimated cdf of |R(Z)|, Z ~ P, as a callable on [0, 1) (the
    re-indexing map).  Monte-Carlo; dimension generic."""
    z = sample(ev.measure, mc_budget, seed)
    norms = np.sort(np.linalg.norm(ev.rank_many(z), axis=1))
    n = len(norms)

    def theta(beta):
        return np.searchsorted(norms, np.asarray(beta), side="right") / n

    return theta


def theta_radial_exact(ev: RankEvaluator, beta: float) -> float:
    """Exact re-indexing value for radial closed forms: the probability
    content of the ball whose radius solves g(r) = beta."""
    if ev.mode != "radial":
        raise ValueError("exact theta requires a radial closed form")
    if beta <= 0.0:
        return 0.0
    prof = ev.profile
    hi = 1.0
    while prof.g(hi) < beta:
        hi *= 2.0
    r = brentq(lambda t: prof.g(t) - beta, 0.0, hi, xtol=1e-14)
    return radial_content_oracle(ev.measure, r)


def theta_reindex(ev: RankEvaluator, beta: float, mc_budget: int = 100_000,
                  seed: int = 0) -> float:
    """theta(beta) = P[|R(Z)| <= beta], the probability content of the depth
    region of order beta, by Monte Carlo."""
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if beta == 0.0:
        return 0.0
    theta = rank_norm_cdf(ev, mc_budget, seed)
    return float(theta(beta))


def reindexed_rank(ev: RankEvaluator, x, theta=None,
                   mc_budget: int = 100_000, seed: int = 0) -> np.ndarray:
    """Rank re-indexed by probability content:
    theta(|R(x)|) * R(x)/|R(x)|, with value 0 at the median."""
    if theta is None:
        theta = rank_norm_cdf(ev, mc_budget, seed)
    r = ev.rank(np.asarray(x, dtype=float))
    nrm = float(np.linalg.norm(r))
    if nrm == 0.0:
        return np.zeros(ev.d)
    return float(theta(nrm)) * r / nrm
