"""Probability-measure model: empirical atom sets, the closed-form radial
reference families (standard normal and standard Cauchy in dimensions 2 and
3), and generic densities with samplers.

Radial profiles
---------------
For a spherically symmetric measure the rank field is radial,
``R(x) = g(|x|) x/|x|``, with divergence profile
``h(r) = g'(r) + (d-1) g(r)/r``.  The four reference families admit closed
forms (Phi/phi are the standard normal cdf/pdf, I0/I1 modified Bessel):

* normal, d=3:   g = 2 phi(r)/r + (1 - 1/r^2) erf(r/sqrt2),
                 h = 2 erf(r/sqrt2)/r
* cauchy, d=3:   g = 2((1+r^2) arctan r - r) / (pi r^2),
                 h = 4 arctan(r) / (pi r)
* normal, d=2:   g = (1/2) sqrt(pi/2) r e^{-q}(I0(q)+I1(q)),  q = r^2/4,
                 h = sqrt(pi/2) e^{-q} I0(q)
* cauchy, d=2:   g = r / (1 + sqrt(1+r^2)),
                 h = 1 / sqrt(1+r^2)

The d=3 forms have removable singularities at r=0 and severe cancellation for
small r; both are evaluated by Taylor expansions below r = 1e-3 (exact
rational coefficients, through the 4th-order correction).  The d=2 forms are
written in algebraically stable shapes and need no series.

Density convention for the trivariate Cauchy family: the probability density
is (1/pi^2) (1+r^2)^{-2}.  The unsquared variant (1/pi^2)(1+r^2)^{-1}
sometimes quoted alongside the same h(r) is not integrable on R^3 and is
rejected here; applying the odd-dimension reconstruction operator to
h = 4 arctan(r)/(pi r) independently confirms the squared form.  The built-in
self test prints both values as a reminder.
"""

import csv
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import specfun as sf
from .errors import (DimensionMismatchError, DomainError, ParseError,
                     UnsupportedVariantError)

_FAMILIES = ("gaussian", "cauchy")


# ---------------------------------------------------------------------------
# Measure variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Empirical:
    """Finite atom set with positive weights summing to one."""

    atoms: np.ndarray            # (n, d)
    weights: np.ndarray = None   # (n,), uniform when omitted

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        object.__setattr__(self, "atoms", atoms)
        n = atoms.shape[0]
        if self.weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (n,):
                raise DimensionMismatchError(
                    f"{n} atoms but {w.shape} weights")
            if np.any(w <= 0):
                raise DomainError("weights must be positive")
            s = w.sum()
            if abs(s - 1.0) > 1e-9:
                raise DomainError(
                    f"weights sum to {s!r}, more than 1e-9 away from 1")
            w = w / s
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class RadialClosedForm:
    """One of the closed-form radial reference families."""

    family: str                  # "gaussian" | "cauchy"
    d: int                       # 2 or 3

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; "
                              f"expected one of {_FAMILIES}")
        if self.d not in (2, 3):
            raise DomainError(
                "closed-form radial families are available for d in {2, 3}")


@dataclass(frozen=True)
class GenericDensity:
    """Arbitrary density with a sampler.

    ``density(x)`` maps an (m, d) array to (m,) nonnegative values;
    ``sampler(n, rng)`` draws (n, d) variates from a numpy Generator.
    """

    d: int
    density: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[int, np.random.Generator], np.ndarray]


Measure = Union[Empirical, RadialClosedForm, GenericDensity]


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Scalar profiles of a radial measure: rank magnitude g, divergence h,
    their derivatives, and the target density f.  All callables accept
    scalars or arrays of radii r >= 0."""

    d: int
    family: str
    g: Callable = field(repr=False, default=None)
    g_prime: Callable = field(repr=False, default=None)
    h: Callable = field(repr=False, default=None)
    h_prime: Callable = field(repr=False, default=None)
    h_second: Callable = field(repr=False, default=None)
    f: Callable = field(repr=False, default=None)
    g_over_r: Callable = field(repr=False, default=None)   # g(r)/r, finite at 0


_R_SMALL = 1e-3


def _piecewise(r, small_fn, large_fn):
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty_like(r_arr)
    m = r_arr < _R_SMALL
    if np.any(m):
        out[m] = small_fn(r_arr[m])
    if np.any(~m):
        out[~m] = large_fn(r_arr[~m])
    return out.reshape(np.shape(r)) if np.ndim(r) else float(out[0])


def _profile_gaussian_d3() -> RadialProfile:
    c = np.sqrt(2.0 / np.pi)
    phi, erf = sf.std_normal_pdf, sf.erf
    sq2 = np.sqrt(2.0)

    def g(r):
        return _piecewise(
            r,
            lambda t: c * (2 * t / 3 - t**3 / 15 + t**5 / 140),
            lambda t: 2 * phi(t) / t + (1 - 1 / t**2) * erf(t / sq2))

    def g_over_r(r):
        return _piecewise(
            r,
            lambda t: c * (2.0 / 3 - t**2 / 15 + t**4 / 140),
            lambda t: 2 * phi(t) / t**2 + (1 / t - 1 / t**3) * erf(t / sq2))

    def g_prime(r):
        return _piecewise(
            r,
            lambda t: c * (2.0 / 3 - t**2 / 5 + t**4 / 28),
            lambda t: 2 * (erf(t / sq2) - 2 * t * phi(t)) / t**3)

    def h(r):
        return _piecewise(
            r,
            lambda t: c * (2 - t**2 / 3 + t**4 / 20),
            lambda t: 2 * erf(t / sq2) / t)

    def h_prime(r):
        return _piecewise(
            r,
            lambda t: c * (-2 * t / 3 + t**3 / 5 - t**5 / 28),
            lambda t: (4 * t * phi(t) - 2 * erf(t / sq2)) / t**2)

    def h_second(r):
        return _piecewise(
            r,
            lambda t: c * (-2.0 / 3 + 3 * t**2 / 5 - 5 * t**4 / 28),
            lambda t: -4 * phi(t) - 2 * (4 * t * phi(t) - 2 * erf(t / sq2)) / t**3)

    def f(r):
        t = np.asarray(r, dtype=float)
        out = np.exp(-0.5 * t * t) / (2 * np.pi) ** 1.5
        return out if np.ndim(r) else float(out)

    return RadialProfile(3, "gaussian", g, g_prime, h, h_prime, h_second, f,
                         g_over_r)


def _profile_cauchy_d3() -> RadialProfile:
    c = 4.0 / np.pi

    def g(r):
        return _piecewise(
            r,
            lambda t: c * (t / 3 - t**3 / 15 + t**5 / 35),
            lambda t: 2 * ((1 + t * t) * np.arctan(t) - t) / (np.pi * t * t))

    def g_over_r(r):
        return _piecewise(
            r,
            lambda t: c * (1.0 / 3 - t**2 / 15 + t**4 / 35),
            lambda t: 2 * ((1 + t * t) * np.arctan(t) - t) / (np.pi * t**3))

    def g_prime(r):
        return _piecewise(
            r,
            lambda t: c * (1.0 / 3 - t**2 / 5 + t**4 / 7),
            lambda t: 4 * (t - np.arctan(t)) / (np.pi * t**3))

    def h(r):
        return _piecewise(
            r,
            lambda t: c * (1 - t**2 / 3 + t**4 / 5),
            lambda t: 4 * np.arctan(t) / (np.pi * t))

    def h_prime(r):
        return _piecewise(
            r,
            lambda t: c * (-2 * t / 3 + 4 * t**3 / 5 - 6 * t**5 / 7),
            lambda t: 4 * (t - (1 + t * t) * np.arctan(t))
            / (np.pi * t * t * (1 + t * t)))

    def h_second(r):
        return _piecewise(
            r,
            lambda t: c * (-2.0 / 3 + 12 * t**2 / 5 - 30 * t**4 / 7),
            lambda t: 8 * (-t**3 - t * (1 + t * t)
                           + (1 + t * t) ** 2 * np.arctan(t))
            / (np.pi * t**3 * (1 + t * t) ** 2))

    def f(r):
        t = np.asarray(r, dtype=float)
        out = 1.0 / (np.pi ** 2 * (1.0 + t * t) ** 2)
        return out if np.ndim(r) else float(out)

    return RadialProfile(3, "cauchy", g, g_prime, h, h_prime, h_second, f,
                         g_over_r)


def _i1e_over_x(x):
    """e^{-x} I1(x) / x, finite at x = 0 (limit 1/2)."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x_arr)
    tiny = x_arr < 1e-4
    if np.any(tiny):
        t = x_arr[tiny]
        out[tiny] = 0.5 - 0.5 * t + 0.3125 * t * t
    if np.any(~tiny):
        out[~tiny] = sf.bessel_i1e(x_arr[~tiny]) / x_arr[~tiny]
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


def _profile_gaussian_d2() -> RadialProfile:
    a = 0.5 * np.sqrt(np.pi / 2.0)   # = sqrt(pi) / (2 sqrt 2)
    b = np.sqrt(np.pi / 2.0)
    i0e, i1e = sf.bessel_i0e, sf.bessel_i1e

    def g(r):
        t = np.asarray(r, dtype=float)
        q = 0.25 * t * t
        out = a * t * (i0e(q) + i1e(q))
        return out if np.ndim(r) else float(out)

    def g_over_r(r):
        t = np.asarray(r, dtype=float)
        q = 0.25 * t * t
        out = a * (i0e(q) + i1e(q))
        return out if np.ndim(r) else float(out)

    def g_prime(r):
        t = np.asarray(r, dtype=float)
        q = 0.25 * t * t
        out = a * (i0e(q) - i1e(q))
        return out if np.ndim(r) else float(out)

    def h(r):
        t = np.asarray(r, dtype=float)
        out = b * i0e(0.25 * t * t)
        return out if np.ndim(r) else float(out)

    def h_prime(r):
        t = np.asarray(r, dtype=float)
        q = 0.25 * t * t
        out = b * 0.5 * t * (i1e(q) - i0e(q))
        return out if np.ndim(r) else float(out)

    def h_second(r):
        t = np.asarray(r, dtype=float)
        q = 0.25 * t * t
        d1 = 0.5 * (i1e(q) - i0e(q))
        d2 = q * (2 * i0e(q) - 2 * i1e(q) - _i1e_over_x(q))
        out = b * (d1 + d2)
        return out if np.ndim(r) else float(out)

    def f(r):
        t = np.asarray(r, dtype=float)
        out = np.exp(-0.5 * t * t) / (2 * np.pi)
        return out if np.ndim(r) else float(out)

    return RadialProfile(2, "gaussian", g, g_prime, h, h_prime, h_second, f,
                         g_over_r)


def _profile_cauchy_d2() -> RadialProfile:
    def g(r):
        t = np.asarray(r, dtype=float)
        out = t / (1.0 + np.sqrt(1.0 + t * t))
        return out if np.ndim(r) else float(out)

    def g_over_r(r):
        t = np.asarray(r, dtype=float)
        out = 1.0 / (1.0 + np.sqrt(1.0 + t * t))
        return out if np.ndim(r) else float(out)

    def g_prime(r):
        t = np.asarray(r, dtype=float)
        s = np.sqrt(1.0 + t * t)
        out = 1.0 / (s * (1.0 + s))
        return out if np.ndim(r) else float(out)

    def h(r):
        t = np.asarray(r, dtype=float)
        out = 1.0 / np.sqrt(1.0 + t * t)
        return out if np.ndim(r) else float(out)

    def h_prime(r):
        t = np.asarray(r, dtype=float)
        out = -t / (1.0 + t * t) ** 1.5
        return out if np.ndim(r) else float(out)

    def h_second(r):
        t = np.asarray(r, dtype=float)
        out = (2.0 * t * t - 1.0) / (1.0 + t * t) ** 2.5
        return out if np.ndim(r) else float(out)

    def f(r):
        t = np.asarray(r, dtype=float)
        out = 1.0 / (2 * np.pi * (1.0 + t * t) ** 1.5)
        return out if np.ndim(r) else float(out)

    return RadialProfile(2, "cauchy", g, g_prime, h, h_prime, h_second, f,
                         g_over_r)


_PROFILE_BUILDERS = {
    ("gaussian", 3): _profile_gaussian_d3,
    ("cauchy", 3): _profile_cauchy_d3,
    ("gaussian", 2): _profile_gaussian_d2,
    ("cauchy", 2): _profile_cauchy_d2,
}


def radial_profile(m: Measure) -> RadialProfile:
    """Closed-form radial profile of a RadialClosedForm measure."""
    if not isinstance(m, RadialClosedForm):
        raise UnsupportedVariantError(
            "radial_profile is defined for RadialClosedForm measures only")
    return _PROFILE_BUILDERS[(m.family, m.d)]()


def density(m: Measure, x) -> float:
    """Density f(x); not defined for Empirical measures."""
    if isinstance(m, Empirical):
        raise UnsupportedVariantError("an empirical measure has no density")
    x_arr = np.asarray(x, dtype=float)
    if isinstance(m, RadialClosedForm):
        prof = radial_profile(m)
        r = np.linalg.norm(np.atleast_2d(x_arr), axis=1)
        out = prof.f(r)
        return out if x_arr.ndim > 1 else float(out[0])
    out = m.density(np.atleast_2d(x_arr))
    out = np.asarray(out, dtype=float)
    return out if x_arr.ndim > 1 else float(out[0])


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    """`count` standard normal variates from uniform pairs."""
    n_pairs = (count + 1) // 2
    u1 = rng.random(n_pairs)
    u2 = rng.random(n_pairs)
    u1 = np.maximum(u1, 1e-300)       # guard log(0)
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    z = np.empty(2 * n_pairs)
    z[0::2] = rad * np.cos(ang)
    z[1::2] = rad * np.sin(ang)
    return z[:count]


def sample(m: Measure, n: int, seed: int) -> np.ndarray:
    """Draw n variates as an (n, d) array; deterministic for a given seed.

    Normal variates come from the Box-Muller transform; the radial Cauchy
    uses the ratio construction Z = G/|W| with G a standard d-normal and W an
    independent standard scalar normal, which yields the spherically
    symmetric multivariate Cauchy in any dimension.
    """
    if n < 1:
        raise ValueError("sample requires n >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    if isinstance(m, Empirical):
        idx = rng.choice(m.atoms.shape[0], size=n, p=m.weights)
        return m.atoms[idx]
    if isinstance(m, RadialClosedForm):
        g = _box_muller(rng, n * m.d).reshape(n, m.d)
        if m.family == "gaussian":
            return g
        w = _box_muller(rng, n)
        return g / np.abs(w)[:, None]
    if isinstance(m, GenericDensity):
        out = np.asarray(m.sampler(n, rng), dtype=float)
        if out.shape != (n, m.d):
            raise DimensionMismatchError(
                f"sampler returned shape {out.shape}, expected {(n, m.d)}")
        return out
    raise UnsupportedVariantError(f"cannot sample from {type(m).__name__}")


# ---------------------------------------------------------------------------
# CSV input
# ---------------------------------------------------------------------------

def empirical_from_csv(path, d: int = None) -> Empirical:
    """Read an empirical measure from a CSV of numeric rows.

    Every row must have the same width.  When ``d`` is given and the rows
    have d+1 columns, the final column is taken as weights; otherwise all
    columns are coordinates and weights are uniform.  A non-numeric first row
    is treated as a header and skipped.
    """
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader, start=1):
            if not row or all(c.strip() == "" for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                if i == 1:
                    continue          # header
                bad = next(j for j, c in enumerate(row, start=1)
                           if not _is_float(c))
                raise ParseError(
                    f"{path}: row {i}, column {bad}: not a number") from exc
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(
                    f"{path}: row {i} has {len(vals)} columns, "
                    f"expected {width}")
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if d is not None:
        if data.shape[1] == d + 1:
            return Empirical(data[:, :d], data[:, d])
        if data.shape[1] != d:
            raise DimensionMismatchError(
                f"{path}: rows have {data.shape[1]} columns, "
                f"expected {d} or {d + 1}")
    return Empirical(data)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False
