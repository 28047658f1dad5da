"""Evaluation of the geometric rank field R(x) = E[(x-Z)/|x-Z|], its
derivatives, divergence and Jacobian, plus uniform-grid sampling and centered
finite differences.

Kernel derivatives are exact: every partial derivative of the unit-vector
kernel K(x) = x/|x| is a finite sum of terms c * x^p / |x|^m, and that
representation is closed under differentiation.  Expectations of kernel
derivatives therefore carry no finite-difference noise.
"""

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (BudgetError, ParseError, SingularityError,
                     StencilOverflowError, UnsupportedVariantError)
from .measures import (Empirical, GenericDensity, Measure, RadialClosedForm,
                       radial_profile, sample)

_ATOM_TOL = 1e-12
_GRID_NODE_CAP = 10_000_000
_EVAL_BLOCK = 200_000


# ---------------------------------------------------------------------------
# Exact kernel derivatives: terms c * x^p / |x|^m
# ---------------------------------------------------------------------------

def _diff_terms(terms: dict, j: int, d: int) -> dict:
    """Differentiate sum of c * x^p / |x|^m with respect to x_j."""
    out = {}
    for (p, m), c in terms.items():
        if p[j] > 0:
            q = list(p)
            q[j] -= 1
            key = (tuple(q), m)
            out[key] = out.get(key, 0.0) + c * p[j]
        q = list(p)
        q[j] += 1
        key = (tuple(q), m + 2)
        out[key] = out.get(key, 0.0) - c * m
    return {k: v for k, v in out.items() if v != 0.0}


@lru_cache(maxsize=512)
def kernel_derivative_terms(d: int, alpha: tuple, i: int):
    """Term representation of d^alpha K_i for the d-dimensional kernel."""
    p0 = tuple(1 if k == i else 0 for k in range(d))
    terms = {(p0, 1): 1.0}
    for j, a in enumerate(alpha):
        for _ in range(a):
            terms = _diff_terms(terms, j, d)
    return tuple(terms.items())


def _eval_terms(terms, y: np.ndarray) -> np.ndarray:
    """Evaluate a term representation at rows of y (n, d)."""
    r = np.linalg.norm(y, axis=-1)
    out = np.zeros(y.shape[:-1])
    for (p, m), c in terms:
        v = np.full(y.shape[:-1], c)
        for k, pk in enumerate(p):
            if pk:
                v = v * y[..., k] ** pk
        out += v / r ** m
    return out


# ---------------------------------------------------------------------------
# Grid fields
# ---------------------------------------------------------------------------

@dataclass
class VectorGridField:
    """Field sampled on a uniform rectangular grid.

    ``values`` has shape ``shape`` for a scalar field or ``shape + (k,)`` for
    a field with k components.  Spacing is identical along every axis.
    """

    origin: np.ndarray
    spacing: float
    shape: tuple
    values: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.shape = tuple(int(n) for n in self.shape)
        self.values = np.asarray(self.values, dtype=float)

    @property
    def grid_dim(self) -> int:
        return len(self.shape)

    @property
    def n_components(self) -> int:
        return 0 if self.values.ndim == len(self.shape) else self.values.shape[-1]

    def axes(self):
        return [self.origin[i] + self.spacing * np.arange(self.shape[i])
                for i in range(self.grid_dim)]

    def nodes(self) -> np.ndarray:
        """All node coordinates, row-major, shape (prod(shape), d)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def save(self, path):
        """One JSON header line, then CSV rows: coordinates, components."""
        pts = self.nodes()
        vals = self.values.reshape(pts.shape[0], -1)
        header = json.dumps({
            "origin": self.origin.tolist(),
            "spacing": self.spacing,
            "shape": list(self.shape),
            "d": self.grid_dim,
            "components": self.n_components,
        })
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in np.hstack([pts, vals]):
                fh.write(",".join("%.17g" % v for v in row) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                meta = json.loads(fh.readline())
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: bad grid header") from exc
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        shape = tuple(meta["shape"])
        k = meta["components"]
        d = meta["d"]
        vals = data[:, d:]
        vals = vals.reshape(shape if k == 0 else shape + (k,))
        return cls(np.asarray(meta["origin"]), float(meta["spacing"]),
                   shape, vals)


# ---------------------------------------------------------------------------
# Rank evaluator
# ---------------------------------------------------------------------------

class RankEvaluator:
    """Evaluate the rank field of a measure.

    The quadrature mode is inferred from the measure: exact weighted sums for
    Empirical, closed-form radial profiles for RadialClosedForm, and a fixed
    Monte-Carlo atom cloud for GenericDensity.  ``force_mc=True`` replaces
    the closed form by Monte Carlo (useful for cross-checks).  The Monte-
    Carlo sample is drawn once per evaluator (common random numbers), so the
    resulting field is smooth in x and safe to differentiate.
    """

    def __init__(self, measure: Measure, mc_n: int = 200_000, seed: int = 0,
                 force_mc: bool = False):
        self.measure = measure
        self.mc_n = int(mc_n)
        self.seed = int(seed)
        if isinstance(measure, Empirical):
            self.mode = "exact"
        elif isinstance(measure, RadialClosedForm) and not force_mc:
            self.mode = "radial"
        elif isinstance(measure, (RadialClosedForm, GenericDensity)):
            self.mode = "mc"
        else:
            raise UnsupportedVariantError(
                f"cannot evaluate ranks of {type(measure).__name__}")
        self._profile = (radial_profile(measure)
                         if isinstance(measure, RadialClosedForm) else None)
        self._atoms = None
        self._weights = None
        if self.mode == "exact":
            self._atoms = measure.atoms
            self._weights = measure.weights

    @property
    def d(self) -> int:
        return self.measure.d

    @property
    def profile(self):
        return self._profile

    def atoms(self):
        """Atom cloud backing exact/Monte-Carlo sums (lazy for MC)."""
        if self._atoms is None:
            self._atoms = sample(self.measure, self.mc_n, self.seed)
            self._weights = np.full(self.mc_n, 1.0 / self.mc_n)
        return self._atoms, self._weights

    # -- rank ---------------------------------------------------------------

    def rank(self, x) -> np.ndarray:
        return self.rank_many(np.asarray(x, dtype=float)[None, :])[0]

    def rank_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.mode == "radial":
            r = np.linalg.norm(pts, axis=1)
            return self._profile.g_over_r(r)[:, None] * pts
        atoms, weights = self.atoms()
        out = np.empty_like(pts)
        step = max(1, _EVAL_BLOCK // max(1, atoms.shape[0]))
        for lo in range(0, pts.shape[0], step):
            blk = pts[lo:lo + step]
            diff = blk[:, None, :] - atoms[None, :, :]
            nrm = np.linalg.norm(diff, axis=2)
            safe = np.where(nrm == 0.0, 1.0, nrm)
            unit = diff / safe[:, :, None]
            unit[nrm == 0.0] = 0.0           # kernel vanishes on the diagonal
            out[lo:lo + blk.shape[0]] = np.einsum("mnk,n->mk", unit, weights)
        return out

    # -- derivatives ----------------------------------------------------------

    def _check_not_atom(self, x):
        atoms, _ = self.atoms()
        dist = np.linalg.norm(atoms - x[None, :], axis=1)
        if np.min(dist) < _ATOM_TOL:
            raise SingularityError(
                f"point within {_ATOM_TOL} of an atom; derivative undefined")

    def rank_derivative(self, x, alpha) -> np.ndarray:
        """d^alpha R at x, as the expectation of the exact kernel derivative.

        alpha is a length-d multi-index.  For closed-form radial measures the
        derivative is assembled from the profile functions instead
        (supported up to |alpha| = 2).
        """
        x = np.asarray(x, dtype=float)
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.d or any(a < 0 for a in alpha):
            raise ValueError(f"alpha must be a length-{self.d} multi-index")
        order = sum(alpha)
        if order == 0:
            return self.rank(x)
        if order > self.d:
            raise ValueError("kernel derivatives beyond |alpha| = d are not "
                             "needed and not supported")
        if self.mode == "radial":
            return self._radial_derivative(x, alpha)
        self._check_not_atom(x)
        atoms, weights = self.atoms()
        y = x[None, :] - atoms
        out = np.empty(self.d)
        for i in range(self.d):
            terms = kernel_derivative_terms(self.d, alpha, i)
            out[i] = float(np.dot(_eval_terms(terms, y), weights))
        return out

    def _psi_derivatives(self, r: float):
        """psi = g/r and its first two derivatives at radius r."""
        p = self._profile
        psi = p.g_over_r(r)
        psi1 = (p.g_prime(r) - psi) / r
        g2 = p.h_prime(r) - (self.d - 1) * psi1       # g'' from h' identity
        psi2 = g2 / r - 2.0 * p.g_prime(r) / r ** 2 + 2.0 * psi / r ** 2
        return psi, psi1, psi2

    def _radial_derivative(self, x, alpha):
        order = sum(alpha)
        if order > 2:
            raise ValueError("radial closed-form derivatives supported up to "
                             "|alpha| = 2; sample a grid and use finite "
                             "differences beyond")
        r = float(np.linalg.norm(x))
        if r < 1e-9:
            # at the center: R ~ g'(0) x + O(|x|^3); first derivatives are
            # g'(0) delta_ij, second derivatives vanish by symmetry
            j = np.nonzero(alpha)[0]
            if order == 1:
                out = np.zeros(self.d)
                out[j[0]] = self._profile.g_prime(0.0)
                return out
            return np.zeros(self.d)
        xhat = x / r
        psi, psi1, psi2 = self._psi_derivatives(r)
        if order == 1:
            j = int(np.nonzero(alpha)[0][0])
            out = psi1 * xhat[j] * x
            out[j] += psi
            return out
        # order == 2: alpha = e_j + e_k
        idx = [i for i, a in enumerate(alpha) for _ in range(a)]
        j, k = idx[0], idx[1]
        djk = 1.0 if j == k else 0.0
        out = (psi2 * xhat[k] * xhat[j] * x
               + psi1 * ((djk - xhat[j] * xhat[k]) / r) * x)
        out[k] += psi1 * xhat[j]
        out[j] += psi1 * xhat[k]
        return out

    # -- divergence / jacobian -------------------------------------------------

    def divergence(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.mode == "radial":
            return float(self._profile.h(np.linalg.norm(x)))
        self._check_not_atom(x)
        atoms, weights = self.atoms()
        nrm = np.linalg.norm(x[None, :] - atoms, axis=1)
        return float(np.dot((self.d - 1) / nrm, weights))

    def divergence_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.mode == "radial":
            return self._profile.h(np.linalg.norm(pts, axis=1))
        atoms, weights = self.atoms()
        out = np.empty(pts.shape[0])
        step = max(1, _EVAL_BLOCK // max(1, atoms.shape[0]))
        for lo in range(0, pts.shape[0], step):
            blk = pts[lo:lo + step]
            nrm = np.linalg.norm(blk[:, None, :] - atoms[None, :, :], axis=2)
            if np.any(nrm < _ATOM_TOL):
                raise SingularityError("grid point coincides with an atom")
            out[lo:lo + blk.shape[0]] = ((self.d - 1) / nrm) @ weights
        return out

    def jacobian(self, x) -> np.ndarray:
        """Jacobian of the rank field; symmetric positive semidefinite."""
        x = np.asarray(x, dtype=float)
        d = self.d
        if self.mode == "radial":
            r = float(np.linalg.norm(x))
            p = self._profile
            if r < 1e-12:
                return p.g_prime(0.0) * np.eye(d)
            xhat = x / r
            goverr = p.g_over_r(r)
            return (goverr * np.eye(d)
                    + (p.g_prime(r) - goverr) * np.outer(xhat, xhat))
        self._check_not_atom(x)
        atoms, weights = self.atoms()
        y = x[None, :] - atoms
        nrm = np.linalg.norm(y, axis=1)
        u = y / nrm[:, None]
        wn = weights / nrm
        return np.einsum("n,ni,nj->ij", -wn, u, u) + np.sum(wn) * np.eye(d)


# ---------------------------------------------------------------------------
# Grid sampling and finite differences
# ---------------------------------------------------------------------------

def sample_grid(ev: RankEvaluator, box, n_per_axis: int) -> VectorGridField:
    """Sample the rank field on [lo, hi]^d with n_per_axis nodes per axis."""
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise ValueError("box must satisfy hi > lo")
    if n_per_axis < 5:
        raise ValueError("need at least 5 nodes per axis")
    d = ev.d
    if n_per_axis ** d > _GRID_NODE_CAP:
        raise BudgetError(
            f"{n_per_axis}^{d} nodes exceed the cap of {_GRID_NODE_CAP}")
    h = (hi - lo) / (n_per_axis - 1)
    field = VectorGridField(np.full(d, lo), h, (n_per_axis,) * d,
                            np.empty((n_per_axis,) * d + (d,)))
    pts = field.nodes()
    field.values = ev.rank_many(pts).reshape(field.shape + (d,))
    return field


_STENCILS = {
    # (derivative order, accuracy order) -> (offsets, coefficients)
    (1, 2): (np.array([-1, 0, 1]), np.array([-0.5, 0.0, 0.5])),
    (2, 2): (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])),
    (1, 4): (np.array([-2, -1, 0, 1, 2]),
             np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])),
    (2, 4): (np.array([-2, -1, 0, 1, 2]),
             np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])),
}


def _apply_axis_stencil(values, axis, offsets, coeffs, scale):
    radius = int(np.max(np.abs(offsets)))
    n = values.shape[axis]
    if n - 2 * radius < 1:
        raise StencilOverflowError(
            f"axis {axis} has {n} nodes, stencil needs {2 * radius + 1}")
    out = None
    for off, c in zip(offsets, coeffs):
        if c == 0.0:
            continue
        sl = [slice(None)] * values.ndim
        sl[axis] = slice(radius + off, n - radius + off)
        piece = c * values[tuple(sl)]
        out = piece if out is None else out + piece
    return out * scale, radius


def fd_derivative(field: VectorGridField, alpha, order: int = 2) -> VectorGridField:
    """Centered finite-difference d^alpha of a grid field.

    The output grid loses the stencil radius per applied axis derivative on
    each side of that axis; origin and shape are adjusted accordingly.
    Derivative orders above 2 per axis are formed by composing first- and
    second-derivative stencils.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    alpha = tuple(int(a) for a in alpha)
    d = field.grid_dim
    if len(alpha) != d:
        raise ValueError(f"alpha must have length {d}")
    values = field.values
    origin = field.origin.copy()
    h = field.spacing
    for axis, a in enumerate(alpha):
        rem = a
        while rem > 0:
            step = 2 if rem >= 2 else 1
            offsets, coeffs = _STENCILS[(step, order)]
            values, radius = _apply_axis_stencil(
                values, axis, offsets, coeffs, 1.0 / h ** step)
            origin[axis] += radius * h
            rem -= step
    shape = values.shape[:d]
    return VectorGridField(origin, h, shape, values)


def _crop(values, d, radius):
    sl = tuple(slice(radius, values.shape[i] - radius) for i in range(d))
    return values[sl]


def fd_divergence(field: VectorGridField, order: int = 2) -> VectorGridField:
    """Divergence of a vector grid field; uniform crop on every axis."""
    d = field.grid_dim
    if field.n_components != d:
        raise ValueError("divergence needs a d-component field on a d-grid")
    radius = 1 if order == 2 else 2
    offsets, coeffs = _STENCILS[(1, order)]
    out = None
    for axis in range(d):
        comp, _ = _apply_axis_stencil(field.values[..., axis], axis, offsets,
                                      coeffs, 1.0 / field.spacing)
        # crop the untouched axes so every term has the uniform interior shape
        for other in range(d):
            if other != axis:
                sl = [slice(None)] * comp.ndim
                sl[other] = slice(radius, comp.shape[other] - radius)
                comp = comp[tuple(sl)]
        out = comp if out is None else out + comp
    origin = field.origin + radius * field.spacing
    return VectorGridField(origin, field.spacing, out.shape, out)


def fd_laplacian(field: VectorGridField, order: int = 2) -> VectorGridField:
    """Laplacian (sum of pure second differences); uniform crop per axis."""
    d = field.grid_dim
    radius = 1 if order == 2 else 2
    offsets, coeffs = _STENCILS[(2, order)]
    out = None
    for axis in range(d):
        comp, _ = _apply_axis_stencil(field.values, axis, offsets, coeffs,
                                      1.0 / field.spacing ** 2)
        for other in range(d):
            if other != axis:
                sl = [slice(None)] * comp.ndim
                sl[other] = slice(radius, comp.shape[other] - radius)
                comp = comp[tuple(sl)]
        out = comp if out is None else out + comp
    origin = field.origin + radius * field.spacing
    shape = out.shape[:d]
    return VectorGridField(origin, field.spacing, shape, out)
