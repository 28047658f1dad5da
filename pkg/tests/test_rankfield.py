"""Rank evaluation, exact kernel derivatives, grid sampling, and the
finite-difference stencils."""

import numpy as np
import pytest

import georank as gr
from georank.errors import (BudgetError, SingularityError,
                            StencilOverflowError)
from georank.rankfield import kernel_derivative_terms, _eval_terms


def _ev_empirical(atoms, weights=None):
    return gr.RankEvaluator(gr.Empirical(np.asarray(atoms, dtype=float),
                                         weights))


# ---------------------------------------------------------------------------
# rank values
# ---------------------------------------------------------------------------

def test_rank_symmetric_pair_vanishes_at_center():
    ev = _ev_empirical([[-1.0], [1.0]])
    assert np.linalg.norm(ev.rank(np.array([0.0]))) == 0.0


def test_rank_four_atom_cross():
    # brute-force sum of the four unit vectors
    atoms = np.array([[1., 0.], [-1., 0.], [0., 1.], [0., -1.]])
    x = np.array([2.0, 0.0])
    units = (x[None, :] - atoms)
    units /= np.linalg.norm(units, axis=1, keepdims=True)
    want = units.mean(axis=0)
    ev = _ev_empirical(atoms)
    assert np.allclose(ev.rank(x), want, atol=1e-15)
    assert want[0] == pytest.approx(0.5 + 1 / np.sqrt(5), rel=1e-12)
    assert want[1] == 0.0


def test_rank_gaussian_d3_closed_form():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3))
    got = ev.rank(np.array([1.0, 0.0, 0.0]))
    phi1 = np.exp(-0.5) / np.sqrt(2 * np.pi)
    assert got == pytest.approx([2 * phi1, 0.0, 0.0], rel=1e-12)


def test_rank_norm_bound_everywhere():
    rng = np.random.default_rng(0)
    atoms = rng.standard_normal((40, 3))
    evs = [
        _ev_empirical(atoms),
        gr.RankEvaluator(gr.RadialClosedForm("cauchy", 3)),
        gr.RankEvaluator(gr.RadialClosedForm("gaussian", 2), force_mc=True,
                         mc_n=20_000, seed=4),
    ]
    for ev in evs:
        pts = rng.standard_normal((50, ev.d)) * 3.0
        norms = np.linalg.norm(ev.rank_many(pts), axis=1)
        assert np.all(norms <= 1.0 + 1e-12)


def test_rank_at_atom_skips_diagonal():
    ev = _ev_empirical([[0.0, 0.0], [2.0, 0.0]], np.array([0.25, 0.75]))
    got = ev.rank(np.array([0.0, 0.0]))
    # only the other atom contributes: 0.75 * (-e1)
    assert np.allclose(got, [-0.75, 0.0], atol=1e-16)


def test_rank_discontinuity_at_atom_has_weight_size():
    w = 0.25
    ev = _ev_empirical([[0.0, 0.0], [2.0, 0.0]], np.array([w, 1 - w]))
    at_atom = ev.rank(np.zeros(2))
    u = np.array([0.0, 1.0])
    nearby = ev.rank(1e-9 * u)
    assert np.linalg.norm(nearby - at_atom) >= w / 2


def test_rank_oddness_under_reflection():
    # eighths are exact binary fractions, so 2c - x and the pairwise
    # differences incur no rounding and the identity holds bitwise
    rng = np.random.default_rng(7)
    atoms = rng.integers(-16, 17, size=(13, 2)) / 8.0
    c = np.array([0.375, -0.75])
    ev = _ev_empirical(atoms)
    ev_refl = _ev_empirical(2 * c[None, :] - atoms)
    for x in rng.integers(-16, 17, size=(10, 2)) / 8.0:
        a = ev.rank(x)
        b = ev_refl.rank(2 * c - x)
        assert np.array_equal(a, -b)


# ---------------------------------------------------------------------------
# kernel derivatives
# ---------------------------------------------------------------------------

def test_kernel_first_derivative_closed_form():
    # d1 K1 = (|x|^2 - x1^2)/|x|^3 vanishes at (1, 0)
    terms = kernel_derivative_terms(2, (1, 0), 0)
    val = _eval_terms(terms, np.array([[1.0, 0.0]]))[0]
    assert val == pytest.approx(0.0, abs=1e-15)
    # generic point: compare against the J_K formula (I - u u^T)/|x|
    x = np.array([[0.7, -1.2]])
    r = np.linalg.norm(x)
    u = x[0] / r
    for i in range(2):
        for j in range(2):
            alpha = tuple(1 if k == j else 0 for k in range(2))
            got = _eval_terms(kernel_derivative_terms(2, alpha, i), x)[0]
            want = ((1.0 if i == j else 0.0) - u[i] * u[j]) / r
            assert got == pytest.approx(want, rel=1e-13)


def _nested_central_diff(fun, x, alpha, h):
    for axis, n in enumerate(alpha):
        for _ in range(n):
            fun = (lambda f, ax: lambda pt:
                   (f(pt + h * np.eye(len(pt))[ax])
                    - f(pt - h * np.eye(len(pt))[ax])) / (2 * h))(fun, axis)
    return fun(x)


def test_kernel_derivative_matches_finite_differences_high_order():
    # step sizes per derivative order balance truncation against the
    # eps/h^k roundoff amplification of nested central differences
    cases = [((1, 0, 0), 1e-5, 1e-6), ((0, 1, 1), 1e-4, 1e-6),
             ((2, 0, 0), 1e-4, 1e-6), ((1, 1, 1), 5e-3, 1e-3),
             ((2, 1, 0), 5e-3, 1e-3)]
    x = np.array([[0.9, -0.4, 1.3]])
    for alpha, h, tol in cases:
        for i in range(3):
            got = _eval_terms(kernel_derivative_terms(3, alpha, i), x)[0]
            k_i = lambda pt, ii=i: pt[ii] / np.linalg.norm(pt)
            want = _nested_central_diff(k_i, x[0], alpha, h)
            assert got == pytest.approx(want, abs=tol)


def test_rank_derivative_zeroth_order_is_rank():
    ev = _ev_empirical([[1.0, 2.0], [-0.5, 0.3]])
    x = np.array([0.2, 0.1])
    assert np.allclose(ev.rank_derivative(x, (0, 0)), ev.rank(x))


def test_rank_derivative_divergence_gaussian_d3():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3))
    x = np.array([1.0, 0.0, 0.0])
    div = sum(ev.rank_derivative(x, tuple(np.eye(3, dtype=int)[j]))[j]
              for j in range(3))
    want = 2 * (2 * gr.std_normal_cdf(1.0) - 1)
    assert div == pytest.approx(want, rel=1e-12)
    assert div == pytest.approx(1.3653789, abs=1e-6)
    # Monte-Carlo cross check within 3 standard errors
    mc = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3), force_mc=True,
                          mc_n=200_000, seed=12)
    atoms, _ = mc.atoms()
    nrm = np.linalg.norm(x[None, :] - atoms, axis=1)
    vals = 2.0 / nrm
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(mc.divergence(x) - want) <= 3 * se


def test_radial_first_derivatives_match_fd():
    rng = np.random.default_rng(5)
    for fam, d in (("gaussian", 3), ("cauchy", 2)):
        ev = gr.RankEvaluator(gr.RadialClosedForm(fam, d))
        for _ in range(30):
            x = rng.standard_normal(d)
            r = np.linalg.norm(x)
            if not 0.3 < r < 5.0:
                continue
            h = 1e-5
            for j in range(d):
                e = np.zeros(d)
                e[j] = h
                fd = (ev.rank(x + e) - ev.rank(x - e)) / (2 * h)
                alpha = tuple(1 if k == j else 0 for k in range(d))
                got = ev.rank_derivative(x, alpha)
                assert np.max(np.abs(got - fd)) <= 1e-6


def test_radial_second_derivatives_match_fd():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3))
    x = np.array([0.8, -0.5, 0.4])
    h = 1e-4
    e0 = np.array([h, 0, 0])
    e1 = np.array([0, h, 0])
    fd_xx = (ev.rank(x + e0) - 2 * ev.rank(x) + ev.rank(x - e0)) / h ** 2
    got_xx = ev.rank_derivative(x, (2, 0, 0))
    assert np.max(np.abs(got_xx - fd_xx)) <= 1e-5
    fd_xy = (ev.rank(x + e0 + e1) - ev.rank(x + e0 - e1)
             - ev.rank(x - e0 + e1) + ev.rank(x - e0 - e1)) / (4 * h ** 2)
    got_xy = ev.rank_derivative(x, (1, 1, 0))
    assert np.max(np.abs(got_xy - fd_xy)) <= 1e-5


def test_rank_derivative_singularity_error():
    ev = _ev_empirical([[1.0, 0.0]])
    with pytest.raises(SingularityError):
        ev.rank_derivative(np.array([1.0, 1e-13]), (1, 0))


def test_divergence_and_jacobian_single_atom():
    a = np.array([0.0, 0.0, 0.0])
    ev = _ev_empirical([a])
    x = np.array([2.0, 0.0, 0.0])
    assert ev.divergence(x) == pytest.approx(1.0, rel=1e-14)   # (d-1)/|x-a|
    J = ev.jacobian(x)
    u = (x - a) / np.linalg.norm(x - a)
    assert np.abs(J @ u).max() <= 1e-15         # radial eigenvalue is zero
    assert np.allclose(J, J.T, atol=1e-15)


def test_jacobian_symmetry_and_psd():
    rng = np.random.default_rng(9)
    atoms = rng.standard_normal((25, 3))
    ev = _ev_empirical(atoms)
    for _ in range(20):
        x = rng.standard_normal(3) * 2
        J = ev.jacobian(x)
        assert np.max(np.abs(J - J.T)) <= 1e-12
        assert np.min(np.linalg.eigvalsh(J)) >= -1e-12


def test_divergence_is_trace_of_jacobian():
    rng = np.random.default_rng(2)
    ev = _ev_empirical(rng.standard_normal((12, 2)))
    x = np.array([0.4, 1.1])
    assert ev.divergence(x) == pytest.approx(np.trace(ev.jacobian(x)),
                                             rel=1e-12)


# ---------------------------------------------------------------------------
# grid sampling
# ---------------------------------------------------------------------------

def test_sample_grid_unit_kernel_far_atom():
    ev = _ev_empirical([[10.0, 10.0, 10.0]])
    field = gr.sample_grid(ev, (-1.0, 1.0), 5)
    norms = np.linalg.norm(field.values, axis=-1)
    assert np.allclose(norms, 1.0, atol=1e-14)


def test_sample_grid_odd_symmetry_exact():
    # symmetric atoms, exact-binary grid nodes: field is exactly odd
    atoms = np.array([[0.5, 0.25], [-0.5, -0.25]])
    ev = _ev_empirical(atoms)
    field = gr.sample_grid(ev, (-2.0, 2.0), 5)
    v = field.values
    assert np.array_equal(v, -v[::-1, ::-1, :])


def test_sample_grid_gaussian_d2_corner_value():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 2))
    field = gr.sample_grid(ev, (-4.0, 4.0), 41)
    prof = ev.profile
    got = field.values[-1, 20]          # node (4, 0)
    assert abs(got[0] - prof.g(4.0)) <= 1e-10
    assert got[1] == 0.0


def test_sample_grid_budget_cap():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3))
    with pytest.raises(BudgetError):
        gr.sample_grid(ev, (-1.0, 1.0), 400)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def _linear_field(n=9, h=0.5):
    xs = np.arange(n) * h - 2.0
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    return gr.VectorGridField(np.array([-2.0, -2.0]), h, (n, n), X.copy())


def test_fd_linear_exactness():
    field = _linear_field()
    out = gr.fd_derivative(field, (1, 0), order=2)
    assert np.max(np.abs(out.values - 1.0)) < 1e-12
    assert out.shape == (7, 9)
    assert out.origin[0] == pytest.approx(-1.5)


def test_fd_quadratic_laplacian_exact():
    n, h = 11, 0.5
    xs = np.arange(n) * h - 2.5
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    field = gr.VectorGridField(np.array([-2.5, -2.5]), h, (n, n),
                               X * X + Y * Y)
    lap = gr.fd_laplacian(field, order=2)
    assert np.max(np.abs(lap.values - 4.0)) < 1e-12


def test_fd_fourth_order_truncation_bound():
    # d/dx sin(x), order 4, h=0.1: classical bound h^4/30
    n, h = 61, 0.1
    xs = np.arange(n) * h - 3.0
    field = gr.VectorGridField(np.array([-3.0]), h, (n,), np.sin(xs))
    out = gr.fd_derivative(field, (1,), order=4)
    xs_in = xs[2:-2]
    err = np.abs(out.values - np.cos(xs_in))
    assert np.max(err) <= h ** 4 / 30 + 1e-12


def test_fd_divergence_of_radial_grid():
    ev = gr.RankEvaluator(gr.RadialClosedForm("cauchy", 2))
    field = gr.sample_grid(ev, (-2.0, 2.0), 81)
    div = gr.fd_divergence(field, order=2)
    pts = div.nodes()
    want = ev.profile.h(np.linalg.norm(pts, axis=1)).reshape(div.shape)
    assert np.max(np.abs(div.values - want)) < 5e-3


def test_fd_stencil_overflow():
    field = _linear_field(n=5)
    with pytest.raises(StencilOverflowError):
        gr.fd_derivative(field, (0, 4), order=4)


def test_grid_save_load_roundtrip(tmp_path):
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 2))
    field = gr.sample_grid(ev, (-1.0, 1.0), 6)
    path = tmp_path / "field.csv"
    field.save(path)
    back = gr.VectorGridField.load(path)
    assert back.shape == field.shape
    assert back.spacing == field.spacing
    assert np.array_equal(back.origin, field.origin)
    assert np.array_equal(back.values, field.values)


def test_scalar_grid_save_load_roundtrip(tmp_path):
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 2))
    field = gr.sample_grid(ev, (-1.0, 1.0), 7)
    div = gr.fd_divergence(field, order=2)
    assert div.n_components == 0
    path = tmp_path / "scalar.csv"
    div.save(path)
    back = gr.VectorGridField.load(path)
    assert back.shape == div.shape
    assert np.array_equal(back.values, div.values)
