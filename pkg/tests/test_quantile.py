"""Quantile solver: objective values, inversion of the rank map, and the
equivariance properties."""

import numpy as np
import pytest

import georank as gr
from georank.errors import DegenerateSupportError

FAMILIES = [("gaussian", 2), ("gaussian", 3), ("cauchy", 2), ("cauchy", 3)]


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def test_objective_zero_at_origin_without_direction():
    ev = gr.RankEvaluator(gr.Empirical(np.array([[1.0, 2.0], [0.5, -1.0]])))
    q = gr.QuantileQuery(0.0, np.array([1.0, 0.0]))
    assert gr.objective(ev, q, np.zeros(2)) == pytest.approx(0.0, abs=1e-15)


def test_objective_single_atom():
    a = np.array([2.0, 1.0])
    ev = gr.RankEvaluator(gr.Empirical(a[None, :]))
    q = gr.QuantileQuery(0.0, np.array([1.0, 0.0]))
    x = np.array([-1.0, 0.5])
    want = np.linalg.norm(x - a) - np.linalg.norm(a)
    assert gr.objective(ev, q, x) == pytest.approx(want, rel=1e-14)


def test_objective_two_atoms_hand_sum():
    ev = gr.RankEvaluator(gr.Empirical(np.array([[1.0, 0.0], [-1.0, 0.0]])))
    q = gr.QuantileQuery(0.0, np.array([1.0, 0.0]))
    got = gr.objective(ev, q, np.array([0.0, 1.0]))
    assert got == pytest.approx(np.sqrt(2.0) - 1.0, rel=1e-14)


def test_quantile_query_validation():
    with pytest.raises(ValueError):
        gr.QuantileQuery(1.0, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        gr.QuantileQuery(0.5, np.array([1.0, 1.0]))


def test_radial_median_is_center():
    for fam, d in FAMILIES:
        ev = gr.RankEvaluator(gr.RadialClosedForm(fam, d))
        u = _unit(np.ones(d))
        x = gr.solve_quantile(ev, gr.QuantileQuery(0.0, u))
        assert np.allclose(x, 0.0)


def test_gaussian_d3_inversion_at_radius_one():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3))
    alpha = ev.profile.g(1.0)        # = 2 phi(1) ~ 0.4839414
    assert alpha == pytest.approx(0.4839414, abs=1e-7)
    x = gr.solve_quantile(ev, gr.QuantileQuery(alpha, np.eye(3)[0]), 1e-8)
    assert np.allclose(x, [1.0, 0.0, 0.0], atol=1e-8)


def test_cauchy_d2_inversion_at_radius_one():
    ev = gr.RankEvaluator(gr.RadialClosedForm("cauchy", 2))
    alpha = ev.profile.g(1.0)        # = 1/(1+sqrt 2) ~ 0.4142136
    assert alpha == pytest.approx(np.sqrt(2.0) - 1.0, rel=1e-14)
    x = gr.solve_quantile(ev, gr.QuantileQuery(alpha, np.eye(2)[1]), 1e-8)
    assert np.allclose(x, [0.0, 1.0], atol=1e-8)


def test_roundtrip_gaussian_d2_random_queries():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 2))
    rng = np.random.default_rng(21)
    for _ in range(20):
        q = gr.QuantileQuery(rng.uniform(0.0, 0.95),
                             _unit(rng.standard_normal(2)))
        assert gr.rank_of_quantile_roundtrip(ev, q, 1e-8) <= 1e-8


def test_roundtrip_empirical_cloud():
    rng = np.random.default_rng(4)
    atoms = rng.standard_normal((100, 2))
    ev = gr.RankEvaluator(gr.Empirical(atoms))
    q = gr.QuantileQuery(0.5, np.eye(2)[0])
    assert gr.rank_of_quantile_roundtrip(ev, q, 1e-10) <= 1e-10


def test_monotone_radii_along_rays():
    for fam, d in FAMILIES:
        ev = gr.RankEvaluator(gr.RadialClosedForm(fam, d))
        u = _unit(np.arange(1, d + 1, dtype=float))
        alphas = np.linspace(0.05, 0.9, 10)
        radii = [np.linalg.norm(gr.solve_quantile(ev, gr.QuantileQuery(a, u)))
                 for a in alphas]
        assert np.all(np.diff(radii) > 0)


def test_translation_equivariance_empirical():
    rng = np.random.default_rng(8)
    atoms = rng.standard_normal((40, 3))
    t = np.array([1.5, -2.0, 0.25])
    tol = 1e-10
    ev = gr.RankEvaluator(gr.Empirical(atoms))
    ev_t = gr.RankEvaluator(gr.Empirical(atoms + t))
    q = gr.QuantileQuery(0.35, _unit([1.0, 2.0, -1.0]))
    a = gr.solve_quantile(ev, q, tol)
    b = gr.solve_quantile(ev_t, q, tol)
    assert np.max(np.abs(b - (a + t))) <= 10 * tol


def test_rotation_equivariance_radial():
    ev = gr.RankEvaluator(gr.RadialClosedForm("cauchy", 3))
    rng = np.random.default_rng(10)
    A = rng.standard_normal((3, 3))
    O, _ = np.linalg.qr(A)
    u = _unit([0.3, -1.0, 0.5])
    tol = 1e-10
    a = gr.solve_quantile(ev, gr.QuantileQuery(0.6, u), tol)
    b = gr.solve_quantile(ev, gr.QuantileQuery(0.6, _unit(O @ u)), tol)
    assert np.max(np.abs(b - O @ a)) <= 10 * tol


def test_degenerate_support_detected():
    atoms = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [-1.0, -1.0]])
    ev = gr.RankEvaluator(gr.Empirical(atoms))
    with pytest.raises(DegenerateSupportError):
        gr.solve_quantile(ev, gr.QuantileQuery(0.3, _unit([1.0, 0.0])))


def test_roundtrip_generic_density_monte_carlo():
    dens = lambda q: np.exp(-0.5 * (q ** 2).sum(axis=1)) / (2 * np.pi)
    samp = lambda n, rng: rng.standard_normal((n, 2))
    ev = gr.RankEvaluator(gr.GenericDensity(2, dens, samp), mc_n=50_000,
                          seed=17)
    q = gr.QuantileQuery(0.4, _unit([1.0, 1.0]))
    assert gr.rank_of_quantile_roundtrip(ev, q, 1e-8) <= 1e-8


def test_objective_descent_along_accepted_steps():
    rng = np.random.default_rng(33)
    atoms = rng.standard_normal((80, 3))
    ev = gr.RankEvaluator(gr.Empirical(atoms))
    trace = []
    gr.solve_quantile(ev, gr.QuantileQuery(0.6, _unit([1.0, -1.0, 0.5])),
                      1e-10, trace=trace)
    assert len(trace) >= 2
    assert np.all(np.diff(trace) <= 1e-14)
