"""Reconstruction pipelines: local (odd d), singular integral, Hankel chain,
harmonic extension, and the weak-form identity on test functions."""

import numpy as np
import pytest
from scipy.integrate import quad

import georank as gr
from georank.errors import DecayError, ParityError

CFG = gr.ReconstructionConfig


# ---------------------------------------------------------------------------
# odd-local
# ---------------------------------------------------------------------------

def test_odd_local_radial_values():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3))
    rep = gr.reconstruct_odd_local(ev, CFG(radii=np.array([1.0])))
    want = np.exp(-0.5) / (2 * np.pi) / np.sqrt(2 * np.pi)   # phi(1)/(2 pi)
    assert rep.f_hat[0] == pytest.approx(want, rel=1e-12)
    assert rep.f_hat[0] == pytest.approx(0.0385108, abs=1e-6)

    ev = gr.RankEvaluator(gr.RadialClosedForm("cauchy", 3))
    rep = gr.reconstruct_odd_local(ev, CFG(radii=np.array([0.0, 1.0])))
    assert rep.f_hat[0] == pytest.approx(1.0 / np.pi ** 2, rel=1e-10)
    assert rep.f_hat[1] == pytest.approx(1.0 / (4 * np.pi ** 2), rel=1e-10)


@pytest.mark.parametrize("fam", ["gaussian", "cauchy"])
def test_odd_local_radial_sup_error(fam):
    ev = gr.RankEvaluator(gr.RadialClosedForm(fam, 3))
    rep = gr.reconstruct_odd_local(ev, CFG(radii=np.linspace(0.05, 5, 200)))
    assert rep.diagnostics["sup_rel_error"] <= 1e-10
    assert rep.diagnostics["negativity_mass"] <= 1e-3


def test_odd_local_parity_error():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 2))
    with pytest.raises(ParityError):
        gr.reconstruct_odd_local(ev, CFG())


def test_odd_local_grid_converges_second_order():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3))
    rep = gr.reconstruct_odd_local(ev, CFG(grid_box=(-3.0, 3.0),
                                           grid_nodes=41, coarse_check=True,
                                           force_grid=True))
    # two-resolution estimate against the closed form
    assert 1.5 <= rep.diagnostics["observed_order"] <= 2.5
    assert rep.grid is not None
    assert rep.diagnostics["negativity_mass"] <= 1e-2


def test_odd_local_grid_empirical_runs():
    rng = np.random.default_rng(6)
    ev = gr.RankEvaluator(gr.Empirical(rng.standard_normal((200, 3))))
    rep = gr.reconstruct_odd_local(ev, CFG(grid_box=(-1.0, 1.0),
                                           grid_nodes=15,
                                           coarse_check=False))
    assert rep.kind == "grid"
    assert np.all(np.isfinite(rep.f_hat))


# ---------------------------------------------------------------------------
# singular integral
# ---------------------------------------------------------------------------

def test_half_laplacian_cauchy_profile_at_origin():
    u = lambda pts: 1.0 / np.sqrt(1.0 + (pts ** 2).sum(axis=1))
    got = gr.half_laplacian_singular(u, 2, np.zeros(2), CFG(), tail_coef=1.0)
    assert got == pytest.approx(1.0, abs=2e-3)


def test_half_laplacian_gaussian_profile_at_origin():
    prof = gr.radial_profile(gr.RadialClosedForm("gaussian", 2))
    u = lambda pts: prof.h(np.linalg.norm(pts, axis=1))
    got = gr.half_laplacian_singular(u, 2, np.zeros(2), CFG(), tail_coef=1.0)
    assert got == pytest.approx(1.0, abs=2e-3)


def test_half_laplacian_constant_vanishes():
    u = lambda pts: np.full(pts.shape[0], 0.7)
    got = gr.half_laplacian_singular(u, 2, np.array([0.3, -0.1]), CFG(),
                                     tail_coef=0.7, tail_power=0)
    assert abs(got) <= 1e-12


@pytest.mark.parametrize("fam", ["gaussian", "cauchy"])
def test_even_singular_pipeline(fam):
    ev = gr.RankEvaluator(gr.RadialClosedForm(fam, 2))
    rep = gr.reconstruct_even_singular(ev, CFG(method="singular",
                                               radii=np.linspace(0, 2, 20)))
    assert rep.diagnostics["sup_rel_error"] <= 1e-3
    assert rep.diagnostics["refinement_delta"] <= 1e-3
    assert rep.diagnostics["negativity_mass"] <= 1e-3


def test_even_singular_parity_error():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 3))
    with pytest.raises(ParityError):
        gr.reconstruct_even_singular(ev, CFG(method="singular"))


# ---------------------------------------------------------------------------
# Hankel
# ---------------------------------------------------------------------------

def test_hankel_transform_known_pair():
    # int_0^inf s J0(s rho) / sqrt(1+s^2) ds = e^{-rho}/rho, so the
    # order-zero transform of sqrt(s) h(s) with h = 1/sqrt(1+s^2) is
    # e^{-rho}/sqrt(rho)
    h = lambda s: 1.0 / np.sqrt(1.0 + s * s)
    for rho in (0.5, 1.0, 2.0):
        got = gr.hankel_transform_order0(lambda s: np.sqrt(s) * h(s), rho)
        assert got == pytest.approx(np.exp(-rho) / np.sqrt(rho), rel=1e-8)


def test_hankel_decay_error_on_growing_input():
    with pytest.raises(DecayError):
        gr.hankel_transform_order0(lambda s: s, 1.0)


def test_spectrum_values():
    ev = gr.RankEvaluator(gr.RadialClosedForm("gaussian", 2))
    for xi in (0.05, 0.1, 0.25, 0.5):
        got = gr.divergence_fourier_profile(ev, xi)
        want = np.exp(-2 * np.pi ** 2 * xi ** 2)
        assert got == pytest.approx(want, rel=1e-4)
    assert gr.divergence_fourier_profile(ev, 0.25) == pytest.approx(
        0.29121, abs=1e-5)
    ev = gr.RankEvaluator(gr.RadialClosedForm("cauchy", 2))
    for xi in (0.05, 0.1, 0.25, 0.5):
        got = gr.divergence_fourier_profile(ev, xi)
        assert got == pytest.approx(np.exp(-2 * np.pi * xi), rel=1e-4)
    assert gr.divergence_fourier_profile(ev, 1.0 / (2 * np.pi)) \
        == pytest.approx(np.exp(-1.0), rel=1e-6)


@pytest.mark.parametrize("fam", ["gaussian", "cauchy"])
def test_hankel_pipeline_matches_closed_form(fam):
    ev = gr.RankEvaluator(gr.RadialClosedForm(fam, 2))
    rep = gr.reconstruct_isotropic_hankel(
        ev, CFG(method="hankel", radii=np.linspace(0.0, 2.0, 10)))
    assert rep.diagnostics["sup_rel_error"] <= 1e-4
    assert rep.diagnostics["negativity_mass"] <= 1e-3
    # full-pipeline value at the origin
    assert rep.f_hat[0] == pytest.approx(1.0 / (2 * np.pi), rel=1e-4)


def test_hankel_agrees_with_singular_pipeline():
    radii = np.linspace(0.1, 2.0, 10)
    for fam in ("gaussian", "cauchy"):
        ev = gr.RankEvaluator(gr.RadialClosedForm(fam, 2))
        hank = gr.reconstruct_isotropic_hankel(
            ev, CFG(method="hankel", radii=radii))
        sing = gr.reconstruct_even_singular(
            ev, CFG(method="singular", radii=radii, check_refinement=False))
        rel = np.abs(hank.f_hat - sing.f_hat) / np.abs(sing.f_hat)
        assert np.max(rel) <= 1e-3


# ---------------------------------------------------------------------------
# extension
# ---------------------------------------------------------------------------

def test_poisson_kernel_normalization_constant():
    # smoothing the constant "density" 1 returns 1 at any height
    m = gr.GenericDensity(2, lambda q: np.ones(q.shape[0]),
                          lambda n, rng: rng.standard_normal((n, 2)))
    # the outer truncation of the quadrature leaves a tail ~ t / r_out
    got = gr.poisson_smooth(m, np.zeros((1, 2)), 0.01)[0]
    assert got == pytest.approx(1.0, abs=1e-3)


def test_poisson_smooth_matches_quad_oracle():
    # 2-D quadrature oracle for the Gaussian density at the origin
    m = gr.RadialClosedForm("gaussian", 2)
    t = 0.01
    want, _ = quad(lambda r: (1 / (2 * np.pi)) * t * r
                   * np.exp(-r * r / 2) / (r * r + t * t) ** 1.5,
                   0.0, 40.0, limit=400)
    got = gr.poisson_smooth(m, np.zeros((1, 2)), t)[0]
    assert got == pytest.approx(want, rel=1e-6)
    assert abs(got - 1.0 / (2 * np.pi)) <= 2e-3


def test_extension_error_scaling_and_richardson():
    m = gr.RadialClosedForm("gaussian", 2)
    rep = gr.reconstruct_extension(m, CFG(method="extension",
                                          extension_height=0.02,
                                          radii=np.zeros(1)))
    e_t = rep.diagnostics["error_at_height"][0]
    e_t2 = rep.diagnostics["error_at_half_height"][0]
    assert e_t <= 5e-3 and e_t2 <= 5e-3
    assert 1.7 <= e_t / e_t2 <= 2.3
    assert rep.diagnostics["richardson_error"][0] <= 5e-4


def test_extension_empirical_is_kernel_density_estimate():
    f0 = 1.0 / (2 * np.pi)
    vals = []
    for seed in (1, 2, 3):
        z = gr.sample(gr.RadialClosedForm("gaussian", 2), 100_000, seed=seed)
        m = gr.Empirical(z)
        vals.append(gr.poisson_smooth(m, np.zeros((1, 2)), 0.05)[0])
    assert all(abs(v - f0) <= 0.02 for v in vals)
    assert np.std(vals) <= 0.01


def test_extension_parity_error():
    m = gr.RadialClosedForm("gaussian", 3)
    with pytest.raises(ParityError):
        gr.reconstruct_extension(m, CFG(method="extension"))


def test_extension_off_center_points():
    m = gr.RadialClosedForm("cauchy", 2)
    prof = gr.radial_profile(m)
    pts = np.array([[1.0, 0.0], [0.0, 1.5]])
    got = gr.poisson_smooth(m, pts, 0.01)
    want = prof.f(np.linalg.norm(pts, axis=1))
    assert np.max(np.abs(got - want)) <= 5e-3


# ---------------------------------------------------------------------------
# weak-form identity on test functions
# ---------------------------------------------------------------------------

def test_identity_d1_dirac():
    ev = gr.RankEvaluator(gr.Empirical(np.array([[0.0]])))
    psi = gr.PolynomialBump([0.0], 1.0, m=8)
    assert psi.value(np.zeros((1, 1)))[0] == 1.0
    assert gr.verify_identity_on_test_function(psi, ev) <= 1e-8


def test_identity_d3_dirac_inside_support():
    ev = gr.RankEvaluator(gr.Empirical(np.array([[0.2, 0.0, 0.1]])))
    psi = gr.PolynomialBump([0.0, 0.0, 0.0], 1.0, m=8)
    assert gr.verify_identity_on_test_function(psi, ev) <= 1e-6


def test_identity_d3_two_atoms():
    atoms = np.array([[0.3, 0.0, 0.0], [-0.2, 0.1, 0.0]])
    ev = gr.RankEvaluator(gr.Empirical(atoms, np.array([0.6, 0.4])))
    psi = gr.PolynomialBump([0.0, 0.0, 0.0], 1.0, m=8)
    assert gr.verify_identity_on_test_function(psi, ev) <= 1e-6


def test_identity_locality_away_from_atoms():
    psi1 = gr.PolynomialBump([0.0], 1.0, m=8)
    ev1 = gr.RankEvaluator(gr.Empirical(np.array([[3.0]])))
    assert gr.verify_identity_on_test_function(psi1, ev1) <= 1e-8
    psi3 = gr.PolynomialBump([5.0, 5.0, 5.0], 1.0, m=8)
    ev3 = gr.RankEvaluator(gr.Empirical(np.array([[0.2, 0.0, 0.1]])))
    assert gr.verify_identity_on_test_function(psi3, ev3) <= 1e-8
    # both sides vanish individually: psi is zero at the atom
    assert psi3.value(np.array([[0.2, 0.0, 0.1]]))[0] == 0.0


def test_identity_parity_error():
    ev = gr.RankEvaluator(gr.Empirical(np.array([[0.0, 0.0]])))
    psi = gr.PolynomialBump([0.0, 0.0], 1.0, m=8)
    with pytest.raises(ParityError):
        gr.verify_identity_on_test_function(psi, ev)


def test_bump_derivatives_match_finite_differences():
    psi = gr.PolynomialBump([0.1, -0.2, 0.0], 1.3, m=8)
    rng = np.random.default_rng(11)
    pts = rng.uniform(-0.6, 0.6, size=(12, 3))
    for x in pts:
        g = psi.gradient(x[None, :])[0]
        h = 1e-6
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (psi.value((x + e)[None, :])[0]
                  - psi.value((x - e)[None, :])[0]) / (2 * h)
            assert g[j] == pytest.approx(fd, abs=1e-7)
        h = 1e-4                       # second differences need a wider step
        lap_fd = 0.0
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            lap_fd += (psi.value((x + e)[None, :])[0]
                       - 2 * psi.value(x[None, :])[0]
                       + psi.value((x - e)[None, :])[0]) / h ** 2
        assert psi.laplacian(x[None, :])[0] == pytest.approx(lap_fd, abs=1e-5)
        gl = psi.grad_laplacian(x[None, :])[0]
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (psi.laplacian((x + e)[None, :])[0]
                  - psi.laplacian((x - e)[None, :])[0]) / (2 * h)
            assert gl[j] == pytest.approx(fd, abs=1e-5)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def test_report_serialization_roundtrip(tmp_path):
    ev = gr.RankEvaluator(gr.RadialClosedForm("cauchy", 3))
    rep = gr.reconstruct_odd_local(ev, CFG(radii=np.linspace(0.1, 2, 8)))
    csv_path = tmp_path / "curve.csv"
    rep.save_curve_csv(csv_path)
    back = gr.load_curve_csv(csv_path)
    assert np.array_equal(back["r"], rep.radii)
    assert np.array_equal(back["f_hat"], rep.f_hat)
    assert np.array_equal(back["f_reference"], rep.f_reference)
    json_path = tmp_path / "report.json"
    rep.save_json(json_path)
    import json
    with open(json_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    assert meta["method"] == "odd-local"
    assert "sup_rel_error" in meta["diagnostics"]


def test_even_d4_code_path_matches_kernel_identity():
    # single atom at the origin in d = 4: the intermediate scalar field is
    # gamma_4 * (-Delta)(div K) = gamma_4 * (d-1) * lambda_{4,1} / r^3 with
    # lambda_{4,1} = 1, so at |x| = 2 it equals gamma_4 * 3 / 8
    from georank.reconstruct import _scalar_u_and_tail
    ev = gr.RankEvaluator(gr.Empirical(np.zeros((1, 4))))
    ufunc, tail = _scalar_u_and_tail(ev, CFG(method="singular",
                                             fd_step=5e-3))
    x = np.array([[2.0, 0.0, 0.0, 0.0]])
    want = gr.gamma_d(4) * 3.0 / 8.0
    assert ufunc(x)[0] == pytest.approx(want, rel=1e-4)
    assert tail == pytest.approx(gr.gamma_d(4) * 3.0 * gr.lambda_dl(4, 1))


def test_identity_residual_shrinks_under_quadrature_refinement():
    ev = gr.RankEvaluator(gr.Empirical(np.array([[0.25, -0.1, 0.3]])))
    psi = gr.PolynomialBump([0.0, 0.0, 0.0], 1.0, m=8)
    coarse = gr.verify_identity_on_test_function(
        psi, ev, n_radial=12, n_polar=8, n_azimuth=16)
    fine = gr.verify_identity_on_test_function(
        psi, ev, n_radial=48, n_polar=32, n_azimuth=64)
    assert fine < coarse
    assert fine <= 1e-6


def test_identity_quadrature_budget_error():
    from georank.errors import BudgetError
    ev = gr.RankEvaluator(gr.Empirical(np.array([[0.25, -0.1, 0.3]])))
    psi = gr.PolynomialBump([0.0, 0.0, 0.0], 1.0, m=8)
    with pytest.raises(BudgetError):
        gr.verify_identity_on_test_function(psi, ev, quad_budget=100)


def test_even_singular_tolerance_error_when_unattainable():
    from georank.errors import ToleranceError
    # an atom cloud has no density: the pointwise reconstruction does not
    # settle under (eta, r_max) refinement at a harsh tolerance
    rng = np.random.default_rng(8)
    ev = gr.RankEvaluator(gr.Empirical(rng.standard_normal((30, 2))))
    cfg = CFG(method="singular", points=np.array([[0.2, 0.1]]),
              tolerance=1e-9)
    with pytest.raises(ToleranceError):
        gr.reconstruct_even_singular(ev, cfg)
