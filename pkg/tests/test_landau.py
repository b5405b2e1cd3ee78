import math

import numpy as np
import pytest
from scipy.special import eval_laguerre

from specgap.errors import GridTooCoarse, NegativePotentialInNonnegMode, PhiNotAdmissible, UnsupportedPreset
from specgap.landau import (
    LandauConfig,
    QuadratureGrid,
    ScaledPotential,
    asym_coeff,
    build_level_matrix,
    commutator_hs_norm,
    cross_term_hs,
    default_grid,
    kernel_matrix,
    laguerre,
    landau_kernel,
    level_counting_trend,
    make_phi,
    one_sided_limits,
    projection_defect,
    refinement_change,
    signed_count_bound,
    trace_phi_check,
)

ZERO_V = ScaledPotential("bump", (0.0, 1.0))


def test_laguerre_values():
    for n in range(7):
        assert laguerre(n, 0.0) == 1.0
    s = np.linspace(-2, 15, 41)
    np.testing.assert_array_equal(laguerre(0, s), np.ones_like(s))
    assert laguerre(1, 2.0) == -1.0
    for n in range(9):
        np.testing.assert_allclose(laguerre(n, s), eval_laguerre(n, s), rtol=1e-10, atol=1e-10)


def test_level_energies():
    cfg = LandauConfig(2.5, 3)
    assert cfg.level_energy == 2.5 * 7
    assert cfg.level_energy - cfg.with_level(2).level_energy == 2 * 2.5
    with pytest.raises(ValueError):
        LandauConfig(0.0, 0)
    with pytest.raises(ValueError):
        LandauConfig(1.0, -1)


@pytest.mark.parametrize("n", [0, 1, 3])
@pytest.mark.parametrize("B", [0.5, 1.0, 2.0])
def test_kernel_diagonal_and_symmetry(rng, n, B):
    cfg = LandauConfig(B, n)
    x = rng.normal(size=(20, 2)) * 3
    y = rng.normal(size=(20, 2)) * 3
    np.testing.assert_array_equal(landau_kernel(cfg, x, x), np.full(20, B / (2 * math.pi)))
    np.testing.assert_allclose(landau_kernel(cfg, x, y), np.conj(landau_kernel(cfg, y, x)), rtol=1e-14)
    prod = landau_kernel(cfg, x, y) * landau_kernel(cfg, y, x)
    assert np.all(np.abs(prod.imag) < 1e-15) and np.all(prod.real >= 0)


def test_lowest_level_modulus(rng):
    cfg = LandauConfig(1.3, 0)
    x, y = rng.normal(size=(10, 2)), rng.normal(size=(10, 2))
    r2 = np.sum((x - y) ** 2, axis=1)
    np.testing.assert_allclose(np.abs(landau_kernel(cfg, x, y)), cfg.density * np.exp(-cfg.B * r2 / 4))


def test_kernel_reproduces_itself():
    # int P(x, z) P(z, y) dz = P(x, y) by quadrature on a generous box
    cfg = LandauConfig(1.0, 1)
    grid = QuadratureGrid(9.0, 120)
    x, y = np.array([[0.3, -0.2]]), np.array([[-0.4, 0.5]])
    lhs = (kernel_matrix(cfg, x, grid.nodes) * grid.weights) @ kernel_matrix(cfg, grid.nodes, y)
    np.testing.assert_allclose(lhs, landau_kernel(cfg, x, y)[:, None], atol=1e-8)


def test_quadrature_grid():
    g = QuadratureGrid(2.0, 8)
    assert g.size == 64
    assert abs(g.weights.sum() - g.area) < 1e-10
    assert np.all(g.weights > 0)
    assert np.all(np.abs(g.nodes) < 2.0)
    assert g.refined().size == 256
    cfg = LandauConfig(4.0, 0)
    d = default_grid(cfg, ScaledPotential("bump").at(3.0), node_cap=1000)
    assert d.half_width == pytest.approx(3.0 + 1.5)
    assert d.n_side == 31 and d.size <= 1000


def test_potential_scaling():
    pot = ScaledPotential("bump", alpha=1.0, beta=2.0, t=2.0)
    assert pot.p == 3.0
    pts = np.array([[1.0, 2.0], [0.5, -0.5]])
    np.testing.assert_allclose(pot(pts), pot.base(np.array([[0.5, 0.5], [0.25, -0.125]])))
    np.testing.assert_allclose(ScaledPotential("bump")(np.array([[0.5, 0.0], [2.0, 0.0]])), [0.75, 0.0])
    with pytest.raises(UnsupportedPreset):
        ScaledPotential("square_well")


def test_custom_grid_potential():
    vals = [0.0, 1.0, 2.0, 3.0]
    pot = ScaledPotential("custom_grid", (-1, 1, -1, 1, 2, 2, *vals))
    np.testing.assert_allclose(pot(np.array([[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5], [3, 0]])),
                               [0, 1, 2, 3, 0])
    assert pot.superlevel_measure(1.5) == 2.0
    assert pot.superlevel_measure(2.0, closed=True) == 2.0
    assert pot.integral() == pytest.approx(6.0)


def test_integrals_match_closed_forms():
    assert ScaledPotential("bump").integral() == pytest.approx(math.pi / 2)
    assert ScaledPotential("gaussian", (2.0, 0.7)).at(3.0).integral() == pytest.approx(9 * 2 * math.pi * 0.49 * 2)
    assert ScaledPotential("disk_step", (2.0, 1.5)).integral() == pytest.approx(2 * math.pi * 2.25)


def test_asym_coeff_presets():
    cfg = LandauConfig(1.0, 0)
    for a in (0.1, 0.5, 0.9):
        c = asym_coeff(ScaledPotential("bump"), cfg, a)
        assert c.open_value == pytest.approx((1 - a) / 2)
        assert c.open_value == c.closed_value
    assert asym_coeff(ScaledPotential("bump"), cfg, 1.0).open_value == 0.0
    assert asym_coeff(ScaledPotential("bump"), cfg, 3.0).closed_value == 0.0
    g = asym_coeff(ScaledPotential("gaussian", (1.0, 1.0)), LandauConfig(2.0, 0), 0.5)
    assert g.open_value == pytest.approx(2.0 * math.log(2.0))
    ann = asym_coeff(ScaledPotential("annulus", (1.0, 2.0, 0.2)), cfg, 0.5)
    d = 0.2 * math.sqrt(2 * math.log(2))
    assert ann.open_value == pytest.approx((1 / (2 * math.pi)) * math.pi * ((2 + d) ** 2 - (2 - d) ** 2))
    with pytest.raises(ValueError):
        asym_coeff(ScaledPotential("bump"), cfg, 0.0)


def test_fat_level_set_bracket():
    cfg = LandauConfig(1.0, 0)
    c = asym_coeff(ScaledPotential("disk_step"), cfg, 1.0)
    assert c.open_value == 0.0 and c.closed_value == pytest.approx(0.5)
    assert c.is_bracket
    lim = one_sided_limits(ScaledPotential("disk_step"), cfg, 1.0)
    np.testing.assert_allclose(lim["right"], c.open_value)
    np.testing.assert_allclose(lim["left"], c.closed_value)


def test_one_sided_limits_continuous_preset():
    cfg = LandauConfig(1.0, 0)
    lim = one_sided_limits(ScaledPotential("bump"), cfg, 0.5)
    err_r = np.abs(lim["right"] - lim["coeff"].open_value)
    err_l = np.abs(lim["left"] - lim["coeff"].closed_value)
    assert np.all(np.diff(err_r) < 0) and np.all(np.diff(err_l) < 0)
    assert err_r[-1] < 1e-6


def test_level_matrix_zero_potential():
    cfg = LandauConfig(1.0, 0)
    lm = build_level_matrix(cfg, ZERO_V, QuadratureGrid(3.0, 16))
    assert lm.dim == 0 and lm.count_above(0.1) == 0


def test_level_matrix_properties():
    cfg = LandauConfig(1.0, 1)
    pot = ScaledPotential("bump").at(2.0)
    grid = default_grid(cfg, pot, node_cap=1024)
    lm = build_level_matrix(cfg, pot, grid)
    K = lm.entries
    assert np.max(np.abs(K - K.conj().T)) <= 1e-10
    V = pot(grid.nodes)
    assert np.trace(K).real == pytest.approx(cfg.density * np.sum(grid.weights * V), rel=1e-12)
    assert np.trace(K).real == pytest.approx(cfg.density * pot.integral(), rel=0.01)
    ev = lm.eigenvalues
    assert ev[-1] <= pot.sup * 1.05 and ev[0] > -1e-10
    counts = [lm.count_above(a) for a in (0.1, 0.3, 0.5, 0.7)]
    assert counts == sorted(counts, reverse=True)
    assert lm.refinement and lm.refinement[1] < 0.05


def test_level_matrix_rejects_negative_potential():
    cfg = LandauConfig(1.0, 0)
    pot = ScaledPotential("custom_grid", (-1, 1, -1, 1, 1, 1, -0.5))
    with pytest.raises(NegativePotentialInNonnegMode):
        build_level_matrix(cfg, pot, QuadratureGrid(4.0, 16))


def test_split_mode_and_signed_bound():
    cfg = LandauConfig(1.0, 0)
    pot = ScaledPotential("custom_grid", (-2, 2, -2, 2, 2, 1, 1.0, -1.0))
    grid = QuadratureGrid(5.0, 24)
    lm = build_level_matrix(cfg, pot, grid, sign_mode="split", check_refinement=False)
    assert np.max(np.abs(lm.entries - lm.entries.conj().T)) <= 1e-10
    assert lm.eigenvalues[0] < 0 < lm.eigenvalues[-1]
    lhs, rhs = signed_count_bound(cfg, pot, 0.2, grid)
    assert lhs <= rhs
    # split mode agrees with the symmetric form for V >= 0
    bump = ScaledPotential("bump").at(1.5)
    g2 = QuadratureGrid(4.5, 32)
    a = build_level_matrix(cfg, bump, g2, sign_mode="split", check_refinement=False).eigenvalues_above(1e-2)
    b = build_level_matrix(cfg, bump, g2, check_refinement=False).eigenvalues_above(1e-2)
    np.testing.assert_allclose(a[: len(b)], b, rtol=0.05)


def test_refinement_detects_coarse_grid():
    cfg = LandauConfig(1.0, 0)
    pot = ScaledPotential("bump").at(4.0)
    with pytest.raises(GridTooCoarse):
        build_level_matrix(cfg, pot, default_grid(cfg, pot, node_cap=64))
    assert refinement_change(np.array([1.0, 0.5]), np.array([1.01, 0.49])) == pytest.approx(0.02)


def test_projection_defect_small():
    cfg = LandauConfig(1.0, 0)
    assert projection_defect(cfg, QuadratureGrid(4.0, 40)) < 0.02


def test_commutator_and_cross_terms():
    cfg = LandauConfig(1.0, 0)
    assert commutator_hs_norm(cfg, ZERO_V, QuadratureGrid(3.0, 16)) == 0.0
    assert cross_term_hs(cfg, 1, ZERO_V, QuadratureGrid(3.0, 16)) == 0.0
    pot = ScaledPotential("bump").at(2.0)
    grid = default_grid(cfg, pot, 1024)
    comm = commutator_hs_norm(cfg, pot, grid)
    cross = cross_term_hs(cfg, 1, pot, grid)
    assert comm > 0 and 0 < cross <= comm
    with pytest.raises(ValueError):
        cross_term_hs(cfg, 0, pot, grid)


def test_cross_term_matches_composed_kernel():
    # ||P_0 V P_1||_HS^2 against the Frobenius norm of the discretised product
    cfg0, cfg1 = LandauConfig(1.0, 0), LandauConfig(1.0, 1)
    pot = ScaledPotential("gaussian", (1.0, 0.8))
    grid = QuadratureGrid(6.0, 36)
    x, w, V = grid.nodes, grid.weights, pot(grid.nodes)
    sw = np.sqrt(w)
    K0 = kernel_matrix(cfg0, x, left=sw, right=sw)
    K1 = kernel_matrix(cfg1, x, left=sw, right=sw)
    direct = np.sum(np.abs(K0 @ (V[:, None] * K1)) ** 2)
    assert cross_term_hs(cfg0, 1, pot, grid) == pytest.approx(direct, rel=1e-3)


def test_trace_phi_check():
    cfg = LandauConfig(1.0, 0)
    assert trace_phi_check(cfg, ZERO_V, "identity", grid=QuadratureGrid(3.0, 16)) == (0.0, 0.0, 0.0)
    lhs, rhs, bound = trace_phi_check(cfg, ScaledPotential("bump").at(2.0), "identity")
    assert abs(lhs - rhs) <= 0.01 * rhs and bound == 0.0
    # for phi(s) = s^2 the deficit equals ||P V (I - P)||_HS^2 exactly
    lhs, rhs, bound = trace_phi_check(cfg, ScaledPotential("bump").at(2.0), "square")
    assert rhs - lhs == pytest.approx(bound, rel=0.02)
    lhs, rhs, bound = trace_phi_check(cfg, ScaledPotential("bump").at(3.0), "smoothed_step", a=0.5, width=0.2)
    assert abs(lhs - rhs) <= bound


def test_make_phi_admissibility():
    phi, d2 = make_phi("smoothed_step", 0.5, 0.2)
    assert phi(0.0) == 0.0 and phi(1.0) == 1.0 and d2 == pytest.approx(150.0)
    with pytest.raises(PhiNotAdmissible):
        make_phi("smoothed_step", 0.05, 0.2)
    with pytest.raises(PhiNotAdmissible):
        make_phi("cosine")


def test_trend_zero_potential():
    rep = level_counting_trend(LandauConfig(1.0, 0), ZERO_V, [1.0, 2.0], 0.5, node_cap=256)
    np.testing.assert_array_equal(rep.scaled_values, 0)
