import math

import numpy as np
import pytest

from metastab.errors import DriftViolated, NonPositive
from metastab.expr import eval_jets, parse_potential
from metastab.landscape import Box, LandscapeGraph, find_critical_points
from metastab.lyapunov import (
    build_eps_modification,
    drift_quantity,
    lsi_from_lyapunov,
    lyapunov_pipeline,
    pi_from_lyapunov,
    second_moment_bound,
    verify_drift,
)
from metastab.measures import GibbsSpec, quadrature_partition
from metastab.oracle1d import fd_spectral_gap


@pytest.fixture(scope="module")
def dw():
    p = parse_potential("(x1^2 - 1)^2", 1)
    box = Box.cube(-4.5, 4.5, 1)
    cps = find_critical_points(p, Box.cube(-3.5, 3.5, 1))
    return p, box, cps


def test_pure_minimum_no_patch():
    p = parse_potential("x1^2/2", 1)
    cps = find_critical_points(p, Box.cube(-5, 5, 1))
    mod = build_eps_modification(p, cps, 0.1, 6.0)
    assert mod.patches == []
    assert mod.c_h_tilde == 0.0


def test_1d_saddle_patch_constraints(dw):
    p, box, cps = dw
    mod = build_eps_modification(p, cps, 0.1, 6.0)
    assert len(mod.patches) == 1
    patch = mod.patches[0]
    # n=1, l=1: tilde delta = delta + |lambda| > 0 for any delta > 0
    tilde = -((1 - 2) * patch.delta + (-4.0))
    assert tilde > 0
    assert patch.z_max == 36.0 * 0.1


def test_2d_saddle_delta_auto():
    p = parse_potential("(x1^2 - 1)^2 + 2*x2^2", 2)
    cps = find_critical_points(p, Box.cube(-2.5, 2.5, 2))
    mod = build_eps_modification(p, cps, 0.1, 6.0)
    patch = mod.patches[0]
    # lambda = (-4, 4), l=1, n=2: (n-2l) delta + lambda_1 = -4 < 0 always;
    # delta <= 2 binding -> auto 1.8
    assert abs(patch.delta - 1.8) < 1e-12


def test_patch_locality_and_eps_closeness(dw):
    p, box, cps = dw
    for eps in (0.2, 0.1, 0.05):
        mod = build_eps_modification(p, cps, eps, 6.0)
        pts = np.linspace(-4.5, 4.5, 3001)[:, None]
        v, _, _ = mod.jets(pts)
        v0, _, _ = eval_jets(p, pts)
        diff = np.abs(v - v0)
        r = mod.patches[0].euclid_radius()
        assert diff[np.abs(pts[:, 0]) > r].max() == 0.0
        assert abs(diff.max() - mod.c_h_tilde * eps) <= 1e-12
    # C_H~ is eps-independent
    c_vals = {build_eps_modification(p, cps, e, 6.0).c_h_tilde
              for e in (0.2, 0.1, 0.05)}
    assert len(c_vals) == 1


def test_patched_jets_match_finite_differences(dw):
    p, box, cps = dw
    mod = build_eps_modification(p, cps, 0.1, 6.0)
    h = 1e-6
    for x0 in (0.0, 0.11, 0.45, 0.9, 1.3):
        g = mod.jets([[x0]])[1][0, 0]
        fd = (mod.jets([[x0 + h]])[0][0] - mod.jets([[x0 - h]])[0][0]) / (2 * h)
        assert abs(g - fd) < 1e-7 * (1.0 + abs(fd))
        hh = mod.jets([[x0]])[2][0, 0]
        fd2 = (mod.jets([[x0 + h]])[1][0, 0]
               - mod.jets([[x0 - h]])[1][0, 0]) / (2 * h)
        assert abs(hh - fd2) < 1e-6 * (1.0 + abs(fd2))


def test_drift_convex_closed_form():
    """H = x^2/2, a=4: drift at |x| = a sqrt(eps) is (1/eps)(1/2 - a^2/4),
    so lambda0 >= a^2/4 - 1/2."""
    p = parse_potential("x1^2/2", 1)
    cps = find_critical_points(p, Box.cube(-8, 8, 1))
    for eps in (0.1, 0.05):
        mod = build_eps_modification(p, cps, eps, 4.0)
        rep = verify_drift(mod, eps, 4.0, Box.cube(-8, 8, 1), 4097, cps)
        assert rep.lambda0 >= 4.0 ** 2 / 4.0 - 0.5 - 1e-6


def test_drift_double_well_passes(dw):
    p, box, cps = dw
    minima = [c for c in cps if c.morse_index == 0]
    for eps in (0.1, 0.05):
        mod = build_eps_modification(p, cps, eps, 6.0)
        rep = verify_drift(mod, eps, 6.0, box, 4097, minima)
        assert rep.drift_margin_grid < 0.0
        assert rep.lambda0 > 0.0 and rep.b0 > 0.0


def test_drift_violated_small_a(dw):
    """Exclusion balls below the near-minimum positive-drift region."""
    p, box, cps = dw
    minima = [c for c in cps if c.morse_index == 0]
    mod = build_eps_modification(p, cps, 0.05, 0.4)
    with pytest.raises(DriftViolated) as err:
        verify_drift(mod, 0.05, 0.4, box, 8193, minima)
    assert len(err.value.points) > 0


def test_pipeline_escalates(dw):
    p, box, cps = dw
    mod, rep = lyapunov_pipeline(p, cps, 0.1, box, a_start=0.4, a_max=48.0,
                                 grid_resolution=4097)
    assert rep.a > 0.4
    assert rep.drift_margin_grid < 0.0


def test_formula_values():
    assert abs(pi_from_lyapunov(10.0, 1.0, 5.0) - 50.0 / 6.0) < 1e-12
    # b -> 0 limit
    assert abs(pi_from_lyapunov(10.0, 0.0, 5.0) - 10.0) < 1e-12
    inv_alpha, c1, c2 = lsi_from_lyapunov(10.0, 1.0, 1.0, 0.0, 1.0, 0.0)
    assert abs(inv_alpha - (2.0 * math.sqrt(0.15) + 2.0)) < 1e-12
    assert abs(inv_alpha - (2 * math.sqrt(c1) + c2)) < 1e-15
    # lambda -> infinity with K_H = b = mu2 = 0 gives 2/rho
    big, _, _ = lsi_from_lyapunov(1e12, 0.0, 4.0, 0.0, 1.0, 0.0)
    assert abs(big - 2.0 / 4.0) < 1e-5
    assert second_moment_bound(10.0, 1.0, 0.5) == 0.125
    assert second_moment_bound(10.0, 0.0, 0.5) == 0.1
    with pytest.raises(NonPositive):
        pi_from_lyapunov(-1.0, 1.0, 1.0)
    with pytest.raises(NonPositive):
        lsi_from_lyapunov(1.0, -1.0, 1.0, 0.0, 1.0, 0.0)
    with pytest.raises(NonPositive):
        second_moment_bound(0.0, 1.0, 1.0)


def test_criterion9_scaling(dw, double_well):
    """(1/rho)/eps and 1/alpha within factor 3 across eps in {0.1, 0.05}."""
    p, box, cps = dw
    inv_rho_over_eps = {}
    inv_alpha = {}
    for eps in (0.1, 0.05):
        mod, rep = lyapunov_pipeline(p, cps, eps, box, grid_resolution=4097)
        rho_r = 8.0 / eps  # convexity at the minimum
        rho = pi_from_lyapunov(rep, rho_r=rho_r)
        inv_rho_over_eps[eps] = 1.0 / (rho * eps)
        # local-basin data for the LSI formula
        basin = Box(np.array([0.02]), np.array([2.5]))
        minima = [c for c in cps if c.morse_index == 0 and c.location[0] > 0]
        graph = LandscapeGraph(minima=minima, saddles=[], edges={},
                               delta_gap=math.inf)
        loc = GibbsSpec(p, eps, basin, graph)
        gap = fd_spectral_gap(loc, 2048, check_resolution=False)
        pts, _ = loc.midpoint_grid(4096)
        hv = loc.grid_values(4096)
        w = np.exp(-hv / eps)
        w /= w.sum()
        mu2 = float(np.sum(w * (pts[:, 0] - 1.0) ** 2))
        lam, b = rep.lambda0 / eps, rep.b0 / eps
        inv_alpha[eps], _, _ = lsi_from_lyapunov(lam, b, gap / eps,
                                                 rep.k_h_tilde, eps, mu2)
    r1 = inv_rho_over_eps[0.1] / inv_rho_over_eps[0.05]
    r2 = inv_alpha[0.1] / inv_alpha[0.05]
    assert max(r1, 1.0 / r1) < 3.0
    assert max(r2, 1.0 / r2) < 3.0


def test_second_moment_oracle(dw):
    """Quadrature second moment about the minimum is below
    e^{2 C_H~} x (1 + b R^2)/lambda (Holley-Stroock transfer)."""
    p, box, cps = dw
    eps = 0.05
    mod, rep = lyapunov_pipeline(p, cps, eps, box, grid_resolution=4097)
    lam, b = rep.lambda0 / eps, rep.b0 / eps
    bound = second_moment_bound(lam, b, rep.radius)
    basin = Box(np.array([0.02]), np.array([2.5]))
    minima = [c for c in cps if c.morse_index == 0 and c.location[0] > 0]
    graph = LandscapeGraph(minima=minima, saddles=[], edges={},
                           delta_gap=math.inf)
    loc = GibbsSpec(p, eps, basin, graph)
    pts, _ = loc.midpoint_grid(4096)
    hv = loc.grid_values(4096)
    w = np.exp(-hv / eps)
    w /= w.sum()
    mu2 = float(np.sum(w * (pts[:, 0] - 1.0) ** 2))
    assert mu2 <= math.exp(2.0 * rep.c_h_tilde) * bound
    # Holley-Stroock bookkeeping identity
    assert abs(rep.holley_stroock_factor() - math.exp(-2 * rep.c_h_tilde)) == 0


def test_hessian_lower_bound_finite(dw):
    p, box, cps = dw
    mod, rep = lyapunov_pipeline(p, cps, 0.1, box, grid_resolution=2049)
    assert math.isfinite(rep.k_h_tilde)
    assert rep.k_h_tilde >= 0.0
    # the patched well on this box has a genuinely indefinite region
    assert rep.k_h_tilde >= 4.0 - 1e-9
