import math

import numpy as np
import pytest
from scipy.integrate import quad

from metastab.errors import NonPositiveArgument, OutOfRange
from metastab.means import h_p, h_p_minimum, log_mean, log_mean_bounds, upper_bound_check


def test_log_mean_values():
    assert log_mean(1.0, 1.0) == 1.0
    assert abs(log_mean(2.0, 1.0) - 1.0 / math.log(2.0)) < 1e-15
    # one-homogeneity
    assert abs(log_mean(4.0, 2.0) - 2.0 * log_mean(2.0, 1.0)) < 1e-12


def test_log_mean_symmetry_exact():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = rng.uniform(1e-8, 1e4, 2)
        assert log_mean(a, b) == log_mean(b, a)


def test_log_mean_near_equal_branch():
    a = 1.0
    b = 1.0 + 3e-13
    val = log_mean(a, b)
    assert abs(val - 0.5 * (a + b)) < 1e-12


def test_log_mean_errors():
    with pytest.raises(NonPositiveArgument):
        log_mean(-1.0, 2.0)
    with pytest.raises(NonPositiveArgument):
        log_mean_bounds(1.0, 0.0)


def test_bounds_triple():
    g, l, a = log_mean_bounds(1.0, 1.0)
    assert (g, l, a) == (1.0, 1.0, 1.0)
    g, l, a = log_mean_bounds(1.0, 4.0)
    assert abs(l - 3.0 / math.log(4.0)) < 1e-14
    assert g < l < a
    g, l, a = log_mean_bounds(1e-6, 1.0)
    assert abs(l - (1.0 - 1e-6) / (6.0 * math.log(10.0))) < 1e-12
    assert g < l < a


def test_min_max_envelope_random():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        a, b = rng.uniform(1e-6, 1e3, 2)
        lam = log_mean(a, b)
        assert min(a, b) - 1e-12 <= lam <= max(a, b) + 1e-12


def test_monotonicity_random_grid():
    rng = np.random.default_rng(13)
    for _ in range(500):
        a = rng.uniform(0.01, 10.0)
        b = rng.uniform(0.01, 10.0)
        db = rng.uniform(1e-4, 0.1)
        assert log_mean(a, b + db) > log_mean(a, b)
        assert log_mean(a + db, b) > log_mean(a, b)


def test_integral_representations():
    """Quadrature oracles for Lambda = int a^s b^{1-s} ds and both integral
    forms of 1/Lambda, to 1e-10."""
    rng = np.random.default_rng(19)
    for _ in range(20):
        a, b = rng.uniform(0.05, 20.0, 2)
        lam = log_mean(a, b)
        i1, _ = quad(lambda s: a ** s * b ** (1 - s), 0, 1, epsrel=1e-13)
        assert abs(i1 - lam) <= 1e-10 * lam
        i2, _ = quad(lambda t: 1.0 / (t * a + (1 - t) * b), 0, 1, epsrel=1e-13)
        assert abs(i2 - 1.0 / lam) <= 1e-10 / lam
        i3, _ = quad(lambda t: 1.0 / ((a + t) * (b + t)), 0, np.inf,
                     epsrel=1e-13)
        assert abs(i3 - 1.0 / lam) <= 1e-10 / lam


def test_h_p_symmetric_case():
    assert abs(h_p(0.5, 0.5) - 2.0) < 1e-6  # removable point, offset average
    assert abs(h_p_minimum(0.5) - 2.0) < 1e-15


def test_h_p_grid_minimum():
    p = 0.2
    ts = np.linspace(1e-5, 1 - 1e-5, 100_000)
    vals = np.array([h_p(p, t) for t in ts])
    k = int(np.argmin(vals))
    assert abs(ts[k] - 0.8) <= 1e-3
    assert abs(vals[k] - log_mean(0.2, 0.8) / 0.16) <= 1e-4


def test_h_p_random_argmin_and_value():
    rng = np.random.default_rng(29)
    for _ in range(100):
        p = rng.uniform(0.05, 0.95)
        ts = np.linspace(1e-4, 1 - 1e-4, 4001)
        vals = np.array([h_p(p, t) for t in ts])
        k = int(np.argmin(vals))
        spacing = ts[1] - ts[0]
        assert abs(ts[k] - (1.0 - p)) <= 2 * spacing
        assert abs(h_p(p, 1.0 - p) - h_p_minimum(p)) <= 1e-10 \
            or abs(1.0 - p - p) < 1e-6


def test_h_p_boundary_limit():
    p = 0.3
    lim = 1.0 / ((1.0 - p) * math.log(1.0 / (1.0 - p)))
    assert abs(h_p(p, 1e-9) - lim) < 1e-3 * lim


def test_h_p_out_of_range():
    with pytest.raises(OutOfRange):
        h_p(0.0, 0.5)
    with pytest.raises(OutOfRange):
        h_p(0.5, 1.0)


def test_upper_bound_check():
    assert upper_bound_check(0.5)   # equality case is log 2 < 1
    assert upper_bound_check(0.01)
    assert upper_bound_check(0.99)
    for p in np.linspace(0.001, 0.999, 199):
        assert upper_bound_check(float(p))
