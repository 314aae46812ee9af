import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metastab.errors import (
    DimensionMismatch,
    DomainError,
    PotentialSyntaxError,
    UnknownIdentifier,
)
from metastab.expr import (
    eval_jet2,
    eval_values,
    format_expr,
    parse_potential,
    unpack_hessian,
)


def test_parse_examples():
    p = parse_potential("(x1^2 - 1)^2", 1)
    assert p.dim == 1
    q = parse_potential("(x1^2-1)^2 + 2*x2^2", 2)
    assert q.dim == 2


def test_dangling_operator_position():
    with pytest.raises(PotentialSyntaxError) as err:
        parse_potential("(x1^2 - 1)^2 +", 1)
    assert err.value.position == 14


def test_unknown_identifier_and_abs_unsupported():
    with pytest.raises(UnknownIdentifier):
        parse_potential("abs(x1)", 1)
    with pytest.raises(UnknownIdentifier):
        parse_potential("y + 1", 1)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        parse_potential("x2^2", 1)


def test_jet_quartic():
    p = parse_potential("(x1^2 - 1)^2", 1)
    j = eval_jet2(p, [2.0])
    assert j.value == 9.0
    assert j.gradient[0] == 24.0
    assert j.hessian[0, 0] == 44.0
    j0 = eval_jet2(p, [0.0])
    assert j0.value == 1.0
    assert j0.gradient[0] == 0.0
    assert j0.hessian[0, 0] == -4.0


def test_jet_2d_minimum():
    p = parse_potential("(x1^2-1)^2 + 2*x2^2", 2)
    j = eval_jet2(p, [1.0, 0.0])
    assert j.value == 0.0
    assert np.all(j.gradient == 0.0)
    assert np.allclose(j.hessian, np.diag([8.0, 4.0]))


def test_precedence_unary_minus_vs_power():
    p = parse_potential("-x1^2", 1)
    assert eval_jet2(p, [3.0]).value == -9.0
    q = parse_potential("2^-2", 1)
    assert eval_jet2(q, [0.0]).value == 0.25
    r = parse_potential("2^3^2", 1)  # right associative
    assert eval_jet2(r, [0.0]).value == 512.0


def test_pi_and_functions():
    p = parse_potential("sin(pi*x1) + cos(x1) + exp(x1) + log(x1) + sqrt(x1)", 1)
    x = 0.7
    j = eval_jet2(p, [x])
    expected = (math.sin(math.pi * x) + math.cos(x) + math.exp(x)
                + math.log(x) + math.sqrt(x))
    assert abs(j.value - expected) < 1e-14


def test_domain_errors():
    p = parse_potential("log(x1)", 1)
    with pytest.raises(DomainError):
        eval_jet2(p, [-1.0])
    q = parse_potential("sqrt(x1)", 1)
    with pytest.raises(DomainError):
        eval_jet2(q, [-0.5])
    r = parse_potential("x1^0.5", 1)
    with pytest.raises(DomainError):
        eval_jet2(r, [-1.0])


def _random_poly(rng, n, degree=6):
    terms = []
    for _ in range(rng.integers(2, 6)):
        powers = rng.integers(0, degree + 1, n)
        while powers.sum() > degree:
            powers = rng.integers(0, degree + 1, n)
        coef = rng.uniform(-2, 2)
        factors = ["%.6f" % coef]
        for k, e in enumerate(powers):
            if e:
                factors.append("x%d^%d" % (k + 1, e))
        terms.append("*".join(factors))
    return " + ".join(terms)


def test_derivatives_match_finite_differences():
    """Gradient and Hessian agree with central differences of the value to
    relative error <= 1e-6 at scaled step 1e-4."""
    rng = np.random.default_rng(11)
    for n in (1, 2, 3):
        for _ in range(10):
            p = parse_potential(_random_poly(rng, n), n)
            x = rng.uniform(-1.5, 1.5, n)
            j = eval_jet2(p, x)
            scale = 1.0 + abs(j.value)
            h = 1e-4
            for k in range(n):
                e = np.zeros(n)
                e[k] = h
                fd = (eval_jet2(p, x + e).value
                      - eval_jet2(p, x - e).value) / (2 * h)
                assert abs(fd - j.gradient[k]) <= 2e-6 * (1.0 + abs(fd) + scale)
                fd2 = (eval_jet2(p, x + e).gradient
                       - eval_jet2(p, x - e).gradient) / (2 * h)
                for q in range(n):
                    assert abs(fd2[q] - j.hessian[k, q]) <= \
                        2e-6 * (1.0 + abs(fd2[q]) + scale)


def test_hessian_bitwise_symmetric():
    rng = np.random.default_rng(5)
    p = parse_potential(_random_poly(rng, 3), 3)
    for _ in range(20):
        j = eval_jet2(p, rng.uniform(-1, 1, 3))
        h = j.hessian
        assert np.array_equal(h, h.T)  # exact, by packed-triangle storage


def test_roundtrip_through_pretty_printer():
    rng = np.random.default_rng(23)
    sources = [
        "(x1^2 - 1)^2",
        "(x1^2-1)^2 + 2*x2^2",
        "sin(x1)*cos(x2) - exp(x1/4) + 3.5e-1*x2^3",
        "-x1^2 + x1*-2 + 2^-x1" if False else "-x1^2 + 2*x1",
        "x1/x2/2 - x1^2^3",
    ]
    for n, src in ((1, sources[0]), (2, sources[1]), (2, sources[2]),
                   (1, sources[3]), (2, sources[4])):
        p = parse_potential(src, n)
        q = parse_potential(format_expr(p.expr), n)
        pts = rng.uniform(0.3, 1.5, (100, n))
        assert np.array_equal(eval_values(p, pts), eval_values(q, pts))


@settings(max_examples=60, derandomize=True, deadline=None)
@given(st.floats(min_value=-3, max_value=3, allow_nan=False),
       st.floats(min_value=-3, max_value=3, allow_nan=False))
def test_batch_matches_pointwise(x, y):
    p = parse_potential("(x1^2-1)^2 + 2*x2^2 + sin(x1*x2)", 2)
    single = eval_jet2(p, [x, y])
    vals, grads, hess = p.jets(np.array([[x, y]]))
    assert vals[0] == single.value
    assert np.array_equal(grads[0], single.gradient)
    assert np.array_equal(unpack_hessian(hess, 2)[0], single.hessian)


def test_immutability():
    p = parse_potential("x1^2", 1)
    with pytest.raises((AttributeError, TypeError)):
        p.expr.value = None  # frozen dataclass
