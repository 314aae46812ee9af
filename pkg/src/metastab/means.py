"""The logarithmic mean and related scalar inequalities."""

import math

from .errors import NonPositiveArgument, OutOfRange

_NEAR_EQUAL = 1e-12


def log_mean(a, b):
    """Logarithmic mean (a-b)/(log a - log b), symmetric and 1-homogeneous.

    Near-equal arguments switch to the series (a+b)/2 * (1 - u^2/6 + ...)
    with u = (a-b)/(a+b), which is where the defining quotient loses all
    of its digits.
    """
    if a <= 0.0 or b <= 0.0:
        raise NonPositiveArgument("log_mean needs positive arguments")
    if a == b:
        return float(a)
    if abs(a - b) <= _NEAR_EQUAL * max(a, b):
        u = (a - b) / (a + b)
        return 0.5 * (a + b) * (1.0 - u * u / 6.0)
    return (a - b) / (math.log(a) - math.log(b))


def log_mean_bounds(a, b):
    """(geometric, logarithmic, arithmetic) mean triple; the ordering
    sqrt(ab) <= Lambda <= (a+b)/2 is strict unless a == b."""
    if a <= 0.0 or b <= 0.0:
        raise NonPositiveArgument("means need positive arguments")
    return math.sqrt(a * b), log_mean(a, b), 0.5 * (a + b)


def upper_bound_check(p):
    """Strict bound Lambda(p,1-p)/(p(1-p)) < min(1/(p log(1/p)), 1/((1-p)log(1/(1-p))))."""
    if not 0.0 < p < 1.0:
        raise OutOfRange("p must lie in (0,1)")
    lhs = log_mean(p, 1.0 - p) / (p * (1.0 - p))
    rhs = min(1.0 / (p * math.log(1.0 / p)),
              1.0 / ((1.0 - p) * math.log(1.0 / (1.0 - p))))
    return lhs < rhs


def h_p(p, t):
    """The ratio whose minimum over t in (0,1) is Lambda(p,1-p)/(p(1-p)).

        h_p(t) = (sqrt(t/p) - sqrt((1-t)/(1-p)))^2
                 / (t log(t/p) + (1-t) log((1-t)/(1-p)))

    At t == p both numerator and denominator vanish to second order; the
    removable value is evaluated as a two-sided offset average since no
    closed form is displayed.
    """
    if not 0.0 < p < 1.0:
        raise OutOfRange("p must lie in (0,1)")
    if not 0.0 < t < 1.0:
        raise OutOfRange("t must lie in (0,1)")
    if abs(t - p) <= 1e-9:
        d = 1e-7
        lo = max(p - d, 0.5 * p)
        hi = min(p + d, 0.5 * (1.0 + p))
        return 0.5 * (h_p(p, lo) + h_p(p, hi))
    d = t - p
    if abs(d) <= 0.1 * min(p, 1.0 - p):
        # cancellation-free forms: both numerator and denominator vanish
        # to second order at t == p
        la = math.log1p(d / p)
        lb = math.log1p(-d / (1.0 - p))
        root_diff = math.expm1(0.5 * la) - math.expm1(0.5 * lb)
        num = root_diff * root_diff
        den = t * la + (1.0 - t) * lb
    else:
        num = (math.sqrt(t / p) - math.sqrt((1.0 - t) / (1.0 - p))) ** 2
        den = t * math.log(t / p) + (1.0 - t) * math.log((1.0 - t) / (1.0 - p))
    return num / den


def h_p_minimum(p):
    """Closed-form minimum of h_p: attained at t = 1-p with value
    Lambda(p,1-p)/(p(1-p))."""
    if not 0.0 < p < 1.0:
        raise OutOfRange("p must lie in (0,1)")
    return log_mean(p, 1.0 - p) / (p * (1.0 - p))
