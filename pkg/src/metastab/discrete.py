"""Finite-mixture variance/entropy calculus and discrete log-Sobolev bounds.

Entropy convention throughout: Ent_mu(f) = int f log(f / int f dmu) dmu,
with 0 log 0 = 0.  For a discrete measure with weights Z_i this reads
sum_i Z_i f_i log(f_i / sum_j Z_j f_j).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NegativeFunction, NonPositive, OutOfRange
from .means import log_mean


@dataclass(frozen=True)
class DiscreteMeasure:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0.0):
            raise NonPositive("weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise NonPositive("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "weights", w)

    @property
    def m(self):
        return len(self.weights)


@dataclass(frozen=True)
class ComponentStats:
    mean: np.ndarray            # E_{mu_i}(f)
    second_moment: np.ndarray   # E_{mu_i}(f^2)
    local_variance: np.ndarray
    local_entropy: np.ndarray   # Ent_{mu_i}(f) (of whatever f the caller used)

    @staticmethod
    def from_moments(mean, second_moment, local_entropy=None):
        mean = np.asarray(mean, dtype=float)
        second = np.asarray(second_moment, dtype=float)
        if np.any(second < mean ** 2 - 1e-12 * np.maximum(second, 1.0)):
            raise NegativeFunction("second moments below squared means")
        var = np.maximum(second - mean ** 2, 0.0)
        ent = (np.zeros_like(mean) if local_entropy is None
               else np.asarray(local_entropy, dtype=float))
        return ComponentStats(mean, second, var, ent)


def discrete_entropy(weights, values):
    """Ent of a nonnegative function on a finite measure."""
    w = np.asarray(weights, dtype=float)
    f = np.asarray(values, dtype=float)
    if np.any(f < 0.0):
        raise NegativeFunction("entropy needs a nonnegative function")
    mean = float(np.sum(w * f))
    if mean == 0.0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(f > 0.0, w * f * np.log(f / mean), 0.0)
    return float(np.sum(terms))


def split_variance(z, s):
    """Mixture variance split into local and mean-difference parts:

        Var = sum_i Z_i Var_i + sum_{i<j} Z_i Z_j (E_i - E_j)^2
    """
    w = z.weights
    if len(s.mean) != len(w):
        raise DimensionMismatch("component count mismatch")
    local = float(np.sum(w * s.local_variance))
    diff = 0.0
    for i in range(len(w)):
        for j in range(i + 1, len(w)):
            diff += w[i] * w[j] * (s.mean[i] - s.mean[j]) ** 2
    return local + diff, local, diff


def split_entropy(z, s, grid=None):
    """Entropy split Ent = sum_i Z_i Ent_i + Ent_bar(means).

    With grid=(weights_k, values_k, labels_k) the identity is additionally
    evaluated directly from the grid function and returned for comparison.
    """
    w = z.weights
    if len(s.mean) != len(w):
        raise DimensionMismatch("component count mismatch")
    if np.any(s.mean < 0.0):
        raise NegativeFunction("entropy split needs f >= 0")
    local = float(np.sum(w * s.local_entropy))
    coarse = discrete_entropy(w, s.mean)
    total = local + coarse
    if grid is not None:
        gw, gv, gl = grid
        direct = discrete_entropy(gw / gw.sum(), gv)
        return total, local, coarse, direct
    return total, local, coarse


def two_point_lsi_constant(p):
    """Optimal constant p q / Lambda(p, q) in the Bernoulli inequality
    Ent(f^2) <= const * (f(0) - f(1))^2."""
    if not 0.0 < p < 1.0:
        raise OutOfRange("p must lie in (0,1)")
    q = 1.0 - p
    return p * q / log_mean(p, q)


def two_point_entropy_ratio(p, f0, f1):
    """Ent_{mu_p}(f^2) / (f0 - f1)^2 for the sharpness search."""
    if f0 == f1:
        return 0.0
    ent = discrete_entropy(np.array([p, 1.0 - p]),
                           np.array([f0 * f0, f1 * f1]))
    return ent / (f0 - f1) ** 2


def weighted_lsi_rhs(z, f):
    """Both sides of Ent(f^2) <= sum_{i<j} Z_i Z_j / Lambda(Z_i, Z_j) (f_i-f_j)^2."""
    w = z.weights
    f = np.asarray(f, dtype=float)
    if np.any(f < 0.0):
        raise NegativeFunction("weighted LSI needs f >= 0")
    lhs = discrete_entropy(w, f * f)
    rhs = 0.0
    for i in range(len(w)):
        for j in range(i + 1, len(w)):
            rhs += w[i] * w[j] / log_mean(w[i], w[j]) * (f[i] - f[j]) ** 2
    return lhs, rhs


def coarse_entropy_bound(z, s):
    """Both sides of the coarse-grained entropy estimate

        Ent_bar(second moments) <= sum_i [ sum_{j!=i} Z_i Z_j Var_i / Lambda(Z_i,Z_j)
                                  + sum_{j>i} Z_i Z_j / Lambda(Z_i,Z_j) (E_i-E_j)^2 ]
    """
    w = z.weights
    if len(s.mean) != len(w):
        raise DimensionMismatch("component count mismatch")
    lhs = discrete_entropy(w, s.second_moment)
    rhs = 0.0
    for i in range(len(w)):
        for j in range(len(w)):
            if j == i:
                continue
            rhs += w[i] * w[j] * s.local_variance[i] / log_mean(w[i], w[j])
        for j in range(i + 1, len(w)):
            rhs += w[i] * w[j] / log_mean(w[i], w[j]) * (s.mean[i] - s.mean[j]) ** 2
    return lhs, rhs


def tighten_defective_lsi(alpha_d, b, rho):
    """Tightening of a defective LSI by a PI: 1/alpha = 1/alpha_d + (B+2)/rho."""
    if alpha_d <= 0.0 or rho <= 0.0 or b < 0.0:
        raise NonPositive("need alpha_d, rho > 0 and B >= 0")
    return 1.0 / (1.0 / alpha_d + (b + 2.0) / rho)


def rothaus_limit(p, g0, g1, eta):
    """Ent((1 + eta g)^2)/(2 eta^2) for the linearization check; tends to
    Var(g) as eta -> 0."""
    w = np.array([p, 1.0 - p])
    f = np.array([1.0 + eta * g0, 1.0 + eta * g1])
    if np.any(f < 0.0):
        raise NegativeFunction("eta too large for the linearization")
    ent = discrete_entropy(w, f * f)
    return ent / (2.0 * eta * eta)
