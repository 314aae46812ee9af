"""Eyring-Kramers predictions for the Poincare and log-Sobolev constants.

For every communicating pair (i, j) the shared prefactor is

    K_ij = Z_mu / (2 pi eps)^{n/2}
           * 2 pi eps sqrt(|det hess H(s_ij)|) / |lambda^-(s_ij)|
           * exp(H(s_ij) / eps),

and the predictions are 1/rho ~ max_ij Z_i Z_j K_ij for the Poincare
constant and 2/alpha ~ max_ij Z_i Z_j / Lambda(Z_i, Z_j) K_ij for the
log-Sobolev constant.  The dominant pair is (1, 2) under the
non-degeneracy ordering.  Both are asymptotic identities carrying a
multiplicative error envelope 1 + O(sqrt(eps) |log eps|^{3/2}) with unit
constant (reported, not estimated).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingSaddle, NotTwoWells
from .means import log_mean


@dataclass
class EKResult:
    epsilon: float
    inv_rho: float = math.nan
    inv_alpha_times2: float = math.nan
    dominant_pair: tuple = None
    per_pair_terms: dict = field(default_factory=dict)
    ratio_rho_alpha: float = math.nan      # (2/alpha) / (2 * 1/rho)
    error_envelope: float = math.nan       # sqrt(eps)|log eps|^{3/2}
    no_metastability: bool = False


def _pair_prefactor(g, i, j):
    saddle = g.graph.saddle_between(i, j)
    if saddle is None:
        raise MissingSaddle("no communicating saddle for pair (%d, %d)" % (i, j))
    eps = g.epsilon
    n = g.box.dim
    w = saddle.hessian_eigenvalues
    lam_minus = w[0]
    if lam_minus >= 0.0 or saddle.morse_index != 1:
        raise MissingSaddle("pair (%d, %d): stored saddle is not index 1" % (i, j))
    det_abs = abs(float(np.prod(w)))
    return (2.0 * math.pi * eps * math.sqrt(det_abs) / abs(lam_minus)
            * math.exp(saddle.energy / eps))


def _z_weights(g, pd, use_quadrature):
    if use_quadrature:
        return pd.z_i, pd.z_mu_quadrature
    return pd.z_i_laplace, pd.z_mu_laplace


def ek_pi(g, pd, use_quadrature=False):
    """Eyring-Kramers bound on 1/rho, per-pair terms included."""
    eps = g.epsilon
    n = g.box.dim
    res = EKResult(epsilon=eps,
                   error_envelope=math.sqrt(eps) * abs(math.log(eps)) ** 1.5)
    z, z_mu = _z_weights(g, pd, use_quadrature)
    m = len(g.graph.minima)
    if m < 2:
        res.inv_rho = 0.0
        res.no_metastability = True
        return res
    scale = z_mu / (2.0 * math.pi * eps) ** (n / 2.0)
    best, best_pair = -math.inf, None
    for i in range(m):
        for j in range(i + 1, m):
            term = z[i] * z[j] * scale * _pair_prefactor(g, i, j)
            res.per_pair_terms[(i, j)] = term
            if term > best:
                best, best_pair = term, (i, j)
    res.inv_rho = best
    res.dominant_pair = best_pair
    return res


def ek_lsi(g, pd, use_quadrature=False):
    """Eyring-Kramers bound on 2/alpha; also records the ratio form
    (1/Lambda(Z_1,Z_2)) * (1/rho) for consistency checking."""
    eps = g.epsilon
    n = g.box.dim
    res = EKResult(epsilon=eps,
                   error_envelope=math.sqrt(eps) * abs(math.log(eps)) ** 1.5)
    z, z_mu = _z_weights(g, pd, use_quadrature)
    m = len(g.graph.minima)
    if m < 2:
        res.inv_alpha_times2 = 0.0
        res.no_metastability = True
        return res
    scale = z_mu / (2.0 * math.pi * eps) ** (n / 2.0)
    pi_best, best, best_pair = -math.inf, -math.inf, None
    for i in range(m):
        for j in range(i + 1, m):
            k = z[i] * z[j] * scale * _pair_prefactor(g, i, j)
            term = k / log_mean(z[i], z[j])
            res.per_pair_terms[(i, j)] = term
            if term > best:
                best, best_pair = term, (i, j)
            pi_best = max(pi_best, k)
    res.inv_alpha_times2 = best
    res.inv_rho = pi_best
    res.dominant_pair = best_pair
    res.ratio_rho_alpha = best / (2.0 * pi_best)
    return res


@dataclass
class SpecialCaseReport:
    case: str                       # 'energy_gap' or 'symmetric'
    kappa: tuple                    # (kappa_1, kappa_2)
    inv_rho: float
    inv_alpha_times2: float
    mean_quotient: float            # arithmetic/logarithmic mean of kappas
    barrier_term: float = math.nan  # (H(m2)-H(m1))/eps + log(kappa1/kappa2)
    warning: str = ""


def ek_special_cases(g, pd, tol=1e-9):
    """Closed two-well forms of the predictions.

    With kappa_i = sqrt(det hess H(m_i)) and the common saddle factor
    P = 2 pi eps sqrt(|det hess H(s)|)/|lambda^-| exp((H(s)-H(m2))/eps):

      energy gap H(m1) < H(m2):  1/rho ~ P/kappa_2,
                                 2/alpha <~ (gap/eps + log(kappa1/kappa2)) / rho
      symmetric H(m1) = H(m2):   1/rho ~ P/(kappa1+kappa2),
                                 2/alpha <~ P/Lambda(kappa1, kappa2)
    """
    if len(g.graph.minima) != 2:
        raise NotTwoWells("special-case comparison needs exactly two minima")
    eps = g.epsilon
    m1, m2 = g.graph.minima
    saddle = g.graph.saddle_between(0, 1)
    if saddle is None:
        raise MissingSaddle("no communicating saddle")
    kappa1 = math.sqrt(float(np.prod(m1.hessian_eigenvalues)))
    kappa2 = math.sqrt(float(np.prod(m2.hessian_eigenvalues)))
    w = saddle.hessian_eigenvalues
    pref = (2.0 * math.pi * eps * math.sqrt(abs(float(np.prod(w)))) / abs(w[0])
            * math.exp((saddle.energy - m2.energy) / eps))
    gap = m2.energy - m1.energy
    quotient = 0.5 * (kappa1 + kappa2) / log_mean(kappa1, kappa2)
    warning = ""
    if abs(gap) <= tol:
        case = "symmetric"
        if gap != 0.0:
            warning = "energy gap %.1e below tolerance; classified symmetric" % gap
        inv_rho = pref / (kappa1 + kappa2)
        inv_a2 = pref / log_mean(kappa1, kappa2)
        barrier = math.nan
    else:
        case = "energy_gap"
        barrier = gap / eps + math.log(kappa1 / kappa2)
        inv_rho = pref / kappa2
        inv_a2 = barrier * inv_rho
    return SpecialCaseReport(case=case, kappa=(kappa1, kappa2),
                             inv_rho=inv_rho, inv_alpha_times2=inv_a2,
                             mean_quotient=quotient, barrier_term=barrier,
                             warning=warning)
