"""Gibbs measures, partition sums and truncated-Gaussian approximations.

The Gibbs measure has density exp(-H/eps)/Z on the analysis box.  Partition
sums come two ways: Laplace asymptotics at the minima, and composite
midpoint quadrature on tensor grids (with a Richardson error estimate).
Each minimum also gets a truncated-Gaussian approximation supported on an
ellipsoid of radius sqrt(2 eps) * omega(eps), omega(eps) = sqrt(|log eps|),
whose partition sum carries the exact incomplete-Gamma tail correction.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from .errors import EpsilonTooLarge, QuadratureUnderResolved
from .expr import eval_jet2
from .landscape import Box, basin_labels

RICHARDSON_TOL = 1e-3


def omega(eps):
    """Truncation radius factor sqrt(|log eps|) (fixed, not just a lower bound)."""
    if not 0.0 < eps < 1.0:
        raise ValueError("omega(eps) needs 0 < eps < 1")
    return math.sqrt(abs(math.log(eps)))


@dataclass
class GibbsSpec:
    """A potential at temperature eps on an analysis box, with its landscape."""

    potential: object
    epsilon: float
    box: Box
    graph: object  # LandscapeGraph
    margin_ok: bool = field(init=False, default=True)
    _cache: dict = field(init=False, default_factory=dict, repr=False)

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        pts = [m.location for m in self.graph.minima] + \
              [s.location for s in self.graph.saddles]
        for x in pts:
            if not self.box.contains(x):
                raise ValueError("critical point %s outside the box" % x)
        conds = []
        for m in self.graph.minima:
            w = m.hessian_eigenvalues
            conds.append(float(w[-1] / w[0]))
        c_sigma = max(conds) if conds else 1.0
        margin = 3.0 * math.sqrt(self.epsilon * c_sigma)
        hull_lo = np.min(np.stack(pts), axis=0)
        hull_hi = np.max(np.stack(pts), axis=0)
        self.margin_ok = bool(np.all(hull_lo - self.box.lo >= margin)
                              and np.all(self.box.hi - hull_hi >= margin))
        if not self.margin_ok:
            warnings.warn("box margin below 3*sqrt(eps*C_Sigma); truncation bias "
                          "is tracked via the A1 growth evidence", RuntimeWarning)

    # -- shared grids -------------------------------------------------------

    def midpoint_grid(self, resolution):
        """Tensor midpoint grid: (points (m, n), cell volume)."""
        key = ("grid", resolution)
        if key not in self._cache:
            n = self.box.dim
            axes, widths = [], []
            for k in range(n):
                h = (self.box.hi[k] - self.box.lo[k]) / resolution
                axes.append(self.box.lo[k] + h * (np.arange(resolution) + 0.5))
                widths.append(h)
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
            self._cache[key] = (pts, float(np.prod(widths)))
        return self._cache[key]

    def grid_values(self, resolution):
        key = ("H", resolution)
        if key not in self._cache:
            pts, vol = self.midpoint_grid(resolution)
            self._cache[key] = self.potential.values(pts)
        return self._cache[key]

    def grid_labels(self, resolution):
        """Basin label per midpoint-grid cell (1D: exact interval split at the
        saddles; 2D: vectorized descent flow)."""
        key = ("labels", resolution)
        if key not in self._cache:
            pts, _ = self.midpoint_grid(resolution)
            minima = self.graph.minima
            if self.box.dim == 1:
                cuts = sorted(float(s.location[0]) for s in self.graph.saddles)
                centers = np.array([float(m.location[0]) for m in minima])
                seg = np.searchsorted(cuts, pts[:, 0])
                seg_center = np.searchsorted(cuts, centers)
                seg_to_min = {int(s): i for i, s in enumerate(seg_center)}
                labels = np.array([seg_to_min.get(int(s), -1) for s in seg])
                missing = labels < 0
                if np.any(missing):
                    labels[missing] = basin_labels(
                        self.potential, pts[missing], minima, self.box,
                        self.graph.saddles)
            else:
                labels = basin_labels(self.potential, pts, minima, self.box,
                                      self.graph.saddles)
            self._cache[key] = labels
        return self._cache[key]


@dataclass
class PartitionData:
    epsilon: float
    z_mu_quadrature: float = np.nan
    z_mu_laplace: float = np.nan
    z_i: np.ndarray = None           # quadrature weights, normalized
    z_i_laplace: np.ndarray = None
    quad_vs_laplace: float = np.nan  # Z_mu ratio, recorded when both known


def laplace_partition(g):
    """Laplace-asymptotic partition sums at the minima:

        Z_i * Z_mu ~ (2 pi eps)^{n/2} / sqrt(det hess H(m_i)) * exp(-H(m_i)/eps)
    """
    eps = g.epsilon
    n = g.box.dim
    terms = []
    for m in g.graph.minima:
        det = float(np.prod(m.hessian_eigenvalues))
        terms.append((2.0 * math.pi * eps) ** (n / 2.0) / math.sqrt(det)
                     * math.exp(-m.energy / eps))
    terms = np.array(terms)
    z_mu = float(terms.sum())
    return PartitionData(epsilon=eps, z_mu_laplace=z_mu,
                         z_i_laplace=terms / z_mu)


def quadrature_partition(g, grid_resolution, check=True):
    """Composite midpoint quadrature of exp(-H/eps) over the box and basins.

    Raises QuadratureUnderResolved when the Richardson comparison against
    half resolution estimates a relative error above 1e-3.
    """
    if g.box.dim > 2:
        raise ValueError("quadrature supports dim <= 2")
    eps = g.epsilon

    def z_at(res):
        h = g.grid_values(res)
        _, vol = g.midpoint_grid(res)
        return float(np.sum(np.exp(-h / eps)) * vol)

    z_full = z_at(grid_resolution)
    if check:
        z_half = z_at(grid_resolution // 2)
        est = abs(z_full - z_half) / (3.0 * abs(z_full))
        if est > RICHARDSON_TOL:
            raise QuadratureUnderResolved(
                "Z_mu Richardson error %.2e > %.0e at resolution %d"
                % (est, RICHARDSON_TOL, grid_resolution))

    labels = g.grid_labels(grid_resolution)
    hvals = g.grid_values(grid_resolution)
    _, vol = g.midpoint_grid(grid_resolution)
    w = np.exp(-hvals / eps) * vol
    m_count = len(g.graph.minima)
    z_i = np.array([float(w[labels == i].sum()) for i in range(m_count)])
    z_i /= z_i.sum()

    pd = laplace_partition(g)
    pd.z_mu_quadrature = z_full
    pd.z_i = z_i
    pd.quad_vs_laplace = z_full / pd.z_mu_laplace
    return pd


@dataclass(frozen=True)
class TruncatedGaussian:
    center: np.ndarray
    covariance_inverse: np.ndarray    # = hess H(m_i)
    epsilon: float
    truncation_radius_factor: float   # omega(eps)
    z_nu: float
    tail: float                       # normalized incomplete-Gamma mass outside

    @property
    def covariance(self):
        return np.linalg.inv(self.covariance_inverse)

    def log_density(self, points):
        """log of the (normalized) density; -inf outside the ellipsoid."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = pts - self.center
        q = np.einsum("mi,ij,mj->m", d, self.covariance_inverse, d)
        inside = q <= 2.0 * self.epsilon * self.truncation_radius_factor ** 2
        out = np.where(inside, -q / (2.0 * self.epsilon) - math.log(self.z_nu),
                       -np.inf)
        return out

    def density(self, points):
        return np.exp(self.log_density(points))


def gaussian_tail_mass(n, om):
    """Gamma(n/2, omega^2)/Gamma(n/2): Gaussian mass outside the ellipsoid."""
    return float(gammaincc(n / 2.0, om * om))


def build_truncated_gaussian(g, i):
    """Truncated Gaussian nu_i at minimum i with covariance eps*(hess H)^{-1},
    supported on the ellipsoid of radius sqrt(2 eps) omega(eps)."""
    eps = g.epsilon
    n = g.box.dim
    m = g.graph.minima[i]
    om = omega(eps)
    if om < math.sqrt(n):
        warnings.warn("omega(eps) < sqrt(n): tail expansion regime fails "
                      "(eps too large for the asymptotics)", EpsilonTooLarge)
    sigma_inv = m.hessian_eigenvectors @ np.diag(m.hessian_eigenvalues) \
        @ m.hessian_eigenvectors.T
    det_sigma = float(1.0 / np.prod(m.hessian_eigenvalues))
    tail = gaussian_tail_mass(n, om)
    z_nu = (2.0 * math.pi * eps) ** (n / 2.0) * math.sqrt(det_sigma) * (1.0 - tail)
    return TruncatedGaussian(center=m.location.copy(),
                             covariance_inverse=0.5 * (sigma_inv + sigma_inv.T),
                             epsilon=eps,
                             truncation_radius_factor=om,
                             z_nu=z_nu, tail=tail)


def relative_density_variance(g, i, grid_resolution=1024, nu=None):
    """Var_{mu_i}(d nu_i / d mu_i) by quadrature over the support of nu_i."""
    if g.box.dim > 2:
        raise ValueError("quadrature supports dim <= 2")
    eps = g.epsilon
    nu = nu if nu is not None else build_truncated_gaussian(g, i)
    pd = quadrature_partition(g, grid_resolution, check=False)
    pts, vol = g.midpoint_grid(grid_resolution)
    labels = g.grid_labels(grid_resolution)
    hvals = g.grid_values(grid_resolution)
    mask = labels == i
    z_mu_i = pd.z_i[i] * pd.z_mu_quadrature
    # density ratio on the basin: (Z_mu_i / Z_nu) exp((H - Q/2)/eps)
    log_mu_i = -hvals[mask] / eps - math.log(z_mu_i)
    log_nu = nu.log_density(pts[mask])
    log_ratio = log_nu - log_mu_i
    w_mu_i = np.exp(log_mu_i) * vol
    ratio = np.exp(log_ratio)
    mean = float(np.sum(ratio * w_mu_i))
    second = float(np.sum(ratio * ratio * w_mu_i))
    return max(second - mean * mean, 0.0)


def gaussian_remark_check(sigma, n):
    """Variance and entropy of an N(0, sigma Id) start against N(0, Id):

        var = (1/(sigma(2-sigma)))^{n/2} - 1   (infinite for sigma >= 2)
        ent = (n/2)(sigma - 1 - log sigma)
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if sigma >= 2.0:
        var = math.inf
    else:
        var = (1.0 / (sigma * (2.0 - sigma))) ** (n / 2.0) - 1.0
    ent = 0.5 * n * (sigma - 1.0 - math.log(sigma))
    return var, ent


def mixture_expectation(g, grid_fn_values, grid_resolution):
    """(int f dmu, sum_i Z_i int f dmu_i) for a grid function; the two must
    agree to quadrature roundoff (mixture identity)."""
    pd = quadrature_partition(g, grid_resolution, check=False)
    hvals = g.grid_values(grid_resolution)
    labels = g.grid_labels(grid_resolution)
    _, vol = g.midpoint_grid(grid_resolution)
    w = np.exp(-hvals / g.epsilon) * vol
    total = float(np.sum(grid_fn_values * w) / pd.z_mu_quadrature)
    parts = 0.0
    for i in range(len(g.graph.minima)):
        mask = labels == i
        zi = w[mask].sum()
        parts += (zi / w.sum()) * float(np.sum(grid_fn_values[mask] * w[mask]) / zi)
    return total, float(parts)
