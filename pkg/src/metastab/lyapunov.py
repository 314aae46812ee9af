"""Drift-condition machinery: potential patching and the implied constants.

Away from critical points the drift quantity

    (1/(2 eps)) lap H - (1/(4 eps^2)) |grad H|^2

is strongly negative, but it degenerates at saddles.  The fix is a local
patch: near every non-minimum critical point the potential is modified by
a bump xi(|x - y|_delta^2) built from the eigenframe of the Hessian, which
flips the Laplacian negative there while moving the potential by O(eps)
only.  verify_drift checks the inequality on a grid outside balls around
the minima and extracts the admissible constants; the downstream formulas
convert them into Poincare and log-Sobolev bounds whose eps-scaling the
test sweeps monitor.

The reported lambda0/b0 follow the displayed extraction rules (b0 ignores
the size of the Lyapunov function inside the ball, as the asymptotic
argument does); they are desk-scale bookkeeping constants, not certified
finite-eps bounds.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DeltaInfeasible, DriftViolated, NonPositive
from .expr import eval_jet2, eval_jets, unpack_hessian
from .linalg import smoothstep5, smoothstep5_d, smoothstep5_int


@dataclass(frozen=True)
class SaddlePatch:
    center: np.ndarray
    frame: np.ndarray        # eigenvectors as columns, unstable first
    eigenvalues: np.ndarray  # matching order
    n_unstable: int
    delta: float
    z_half: float            # |x|_delta^2 value where xi' starts rising
    z_max: float             # support edge in |x|_delta^2
    coeffs: np.ndarray       # delta-norm coefficients per frame direction

    @property
    def xi_zero(self):
        # xi(0) = z_half + (z_max - z_half)/2 = sup |H~ - H|
        return self.z_half + 0.5 * (self.z_max - self.z_half)

    def euclid_radius(self):
        return math.sqrt(self.z_max / self.coeffs.min())


@dataclass
class EpsModification:
    base: object             # Potential
    epsilon: float
    a: float
    patches: list = field(default_factory=list)
    c_h_tilde: float = 0.0   # sup |H~ - H| / eps
    c_xi: float = 0.0        # max |xi''| * sqrt(eps), reported

    def _xi(self, patch, z):
        """xi, xi', xi'' at z = |x - y|_delta^2 (vectorized)."""
        zh, zm = patch.z_half, patch.z_max
        width = zm - zh
        t = (z - zh) / width
        s = smoothstep5(t)
        sp = smoothstep5_d(t) / width
        xi_p = np.where(z <= zh, -1.0, np.where(z >= zm, 0.0, -1.0 + s))
        xi_pp = np.where((z > zh) & (z < zm), sp, 0.0)
        # xi(z) = int_z^{zm} (1 - S) du = width * (1/2 - t + int_0^t S)
        tc = np.clip(t, 0.0, 1.0)
        tail = width * (0.5 - tc + smoothstep5_int(tc))
        xi = np.where(z >= zm, 0.0,
                      np.where(z <= zh, (zh - z) + 0.5 * width, tail))
        return xi, xi_p, xi_pp

    def jets(self, points):
        """(H~, grad H~, hess H~ packed) at a batch of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        val, grad, hess = eval_jets(self.base, pts)
        n = self.base.dim
        for patch in self.patches:
            d = pts - patch.center
            comp = d @ patch.frame                       # (m, n)
            z = np.sum(patch.coeffs * comp ** 2, axis=1)
            active = z < patch.z_max
            if not np.any(active):
                continue
            xi, xi_p, xi_pp = self._xi(patch, z[active])
            ca = comp[active]
            # grad z in frame coordinates, then back to ambient
            gz_frame = 2.0 * patch.coeffs * ca
            gz = gz_frame @ patch.frame.T
            val[active] += xi
            grad[active] += xi_p[:, None] * gz
            # hess H_b = xi'' gz (x) gz + xi' * 2 diag(coeffs) in frame
            pairs = [(i, j) for i in range(n) for j in range(i, n)]
            base_quad = np.array([
                2.0 * np.sum(patch.coeffs * patch.frame[i] * patch.frame[j])
                for (i, j) in pairs])
            for k, (i, j) in enumerate(pairs):
                hess[active, k] += xi_pp * gz[:, i] * gz[:, j] \
                    + xi_p * base_quad[k]
        return val, grad, hess

    def value(self, x):
        return float(self.jets(np.atleast_2d(x))[0][0])


def build_eps_modification(p, cps, epsilon, a, delta=None):
    """Patch the potential near every non-minimum critical point.

    delta must satisfy (n - 2l) delta + sum of negative eigenvalues < 0 and
    delta <= min positive eigenvalue / 2; when omitted it is auto-chosen at
    0.9x the binding bound.
    """
    patches = []
    c_h = 0.0
    for cp in cps:
        if cp.morse_index == 0:
            continue
        w = cp.hessian_eigenvalues
        ell = cp.morse_index
        n = len(w)
        pos = w[ell:]
        # with no stable directions the positive-eigenvalue bound is vacuous;
        # fall back to the same scale taken from the unstable ones
        bound_pos = 0.5 * float(pos.min()) if pos.size \
            else 0.5 * float(np.abs(w).min())
        if delta is None:
            if n - 2 * ell > 0:
                neg_sum = -float(w[:ell].sum())
                bound_neg = neg_sum / (n - 2 * ell)
                d = 0.9 * min(bound_pos, bound_neg)
            else:
                d = 0.9 * bound_pos
        else:
            d = float(delta)
        tilde_delta = -((n - 2 * ell) * d + float(w[:ell].sum()))
        if d <= 0.0 or d > bound_pos + 1e-12 or tilde_delta <= 0.0:
            raise DeltaInfeasible(
                "delta=%.3g violates the patch constraints at %s" % (d, cp.location))
        coeffs = np.concatenate([np.full(ell, 0.5 * d),
                                 0.5 * (pos - d)])
        z_max = a * a * epsilon
        z_half = 0.25 * z_max
        patch = SaddlePatch(center=cp.location.copy(),
                            frame=cp.hessian_eigenvectors.copy(),
                            eigenvalues=w.copy(), n_unstable=ell,
                            delta=d, z_half=z_half, z_max=z_max,
                            coeffs=coeffs)
        patches.append(patch)
        c_h = max(c_h, patch.xi_zero / epsilon)
    mod = EpsModification(base=p, epsilon=epsilon, a=a, patches=patches,
                          c_h_tilde=c_h)
    if patches:
        width = patches[0].z_max - patches[0].z_half
        mod.c_xi = (1.875 / width) * math.sqrt(epsilon)  # max smoothstep5'
    return mod


@dataclass
class LyapunovReport:
    lambda0: float
    b0: float
    a: float
    radius: float              # a sqrt(eps)
    drift_margin_grid: float   # worst (most positive) drift outside the balls
    epsilon: float
    c_h_tilde: float
    k_h_tilde: float           # -min Hessian eigenvalue of H~ on the box
    n_checked: int
    eps_threshold_ok: bool = True

    def holley_stroock_factor(self):
        return math.exp(-2.0 * self.c_h_tilde)


def drift_quantity(mod, points):
    """(1/(2 eps)) lap H~ - (1/(4 eps^2)) |grad H~|^2 on a batch."""
    eps = mod.epsilon
    n = mod.base.dim
    _, grad, hess = mod.jets(points)
    full = unpack_hessian(hess, n)
    lap = np.trace(full, axis1=1, axis2=2)
    g2 = np.sum(grad * grad, axis=1)
    return lap / (2.0 * eps) - g2 / (4.0 * eps * eps)


def verify_drift(mod, epsilon, a, box, grid_resolution=256, minima=None):
    """Evaluate the drift quantity on a box grid outside balls of radius
    a sqrt(eps) around the minima; a passing report has negative drift
    everywhere there.

    lambda0 = -eps * max drift (outside); b0 = eps * max drift (inside).
    """
    n = box.dim
    axes = [np.linspace(box.lo[k], box.hi[k], grid_resolution)
            for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    radius = a * math.sqrt(epsilon)
    if minima is None:
        minima = []
    inside = np.zeros(pts.shape[0], dtype=bool)
    for m in minima:
        loc = m.location if hasattr(m, "location") else np.asarray(m)
        inside |= np.linalg.norm(pts - loc, axis=1) <= radius
    outside = ~inside
    if not np.any(outside):
        raise DriftViolated("exclusion balls cover the whole box; enlarge it")
    drift = drift_quantity(mod, pts)
    worst = float(drift[outside].max())
    if worst >= 0.0:
        bad = pts[outside][drift[outside] >= 0.0]
        raise DriftViolated(
            "drift positive at %d grid points (worst %.3g)"
            % (bad.shape[0], worst), points=bad[:16])
    lambda0 = -epsilon * worst
    b0 = epsilon * float(drift[inside].max()) if np.any(inside) else 0.0
    _, _, hess = mod.jets(pts[:: max(1, pts.shape[0] // 4096)])
    eig_min = float(np.linalg.eigvalsh(
        unpack_hessian(hess, n)).min())
    k_h_tilde = max(0.0, -eig_min)
    # regime guard from the outside-region estimate: eps <= C^2/(4(C^2+8K))
    c_est = math.sqrt(4.0 * lambda0)
    thr = 0.25 * c_est ** 2 / (c_est ** 2 + 8.0 * k_h_tilde) \
        if c_est > 0 else 0.0
    ok = epsilon <= thr if k_h_tilde > 0 else True
    if not ok:
        warnings.warn("eps=%.3g outside the drift regime threshold %.3g; "
                      "constants reported without extrapolation"
                      % (epsilon, thr), RuntimeWarning)
    return LyapunovReport(lambda0=lambda0, b0=b0, a=a, radius=radius,
                          drift_margin_grid=worst, epsilon=epsilon,
                          c_h_tilde=mod.c_h_tilde, k_h_tilde=k_h_tilde,
                          n_checked=int(outside.sum()),
                          eps_threshold_ok=bool(ok))


def pi_from_lyapunov(rep_or_lambda, b=None, rho_r=None):
    """rho >= lambda rho_R / (b + rho_R)."""
    if isinstance(rep_or_lambda, LyapunovReport):
        lam = rep_or_lambda.lambda0 / rep_or_lambda.epsilon
        b = rep_or_lambda.b0 / rep_or_lambda.epsilon
    else:
        lam = rep_or_lambda
    if lam <= 0.0 or b is None or b < 0.0 or rho_r is None or rho_r <= 0.0:
        raise NonPositive("need lambda, rho_R > 0 and b >= 0")
    return lam * rho_r / (b + rho_r)


def lsi_from_lyapunov(lam, b, rho, k_h, eps, second_moment):
    """Log-Sobolev bound from the Lyapunov constants:

        1/alpha <= 2 sqrt((1/lam)(1/2 + (b + lam mu2)/rho))
                   + K_H/(2 eps lam)
                   + (K_H (b + lam mu2) + 2 eps lam)/(rho eps lam)

    Returns (inv_alpha, c1, c2) where inv_alpha = 2 sqrt(c1) + c2 is the
    tau-optimized decomposition.
    """
    if lam <= 0.0 or rho <= 0.0 or eps <= 0.0:
        raise NonPositive("need lambda, rho, eps > 0")
    if b < 0.0 or k_h < 0.0 or second_moment < 0.0:
        raise NonPositive("need b, K_H, mu2 >= 0")
    c1 = (0.5 + (b + lam * second_moment) / rho) / lam
    c2 = k_h / (2.0 * eps * lam) \
        + (k_h * (b + lam * second_moment) + 2.0 * eps * lam) / (rho * eps * lam)
    return 2.0 * math.sqrt(c1) + c2, c1, c2


def second_moment_bound(lam, b, radius):
    """(1 + b R^2)/lambda."""
    if lam <= 0.0:
        raise NonPositive("lambda must be positive")
    if b < 0.0:
        raise NonPositive("b must be nonnegative")
    return (1.0 + b * radius * radius) / lam


def lyapunov_pipeline(p, cps, epsilon, box, a_start=6.0, a_max=48.0,
                      grid_resolution=256, delta=None):
    """Patch, verify drift, and escalate the ball constant a dyadically
    until the drift check passes (a <= a_max)."""
    minima = [c for c in cps if c.morse_index == 0]
    a = a_start
    last_err = None
    while a <= a_max:
        mod = build_eps_modification(p, cps, epsilon, a, delta)
        try:
            rep = verify_drift(mod, epsilon, a, box, grid_resolution, minima)
            return mod, rep
        except DriftViolated as err:
            last_err = err
            a *= 2.0
    raise last_err
