"""Critical-point analysis of a potential on a bounding box.

Locates and classifies critical points (multistart damped Newton), labels
basins of attraction by integrating the gradient flow, computes
communicating saddle heights between minima by a minimax (widest-path)
Dijkstra on a grid graph, and evaluates boundary-shell evidence for the
growth assumptions that the functional inequalities need.
"""

import heapq
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateCriticalPoint,
    FlowDiverged,
    NoConvergence,
    NonUniqueSaddle,
    SaddleRefinementFailed,
    StagnatedAtSaddle,
)
from .expr import eval_gradients, eval_jet2, eval_jets, unpack_hessian
from .linalg import jacobi_eigh

NEWTON_TOL = 1e-10
DEGENERATE_TOL = 1e-8
MERGE_TOL = 1e-6
HEIGHT_TOL = 1e-9
FLOW_GRAD_TOL = 1e-8
SNAP_TOL = 1e-3


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    @staticmethod
    def cube(lo, hi, dim):
        return Box(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @property
    def dim(self):
        return len(self.lo)

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - margin) and np.all(x <= self.hi + margin))

    def enlarged(self, factor=0.5):
        pad = factor * (self.hi - self.lo)
        return Box(self.lo - pad, self.hi + pad)


@dataclass(frozen=True)
class CriticalPoint:
    location: np.ndarray
    energy: float
    hessian_eigenvalues: np.ndarray  # ascending
    hessian_eigenvectors: np.ndarray  # columns match eigenvalues
    morse_index: int

    def unstable_direction(self):
        """Unit eigenvector of the most negative eigenvalue, sign fixed so the
        first nonzero component is positive (deterministic tie-break)."""
        u = self.hessian_eigenvectors[:, 0].copy()
        for c in u:
            if abs(c) > 1e-12:
                if c < 0:
                    u = -u
                break
        return u


@dataclass
class LandscapeGraph:
    minima: list                      # CriticalPoint, ordered per convention
    saddles: list                     # index-1 CriticalPoint
    edges: dict                       # (i, j) i<j -> (saddle_index, height)
    delta_gap: float
    nondegeneracy_violated: bool = False
    notes: list = field(default_factory=list)

    def saddle_between(self, i, j):
        key = (min(i, j), max(i, j))
        if key not in self.edges:
            return None
        return self.saddles[self.edges[key][0]]

    def height(self, i, j):
        key = (min(i, j), max(i, j))
        return self.edges[key][1]


def _classify(p, x):
    jet = eval_jet2(p, x)
    w, v = jacobi_eigh(jet.hessian, off_tol=1e-12)
    scale = 1.0 + float(np.abs(w).max(initial=0.0))
    if np.any(np.abs(w) <= DEGENERATE_TOL * scale):
        raise DegenerateCriticalPoint(
            "Hessian eigenvalue within %.0e of zero at %s (eigs %s)"
            % (DEGENERATE_TOL, np.array2string(jet.gradient * 0 + x), w))
    return CriticalPoint(
        location=np.asarray(x, dtype=float).copy(),
        energy=jet.value,
        hessian_eigenvalues=w,
        hessian_eigenvectors=v,
        morse_index=int(np.sum(w < 0.0)),
    )


def _newton(p, x0, box, max_iter=100):
    """Damped Newton for grad H = 0.  Returns the point or None."""
    x = np.asarray(x0, dtype=float).copy()
    big = box.enlarged(1.0)
    for _ in range(max_iter):
        jet = eval_jet2(p, x)
        g = jet.gradient
        hn = np.linalg.norm(jet.hessian)
        gn = np.linalg.norm(g)
        try:
            step = np.linalg.solve(jet.hessian, -g)
        except np.linalg.LinAlgError:
            step = -g
        # keep iterating on tiny |grad| until the step itself is negligible,
        # so degenerate points drive their curvature all the way down
        if gn <= NEWTON_TOL * (1.0 + hn) and np.linalg.norm(step) <= 1e-13 * (
                1.0 + np.linalg.norm(x)):
            return x
        t = 1.0
        for _ in range(20):
            x_new = x + t * step
            if big.contains(x_new):
                gn_new = np.linalg.norm(eval_jet2(p, x_new).gradient)
                if gn_new <= gn or gn <= NEWTON_TOL * (1.0 + hn):
                    break
            t *= 0.5
        else:
            return None
        x = x + t * step
        if not big.contains(x):
            return None
    jet = eval_jet2(p, x)
    if np.linalg.norm(jet.gradient) <= NEWTON_TOL * (1.0 + np.linalg.norm(jet.hessian)):
        return x
    return None


def _grid_seeds(p, box, per_axis=33):
    """Local minima of |grad H| on a coarse grid."""
    axes = [np.linspace(box.lo[k], box.hi[k], per_axis) for k in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    _, grads = eval_gradients(p, pts)
    res = np.linalg.norm(grads, axis=1).reshape([per_axis] * box.dim)
    seeds = []
    it = np.ndindex(*res.shape)
    for idx in it:
        v = res[idx]
        best = True
        for k in range(box.dim):
            for d in (-1, 1):
                nb = list(idx)
                nb[k] += d
                if 0 <= nb[k] < per_axis and res[tuple(nb)] < v:
                    best = False
                    break
            if not best:
                break
        if best:
            seeds.append(np.array([axes[k][idx[k]] for k in range(box.dim)]))
    return seeds


def find_critical_points(p, box, seeds=None):
    """All critical points of H in the box, classified and deduplicated.

    Automatic grid seeding needs dim <= 3; higher dimensions require
    explicit seeds.
    """
    if box.volume <= 0.0:
        raise ValueError("box must have positive volume")
    all_seeds = list(seeds) if seeds is not None else []
    if p.dim <= 3:
        all_seeds.extend(_grid_seeds(p, box))
    elif not all_seeds:
        raise ValueError("automatic seeding needs dim <= 3; pass explicit seeds")
    found = []
    converged_any = False
    degenerate_hits = []
    for s in all_seeds:
        x = _newton(p, s, box)
        if x is None or not box.contains(x, margin=1e-9):
            continue
        converged_any = True
        if any(np.linalg.norm(x - f.location) <= MERGE_TOL for f in found):
            continue
        try:
            found.append(_classify(p, x))
        except DegenerateCriticalPoint as err:
            degenerate_hits.append(err)
    if degenerate_hits:
        raise degenerate_hits[0]
    if not converged_any:
        raise NoConvergence("Newton failed from all %d seeds" % len(all_seeds))
    found.sort(key=lambda c: tuple(c.location))
    return found


def _flow_rk4(p, x, dt):
    def rhs(y):
        return -eval_gradients(p, y[None, :])[1][0]
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _descend(p, x0, box, minima, max_steps=200_000):
    """Adaptive RK4 gradient descent until |grad H| < FLOW_GRAD_TOL."""
    x = np.asarray(x0, dtype=float).copy()
    big = box.enlarged(0.5)
    jets = eval_jets(p, x[None, :])
    curv = np.abs(jets[2]).max()
    dt = 0.5 / max(curv, 1.0)
    steps = 0
    while steps < max_steps:
        g = eval_gradients(p, x[None, :])[1][0]
        gn = np.linalg.norm(g)
        if gn < FLOW_GRAD_TOL:
            return x
        # near-minimum early exit: snapping is all the caller needs
        d = [np.linalg.norm(x - m.location) for m in minima]
        if min(d) < SNAP_TOL:
            return x
        full = _flow_rk4(p, x, dt)
        half = _flow_rk4(p, _flow_rk4(p, x, 0.5 * dt), 0.5 * dt)
        err = np.linalg.norm(full - half)
        tol = 1e-8 * (1.0 + np.linalg.norm(x))
        if err > tol:
            dt *= 0.5
            continue
        x = half
        if err < 0.1 * tol:
            dt = min(dt * 1.7, 1.0)
        if not big.contains(x):
            raise FlowDiverged("gradient flow left the enlarged box at %s" % x)
        steps += 1
    return x


def assign_basin(p, x, minima, box, saddles=None):
    """Index of the minimum reached by the descent flow started at x.

    A trajectory stalling at an index->=1 critical point is restarted with a
    deterministic 1e-6 perturbation along the positive unstable eigenvector.
    """
    if not minima:
        raise ValueError("minima must be nonempty")
    x = np.asarray(x, dtype=float)
    for _ in range(4):
        end = _descend(p, x, box, minima)
        d = np.array([np.linalg.norm(end - m.location) for m in minima])
        k = int(np.argmin(d))
        if d[k] <= SNAP_TOL:
            return k
        # stalled near a saddle or a flat ridge: nudge along the unstable mode
        stuck = None
        if saddles:
            for s in saddles:
                if np.linalg.norm(end - s.location) <= SNAP_TOL:
                    stuck = s
                    break
        if stuck is None:
            jet = eval_jet2(p, end)
            w, v = jacobi_eigh(jet.hessian)
            if w[0] >= 0.0:
                raise StagnatedAtSaddle(
                    "flow stalled at %s without an unstable direction" % end)
            cand = CriticalPoint(end.copy(), jet.value, w, v, int(np.sum(w < 0)))
            stuck = cand
        x = stuck.location + 1e-6 * stuck.unstable_direction()
    raise StagnatedAtSaddle("flow kept stalling near a saddle from %s" % x)


def basin_labels(p, points, minima, box, saddles=None, max_steps=20_000):
    """Vectorized flow labeling of many points (same flow as assign_basin,
    fixed-step RK4 with progressive convergence culling)."""
    pts = np.array(points, dtype=float)
    m = pts.shape[0]
    labels = np.full(m, -1, dtype=int)
    centers = np.stack([mn.location for mn in minima])
    big = box.enlarged(0.5)
    active = np.arange(m)
    x = pts.copy()
    curv = np.abs(eval_jets(p, pts[:: max(1, m // 512)])[2]).max()
    dt = 0.25 / max(curv, 1.0)

    def rhs(y):
        return -eval_gradients(p, y)[1]

    for _ in range(max_steps):
        if active.size == 0:
            break
        y = x[active]
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        y = np.clip(y, big.lo, big.hi)
        x[active] = y
        d = np.linalg.norm(y[:, None, :] - centers[None, :, :], axis=2)
        nearest = np.argmin(d, axis=1)
        done = d[np.arange(len(active)), nearest] <= SNAP_TOL
        labels[active[done]] = nearest[done]
        active = active[~done]
    if active.size:
        # stragglers sit on separatrices; defer to the scalar path
        for idx in active:
            labels[idx] = assign_basin(p, pts[idx], minima, box, saddles)
    return labels


def _minimax_dijkstra(h_grid, start, neighbors, edge_len):
    """Widest-path Dijkstra minimizing (max of h along the path, length).

    The path length is a lexicographic tiebreak: among the many paths
    realizing the same minimax height, the shortest one is returned, which
    keeps the extracted path from wandering at constant height.
    """
    n = h_grid.shape[0]
    cost = np.full(n, np.inf)
    length = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    cost[start] = h_grid[start]
    length[start] = 0.0
    heap = [(h_grid[start], 0.0, start)]
    visited = np.zeros(n, dtype=bool)
    while heap:
        c, ln, u = heapq.heappop(heap)
        if visited[u]:
            continue
        visited[u] = True
        for v, d in neighbors(u):
            if visited[v]:
                continue
            nc = max(c, h_grid[v])
            nl = ln + d * edge_len
            if nc < cost[v] or (nc == cost[v] and nl < length[v]):
                cost[v] = nc
                length[v] = nl
                pred[v] = u
                heapq.heappush(heap, (nc, nl, v))
    return cost, pred


def _grid_nodes(box, resolution):
    axes = [np.linspace(box.lo[k], box.hi[k], resolution) for k in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return axes, np.stack([m.reshape(-1) for m in mesh], axis=1)


def _neighbor_fn(dim, resolution):
    if dim == 1:
        def nb(u):
            if u > 0:
                yield u - 1, 1.0
            if u < resolution - 1:
                yield u + 1, 1.0
        return nb
    offsets = [(di, dj, math.sqrt(di * di + dj * dj))
               for di in (-1, 0, 1) for dj in (-1, 0, 1)
               if (di, dj) != (0, 0)]

    def nb(u):
        i, j = divmod(u, resolution)
        for di, dj, d in offsets:
            ii, jj = i + di, j + dj
            if 0 <= ii < resolution and 0 <= jj < resolution:
                yield ii * resolution + jj, d
    return nb


def saddle_graph(p, cps, box, grid_resolution=257):
    """Communicating-saddle graph between the minima of cps.

    Minimax heights come from widest-path Dijkstra on the grid graph
    (2-neighbor in 1D, 8-neighbor in 2D); the arg-max point of the optimal
    path is refined by Newton to an index-1 critical point.
    """
    minima = [c for c in cps if c.morse_index == 0]
    saddles = [c for c in cps if c.morse_index == 1]
    if len(minima) < 2:
        raise ValueError("need at least 2 minima for a saddle graph")
    if p.dim > 2:
        raise ValueError("grid minimax supports dim <= 2")

    axes, nodes = _grid_nodes(box, grid_resolution)
    h_grid = p.values(nodes)
    nbfn = _neighbor_fn(p.dim, grid_resolution)

    def node_of(x):
        idx = [int(np.argmin(np.abs(axes[k] - x[k]))) for k in range(p.dim)]
        flat = 0
        for k in range(p.dim):
            flat = flat * grid_resolution + idx[k]
        return flat

    min_nodes = [node_of(m.location) for m in minima]
    edges = {}
    paths = {}
    m_count = len(minima)
    edge_len = float(axes[0][1] - axes[0][0])
    for i in range(m_count - 1):
        cost, pred = _minimax_dijkstra(h_grid, min_nodes[i], nbfn, edge_len)
        for j in range(i + 1, m_count):
            target = min_nodes[j]
            height_grid = cost[target]
            node = target
            path = [node]
            while pred[node] != -1:
                node = pred[node]
                path.append(node)
            path.reverse()
            arg = path[int(np.argmax(h_grid[path]))]
            x_saddle = _newton(p, nodes[arg], box)
            if x_saddle is None:
                raise SaddleRefinementFailed(
                    "Newton failed from grid arg-max for pair (%d, %d)" % (i, j))
            cp = _classify(p, x_saddle)
            if cp.morse_index != 1:
                raise SaddleRefinementFailed(
                    "refined point for pair (%d, %d) has index %d"
                    % (i, j, cp.morse_index))
            k = None
            for si, s in enumerate(saddles):
                if np.linalg.norm(s.location - cp.location) <= MERGE_TOL:
                    k = si
                    break
            if k is None:
                saddles.append(cp)
                k = len(saddles) - 1
            edges[(i, j)] = (k, float(cp.energy))
            paths[(i, j)] = nodes[path]
            if abs(height_grid - cp.energy) > 0.5 * (
                    np.abs(h_grid).max() - h_grid.min() + 1.0):
                raise SaddleRefinementFailed(
                    "refined saddle energy far from grid minimax height")

    # near-ties among distinct index-1 points at one height are reported
    for (i, j), (k, height) in edges.items():
        ties = [s for si, s in enumerate(saddles)
                if si != k and abs(s.energy - height) <= HEIGHT_TOL]
        if ties:
            warnings.warn(
                "pair (%d, %d): %d extra index-1 candidates within %.0e of the "
                "saddle height; keeping the lexicographically first"
                % (i, j, len(ties), HEIGHT_TOL), NonUniqueSaddle)

    graph = _order_minima(minima, saddles, edges, paths)
    return graph


def _order_minima(minima, saddles, edges, paths):
    """Order minima so m1 is the global minimum and the (1,2) barrier is
    the largest secondary one; compute the non-degeneracy gap."""
    n = len(minima)
    energies = np.array([m.energy for m in minima])
    first = int(np.argmin(energies))

    def barrier(i):
        key = (min(first, i), max(first, i))
        return edges[key][1] - minima[i].energy

    rest = sorted((i for i in range(n) if i != first),
                  key=lambda i: (-barrier(i), tuple(minima[i].location)))
    order = [first] + rest
    inv = {old: new for new, old in enumerate(order)}
    new_edges = {}
    new_paths = {}
    for (i, j), val in edges.items():
        a, b = sorted((inv[i], inv[j]))
        new_edges[(a, b)] = val
        new_paths[(a, b)] = paths[(i, j)]
    new_minima = [minima[i] for i in order]
    delta_gap = np.inf
    violated = False
    if n >= 3:
        b12 = new_edges[(0, 1)][1] - new_minima[1].energy
        others = [new_edges[(0, i)][1] - new_minima[i].energy for i in range(2, n)]
        delta_gap = float(b12 - max(others))
        violated = delta_gap <= 0.0
    graph = LandscapeGraph(new_minima, saddles, new_edges, float(delta_gap),
                           nondegeneracy_violated=violated)
    graph.paths = new_paths
    _check_ultrametric(graph)
    return graph


def _check_ultrametric(graph):
    n = len(graph.minima)
    tol = 1e-7
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                if k in (i, j):
                    continue
                lhs = graph.height(i, j)
                rhs = max(graph.height(i, k), graph.height(k, j))
                if lhs > rhs + tol * (1.0 + abs(rhs)):
                    graph.notes.append(
                        "ultrametric inequality violated for (%d,%d,%d)" % (i, j, k))


# ---------------------------------------------------------------------------
# Assumption evidence
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    a1_pi_value: float        # min |grad H| on the shell
    a1_pi_outward: float      # min outward derivative on the shell
    a1_pi_pass: bool
    a2_pi_value: float        # min of |grad H|^2 - lap H on the shell
    a2_pi_k: float            # implied K_H
    a2_pi_pass: bool
    a1_lsi_value: float       # min of (|grad H|^2 - lap H)/|x|^2 on the shell
    a1_lsi_pass: bool
    a2_lsi_value: float       # min Hessian eigenvalue over the box
    a2_lsi_k: float
    a2_lsi_pass: bool
    note: str = ("boundary-shell evidence only; liminf conditions at infinity "
                 "cannot be certified numerically")

    def as_dict(self):
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else
                    v if isinstance(v, str) else float(v))
                for k, v in self.__dict__.items()}


def _shell_points(box, per_face=64, band=0.05):
    """Sample points on (a thin band inside) each face of the box."""
    dim = box.dim
    pts = []
    normals = []
    for k in range(dim):
        for side, n_sign in ((box.lo[k], -1.0), (box.hi[k], 1.0)):
            if dim == 1:
                pts.append(np.array([side]))
                normals.append(np.array([n_sign]))
                continue
            others = [np.linspace(box.lo[q] + band, box.hi[q] - band, per_face)
                      for q in range(dim) if q != k]
            mesh = np.meshgrid(*others, indexing="ij")
            face = np.empty((mesh[0].size, dim))
            c = 0
            for q in range(dim):
                if q == k:
                    face[:, q] = side
                else:
                    face[:, q] = mesh[c].reshape(-1)
                    c += 1
            pts.append(face)
            nv = np.zeros(dim)
            nv[k] = n_sign
            normals.append(np.tile(nv, (face.shape[0], 1)))
    pts = np.vstack([np.atleast_2d(q) for q in pts])
    normals = np.vstack([np.atleast_2d(q) for q in normals])
    return pts, normals


def check_assumptions(p, box, grid_per_axis=65):
    """Numerical evidence for the growth assumptions on the box shell.

    These are necessary-condition checks only: the shell values estimate
    the liminf quantities and the outward derivative of H is required to
    point uphill on every face.
    """
    shell, normals = _shell_points(box)
    vals, grads, hesses = eval_jets(p, shell)
    gn = np.linalg.norm(grads, axis=1)
    outward = np.sum(grads * normals, axis=1)
    lap = np.zeros(len(vals))
    hfull = unpack_hessian(hesses, p.dim)
    lap = np.trace(hfull, axis1=1, axis2=2)
    a2 = gn ** 2 - lap
    x2 = np.sum(shell ** 2, axis=1)
    a1_lsi = a2 / np.maximum(x2, 1e-300)

    a1_value = float(gn.min())
    a1_out = float(outward.min())
    a1_pass = bool(a1_value > 1e-3 and a1_out > 0.0)
    a2_value = float(a2.min())
    a2_k = float(max(0.0, -a2_value))
    a1_lsi_value = float(a1_lsi.min())
    a1_lsi_pass = bool(a1_lsi_value > 0.0 and a1_out > 0.0)

    axes = [np.linspace(box.lo[k], box.hi[k], grid_per_axis)
            for k in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    interior = np.stack([m.reshape(-1) for m in mesh], axis=1)
    _, _, hessall = eval_jets(p, interior)
    hall = unpack_hessian(hessall, p.dim)
    eig_min = float(np.linalg.eigvalsh(hall).min())
    a2_lsi_k = float(max(0.0, -eig_min))

    return AssumptionReport(
        a1_pi_value=a1_value, a1_pi_outward=a1_out, a1_pi_pass=a1_pass,
        a2_pi_value=a2_value, a2_pi_k=a2_k, a2_pi_pass=True,
        a1_lsi_value=a1_lsi_value, a1_lsi_pass=a1_lsi_pass,
        a2_lsi_value=eig_min, a2_lsi_k=a2_lsi_k, a2_lsi_pass=True,
    )
