"""Command-line front end: analyze / constants / validate.

Configs are flat INI-style key-value files with one potential per file:

    [potential]
    source = (x1^2 - 1)^2
    dim = 1
    name = double-well

    [domain]
    lo = -2.5
    hi = 2.5

    [run]
    epsilons = 0.2 0.1 0.07 0.05
    grid = 4096
    saddle_grid = 513
    seed = 1

Exit codes: 0 ok, 1 validation failure, 2 usage/config error.  All CSV
output carries 17 significant digits and is byte-stable for a fixed
config + seed.
"""

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import discrete, ek, lyapunov, means, oracle1d, transport
from .errors import MetastabError, PotentialSyntaxError
from .expr import parse_potential
from .landscape import Box, check_assumptions, find_critical_points, saddle_graph
from .measures import GibbsSpec, laplace_partition, quadrature_partition

FMT = "%.17g"


class ConfigError(Exception):
    pass


def load_config(path, overrides=None):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError("cannot read config file %s" % path)
    try:
        pot = cp["potential"]
        source = pot["source"]
        dim = int(pot["dim"])
        name = pot.get("name", "")
        dom = cp["domain"]
        lo = float(dom["lo"])
        hi = float(dom["hi"])
        run = cp["run"] if cp.has_section("run") else {}
        eps_list = [float(t) for t in run.get("epsilons", "0.1").split()]
        grid = int(run.get("grid", "4096"))
        saddle_grid = int(run.get("saddle_grid", "513"))
        seed = int(run.get("seed", "1"))
    except (KeyError, ValueError) as err:
        raise ConfigError("%s: %s" % (path, err))
    cfg = {
        "source": source, "dim": dim, "name": name,
        "box": Box.cube(lo, hi, dim),
        "epsilons": eps_list, "grid": grid,
        "saddle_grid": saddle_grid, "seed": seed,
    }
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    if any(e <= 0 for e in cfg["epsilons"]):
        raise ConfigError("all epsilons must be positive")
    if not (64 <= cfg["grid"] <= 16384 and cfg["grid"] & (cfg["grid"] - 1) == 0):
        raise ConfigError("grid must be a power of two between 2^6 and 2^14")
    return cfg


def _build_landscape(cfg):
    p = parse_potential(cfg["source"], cfg["dim"], cfg["name"])
    cps = find_critical_points(p, cfg["box"])
    minima = [c for c in cps if c.morse_index == 0]
    if len(minima) >= 2:
        if p.dim > 2:
            raise ConfigError("saddle graph needs dim <= 2")
        graph = saddle_graph(p, cps, cfg["box"], cfg["saddle_grid"])
    else:
        from .landscape import LandscapeGraph
        graph = LandscapeGraph(minima=minima,
                               saddles=[c for c in cps if c.morse_index == 1],
                               edges={}, delta_gap=math.inf)
    return p, cps, graph


def _cp_record(c):
    return {
        "location": [float(v) for v in c.location],
        "energy": float(c.energy),
        "eigenvalues": [float(v) for v in c.hessian_eigenvalues],
        "morse_index": int(c.morse_index),
    }


def cmd_analyze(cfg, out_dir):
    p, cps, graph = _build_landscape(cfg)
    report = check_assumptions(p, cfg["box"])
    doc = {
        "potential": str(p),
        "dim": p.dim,
        "critical_points": [_cp_record(c) for c in cps],
        "minima_order": [_cp_record(m) for m in graph.minima],
        "edges": {"%d,%d" % k: {"saddle": _cp_record(graph.saddles[v[0]]),
                                "height": float(v[1])}
                  for k, v in graph.edges.items()},
        "delta_gap": (None if math.isinf(graph.delta_gap)
                      else float(graph.delta_gap)),
        "nondegeneracy_violated": bool(graph.nondegeneracy_violated),
        "assumptions": report.as_dict(),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "landscape.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print("critical points (%d):" % len(cps))
    for c in cps:
        print("  x=%s  H=%.6g  index=%d" % (
            np.array2string(c.location, precision=6), c.energy, c.morse_index))
    for (i, j), (k, h) in sorted(graph.edges.items()):
        print("edge (%d,%d): saddle height %.6g" % (i + 1, j + 1, h))
    if math.isfinite(graph.delta_gap):
        print("delta_gap: %.6g%s" % (graph.delta_gap,
              "  [NON-DEGENERACY VIOLATED]" if graph.nondegeneracy_violated else ""))
    print("wrote %s" % path)
    return 0


def cmd_constants(cfg, out_dir, use_oracle=True, fault=None):
    p, cps, graph = _build_landscape(cfg)
    if len(graph.minima) < 2:
        raise ConfigError("constants sweep needs a metastable landscape")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    header = ["epsilon", "inv_rho", "inv_alpha_times2", "ratio_rho_alpha",
              "dominant_i", "dominant_j"]
    oracle_cols = use_oracle and p.dim <= 2
    if use_oracle and p.dim > 2:
        print("warning: FD oracle unavailable for dim > 2; skipped",
              file=sys.stderr)
    if oracle_cols:
        header += ["fd_gap", "gap_over_eps_rho"]
    for eps in cfg["epsilons"]:
        g = GibbsSpec(p, eps, cfg["box"], graph)
        pd = laplace_partition(g)
        res = ek.ek_lsi(g, pd)
        inv_rho = res.inv_rho
        if fault == "lambda-sign":
            # test fixture: corrupt the saddle curvature sign downstream
            inv_rho = -inv_rho
        row = [eps, inv_rho, res.inv_alpha_times2, res.ratio_rho_alpha,
               res.dominant_pair[0] + 1, res.dominant_pair[1] + 1]
        if oracle_cols:
            gap = oracle1d.fd_spectral_gap(g, cfg["grid"],
                                           check_resolution=False)
            row += [gap, gap / (eps / inv_rho)]
        rows.append(row)
    path = out_dir / "ek_sweep.csv"
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(FMT % v if isinstance(v, float) else str(v)
                              for v in row) + "\n")
    print("wrote %s (%d rows)" % (path, len(rows)))
    if oracle_cols:
        bad = [r for r in rows if not 0.25 <= r[-1] <= 4.0]
        if bad:
            print("EK/oracle ratio check failed for %d rows" % len(bad),
                  file=sys.stderr)
            return 1
    return 0


def _validation_suites(cfg):
    rng = np.random.default_rng(cfg["seed"])
    suites = {}

    def suite(name):
        def wrap(fn):
            suites[name] = fn
            return fn
        return wrap

    @suite("means")
    def _means():
        worst = 0.0
        for _ in range(2000):
            a, b = rng.uniform(1e-3, 10.0, 2)
            geo, lam, ari = means.log_mean_bounds(a, b)
            if not geo <= lam + 1e-15 <= ari + 1e-12:
                return False, "mean ordering failed at (%g, %g)" % (a, b)
            worst = max(worst, geo - lam, lam - ari)
        for _ in range(200):
            pval = rng.uniform(0.01, 0.99)
            if not means.upper_bound_check(pval):
                return False, "upper bound failed at p=%g" % pval
        return True, "margin %.2e" % worst

    @suite("discrete")
    def _discrete():
        for _ in range(2000):
            m = rng.integers(2, 6)
            z = discrete.DiscreteMeasure(rng.dirichlet(np.ones(m)))
            f = np.abs(rng.standard_normal(m))
            lhs, rhs = discrete.weighted_lsi_rhs(z, f)
            if lhs > rhs * (1 + 1e-12) + 1e-15:
                return False, "weighted LSI violated"
        return True, "2000 random cases"

    @suite("linalg")
    def _linalg():
        factor = transport.decide_partial_gaussian_convention()
        for _ in range(50):
            mm = rng.standard_normal((3, 3))
            spd = mm @ mm.T + 3.0 * np.eye(3)
            eta = rng.standard_normal(3)
            eta /= np.linalg.norm(eta)
            z = rng.standard_normal(3)
            z -= eta * (z @ eta)
            closed, quadr = transport.partial_gaussian(spd, eta, z)
            if abs(closed - quadr) > 1e-8 * abs(closed):
                return False, "partial Gaussian mismatch"
        return True, "exponent factor %.1f (quadrature-decided)" % factor

    @suite("lyapunov")
    def _lyap():
        p = parse_potential("(x1^2-1)^2", 1)
        cps = find_critical_points(p, Box.cube(-3.5, 3.5, 1))
        box = Box.cube(-4.5, 4.5, 1)
        _, rep = lyapunov.lyapunov_pipeline(p, cps, 0.1, box,
                                            grid_resolution=2049)
        return rep.drift_margin_grid < 0.0, \
            "lambda0=%.3g b0=%.3g" % (rep.lambda0, rep.b0)

    @suite("transport")
    def _transport():
        p = parse_potential("(x1^2-1)^2", 1)
        box = Box.cube(-2.5, 2.5, 1)
        cps = find_critical_points(p, box)
        graph = saddle_graph(p, cps, box, 257)
        g = GibbsSpec(p, 0.1, box, graph)
        interp = transport.build_interpolation(g, 0, 1)
        rep = transport.transport_cost(interp, g, 1024, 512)
        bound = transport.transport_bound(g, 0, 1)
        env = 1.0 + 3.0 * math.sqrt(0.1) * abs(math.log(0.1)) ** 1.5
        ok = 0.0 < rep.total / bound <= env
        return ok, "cost/bound = %.4f" % (rep.total / bound)

    @suite("oracle")
    def _oracle():
        p = parse_potential("(x1^2-1)^2", 1)
        box = Box.cube(-2.5, 2.5, 1)
        cps = find_critical_points(p, box)
        graph = saddle_graph(p, cps, box, 257)
        g = GibbsSpec(p, 0.1, box, graph)
        gap = oracle1d.fd_spectral_gap(g, 2048, check_resolution=False)
        pd = laplace_partition(g)
        inv_rho = ek.ek_pi(g, pd).inv_rho
        ratio = gap / (0.1 / inv_rho)
        return 0.6 <= ratio <= 1.4, "gap/(eps rho_EK) = %.4f" % ratio

    return suites


def cmd_validate(cfg, out_dir, name_filter=None):
    suites = _validation_suites(cfg)
    failures = 0
    for name, fn in suites.items():
        if name_filter and name_filter not in name:
            continue
        ok, detail = fn()
        status = "pass" if ok else "FAIL"
        print("%-10s %-4s  %s" % (name, status, detail))
        if not ok:
            failures += 1
    return 1 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="metastab",
        description="metastable energy-landscape analysis")
    parser.add_argument("command", choices=["analyze", "constants", "validate"])
    parser.add_argument("--config", required=True, help="config file path")
    parser.add_argument("--eps", help="epsilon list override, e.g. '0.1 0.05'")
    parser.add_argument("--grid", type=int, help="grid resolution override")
    parser.add_argument("--no-oracle", action="store_true",
                        help="skip FD-oracle columns")
    parser.add_argument("--filter", help="run only matching validation suites")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--inject-fault", choices=["lambda-sign"],
                        help=argparse.SUPPRESS)  # validation test fixture
    args = parser.parse_args(argv)

    overrides = {
        "epsilons": ([float(t) for t in args.eps.split()] if args.eps else None),
        "grid": args.grid,
        "seed": args.seed,
    }
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, PotentialSyntaxError) as err:
        print("config error: %s" % err, file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    try:
        if args.command == "analyze":
            return cmd_analyze(cfg, out_dir)
        if args.command == "constants":
            return cmd_constants(cfg, out_dir, use_oracle=not args.no_oracle,
                                 fault=args.inject_fault)
        return cmd_validate(cfg, out_dir, name_filter=args.filter)
    except (MetastabError, ConfigError) as err:
        print("error: %s" % err, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
