"""Command line interface.

Subcommands: ``forward``, ``dnmap``, ``invert-dn``, ``invert-smatrix``,
``green``, ``surface`` and ``selftest``.  Every subcommand writes one JSON
document to ``--out`` and prints a short summary.

Exit codes: 0 success, 2 invalid input, 3 failed numerical gate,
4 exceptional energy (singular Dirichlet, Lippmann-Schwinger or single-layer
system).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dnmap import (boundary_op, dirichlet_solve, interior_dn, single_layer)
from .equivalence import equivalence_bundle, factorization_defect, smatrix_to_dn
from .errors import LatticeScatteringError, ValidationError
from .geometry import band_of, convexity_check, gaussian_curvature, sample_surface
from .green import r0_defect
from .io import (GreenCache, RunConfig, complex_from_json, complex_to_json, config_hash, dump,
                 load, potential_from_json, potential_to_json, table_to_json)
from .lattice import build_domain, normal_derivative
from .reconstruction import reconstruct
from .scattering import Potential, amplitude, angular_grid, s_matrix, unitarity_defect

log = logging.getLogger("lattice_scattering")


class Gates:
    """Collects named pass/fail checks for a run."""

    def __init__(self):
        self.results = {}

    def check(self, name, value, tol):
        value = float(value)
        ok = bool(np.isfinite(value) and value <= tol)
        self.results[name] = {"value": value, "tol": float(tol), "pass": ok}
        return ok

    @property
    def ok(self):
        return all(r["pass"] for r in self.results.values())


def _envelope(command, cfg, gates, **data):
    cfg_dict = cfg.to_dict()
    doc = {"command": command, "tool_version": __version__, "config": cfg_dict,
           "config_hash": config_hash(cfg_dict), "seed": cfg.seed,
           "gates": gates.results, "status": "ok" if gates.ok else "gate_failure"}
    doc.update(data)
    return doc


def _finish(args, name, doc, gates):
    path = dump(doc, Path(args.out) / name)
    for g, r in gates.results.items():
        print(f"  {g:<28s} {r['value']:.3e}  (tol {r['tol']:.1e})  "
              f"{'ok' if r['pass'] else 'FAIL'}")
    print(f"wrote {path}")
    return 0 if gates.ok else 3


def _table(args, cfg, param, K):
    return GreenCache(args.cache).get(param, K, cfg.green_method, cfg.green_tol)


def cmd_forward(args, cfg):
    param = cfg.spectral(1).require_low_band()
    V = cfg.build_potential()
    n = cfg.angular_size()
    grid = angular_grid(cfg.lam, cfg.d, n)
    table = _table(args, cfg, param, max(cfg.M + 1, 1))
    A = amplitude(V, param, grid, table)
    S = s_matrix(A, grid)
    gates = Gates()
    gates.check("unitarity", unitarity_defect(S, grid), cfg.tolerance("unitarity"))
    doc = _envelope("forward", cfg, gates, n_theta=n, theta=grid.theta.tolist(),
                    mu=grid.mu.tolist(), potential=potential_to_json(V),
                    amplitude=complex_to_json(A.values), smatrix=complex_to_json(S.values))
    return _finish(args, "forward.json", doc, gates)


def cmd_dnmap(args, cfg):
    V = cfg.build_potential()
    L = interior_dn(V, cfg.lam)
    gates = Gates()
    gates.check("symmetry", np.max(np.abs(L.values - L.values.T)), cfg.tolerance("symmetry"))
    doc = _envelope("dnmap", cfg, gates, d=cfg.d, M=cfg.M, **{"lambda": cfg.lam},
                    vertex_order=V.domain.boundary.tolist(), matrix=L.values.tolist(),
                    dirichlet_condition=L.condition, potential=potential_to_json(V))
    return _finish(args, "dnmap.json", doc, gates)


def _read_matrix(obj):
    a = np.asarray(obj)
    if a.ndim == 3:
        return complex_from_json(a)
    return a.astype(float)


def cmd_invert_dn(args, cfg):
    src = load(args.input)
    d, M, lam = int(src["d"]), int(src["M"]), float(src["lambda"])
    L = _read_matrix(src["matrix"])
    dom = build_domain(d, M)
    if np.asarray(src["vertex_order"]).tolist() != dom.boundary.tolist():
        raise ValidationError("vertex order in the input does not match the domain")
    t0 = time.perf_counter()
    V, rep = reconstruct(L, lam, d, M, threads=args.threads,
                         gate_tol=cfg.tolerance("synth"), pattern_tol=cfg.tolerance("pattern"),
                         return_report=True)
    gates = Gates()
    gates.check("level_overlap", rep.overlap_mismatch, 1e3 * cfg.tolerance("roundtrip"))
    data = {"potential": potential_to_json(V), "subdomain_condition": rep.max_subdomain_condition}
    if "potential" in src:
        ref = potential_from_json(src["potential"])
        gates.check("roundtrip", np.max(np.abs(ref.values - V.values)), cfg.tolerance("roundtrip"))
    log.info("reconstruction took %.3f s", time.perf_counter() - t0)
    doc = _envelope("invert-dn", cfg, gates, source_hash=config_hash(src), **data)
    return _finish(args, "potential.json", doc, gates)


def cmd_invert_smatrix(args, cfg):
    src = load(args.input)
    fcfg = RunConfig.from_dict(src["config"])
    d, M, lam = fcfg.d, fcfg.M, fcfg.lam
    grid = angular_grid(lam, d, int(src["n_theta"]))
    if not np.allclose(np.asarray(src["theta"]), grid.theta, atol=1e-14):
        raise ValidationError("angular nodes in the input do not match the standard grid")
    A = complex_from_json(src["amplitude"])
    dom = fcfg.domain()
    param = fcfg.spectral(1).require_low_band()
    table = _table(args, fcfg, param, M + 1)
    L = smatrix_to_dn(A, lam, dom, grid, table)
    V, rep = reconstruct(L.values.real, lam, d, M, threads=args.threads,
                         gate_tol=cfg.tolerance("synth"),
                         pattern_tol=cfg.tolerance("pattern_smatrix"), return_report=True)
    gates = Gates()
    gates.check("dn_imaginary_part", np.max(np.abs(L.values.imag)), cfg.tolerance("end_to_end"))
    if "potential" in src:
        ref = potential_from_json(src["potential"])
        gates.check("end_to_end", np.max(np.abs(ref.values - V.values)),
                    cfg.tolerance("end_to_end"))
    doc = _envelope("invert-smatrix", fcfg, gates, source_hash=config_hash(src),
                    potential=potential_to_json(V), gram_condition=L.gram_condition,
                    single_layer_condition=L.single_layer_condition,
                    subdomain_condition=rep.max_subdomain_condition)
    return _finish(args, "potential.json", doc, gates)


def cmd_green(args, cfg):
    param = cfg.spectral().require_low_band()
    R = int(cfg.green_radius)
    table = _table(args, cfg, param, R + 1)
    tol = cfg.tolerance("green")
    if tol is None:
        tol = 10 * table.tol
    gates = Gates()
    gates.check("r0_defect", r0_defect(table, R), tol)
    doc = _envelope("green", cfg, gates, table=table_to_json(table))
    return _finish(args, "green.json", doc, gates)


def cmd_surface(args, cfg):
    band = band_of(cfg.lam, cfg.d)
    pts = sample_surface(cfg.lam, cfg.d, cfg.surface_samples, rng=cfg.seed or 0)
    K = [gaussian_curvature(cfg.lam, x) for x in pts]
    rep = convexity_check(cfg.lam, cfg.d, cfg.surface_samples, rng=cfg.seed or 0)
    gates = Gates()
    doc = _envelope("surface", cfg, gates, band=band, points=pts.tolist(),
                    gaussian_curvature=K, convex=rep.convex,
                    min_principal_curvature=rep.min_curvature,
                    max_principal_curvature=rep.max_curvature)
    print(f"  band={band} convex={rep.convex} min curvature={rep.min_curvature:.4f}")
    return _finish(args, "surface.json", doc, gates)


def cmd_selftest(args, cfg):
    """Run the main invariants on the configured problem."""
    gates = Gates()
    param = cfg.spectral(1).require_low_band()
    V = cfg.build_potential()
    dom = V.domain
    lam = cfg.lam
    table = _table(args, cfg, param, max(cfg.green_radius, dom.M + 1) + 1)
    gtol = cfg.tolerance("green") or 10 * table.tol
    gates.check("r0_defect", r0_defect(table, cfg.green_radius), gtol)
    L = interior_dn(V, lam)
    gates.check("dn_symmetry", np.max(np.abs(L.values - L.values.T)), cfg.tolerance("symmetry"))
    direct = np.column_stack([normal_derivative(dom, dirichlet_solve(V, lam, e))
                              for e in np.eye(dom.n_boundary)])
    gates.check("dn_schur_vs_direct", np.max(np.abs(direct - L.values)), 1e-10)
    M = single_layer(V, param, table)
    B = boundary_op(V, param, table, M=M)
    gates.check("single_layer_inverse", np.max(np.abs(M.values @ B.values - np.eye(dom.n_boundary))),
                1e-8)
    B0 = boundary_op(Potential.zero(dom), param, table)
    L0 = interior_dn(Potential.zero(dom), lam)
    gates.check("boundary_op_difference",
                np.max(np.abs(B.values - B0.values - (L.values - L0.values))), 1e-7)
    Bm = boundary_op(V, param.flipped(), table)
    gates.check("boundary_op_adjoint", np.max(np.abs(B.values.conj().T - Bm.values)), 1e-8)
    grid = angular_grid(lam, cfg.d, cfg.angular_size())
    A = amplitude(V, param, grid, table)
    gates.check("unitarity", unitarity_defect(s_matrix(A, grid), grid), cfg.tolerance("unitarity"))
    bundle = equivalence_bundle(dom, lam, grid, table)
    gates.check("factorization", factorization_defect(V, lam, grid, table, bundle, A.values),
                cfg.tolerance("factorization"))
    W = reconstruct(L, lam, cfg.d, cfg.M, threads=args.threads)
    gates.check("roundtrip", np.max(np.abs(W.values - V.values)), cfg.tolerance("roundtrip"))
    Ls = smatrix_to_dn(A.values, lam, dom, grid, table, bundle)
    W2 = reconstruct(Ls.values.real, lam, cfg.d, cfg.M, threads=args.threads,
                     pattern_tol=cfg.tolerance("pattern_smatrix"))
    gates.check("end_to_end", np.max(np.abs(W2.values - V.values)), cfg.tolerance("end_to_end"))
    doc = _envelope("selftest", cfg, gates)
    return _finish(args, "selftest.json", doc, gates)


COMMANDS = {
    "forward": (cmd_forward, "potential -> scattering amplitude and S-matrix"),
    "dnmap": (cmd_dnmap, "potential -> interior Dirichlet-to-Neumann map"),
    "invert-dn": (cmd_invert_dn, "D-N map file -> potential"),
    "invert-smatrix": (cmd_invert_smatrix, "amplitude file (from forward) -> potential"),
    "green": (cmd_green, "table of the free lattice resolvent kernel"),
    "surface": (cmd_surface, "samples and curvature of the energy surface"),
    "selftest": (cmd_selftest, "run the built-in consistency gates"),
}


def _tolerance_arg(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value {value!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--cache", default=None, help="directory for cached Green tables")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (default: number of cores)")
    common.add_argument("--tolerance", type=_tolerance_arg, action="append", default=[],
                        metavar="NAME=VALUE", help="override a gate tolerance; repeatable")
    common.add_argument("--d", type=int, help="override dimension")
    common.add_argument("--M", type=int, help="override cube side")
    common.add_argument("--lam", "--lambda", dest="lam", type=float, help="override energy")
    common.add_argument("--sign", type=int, choices=(1, -1), help="override limit sign")
    common.add_argument("--seed", type=int, help="override random potential seed")
    common.add_argument("--n-theta", type=int, dest="n_theta", help="override angular grid size")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="lattice-scattering",
        description="Fixed-energy scattering and inverse problems for the discrete "
                    "Schroedinger operator on Z^d.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name.startswith("invert"):
            p.add_argument("input", help="input JSON file")
    return parser


def resolve_config(args):
    data = load(args.config) if args.config else {}
    cfg = RunConfig.from_dict(data).to_dict()
    for key, cfg_key in (("d", "d"), ("M", "M"), ("lam", "lambda"), ("sign", "limit_sign"),
                         ("n_theta", "n_theta")):
        val = getattr(args, key)
        if val is not None:
            cfg[cfg_key] = val
    if args.seed is not None:
        cfg["potential"] = dict(cfg["potential"], seed=args.seed)
    tol = dict(cfg.get("tolerances") or {})
    tol.update(dict(args.tolerance))
    cfg["tolerances"] = tol
    return RunConfig.from_dict(cfg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg = resolve_config(args)
        print(f"{args.command}: d={cfg.d} M={cfg.M} lambda={cfg.lam}")
        return func(args, cfg)
    except LatticeScatteringError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
