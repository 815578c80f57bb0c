"""Command line front end: ``smallscat <command> --config run.yaml --out DIR``.

Commands are ``shape``, ``bie-validate``, ``scatter``, ``homogenize`` and
``design``. Each writes CSV tables and ``summary.json`` into ``--out``.

Exit codes: 0 success, 2 configuration error, 3 regime or feasibility error,
4 numerical failure, 5 design with some (not all) cells infeasible.
"""
import argparse
import logging
import os
import sys

import numpy as np

from . import _accel, config, io, kernels
from .bie import validate_pec
from .emcore import plane_wave
from .errors import ConfigError, FeasibilityError, NumericalError, RegimeError, SmallScatError
from .manybody import (
    CloudConfig,
    CubePartition,
    as_field,
    evaluate_field,
    far_field,
    place_particles,
    reduced_system,
    solve_cloud,
    solve_reduced,
    sphere_directions,
)
from .medium import (
    NEGATIVE_REFRACTION_PRESET,
    EffectiveMedium,
    MediumGrid,
    assemble_limit_ie,
    design_report_for_mu,
    design_report_for_n,
    permeability,
    refraction_coefficient,
    solve_limit_ie,
)
from .shape import ShapeConstants, half_identity_check

logger = logging.getLogger("smallscat")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_NUMERICAL = 4
EXIT_PARTIAL = 5


def cmd_shape(cfg, out):
    sec = config.section(cfg, "mesh", required=False)
    a = config.as_float(sec.get("a", 1.0), "mesh.a")
    refs = [int(r) for r in sec.get("refinements", [0, 1, 2, 3])]
    ka = config.as_float(cfg.get("half_identity_ka", 0.01), "half_identity_ka")
    rows, last = [], None
    for r in refs:
        mesh = config.mesh_from(sec, a=a, refinement=r)
        shp = ShapeConstants.from_mesh(mesh)
        hi = half_identity_check(mesh, ka / shp.a)
        rows.append((r, mesh.n_faces, shp, hi))
        last = (mesh, shp)
    cols = [
        ("refinement", [r[0] for r in rows]),
        ("faces", [r[1] for r in rows]),
        ("area", [r[2].surface_area for r in rows]),
        ("volume", [r[2].volume for r in rows]),
        ("a", [r[2].a for r in rows]),
        ("c_D", [r[2].c_D for r in rows]),
        ("c_S", [r[2].c_S for r in rows]),
    ]
    for i in range(3):
        for j in range(3):
            cols.append((f"tau_{'xyz'[i]}{'xyz'[j]}", [r[2].tau[i, j] for r in rows]))
    cols.append(("trace_tau", [np.trace(r[2].tau) for r in rows]))
    cols.append(("half_identity", np.array([r[3] for r in rows])))
    io.write_table(os.path.join(out, "shape.csv"), cols)
    mesh, shp = last
    mesh.to_off(os.path.join(out, "mesh.off"))
    return {
        "refinement": refs[-1],
        "tau": shp.tau,
        "c_D": shp.c_D,
        "c_S": shp.c_S,
        "half_identity": rows[-1][3],
        "half_identity_ka": ka,
    }


def cmd_bie_validate(cfg, out):
    ctx = config.wave(cfg)
    sec = config.section(cfg, "mesh", required=False)
    kas = config.floats(cfg.get("ka", [0.05, 0.02, 0.01]), "ka")
    k = abs(ctx.k)
    rows = []
    for ka in kas:
        mesh = config.mesh_from(sec, a=1.0)
        mesh = mesh.scaled(ka / (k * mesh.a))
        rows.append(validate_pec(mesh, ctx, int(sec.get("refinement", 3))))
    a = np.array([r.ka / k for r in rows])
    qb = np.array([np.linalg.norm(r.Q_bie) for r in rows])
    err = np.array([r.rel_error for r in rows])
    io.write_table(
        os.path.join(out, "bie.csv"),
        [
            ("ka", [r.ka for r in rows]),
            ("refinement", [r.refinement for r in rows]),
            ("abs_Q_bie", qb),
            ("abs_Q_asym", [np.linalg.norm(r.Q_asym) for r in rows]),
            ("rel_error", err),
            ("gamma", np.array([r.gamma for r in rows])),
            ("c_gamma", np.array([r.c_gamma for r in rows])),
            ("consistency", [r.consistency for r in rows]),
        ],
    )
    slope = float(np.polyfit(np.log(a), np.log(qb), 1)[0]) if len(rows) > 1 else float("nan")
    order = np.argsort(-np.array(kas))
    return {
        "slope_log_Q_vs_log_a": slope,
        "rel_error_smallest_ka": float(err[np.argmin(kas)]),
        "error_decreasing_with_ka": bool(np.all(np.diff(err[order]) < 0)),
        "gamma": [r.gamma for r in rows],
    }


def _c_gamma(sec, ctx, a):
    """``c_gamma`` as a number, or ``auto`` to solve the boundary problem for the shape at this size."""
    val = sec.get("c_gamma", 1.0)
    if isinstance(val, str) and val == "auto":
        mesh = config.mesh_from(sec.get("shape", {}), "shape", refinement=int(sec.get("c_gamma_refinement", 2)))
        mesh = mesh.scaled(a / mesh.a)
        return validate_pec(mesh, ctx).c_gamma
    return config.as_complex(val, "c_gamma")


def cloud_config(sec, ctx, corner, extents):
    kind = sec.get("kind", "impedance")
    a = config.as_float(sec.get("a", 0.01), "a")
    shape = config.shape_constants(sec.get("shape", {}))
    c_gamma = _c_gamma(sec, ctx, a) if kind == "pec" else 1.0
    tau1 = sec.get("tau1_override")
    if tau1 is not None:
        tau1 = np.array([[config.as_complex(v, "tau1_override") for v in row] for row in tau1])
    return CloudConfig(
        corner=corner,
        extents=extents,
        N_func=config.profile(sec.get("N", 1.0), "N"),
        h_func=config.profile(sec.get("h", 0.0), "h", complex_valued=True),
        a=a,
        kappa=config.as_float(sec.get("kappa", 0.0), "kappa"),
        kind=kind,
        shape=shape,
        c_gamma=c_gamma,
        tau1_override=tau1,
    )


def cmd_scatter(cfg, out):
    ctx = config.wave(cfg)
    sec = config.section(cfg, "cloud")
    corner, extents = config.box(config.section(sec, "box", required=False))
    ccfg = cloud_config(sec, ctx, corner, extents)
    b = config.as_float(sec.get("cube_side", extents.min()), "cloud.cube_side")
    cloud = place_particles(ccfg, b)
    io.write_cloud(os.path.join(out, "cloud.csv"), cloud)
    solver = config.section(cfg, "solver", required=False)
    sol = solve_cloud(cloud, ctx, method=solver.get("method", "auto"))
    probes = config.points(config.section(cfg, "probes"))
    E = evaluate_field(sol, probes)
    io.write_field(os.path.join(out, "field.csv"), probes, E)
    summary = {
        "M": cloud.M,
        "P": cloud.partition.n_cubes,
        "d_min": cloud.d_min,
        "b_over_d": cloud.partition.b / cloud.d_min if cloud.M > 1 else None,
        "residual_full": sol.residual,
        "c_gamma": ccfg.c_gamma,
    }
    rep = cloud.validity(ctx)
    if rep is not None:
        summary["validity"] = {"ka": rep.ka, "a_over_d": rep.a_over_d, "kd": rep.kd, "valid": rep.valid,
                               "warnings": rep.warnings}
        for w in rep.warnings:
            logger.warning("validity: %s", w)
    if solver.get("reduced", False):
        red = solve_reduced(cloud, ctx, config.as_float(solver.get("min_ratio", 5.0), "solver.min_ratio"))
        Er = evaluate_field(red, probes)
        io.write_field(os.path.join(out, "field_reduced.csv"), probes, Er)
        rel = np.linalg.norm(E - Er, axis=1) / np.linalg.norm(E, axis=1)
        io.write_table(os.path.join(out, "comparison.csv"), io.xyz_columns(probes) + [("rel_diff", rel)])
        summary["max_rel_diff_full_vs_reduced"] = float(rel.max())
        summary["residual_reduced"] = red.residual
    ff = config.section(cfg, "far_field", required=False)
    beta = sphere_directions(int(ff.get("n_theta", 6)), int(ff.get("n_phi", 12)))
    A = far_field(sol, beta)
    trans = np.abs(np.einsum("bi,bi->b", beta, A))
    io.write_table(os.path.join(out, "far_field.csv"),
                   io.vector_columns("beta_", beta) + io.vector_columns("A", A) + [("beta_dot_A", trans)])
    summary["max_beta_dot_A"] = float(trans.max())
    summary["max_deviation_from_incident"] = float(np.abs(E - plane_wave(ctx, probes)).max())
    return summary


def _grid(sec, what):
    corner, extents = config.box(config.section(sec, "box", required=False), f"{what}.box")
    if "cells" in sec:
        n = int(sec["cells"])
        if n < 1:
            raise ConfigError(f"{what}.cells must be positive")
        b = extents[0] / n
    else:
        b = config.as_float(sec.get("cube_side", extents.min()), f"{what}.cube_side")
    return corner, extents, b


def cmd_homogenize(cfg, out):
    ctx = config.wave(cfg)
    sec = config.section(cfg, "medium")
    corner, extents, b = _grid(sec, "medium")
    N_func = config.profile(sec.get("N", 1.0), "N")
    h_func = config.profile(sec.get("h", 0.0), "h", complex_valued=True)
    grid = MediumGrid.from_box(corner, extents, b, N_func, h_func)
    kind = sec.get("kind", "impedance")
    ccfg = cloud_config({**sec, "N": sec.get("N", 1.0), "a": sec.get("a", 0.01)}, ctx, corner, extents)
    self_term = bool(sec.get("self_term", False))
    lim = solve_limit_ie(grid, ctx, kind, ccfg.shape, ccfg.c_gamma, ccfg.tau1_override, self_term,
                         method=sec.get("method", "auto"))
    xc = grid.centers
    io.write_field(os.path.join(out, "limit_field.csv"), xc, lim.field_at_centers())
    c0 = ccfg.shape.c_S
    if kind == "pec":
        em = EffectiveMedium.pec(grid.N, ctx, ccfg.shape.c_D, ccfg.c_gamma)
    else:
        em = EffectiveMedium.impedance(grid.h, grid.N, ctx, c0)
    io.write_table(os.path.join(out, "medium_map.csv"),
                   io.xyz_columns(xc) + [("N", grid.N), ("h", grid.h), ("n", em.n), ("mu_eff", em.mu_eff)])
    summary = {"cells": grid.partition.n_cubes, "residual_limit": lim.solution.residual, "c0": c0,
               "self_term": self_term}
    probes = config.points(config.section(cfg, "probes"))
    E_lim = evaluate_field(lim.solution, probes)
    io.write_field(os.path.join(out, "limit_probes.csv"), probes, E_lim)
    if not self_term:
        m_red = reduced_system(ccfg, grid.partition, ctx).dense()
        m_lim = assemble_limit_ie(grid, ctx, kind, ccfg.shape, ccfg.c_gamma, ccfg.tau1_override).dense()
        summary["riemann_max_abs_diff"] = float(np.abs(m_red - m_lim).max())
    conv = cfg.get("convergence")
    if conv:
        summary.update(_convergence(conv, sec, ctx, corner, extents, grid, probes, E_lim, out))
    return summary


def _convergence(conv, sec, ctx, corner, extents, grid, probes, E_lim, out):
    Ms = [int(m) for m in conv.get("M", [216, 729, 1728])]
    kappa = config.as_float(conv.get("kappa", sec.get("kappa", 0.5)), "convergence.kappa")
    b = config.as_float(conv.get("cube_side", extents.min()), "convergence.cube_side")
    part = CubePartition.from_box(corner, extents, b)
    N_func = as_field(config.profile(sec.get("N", 1.0), "N"))
    law_total = float(np.sum(N_func(part.centers()) * part.volume))
    kind = sec.get("kind", "impedance")
    rows = []
    for M in Ms:
        e = 3.0 if kind == "pec" else 2.0 - kappa
        a = (law_total / M) ** (1.0 / e)
        ccfg = cloud_config({**sec, "a": a, "kappa": kappa}, ctx, corner, extents)
        cloud = place_particles(ccfg, b)
        sol = solve_cloud(cloud, ctx)
        err = float(np.abs(evaluate_field(sol, probes) - E_lim).max())
        rows.append((M, cloud.M, a, cloud.d_min, err))
        logger.info("convergence: M=%d a=%.4g max|E_cloud - E_limit|=%.3e", cloud.M, a, err)
    io.write_table(os.path.join(out, "convergence.csv"),
                   [(n, [r[i] for r in rows]) for i, n in enumerate(["M_target", "M", "a", "d_min", "max_error"])])
    errs = np.array([r[4] for r in rows])
    return {"convergence_errors": errs, "convergence_monotone": bool(np.all(np.diff(errs) < 0))}


def cmd_design(cfg, out):
    ctx = config.wave(cfg)
    sec = config.section(cfg, "grid")
    corner, extents, b = _grid(sec, "grid")
    part = CubePartition.from_box(corner, extents, b)
    xc = part.centers()
    N = as_field(config.profile(sec.get("N", 1.0), "N"))(xc)
    if np.any(N < 0):
        raise ConfigError("N must be non-negative")
    c0 = config.as_float(cfg.get("c0", 4.0 * np.pi), "c0")
    tgt = config.section(cfg, "target")
    quantity = tgt.get("quantity", "n")
    if tgt.get("preset") == "negative_refraction":
        if quantity != "n":
            raise ConfigError("the negative_refraction preset targets n")
        value = np.full(len(xc), NEGATIVE_REFRACTION_PRESET)
    else:
        t = config.profile(tgt.get("value", 1.0) if "profile" not in tgt else tgt, "target", complex_valued=True)
        value = as_field(t, np.complex128)(xc)
    if quantity == "n":
        rep, forward = design_report_for_n(value, N, ctx, c0), refraction_coefficient
    elif quantity == "mu":
        rep, forward = design_report_for_mu(value, N, ctx, c0), permeability
    else:
        raise ConfigError(f"target.quantity must be 'n' or 'mu', got {quantity!r}")
    # infeasible cells carry Re h < 0, outside the forward map's domain
    achieved = np.full(value.shape, np.nan + 0j)
    feas = rep.feasible
    if feas.any():
        achieved[feas] = forward(rep.h[feas], N[feas], ctx, c0)
    err = np.where(rep.feasible, np.abs(achieved - value) / np.abs(value), np.nan)
    io.write_table(
        os.path.join(out, "design.csv"),
        io.xyz_columns(xc)
        + [("N", N), ("target", value), ("h", rep.h), ("feasible", rep.feasible), ("achieved", achieved),
           ("roundtrip_error", err)],
    )
    summary = {
        "quantity": quantity,
        "cells": int(feas.size),
        "infeasible_cells": rep.infeasible_cells,
        "all_feasible": rep.all_feasible,
        "max_roundtrip_error": float(np.max(err[feas])) if feas.any() else None,
        "min_re_h": float(rep.h.real[feas].min()) if feas.any() else None,
    }
    if quantity == "n" and feas.any():
        summary["negative_refraction_achieved"] = bool(np.any(achieved.real[feas] < 0))
        summary["max_abs_im_n"] = float(np.abs(achieved.imag[feas]).max())
    if not feas.any():
        raise FeasibilityError(f"no target cell is feasible ({feas.size} cells)", rep.infeasible_cells)
    return summary


COMMANDS = {
    "shape": cmd_shape,
    "bie-validate": cmd_bie_validate,
    "scatter": cmd_scatter,
    "homogenize": cmd_homogenize,
    "design": cmd_design,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
    common.add_argument("--out", required=True, metavar="DIR", help="output directory (created if missing)")
    common.add_argument("--threads", type=int, default=0, metavar="N",
                        help="worker threads for parallel kernels; 0 uses all cores")
    common.add_argument("--seedless", action="store_true",
                        help="assert that the run uses no randomness (always true)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    p = argparse.ArgumentParser(prog="smallscat", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def run(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    summary = {"command": args.command, "backend": kernels.BACKEND, "seedless": True}
    code = EXIT_OK
    try:
        io.ensure_dir(args.out)
    except OSError as exc:
        print(f"smallscat: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        threads = _accel.set_threads(args.threads)
        logger.info("using %d thread(s), %s kernels", threads, kernels.BACKEND)
        cfg = config.load(args.config)
        summary.update(COMMANDS[args.command](cfg, args.out))
        if args.command == "design" and not summary.get("all_feasible", True):
            code = EXIT_PARTIAL
            print(f"smallscat: {len(summary['infeasible_cells'])} design cell(s) infeasible", file=sys.stderr)
    except ConfigError as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except FeasibilityError as exc:
        code, msg = EXIT_REGIME, str(exc)
        if exc.infeasible is not None:
            summary["infeasible_cells"] = exc.infeasible
    except RegimeError as exc:
        code, msg = EXIT_REGIME, str(exc)
    except NumericalError as exc:
        code, msg = EXIT_NUMERICAL, str(exc)
    except (SmallScatError, ValueError) as exc:
        code, msg = EXIT_CONFIG, str(exc)
    if code not in (EXIT_OK, EXIT_PARTIAL):
        print(f"smallscat {args.command}: {msg}", file=sys.stderr)
        summary["error"] = msg
    summary["exit_status"] = code
    io.write_summary(os.path.join(args.out, "summary.json"), summary)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
