"""Command line interface.

Subcommands:

    solve-p    single Dirichlet solve for one j; prints residual and energy
    solve-inf  limit-equation solve; prints residual and sweep count
    converge   full exponent-sequence run from a config file or preset
    verify     built-in property/oracle suite
    presets    list shipped run configurations

``--config`` accepts either a path to a flat key-value config file (see
docs/config.md) or the name of a shipped preset.  Exit codes: 0 when all
verdicts hold, 1 on a false verdict or solver failure, 2 on configuration
errors (including unknown flags and subcommands).
"""

from __future__ import annotations

import argparse
import os
import sys

from .energy import EnergyFunctional, minimize
from .exponents import make_exponent_family
from .harness import (ConfigError, build_datum, build_domain, emit_report,
                      parse_config_text, run_sequence)
from .infinity import InfinityProblem, solve_infinity
from .presets import PRESETS, get_preset
from .selfcheck import run_verify

__all__ = ["main"]


def _load_config(spec):
    if spec is None:
        raise ConfigError("--config is required for this subcommand")
    if os.path.exists(spec):
        with open(spec, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    if spec in PRESETS:
        return get_preset(spec)
    raise ConfigError(f"config {spec!r} is neither a file nor a preset name")


def _apply_overrides(cfg, args):
    kw = {}
    if args.grid_n is not None:
        kw["n"] = args.grid_n
    if args.tol is not None:
        kw["solver_tol"] = args.tol
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out is not None:
        kw["out_dir"] = args.out
    if args.format is not None:
        kw["out_format"] = args.format
    return cfg.replace(**kw) if kw else cfg


def _add_common(p):
    p.add_argument("--config", help="config file path or preset name")
    p.add_argument("--out", help="output directory for reports")
    p.add_argument("--format", choices=["json", "csv"],
                   help="report format (default json)")
    p.add_argument("--grid-n", type=int, dest="grid_n",
                   help="override nodes per axis")
    p.add_argument("--tol", type=float, help="override solver tolerance")
    p.add_argument("--seed", type=int, help="override sampling seed")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pxlaplace",
        description="variable-exponent Dirichlet solves and their limit")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve-p", help="single variable-exponent solve")
    _add_common(p)
    p.add_argument("--j", type=int, help="sequence index (default j_min)")
    _add_common(sub.add_parser("solve-inf", help="limit-equation solve"))
    _add_common(sub.add_parser("converge", help="full sequence run"))
    _add_common(sub.add_parser("verify", help="built-in verification suite"))
    _add_common(sub.add_parser("presets", help="list shipped presets"))
    return parser


def _cmd_solve_p(cfg, args):
    grid = build_domain(cfg)
    phi = build_datum(grid, cfg.datum_kind, cfg.datum_params)
    seq = make_exponent_family(cfg.family, cfg.family_params, grid,
                               (cfg.j_min, cfg.j_max), cfg.exponent_cap)
    j = args.j if args.j is not None else cfg.j_min
    sol = minimize(EnergyFunctional(grid, seq.field(j), phi),
                   tol=cfg.solver_tol, max_iter=cfg.solver_max_iter,
                   method=cfg.solver_method)
    print(f"j={j} residual_sup={sol.residual_sup:.6e} "
          f"energy={sol.energy:.12e} iterations={sol.iterations} "
          f"converged={sol.converged}")
    return 0 if sol.converged else 1


def _cmd_solve_inf(cfg, _args):
    grid = build_domain(cfg)
    phi = build_datum(grid, cfg.datum_kind, cfg.datum_params)
    seq = make_exponent_family(cfg.family, cfg.family_params, grid,
                               (cfg.j_min, cfg.j_max), cfg.exponent_cap)
    sol = solve_infinity(InfinityProblem(
        grid, phi, seq.xi, cfg.inf_eps_grad, cfg.inf_tol,
        cfg.inf_max_sweeps, cfg.inf_drift_cap))
    print(f"residual_sup={sol.residual_sup:.6e} sweeps={sol.iterations} "
          f"converged={sol.converged}")
    return 0 if sol.converged else 1


def _cmd_converge(cfg, _args):
    report = run_sequence(cfg)
    paths = emit_report(report, cfg.out_dir, cfg.out_format)
    for r in report.records:
        print(f"j={r.j} sup_dist={r.sup_dist_to_limit:.6e} "
              f"energy_half={r.energy_half:.6e} lux={r.lux_grad_norm:.6e} "
              f"converged={r.converged}")
    print(f"verdicts: energy_bound_ok={report.energy_bound_ok} "
          f"lux_bound_ok={report.lux_bound_ok} "
          f"monotone_convergence_ok={report.monotone_convergence_ok} "
          f"all_converged={report.all_converged}")
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return 0 if report.ok else 1


def _cmd_verify(_cfg, args):
    seed = args.seed if args.seed is not None else 0
    results = run_verify(seed)
    ok = True
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok = ok and passed
    return 0 if ok else 1


def _cmd_presets(_cfg, _args):
    for name, cfg in PRESETS.items():
        print(f"{name}: {cfg.domain_kind} n={cfg.n} datum={cfg.datum_kind} "
              f"family={cfg.family} j={cfg.j_min}..{cfg.j_max}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors
        return 0 if not exc.code else 2
    try:
        if args.command == "presets":
            return _cmd_presets(None, args)
        if args.command == "verify":
            return _cmd_verify(None, args)
        cfg = _apply_overrides(_load_config(args.config), args)
        if args.command == "solve-p":
            return _cmd_solve_p(cfg, args)
        if args.command == "solve-inf":
            return _cmd_solve_inf(cfg, args)
        if args.command == "converge":
            return _cmd_converge(cfg, args)
        raise ConfigError(f"unknown subcommand {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
