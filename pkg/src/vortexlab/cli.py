"""Command line interface.

Subcommands: shoot (one radial profile), beta-curve (flux against the
shooting parameter), torus (periodic solve plus field archive),
stability (principal eigenvalue and classification), sweep
(small-epsilon family with trend verdict), verify (identity battery on
a solved or stored field).

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 verification failure.  shoot and beta-curve are flag
driven; the rest read a JSON config (--config, with --override
key=value patches applied before validation).  Every command accepts
--json and then prints exactly one machine-readable document on
stdout.  Floating-point output carries 17 significant digits and file
artifacts are written atomically, so reruns with the same config are
byte-identical.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import asymptotics
from .asymptotics import (SweepError, classify_alternative, export_sweep_csv,
                          pohozaev_value, run_sweep, squared_ratio_test)
from .config import (ConfigError, atomic_path, dumps_json, jsonable,
                     load_config, load_field, save_field, write_json)
from .model import Nonlinearity, UnsupportedKernelError, check_hypotheses
from .radial import (BracketError, IntegrationFailureError,
                     compute_beta_curve, export_curve_csv,
                     export_profile_csv, find_topological, integrate_radial)
from .stability import (EigenConvergenceError, WeightIndefiniteError,
                        classify_stability, default_torus_margin,
                        principal_eigen_torus, weighted_eigen_radial)
from .torus import (ConvergenceError, MonotonicityError,
                    NewtonDivergenceError, build_u0, identity_check,
                    mass_bound_report, snapped_vortices, solve_monotone,
                    solve_newton, total_mass)

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3

_NUMERICAL = (IntegrationFailureError, BracketError, NewtonDivergenceError,
              ConvergenceError, MonotonicityError, EigenConvergenceError,
              WeightIndefiniteError, SweepError)

_DEFAULT_RADIAL_MARGIN = 1e-8


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError("%s: %s" % (self.prog, message))


def _fmt(x):
    return "%.17g" % float(x)


def _emit(args, summary, lines):
    if args.json:
        print(dumps_json(jsonable(summary)))
    else:
        for line in lines:
            print(line)


def _outpath(cfg, suffix):
    out = cfg.tree["output"]
    os.makedirs(out["dir"], exist_ok=True)
    return os.path.join(out["dir"], out["prefix"] + suffix)


# ---------------------------------------------------------------------------
# shoot


def cmd_shoot(args):
    kernel = Nonlinearity(args.kernel)
    if args.s is not None and args.bracket is not None:
        raise _UsageError("shoot: --bracket only applies with "
                          "--find-topological")
    if args.find_topological:
        if args.bracket is None:
            raise _UsageError("shoot: --find-topological requires --bracket")
        sol = find_topological(args.nu, args.tau, tuple(args.bracket),
                               tol=args.tol, vortex_sign=args.vortex_sign,
                               nonlinearity=kernel,
                               points_per_decade=args.points_per_decade)
    else:
        sol = integrate_radial(args.s, nu=args.nu, tau=args.tau,
                               r_max=args.rmax, tol=args.tol,
                               vortex_sign=args.vortex_sign,
                               nonlinearity=kernel,
                               points_per_decade=args.points_per_decade)

    out_csv = args.out + ".csv"
    out_json = args.out + ".json"
    with atomic_path(out_csv) as tmp:
        export_profile_csv(sol, tmp)
    summary = {
        "s": sol.s, "nu": sol.nu, "tau": sol.tau,
        "vortex_sign": sol.vortex_sign, "kernel": kernel.value,
        "beta": sol.beta, "bc_type": sol.bc_type.value,
        "c_log": sol.c_log, "grid_points": int(sol.grid.shape[0]),
        "diagnostics": jsonable(sol.diagnostics),
        "profile_csv": out_csv,
    }
    write_json(out_json, summary)
    _emit(args, summary, [
        "s = %s" % _fmt(sol.s),
        "beta = %s" % _fmt(sol.beta),
        "bc_type = %s" % sol.bc_type.value,
        "first_integral_residual = %s"
        % _fmt(sol.diagnostics.get("first_integral_residual", float("nan"))),
        "wrote %s, %s" % (out_csv, out_json),
    ])
    return EXIT_OK


# ---------------------------------------------------------------------------
# beta-curve


def cmd_beta_curve(args):
    if not args.s_min < args.s_max:
        raise _UsageError("beta-curve: need --s-min < --s-max")
    if args.n < 2:
        raise _UsageError("beta-curve: need --n >= 2")
    s_values = [s for s in np.linspace(args.s_min, args.s_max, args.n)
                if s != 0.0]
    curve = compute_beta_curve(args.tau, s_values, r_max=args.rmax,
                               tol=args.tol,
                               nonlinearity=Nonlinearity(args.kernel))
    out_csv = args.out + ".csv"
    out_json = args.out + ".json"
    with atomic_path(out_csv) as tmp:
        export_curve_csv(curve, tmp)
    summary = {
        "tau": curve.tau,
        "n_requested": args.n,
        "n_sampled": len(curve.samples),
        "monotone_violations": curve.monotone_violations,
        "failures": [{"s": s, "message": msg} for s, msg in curve.failures],
        "curve_csv": out_csv,
    }
    write_json(out_json, summary)
    _emit(args, summary, [
        "samples = %d" % len(curve.samples),
        "monotone_violations = %d" % curve.monotone_violations,
        "failures = %d" % len(curve.failures),
        "wrote %s, %s" % (out_csv, out_json),
    ])
    if args.strict and (curve.monotone_violations or curve.failures):
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# torus


def _solve_from_config(cfg):
    domain = cfg.domain()
    vortices = cfg.vortices()
    solver = cfg.tree["solver"]
    continuation = solver["continuation"]
    params = cfg.params(require_epsilon=continuation is None)
    if continuation is not None:
        # the schedule owns the target epsilon; keep params consistent
        params = replace(params, epsilon=continuation[-1])
    if solver["method"] == "monotone":
        u0 = build_u0(domain, snapped_vortices(domain, vortices))
        fld = solve_monotone(domain, vortices, params,
                             sub=-u0 - solver["monotone_offset"], super_=-u0,
                             tol_factor=solver["tol_factor"])
    else:
        fld = solve_newton(domain, vortices, params,
                           continuation=continuation,
                           max_iter=solver["max_iter"],
                           tol_factor=solver["tol_factor"])
    return fld


def _field_summary(cfg, fld):
    rep = check_hypotheses(fld.vortices, fld.params)
    return {
        "seed": cfg.seed,
        "tau": fld.params.tau,
        "epsilon": fld.params.epsilon,
        "nonlinearity": fld.params.nonlinearity.value,
        "periods": list(fld.domain.periods),
        "grid_shape": list(fld.domain.grid_shape),
        "N1": fld.vortices.N1,
        "N2": fld.vortices.N2,
        "residual_sup": fld.residual_norm(),
        "total_mass": total_mass(fld),
        "mass_bound": mass_bound_report(fld),
        "u_min": float(np.min(fld.u)),
        "u_max": float(np.max(fld.u)),
        "hypotheses": {"h1": rep.h1_holds, "h2": rep.h2_holds},
        "diagnostics": jsonable(fld.diagnostics),
    }


def cmd_torus(args):
    cfg = load_config(args.config, args.override)
    fld = _solve_from_config(cfg)
    out_npz = _outpath(cfg, "_field.npz")
    out_json = _outpath(cfg, "_summary.json")
    save_field(fld, out_npz)
    summary = _field_summary(cfg, fld)
    summary["field_archive"] = out_npz
    write_json(out_json, summary)
    _emit(args, summary, [
        "epsilon = %s" % _fmt(fld.params.epsilon),
        "residual_sup = %s" % _fmt(summary["residual_sup"]),
        "total_mass = %s" % _fmt(summary["total_mass"]),
        "u_min = %s" % _fmt(summary["u_min"]),
        "u_max = %s" % _fmt(summary["u_max"]),
        "wrote %s, %s" % (out_npz, out_json),
    ])
    return EXIT_OK


# ---------------------------------------------------------------------------
# stability


def cmd_stability(args):
    cfg = load_config(args.config, args.override)
    block = cfg.section("stability", required=True)

    if block["target"] == "torus":
        if block["field"] is not None:
            fld = load_field(block["field"])
        else:
            fld = _solve_from_config(cfg)
        result = principal_eigen_torus(fld)
        margin = block["margin"]
        if margin is None:
            margin = default_torus_margin(fld.params)
        extra = {"epsilon": fld.params.epsilon, "tau": fld.params.tau}
    else:
        if block["find_topological"]:
            if block["bracket"] is None:
                raise ConfigError("/stability/bracket",
                                  "required with find_topological")
            sol = find_topological(block["nu"], block["tau"],
                                   tuple(block["bracket"]), tol=block["tol"],
                                   vortex_sign=block["vortex_sign"],
                                   points_per_decade=block["points_per_decade"])
        else:
            if block["s"] is None:
                raise ConfigError("/stability/s",
                                  "required unless find_topological is set")
            sol = integrate_radial(block["s"], nu=block["nu"],
                                   tau=block["tau"], r_max=block["r_max"],
                                   tol=block["tol"],
                                   vortex_sign=block["vortex_sign"],
                                   points_per_decade=block["points_per_decade"])
        result = weighted_eigen_radial(sol)
        margin = block["margin"]
        if margin is None:
            margin = _DEFAULT_RADIAL_MARGIN
        extra = {"s": sol.s, "nu": sol.nu, "tau": sol.tau,
                 "bc_type": sol.bc_type.value}

    cls = classify_stability(result, margin)
    summary = dict(extra)
    summary.update({
        "seed": cfg.seed,
        "target": block["target"],
        "eigenvalue": result.eigenvalue,
        "rayleigh": result.rayleigh,
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "margin": margin,
        "classification": cls.value,
        "diagnostics": jsonable(result.diagnostics),
    })
    out_json = _outpath(cfg, "_stability.json")
    write_json(out_json, summary)
    _emit(args, summary, [
        "eigenvalue = %s" % _fmt(result.eigenvalue),
        "residual_norm = %s" % _fmt(result.residual_norm),
        "margin = %s" % _fmt(margin),
        "classification = %s" % cls.value,
        "wrote %s" % out_json,
    ])
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args):
    cfg = load_config(args.config, args.override)
    block = cfg.section("sweep", required=True)
    if len(block["epsilons"]) < 3:
        raise ConfigError("/sweep/epsilons",
                          "need at least 3 steps to classify a trend")
    domain = cfg.domain()
    vortices = cfg.vortices()
    params = cfg.params(require_epsilon=False)

    records = run_sweep(domain, vortices, params.tau, block["epsilons"],
                        K_radius=block["K_radius"],
                        nonlinearity=params.nonlinearity,
                        compute_eigen=block["compute_eigen"],
                        ball_radius=block["ball_radius"],
                        first_continuation=block["first_continuation"],
                        tol_factor=cfg.tree["solver"]["tol_factor"],
                        keep_fields=False)
    verdict = classify_alternative(records, zero_tol=block["zero_tol"],
                                   away_threshold=block["away_threshold"])

    ratio = None
    if verdict.kind is asymptotics.Alternative.A_UNIFORM_ZERO:
        ok = [rec for rec in records if rec.ok]
        eps = [rec.epsilon for rec in ok]
        vals = [max(abs(rec.sup_K), abs(rec.inf_K)) for rec in ok]
        passed, detail = squared_ratio_test(eps, vals)
        ratio = {"passed": passed, "detail": detail}

    out_csv = _outpath(cfg, "_sweep.csv")
    out_json = _outpath(cfg, "_verdict.json")
    with atomic_path(out_csv) as tmp:
        export_sweep_csv(records, tmp)
    summary = {
        "seed": cfg.seed,
        "tau": params.tau,
        "n_steps": len(records),
        "n_failed": sum(0 if rec.ok else 1 for rec in records),
        "verdict": verdict.kind.value,
        "evidence": jsonable(verdict.evidence),
        "squared_ratio": jsonable(ratio),
        "sweep_csv": out_csv,
    }
    write_json(out_json, summary)

    lines = []
    for rec in records:
        if not rec.ok:
            lines.append("eps = %s  FAILED: %s" % (_fmt(rec.epsilon),
                                                   rec.error))
            continue
        line = "eps = %s  sup_K = %s  inf_K = %s  mass = %s" % (
            _fmt(rec.epsilon), _fmt(rec.sup_K), _fmt(rec.inf_K),
            _fmt(rec.total_abs_mass))
        if rec.eigen is not None:
            line += "  mu = %s" % _fmt(rec.eigen.eigenvalue)
        lines.append(line)
    lines.append("verdict = %s" % verdict.kind.value)
    if ratio is not None:
        state = {True: "pass", False: "fail", None: "inconclusive"}
        lines.append("squared_ratio = %s" % state[ratio["passed"]])
    lines.append("wrote %s, %s" % (out_csv, out_json))
    _emit(args, summary, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _auto_ball_radius(fld):
    """Largest comfortable diagnostic radius: 0.45 of the tightest of the
    half-period self-image bound and the nearest-neighbor distance."""
    L1, L2 = fld.domain.periods
    limit = min(L1, L2)
    entries = fld.vortices.signed()
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            dx = abs(entries[i][0][0] - entries[j][0][0]) % L1
            dy = abs(entries[i][0][1] - entries[j][0][1]) % L2
            d = np.hypot(min(dx, L1 - dx), min(dy, L2 - dy))
            limit = min(limit, d)
    return 0.45 * limit


def cmd_verify(args):
    cfg = load_config(args.config, args.override)
    block = cfg.tree["verify"]
    if block["field"] is not None:
        fld = load_field(block["field"])
        source = block["field"]
    else:
        fld = _solve_from_config(cfg)
        source = "solved from config"

    rows = []

    def add(name, value, tol):
        rows.append({"name": name, "value": float(value), "tol": float(tol),
                     "passed": bool(value <= tol)})

    res_tol = (block["residual_factor"] * cfg.tree["solver"]["tol_factor"]
               * fld.params.epsilon ** -2)
    add("residual_sup", fld.residual_norm(), res_tol)

    target = 4.0 * np.pi * (fld.vortices.N1 - fld.vortices.N2)
    scale = 4.0 * np.pi * max(1, fld.vortices.N1 + fld.vortices.N2)
    add("mass_identity", abs(total_mass(fld) - target) / scale,
        block["mass_tol"])

    sigma = fld.params.nonlinearity is Nonlinearity.SIGMA_O3
    if sigma:
        for a in block["a_values"]:
            _, _, rel = identity_check(fld, a)
            add("identity_a=%s" % ("%g" % a), rel, block["identity_tol"])

        r = block["ball_radius"]
        if r is None:
            r = _auto_ball_radius(fld)
        for k in range(len(fld.vortices.signed())):
            _, _, resid = pohozaev_value(fld, vortex_id=k, r=r)
            add("pohozaev_v%d" % k, resid, block["pohozaev_tol"])
        if not len(fld.vortices):
            center = (0.5 * fld.domain.periods[0],
                      0.5 * fld.domain.periods[1])
            _, _, resid = pohozaev_value(fld, center=center, r=r)
            add("pohozaev_center", resid, block["pohozaev_tol"])

    all_passed = all(row["passed"] for row in rows)
    summary = {
        "seed": cfg.seed,
        "field": source,
        "epsilon": fld.params.epsilon,
        "tau": fld.params.tau,
        "nonlinearity": fld.params.nonlinearity.value,
        "rows": rows,
        "all_passed": all_passed,
    }
    out_json = _outpath(cfg, "_verify.json")
    write_json(out_json, summary)

    width = max((len(row["name"]) for row in rows), default=4)
    lines = []
    for row in rows:
        lines.append("%s  %-*s  value = %s  tol = %s"
                     % ("PASS" if row["passed"] else "FAIL", width,
                        row["name"], _fmt(row["value"]), _fmt(row["tol"])))
    lines.append("all_passed = %s" % ("true" if all_passed else "false"))
    lines.append("wrote %s" % out_json)
    _emit(args, summary, lines)
    return EXIT_OK if all_passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser


def _add_config_flags(p):
    p.add_argument("--config", required=True, help="path to the JSON config")
    p.add_argument("--override", action="append", default=[],
                   metavar="KEY=VALUE",
                   help="dot-path config patch, JSON-parsed value")
    p.add_argument("--json", action="store_true",
                   help="print one machine-readable JSON document")


def build_parser():
    parser = _Parser(prog="vortexlab",
                     description="gauged O(3) vortex equation laboratory")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("shoot", help="integrate one radial profile")
    p.add_argument("--tau", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--s", type=float, help="initial value u(0), or the "
                   "series coefficient in singular mode")
    g.add_argument("--find-topological", action="store_true",
                   help="bisect --bracket for the connecting profile")
    p.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--rmax", type=float, default=1e6)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--vortex-sign", type=int, choices=(-1, 1), default=-1)
    p.add_argument("--kernel", choices=("SigmaO3", "CSH"), default="SigmaO3")
    p.add_argument("--points-per-decade", type=int, default=200)
    p.add_argument("--out", default="shoot", help="output prefix")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("beta-curve", help="sample beta(s) over a range")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--s-min", type=float, required=True)
    p.add_argument("--s-max", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rmax", type=float, default=1e6)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--kernel", choices=("SigmaO3", "CSH"), default="SigmaO3")
    p.add_argument("--out", default="beta", help="output prefix")
    p.add_argument("--strict", action="store_true",
                   help="exit 2 on monotonicity violations or failures")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_beta_curve)

    p = sub.add_parser("torus", help="solve the periodic vortex equation")
    _add_config_flags(p)
    p.set_defaults(func=cmd_torus)

    p = sub.add_parser("stability", help="principal eigenvalue and class")
    _add_config_flags(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("sweep", help="epsilon sweep with trend verdict")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="identity battery on a field")
    _add_config_flags(p)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except _NUMERICAL as e:
        print("numerical failure: %s" % e, file=sys.stderr)
        return EXIT_NUMERICAL
    except UnsupportedKernelError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
