"""Command-line front end.

Every run resolves its configuration (defaults, then ``--config`` JSON, then
explicit flags), writes ``manifest.json`` next to the JSON report and CSV
series in ``--out``, and prints the report.  ``--manifest PATH`` re-executes a
previous run from its manifest.

Exit codes: 0 success, 1 usage or configuration error, 2 invariant
violation, 3 non-convergence under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConditioningError, ConfigError, DiracIndexError, InvariantViolation, NonConvergenceError

SCHEMA_VERSION = 1
THREADS_ENV = "DIRAC_INDEX_THREADS"

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NONCONVERGED = 0, 1, 2, 3

DEFAULTS = {
    "clifford-info": {"d": 3},
    "heat-trace": {
        "field": "hedgehog",
        "t": [1.0],
        "t_grid": None,
        "R0": 1.0,
        "w": 1.0,
        "sphere_n": 40,
        "radial_n": 48,
        "r_max": 400.0,
        "quad_degree": None,
        "mc_samples": None,
        "plateau_tol": 5e-3,
    },
    "witten-limit": {
        "field": "hedgehog",
        "t_grid": "1:32:6",
        "R0": 1.0,
        "w": 1.0,
        "sphere_n": 40,
        "radial_n": 48,
        "r_max": 400.0,
        "quad_degree": None,
        "mc_samples": None,
        "plateau_tol": 5e-3,
    },
    "callias-index": {"field": "hedgehog", "radii": [4.0, 8.0, 16.0], "sphere_n": 24, "h_arc": 1e-2, "gap_tol": 1e-6},
    "ds-witten": {
        "F": "hedgehog:amp=3.141592653589793,radius=2",
        "method": "both",
        "sphere_n": 20,
        "radial_n": 40,
        "exclusion_eps": 0.1,
        "degree_n": 40,
        "n_check": 100,
        "step": 1e-2,
    },
    "evolve": {"generator": "pauli-ramp", "from": -1.0, "to": 1.0, "order": 4, "step": 1e-2, "adaptive": False, "tol": 1e-10},
    "oracle-1d": {"m": 1, "A_minus": None, "A_plus": None, "z": -1.0, "N": 2000, "L": 40.0, "levels": [2000, 4000], "method": "banded"},
    "audit": {"field": "hedgehog", "alpha": 1.0, "r_min": 10.0, "r_max": 1000.0, "n_radii": 9, "eps": 0.05},
}

ONED_PRESETS = {
    1: ([[-1.0]], [[1.0]]),
    2: ([[-1.0, 0.0], [0.0, 0.5]], [[1.0, 0.3], [0.3, -0.7]]),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------


def _split_top(s, sep=","):
    """Split on ``sep`` outside brackets."""
    parts, depth, cur = [], 0, ""
    for ch in s:
        if ch in "[{(":
            depth += 1
        elif ch in "]})":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        parts.append(cur)
    return parts


def _value(v):
    try:
        return json.loads(v)
    except json.JSONDecodeError:
        return v


def parse_named(spec: str):
    """``"name:k=v,k2=v2"`` -> ``(name, {k: v, ...})`` with JSON-decoded values."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in _split_top(rest) if rest else []:
        k, eq, v = item.partition("=")
        if not eq:
            raise ConfigError(f"malformed parameter {item!r} in {spec!r}; expected key=value")
        params[k.strip()] = _value(v.strip())
    return name.strip(), params


def parse_t_grid(s: str):
    """``"a:b:n"`` -> ``n`` geometric points from ``a`` to ``b``."""
    try:
        a, b, n = s.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise ConfigError(f"t grid must look like a:b:n, got {s!r}") from None
    if a <= 0 or b <= a or n < 2:
        raise ConfigError("t grid needs 0 < a < b and n >= 2")
    return np.geomspace(a, b, n).tolist()


def _floats(s):
    return [float(v) for v in str(s).split(",") if v.strip()]


def build_field(spec: str):
    from .potential import make_builtin

    name, params = parse_named(spec)
    if name == "constant" and "M" in params:
        params["M"] = np.array(params["M"], dtype=complex)
    if name == "scalar" and params:
        raise ConfigError("scalar field takes no CLI parameters (f = 1/<x>)")
    if name == "user":
        path = params.get("spec") or params.get("path")
        if path is None:
            raise ConfigError("user field needs spec=PATH")
        params = {"spec": path if isinstance(path, dict) else str(path)}
    return make_builtin(name, params)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _simplex(cfg, d):
    from .quadrature import simplex_rule

    if cfg.get("mc_samples"):
        return simplex_rule(d - 1, n_samples=int(cfg["mc_samples"]), seed=int(cfg.get("seed") or 0))
    if cfg.get("quad_degree"):
        return simplex_rule(d - 1, degree=int(cfg["quad_degree"]))
    return "exact"


def _heat_setup(cfg):
    from .heat_trace import default_spatial_rule
    from .potential import CutoffSpec, apply_cutoff

    base = build_field(cfg["field"])
    cut = CutoffSpec(float(cfg["R0"]), float(cfg["w"]))
    fld = apply_cutoff(base, cut)
    spatial = default_spatial_rule(
        base.d, cut.breakpoints, r_max=float(cfg["r_max"]), sphere_n=int(cfg["sphere_n"]), radial_n=int(cfg["radial_n"]),
        tail_n=int(cfg["radial_n"]),
    )
    return fld, cut, spatial


def cmd_clifford_info(cfg):
    from .clifford import build_clifford, clifford_residuals

    rep = build_clifford(int(cfg["d"]))
    k = complex(rep.kappa_c)
    res = clifford_residuals(rep)
    report = {
        "d": rep.d,
        "r": rep.r,
        "kappa_c": {"real": k.real, "imag": k.imag},
        "residuals": res,
        "max_residual": max(res.values()),
        "generators": {"real": rep.generators.real.tolist(), "imag": rep.generators.imag.tolist()},
    }
    return report, None, True


def cmd_heat_trace(cfg):
    from .heat_trace import heat_trace, plateau_report

    fld, cut, spatial = _heat_setup(cfg)
    simplex = _simplex(cfg, fld.d)
    ts = parse_t_grid(cfg["t_grid"]) if cfg.get("t_grid") else [float(t) for t in cfg["t"]]
    kw = dict(simplex=simplex, spatial=spatial, threads=cfg["threads"])
    results = [heat_trace(fld, None, t, cut, **kw) for t in ts]
    rows = [{"t": r.t, "value": r.value, "imag_residual": r.imag_residual, "quad_error": r.quad_error} for r in results]
    report = {"results": [r.as_dict() for r in results]}
    converged = True
    if len(ts) >= 5:
        w = plateau_report(results, float(cfg["plateau_tol"]))
        report["witten"] = w.as_dict()
        converged = w.converged
    return report, rows, converged


def cmd_witten_limit(cfg):
    from .heat_trace import witten_limit

    fld, cut, spatial = _heat_setup(cfg)
    grid = parse_t_grid(cfg["t_grid"]) if isinstance(cfg["t_grid"], str) else [float(t) for t in cfg["t_grid"]]
    w = witten_limit(
        fld, None, cut, grid, plateau_tol=float(cfg["plateau_tol"]), simplex=_simplex(cfg, fld.d), spatial=spatial,
        threads=cfg["threads"],
    )
    rows = [{"t": t, "value": v, "quad_error": e} for t, v, e in zip(w.t_grid, w.values, w.errors)]
    return w.as_dict(), rows, w.converged


def cmd_callias_index(cfg):
    from .callias import callias_index
    from .quadrature import sphere_rule

    fld = build_field(cfg["field"])
    radii = cfg["radii"] if isinstance(cfg["radii"], list) else _floats(cfg["radii"])
    res = callias_index(
        fld, None, radii, sphere_rule(fld.d, int(cfg["sphere_n"])), gap_tol=float(cfg["gap_tol"]), h_arc=float(cfg["h_arc"])
    )
    rows = [{"R": R, "value": v} for R, v in zip(res.radii, res.per_radius)]
    return res.as_dict(), rows, res.converged


def cmd_ds_witten(cfg):
    from .evolution import EvolutionConfig
    from .witten_ds import (
        SIGN_CONVENTIONS,
        build_example_loop,
        closed_form_density,
        default_ds_rule,
        ds_density,
        ds_witten_index,
        example_closed_form,
        hedgehog_profile,
        su2_degree,
    )

    name, params = parse_named(cfg["F"])
    if name != "hedgehog":
        raise ConfigError(f"unknown profile {name!r}; available: hedgehog")
    spec = hedgehog_profile(float(params.get("amp", math.pi)), float(params.get("radius", 2.0)))
    rule = default_ds_rule(spec.radius, int(cfg["sphere_n"]), int(cfg["radial_n"]))
    method = cfg["method"]
    if method not in ("evolution", "closed-form", "both"):
        raise ConfigError("method must be evolution, closed-form or both")
    report = {"profile": spec.describe(), "sign_conventions": SIGN_CONVENTIONS}
    rows = None
    converged = True
    ds = None
    if method in ("evolution", "both"):
        loop = build_example_loop(
            spec, cfg=EvolutionConfig(order=4, step=float(cfg["step"])), n_check=int(cfg["n_check"]), seed=int(cfg.get("seed") or 0)
        )
        ds = ds_witten_index(loop, spatial=rule, threads=cfg["threads"])
        deg = su2_degree(loop, box=spec.radius + 0.5, n=int(cfg["degree_n"]))
        report["evolution_check"] = {"max_deviation": loop.evolution_check, "tolerance": 1e-8}
        report["ds_witten"] = ds.as_dict()
        report["su2_degree"] = deg
        report["sign_consistent"] = bool(ds.nearest_integer == SIGN_CONVENTIONS["ds_witten_vs_degree"] * deg)
        converged = ds.integer_distance <= 1e-2
        xs = np.linspace(0.0, spec.radius, 9)[:, None] * np.array([[0.6, 0.0, 0.8]])
        dens = ds_density(loop, xs)
        rows = [{"x1": x[0], "x2": x[1], "x3": x[2], "density_real": d.real, "density_imag": d.imag} for x, d in zip(xs, dens)]
    if method in ("closed-form", "both"):
        cf = example_closed_form(spec, rule, float(cfg["exclusion_eps"]))
        report["closed_form"] = cf
        if ds is not None:
            report["comparison"] = {
                "difference": abs(cf["value"] - ds.value),
                "agree_within_errors": bool(abs(cf["value"] - ds.value) <= cf["quad_error"] + ds.quad_error),
                "authoritative": "ds_witten",
            }
    if method == "closed-form":
        xs = np.linspace(0.0, spec.radius, 9)[1:, None] * np.array([[0.6, 0.0, 0.8]])
        dens = closed_form_density(spec, xs)
        rows = [{"x1": x[0], "x2": x[1], "x3": x[2], "closed_form_density": float(d)} for x, d in zip(xs, dens)]
    return report, rows, converged


def _generator(spec):
    name, params = parse_named(spec)
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    if name == "pauli-ramp":
        return (lambda y: s1 + y * s3), None
    if name == "constant":
        M = np.array(params.get("M", [[1, 0], [0, -1]]), dtype=complex)
        return (lambda y: M), None
    if name == "bump":
        from .witten_ds import bump

        M = np.array(params.get("M", [[0, 1], [1, 0]]), dtype=complex)
        return (lambda y: M * bump(np.array(y))), (-1.0, 1.0)
    raise ConfigError(f"unknown generator {name!r}; available: pauli-ramp, constant, bump")


def cmd_evolve(cfg):
    from .evolution import EvolutionConfig, propagate, unitarity_defect

    A, support = _generator(cfg["generator"])
    ec = EvolutionConfig(order=int(cfg["order"]), step=float(cfg["step"]), adaptive=bool(cfg["adaptive"]), tol=float(cfg["tol"]))
    y1, y2 = float(cfg["to"]), float(cfg["from"])
    U = propagate(A, y1, y2, ec, support)
    ym = 0.5 * (y1 + y2)
    cocycle = float(np.abs(propagate(A, y1, ym, ec, support) @ propagate(A, ym, y2, ec, support) - U).max())
    half = EvolutionConfig(order=ec.order, step=ec.step / 2, adaptive=ec.adaptive, tol=ec.tol)
    step_err = float(np.abs(propagate(A, y1, y2, half, support) - U).max())
    report = {
        "U": {"real": U.real.tolist(), "imag": U.imag.tolist()},
        "unitarity_defect": unitarity_defect(U),
        "cocycle_residual": cocycle,
        "step_halving_difference": step_err,
    }
    return report, None, True


def cmd_oracle_1d(cfg):
    from .oned_oracle import OneDModel, refinement_table

    if cfg.get("A_minus") is not None:
        Am, Ap = cfg["A_minus"], cfg["A_plus"]
    else:
        if int(cfg["m"]) not in ONED_PRESETS:
            raise ConfigError("--m must be 1 or 2 unless --a-minus/--a-plus are given")
        Am, Ap = ONED_PRESETS[int(cfg["m"])]
    levels = cfg["levels"] if isinstance(cfg["levels"], list) else [int(v) for v in _floats(cfg["levels"])]
    levels = [int(v) for v in levels]
    if int(cfg["N"]) not in levels:
        levels = sorted(set(levels) | {int(cfg["N"])})
    model = OneDModel(np.array(Am, dtype=complex), np.array(Ap, dtype=complex), float(cfg["L"]), int(cfg["N"]))
    table = refinement_table(model, complex(cfg["z"]), levels, cfg["method"])
    rows = [
        {"N": r.N, "h": r.h, "lhs_real": r.lhs.real, "lhs_imag": r.lhs.imag, "rhs_real": r.rhs.real, "rhs_imag": r.rhs.imag,
         "gap": r.gap, "ratio": r.ratio}
        for r in table
    ]
    main = next(r for r in table if r.N == int(cfg["N"]))
    report = {
        "model": model.describe(),
        "z": [complex(cfg["z"]).real, complex(cfg["z"]).imag],
        "lhs": [main.lhs.real, main.lhs.imag],
        "rhs": [main.rhs.real, main.rhs.imag],
        "abs_diff": main.gap,
        "rel_diff": main.gap / abs(main.rhs) if main.rhs != 0 else None,
        "refinement": rows,
    }
    return report, rows, True


def cmd_audit(cfg):
    from .potential import audit_hypothesis

    fld = build_field(cfg["field"])
    radii = np.geomspace(float(cfg["r_min"]), float(cfg["r_max"]), int(cfg["n_radii"]))
    a = audit_hypothesis(fld, float(cfg["alpha"]), radii, eps=float(cfg["eps"]))
    return a.as_dict(), None, a.passed


COMMANDS = {
    "clifford-info": cmd_clifford_info,
    "heat-trace": cmd_heat_trace,
    "witten-limit": cmd_witten_limit,
    "callias-index": cmd_callias_index,
    "ds-witten": cmd_ds_witten,
    "evolve": cmd_evolve,
    "oracle-1d": cmd_oracle_1d,
    "audit": cmd_audit,
}


# --------------------------------------------------------------------------
# argument parser
# --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with configuration keys for this subcommand")
    common.add_argument("--out", help="output directory for report, series and manifest")
    common.add_argument("--seed", type=int, help="seed for Monte Carlo rules and random checks")
    common.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("--reproducible", action="store_true", default=None, help="force serial, bitwise reproducible execution")
    common.add_argument("--strict", action="store_true", default=None, help="exit 3 when a limit is not converged")

    quad = argparse.ArgumentParser(add_help=False)
    quad.add_argument("--quad-degree", dest="quad_degree", type=int, help="simplex rule degree (default: exact simplex integral)")
    quad.add_argument("--mc-samples", dest="mc_samples", type=int, help="Monte Carlo simplex rule with this many samples")
    quad.add_argument("--r-max", dest="r_max", type=float, help="spatial truncation radius")
    quad.add_argument("--sphere-n", dest="sphere_n", type=int, help="sphere rule level")
    quad.add_argument("--radial-n", dest="radial_n", type=int, help="radial Gauss nodes per panel")
    quad.add_argument("--R0", type=float, help="cutoff inner radius")
    quad.add_argument("--w", type=float, help="cutoff transition width")
    quad.add_argument("--plateau-tol", dest="plateau_tol", type=float)

    p = _Parser(prog="dirac-index", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--manifest", help="re-run the command recorded in a manifest.json")
    p.add_argument("--out", dest="top_out", help="output directory when re-running a manifest")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("clifford-info", parents=[common], help="Clifford generators and trace identities")
    s.add_argument("--d", type=int)

    s = sub.add_parser("heat-trace", parents=[common, quad], help="heat-trace difference at given t")
    s.add_argument("--field", help="name[:k=v,...], e.g. hedgehog:scale=1")
    s.add_argument("--t", type=_floats, help="comma-separated t values")
    s.add_argument("--t-grid", dest="t_grid", help="geometric grid a:b:n")

    s = sub.add_parser("witten-limit", parents=[common, quad], help="large-t plateau of the heat trace")
    s.add_argument("--field")
    s.add_argument("--t-grid", dest="t_grid")

    s = sub.add_parser("callias-index", parents=[common], help="surface-integral index")
    s.add_argument("--field")
    s.add_argument("--radii", type=_floats, help="comma-separated radii")
    s.add_argument("--sphere-n", dest="sphere_n", type=int)
    s.add_argument("--h-arc", dest="h_arc", type=float)
    s.add_argument("--gap-tol", dest="gap_tol", type=float)

    s = sub.add_parser("ds-witten", parents=[common], help="Witten index from the loop unitary")
    s.add_argument("--F", dest="F", help="profile, e.g. hedgehog:amp=3.14159,radius=2")
    s.add_argument("--method", choices=["evolution", "closed-form", "both"])
    s.add_argument("--sphere-n", dest="sphere_n", type=int)
    s.add_argument("--radial-n", dest="radial_n", type=int)
    s.add_argument("--exclusion-eps", dest="exclusion_eps", type=float)
    s.add_argument("--degree-n", dest="degree_n", type=int, help="cubes per axis for su2_degree")
    s.add_argument("--n-check", dest="n_check", type=int)

    s = sub.add_parser("evolve", parents=[common], help="propagator diagnostics")
    s.add_argument("--generator", help="pauli-ramp | constant:M=[[..]] | bump:M=[[..]]")
    s.add_argument("--from", dest="from", type=float)
    s.add_argument("--to", type=float)
    s.add_argument("--order", type=int, choices=[2, 4])
    s.add_argument("--step", type=float)
    s.add_argument("--adaptive", action="store_true", default=None)
    s.add_argument("--tol", type=float)

    s = sub.add_parser("oracle-1d", parents=[common], help="1-D lattice resolvent trace check")
    s.add_argument("--m", type=int)
    s.add_argument("--a-minus", dest="A_minus", type=json.loads, help="JSON matrix")
    s.add_argument("--a-plus", dest="A_plus", type=json.loads, help="JSON matrix")
    s.add_argument("--z", type=complex)
    s.add_argument("--N", type=int)
    s.add_argument("--L", type=float)
    s.add_argument("--levels", type=lambda v: [int(x) for x in _floats(v)])
    s.add_argument("--method", choices=["banded", "dense"])

    s = sub.add_parser("audit", parents=[common], help="decay audit of a potential")
    s.add_argument("--field")
    s.add_argument("--alpha", type=float)
    s.add_argument("--r-min", dest="r_min", type=float)
    s.add_argument("--r-max", dest="r_max", type=float)
    s.add_argument("--n-radii", dest="n_radii", type=int)
    s.add_argument("--eps", type=float)
    return p


_RUN_KEYS = ("seed", "threads", "reproducible", "strict")


def resolve_config(command, args):
    cfg = dict(DEFAULTS[command])
    cfg.update({"seed": 0, "threads": None, "reproducible": False, "strict": False})
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                extra = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(extra) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(extra)
    for k, v in vars(args).items():
        if k in cfg and v is not None:
            cfg[k] = v
    if command == "heat-trace" and getattr(args, "t_grid", None) is None and getattr(args, "t", None) is not None:
        cfg["t_grid"] = None
    if cfg["reproducible"]:
        cfg["threads"] = 1
    elif cfg["threads"] is None:
        cfg["threads"] = int(os.environ.get(THREADS_ENV, "1"))
    return cfg


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_outputs(out, command, cfg, report, rows):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package": "dirac_index",
        "version": __version__,
        "command": command,
        "config": _jsonable(cfg),
        "seed": cfg.get("seed"),
        "outputs": [f"{command}.json"] + ([f"{command}.csv"] if rows else []),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (out / f"{command}.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    if rows:
        with open(out / f"{command}.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            for r in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def run(command, cfg, out=None):
    """Execute one subcommand; returns ``(exit_code, report)``."""
    try:
        report, rows, converged = COMMANDS[command](cfg)
    except (ConfigError, ConditioningError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT, None
    except NonConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED, None
    except DiracIndexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT, None
    if out:
        write_outputs(out, command, cfg, report, rows)
    print(json.dumps(_jsonable(report), indent=2, sort_keys=True))
    if not converged and cfg.get("strict"):
        print("not converged (strict mode)", file=sys.stderr)
        return EXIT_NONCONVERGED, report
    return EXIT_OK, report


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help and --version
        return exc.code
    if args.manifest:
        try:
            with open(args.manifest) as fh:
                man = json.load(fh)
            command, cfg = man["command"], man["config"]
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            print(f"error: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if command not in COMMANDS:
            print(f"error: unknown command {command!r} in manifest", file=sys.stderr)
            return EXIT_CONFIG
        return run(command, cfg, args.top_out)[0]
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = resolve_config(args.command, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.command, cfg, args.out)[0]


if __name__ == "__main__":
    sys.exit(main())
