"""Command-line front end.

Subcommands: dist, geodesic, flow, verify, seminorm, info.  Results go to
stdout (or --output) as JSON with every float rendered at 17 significant
digits so output round-trips exactly and identical runs are byte-identical;
`flow` emits CSV by default.  Exit codes: 0 success, 2 validation error,
3 solver non-convergence (best-so-far is still emitted, converged: false).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .algebra import Density, Element
from .errors import NonConvergenceError, ValidationError
from .functionals import am_seminorm, entropy, fisher_information, theta_seminorm
from .instances import Instance, load_instance
from .semigroup import heat_flow, is_irreducible, l1_to_equilibrium
from .transport import bb_distance, geodesic
from . import verify as verify_mod


# -- serialization (17 significant digits, deterministic) ----------------------


def _fmt(x: float) -> str:
    if isinstance(x, float) and (np.isnan(x) or np.isinf(x)):
        return '"inf"' if x > 0 else ('"-inf"' if x < 0 else '"nan"')
    return f"{float(x):.17g}"


def dumps(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [dumps(v, indent + 1) for v in obj]
        if all("\n" not in it and len(it) < 24 for it in items):
            return "[" + ", ".join(items) + "]"
        return "[\n" + ",\n".join(inner + it for it in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'"{k}": ' + dumps(v, indent + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(inner + it for it in items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _state_json(inst: Instance, x: Element):
    if inst.kind == "graph":
        return [float(v) for v in x.values().real]
    return {"re": [b.real.tolist() for b in x.blocks],
            "im": [b.imag.tolist() for b in x.blocks]}


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands -------------------------------------------------------------------


def _need(inst: Instance, *fields):
    for f in fields:
        if getattr(inst, f) is None:
            raise ValidationError(f"instance is missing required field '{f}'")


def _cmd_dist(args) -> dict:
    inst = load_instance(args.instance)
    _need(inst, "rho0", "rho1")
    res = bb_distance(args.mean, inst.derivation, inst.rho0, inst.rho1,
                      N=args.grid, tol=args.tol, eps_final=args.eps_final)
    return {"distance": res.distance, "error_bar": res.error_bar,
            "action": res.action, "converged": res.converged,
            "certificates": res.certificates}


def _cmd_geodesic(args) -> dict:
    inst = load_instance(args.instance)
    _need(inst, "rho0", "rho1")
    path = geodesic(args.mean, inst.derivation, inst.rho0, inst.rho1,
                    N=args.grid, tol=args.tol, eps_final=args.eps_final)
    length = float(np.sum(np.sqrt(np.clip(path.speeds, 0.0, None)))) / path.grid
    return {"times": path.times.tolist(),
            "densities": [_state_json(inst, r) for r in path.densities],
            "squared_speeds": path.speeds.tolist(),
            "distance": length,
            "constant_speed_deviation": float(
                np.max(np.abs(path.speeds - path.speeds.mean()))
                / max(path.speeds.mean(), 1e-300))}


def _cmd_flow(args):
    inst = load_instance(args.instance)
    _need(inst, "rho0")
    d = inst.derivation
    times = np.linspace(0.0, args.t_max, args.steps)
    rows = []
    for t in times:
        rho_t = heat_flow(d, inst.rho0, float(t))
        fi = fisher_information(d, rho_t)
        rows.append({"t": float(t),
                     "entropy": entropy(d.algebra, rho_t),
                     "fisher": float(fi),
                     "l1_to_equilibrium": l1_to_equilibrium(d, rho_t)})
    if args.format == "json":
        return {"rows": rows}
    lines = ["t,entropy,fisher,l1_to_equilibrium"]
    for r in rows:
        lines.append(",".join(f"{r[k]:.17g}" for k in
                              ("t", "entropy", "fisher", "l1_to_equilibrium")))
    return "\n".join(lines) + "\n"


def _parse_t_grid(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad --t-grid value: {exc}") from exc


def _resolve_k(args, inst: Instance) -> tuple[float, dict | None]:
    if args.K != "auto":
        try:
            return float(args.K), None
        except ValueError as exc:
            raise ValidationError("--K must be 'auto' or a number") from exc
    ge = verify_mod.estimate_ge_constant(args.mean, inst.derivation,
                                         samples=args.samples, seed=args.seed)
    return 0.95 * ge.estimate, {"K_hat": ge.estimate, "K_used": 0.95 * ge.estimate}


def _cmd_verify(args) -> dict:
    inst = load_instance(args.instance)
    d = inst.derivation
    t_grid = _parse_t_grid(args.t_grid)
    if args.check == "ge":
        ge = verify_mod.estimate_ge_constant(
            args.mean, d, samples=args.samples,
            t_grid=[t for t in t_grid if t > 0] or None, seed=args.seed)
        return {"name": "ge_estimate", "K_hat": ge.estimate,
                "witness": ge.witness, "samples": ge.samples, "seed": ge.seed,
                "note": "sampled upper bound on the best constant; "
                        "cannot certify the estimate, only falsify larger K"}
    K, k_info = _resolve_k(args, inst)
    if args.check == "contraction":
        _need(inst, "rho0", "rho1")
        rep = verify_mod.check_contraction(args.mean, d, inst.rho0, inst.rho1,
                                           K, t_grid, tol=args.tol,
                                           N=args.grid)
    elif args.check == "evi":
        _need(inst, "rho0", "rho1")
        rep = verify_mod.check_evi(args.mean, d, inst.rho0, inst.rho1, K,
                                   t_grid, tol=args.tol, N=args.grid)
    elif args.check == "convexity":
        _need(inst, "rho0", "rho1")
        rep = verify_mod.check_geodesic_convexity(args.mean, d, inst.rho0,
                                                  inst.rho1, K, N=args.grid,
                                                  tol=args.tol)
    elif args.check == "talagrand":
        _need(inst, "rho0")
        rep = verify_mod.check_talagrand(args.mean, d, inst.rho0, K,
                                         tol=args.tol, N=args.grid)
    else:  # feller
        _need(inst, "a")
        rep = verify_mod.feller_check(args.mean, d, inst.a,
                                      [t for t in t_grid if t > 0] or [1.0],
                                      K, samples=args.samples, seed=args.seed)
    out = rep.to_dict()
    if k_info:
        out.update(k_info)
    else:
        out["K_used"] = K
    return out


def _cmd_seminorm(args) -> dict:
    inst = load_instance(args.instance)
    _need(inst, "a")
    res = theta_seminorm(args.mean, inst.derivation, inst.a)
    return {"mean": args.mean, "value": res.value, "gap": res.gap,
            "converged": res.converged, "iterations": res.iterations,
            "am_value": am_seminorm(inst.derivation, inst.a),
            "maximizer": _state_json(inst, res.maximizer)}


def _cmd_info(args) -> dict:
    inst = load_instance(args.instance)
    d = inst.derivation
    alg = d.algebra
    return {"kind": inst.kind,
            "blocks": [[int(dim), float(w)] for dim, w in alg.blocks],
            "trace_of_identity": alg.trace_of_identity,
            "hermitian_dimension": alg.herm_dim,
            "tangent_dimension": d.tangent_dim,
            "irreducible": is_irreducible(d),
            "generator_spectrum": d.generator.spectrum.tolist(),
            "has_rho0": inst.rho0 is not None,
            "has_rho1": inst.rho1 is not None,
            "has_a": inst.a is not None}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nctransport",
        description="Transport distances, heat flow and curvature checks "
                    "for density matrices on weighted graphs and matrix "
                    "algebras.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_grid=True):
        sp.add_argument("--instance", required=True,
                        help="path to a JSON instance file (schema 1)")
        sp.add_argument("--mean", choices=["am", "lm", "gm", "hm"],
                        default="lm")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output", default=None)
        sp.add_argument("--format", choices=["json", "csv"], default=None)
        if needs_grid:
            sp.add_argument("--grid", type=int, default=32)
            sp.add_argument("--tol", type=float, default=1e-5)
            sp.add_argument("--eps-final", type=float, default=1e-5)

    sp = sub.add_parser("dist", help="transport distance between rho0 and rho1")
    common(sp)
    sp = sub.add_parser("geodesic", help="constant-speed optimal path")
    common(sp)
    sp = sub.add_parser("flow", help="heat flow statistics over time")
    common(sp, needs_grid=False)
    sp.add_argument("--t-max", type=float, default=2.0)
    sp.add_argument("--steps", type=int, default=50)
    sp = sub.add_parser("verify", help="curvature and inequality checks")
    sp.add_argument("check", choices=["ge", "contraction", "evi", "convexity",
                                      "talagrand", "feller"])
    common(sp)
    sp.set_defaults(grid=16, tol=1e-3)
    sp.add_argument("--K", default="auto",
                    help="'auto' (0.95 x estimated constant) or a number")
    sp.add_argument("--samples", type=int, default=40)
    sp.add_argument("--t-grid", default="0.0,0.1,0.5,1.0")
    sp = sub.add_parser("seminorm", help="dual seminorm of the observable 'a'")
    common(sp, needs_grid=False)
    sp = sub.add_parser("info", help="summary of an instance")
    common(sp, needs_grid=False)
    return p


_COMMANDS = {"dist": _cmd_dist, "geodesic": _cmd_geodesic, "flow": _cmd_flow,
             "verify": _cmd_verify, "seminorm": _cmd_seminorm,
             "info": _cmd_info}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if getattr(args, "format", None) is None:
        args.format = "csv" if args.command == "flow" else "json"
    try:
        result = _COMMANDS[args.command](args)
    except NonConvergenceError as exc:
        payload = {"converged": False, "error": str(exc),
                   "best": getattr(exc, "best", None)}
        _emit(dumps(_plain(payload)) + "\n", args.output)
        return 3
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    if isinstance(result, str):
        _emit(result, args.output)
    else:
        _emit(dumps(_plain(result)) + "\n", args.output)
    return 0


def _plain(obj):
    """Recursively convert numpy scalars/arrays for the serializer."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


if __name__ == "__main__":
    raise SystemExit(main())
