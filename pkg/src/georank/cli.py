"""Command-line front end.

    georank <rank|quantile|reconstruct|contour|content|selftest> [flags]

Measures come from --family/--dim (closed-form radial) or --csv (empirical
atoms).  All randomized paths require an explicit --seed; identical flags
and seed produce bit-identical output files.  A JSON file of flag defaults
can be supplied with --config; explicitly passed flags win.

Exit codes: 0 ok, 1 selftest failure, 2 configuration error, 3 numeric
failure, 4 solver non-convergence.
"""

import argparse
import json
import sys

import numpy as np

from . import selftest as selftest_mod
from .depth import contour as depth_contour
from .depth import probability_content_surface, radial_content_oracle
from .errors import (ConfigError, GeorankError, NonConvergenceError,
                     ParityError, ParseError)
from .measures import RadialClosedForm, empirical_from_csv
from .quantile import QuantileQuery, solve_quantile
from .rankfield import RankEvaluator
from .reconstruct import (ReconstructionConfig, reconstruct_even_singular,
                          reconstruct_extension, reconstruct_isotropic_hankel,
                          reconstruct_odd_local)

_EXIT_OK = 0
_EXIT_SELFTEST = 1
_EXIT_CONFIG = 2
_EXIT_NUMERIC = 3
_EXIT_NONCONV = 4

# flag table per subcommand: (name, type, default, help)
_COMMON_FLAGS = [
    ("--family", str, None, "closed-form family: gaussian | cauchy"),
    ("--dim", int, None, "ambient dimension d"),
    ("--csv", str, None, "empirical atoms CSV (d or d+1 numeric columns)"),
    ("--seed", int, None, "RNG seed (required for randomized paths)"),
    ("--out", str, None, "output path (default: stdout)"),
    ("--format", str, "csv", "output format: csv | json"),
    ("--threads", int, None, "worker-pool cap (default: all cores)"),
    ("--config", str, None, "JSON file of flag defaults; flags win"),
]

_FLAGS = {
    "rank": _COMMON_FLAGS + [
        ("--points", str, None, "CSV of evaluation points (d columns)"),
        ("--grid", str, None, "grid spec lo:hi:n per axis"),
        ("--mc-budget", int, 200000, "Monte-Carlo sample size"),
    ],
    "quantile": _COMMON_FLAGS + [
        ("--alpha", float, None, "quantile order in [0,1)"),
        ("--direction", str, None, "unit direction, comma-separated"),
        ("--tol", float, 1e-8, "residual tolerance"),
        ("--mc-budget", int, 200000, "Monte-Carlo sample size"),
    ],
    "reconstruct": _COMMON_FLAGS + [
        ("--method", str, None,
         "odd-local | singular | hankel | extension"),
        ("--radii", str, None, "evaluation radii a:b:step"),
        ("--points", str, None,
         "CSV of evaluation points (singular/extension, general measures)"),
        ("--reference", bool, False,
         "add closed-form density and error columns"),
        ("--eta", float, 1e-3, "inner cutoff of the singular integral"),
        ("--rmax", float, 50.0, "outer truncation radius"),
        ("--fd-order", int, 2, "finite-difference order: 2 | 4"),
        ("--nodes", int, 61, "grid nodes per axis (odd-local grid path)"),
        ("--box", str, "-3:3", "grid box lo:hi (odd-local grid path)"),
        ("--height", float, 0.01, "extension height t"),
        ("--mc-budget", int, 200000, "Monte-Carlo sample size"),
    ],
    "contour": _COMMON_FLAGS + [
        ("--beta", float, None, "contour level in [0,1)"),
        ("--rays", int, 64, "number of rays"),
        ("--tol", float, 1e-10, "per-ray root tolerance"),
        ("--mc-budget", int, 200000, "Monte-Carlo sample size"),
    ],
    "content": _COMMON_FLAGS + [
        ("--radius", float, None, "ball radius R"),
        ("--path", str, "analytic", "surface-integrand path: analytic | grid"),
    ],
    "selftest": [
        ("--json", bool, False, "machine-readable results array"),
        ("--out", str, None, "output path (default: stdout)"),
    ],
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="georank",
        description="geometric ranks, quantiles, depth contours, and "
                    "density reconstruction from the rank field")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, flags in _FLAGS.items():
        p = sub.add_parser(cmd, help=f"{cmd} computation")
        for name, typ, default, help_text in flags:
            aliases = ("-o", name) if name == "--out" else (name,)
            if typ is bool:
                p.add_argument(*aliases, action="store_true", default=None,
                               help=help_text)
            else:
                p.add_argument(*aliases, type=typ, default=None,
                               help=help_text)
    return parser


def _merge_config(args):
    """Apply --config JSON defaults, then the flag-table defaults."""
    table = {name.lstrip("-").replace("-", "_"): default
             for name, _, default, _ in _FLAGS[args.command]}
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read --config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("--config must hold a JSON object")
    merged = argparse.Namespace()
    for key, default in table.items():
        val = getattr(args, key, None)
        if val is None:
            val = cfg.get(key, default)
        setattr(merged, key, val)
    merged.command = args.command
    return merged


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise ConfigError(f"missing required flag --{n.replace('_','-')}")


def _measure(args):
    has_family = args.family is not None
    has_csv = getattr(args, "csv", None) is not None
    if has_family == has_csv:
        raise ConfigError("exactly one measure source: "
                          "--family/--dim or --csv")
    if has_family:
        _require(args, "dim")
        try:
            return RadialClosedForm(args.family, args.dim)
        except GeorankError as exc:
            raise ConfigError(str(exc)) from exc
    return empirical_from_csv(args.csv, d=getattr(args, "dim", None))


def _evaluator(args, measure):
    mc = getattr(args, "mc_budget", None) or 200000
    ev = RankEvaluator(measure, mc_n=mc,
                       seed=args.seed if args.seed is not None else 0)
    if ev.mode == "mc" and args.seed is None:
        # reproducibility promise: randomized paths need an explicit seed
        raise ConfigError("this computation draws Monte-Carlo samples; "
                          "pass an explicit --seed")
    return ev


def _parse_range(spec, what):
    try:
        a, b, step = (float(tok) for tok in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"bad {what} spec {spec!r}; want a:b:step") from exc
    if step <= 0 or b < a:
        raise ConfigError(f"bad {what} spec {spec!r}")
    return np.arange(a, b + step / 2.0, step)


def load_table(path):
    """Read a CSV emitted by any georank command: an optional non-numeric
    header line, then numeric rows.  Returns (column_names_or_None, array)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        names = None
        try:
            [float(tok) for tok in first.split(",")]
            skip = 0
        except ValueError:
            names = first.split(",")
            skip = 1
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=skip)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc
    return names, data


def _read_points(path, d=None):
    _, data = load_table(path)
    if d is not None and data.shape[1] != d:
        raise ConfigError(f"{path}: points have {data.shape[1]} columns, "
                          f"expected {d}")
    return data


def _emit(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt_row(vals):
    return ",".join("%.17g" % v for v in vals)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_rank(args):
    measure = _measure(args)
    ev = _evaluator(args, measure)
    if args.points:
        pts = _read_points(args.points, ev.d)
    elif args.grid:
        lo_hi_n = args.grid.split(":")
        if len(lo_hi_n) != 3:
            raise ConfigError("grid spec must be lo:hi:n")
        lo, hi, n = float(lo_hi_n[0]), float(lo_hi_n[1]), int(lo_hi_n[2])
        axes = [np.linspace(lo, hi, n)] * ev.d
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        raise ConfigError("missing required flag --points or --grid")
    ranks = ev.rank_many(pts)
    at_atom = None
    if ev.mode == "exact":
        atoms = measure.atoms
        dist = np.min(np.linalg.norm(pts[:, None, :] - atoms[None, :, :],
                                     axis=2), axis=1)
        at_atom = (dist < 1e-12).astype(int)
    if args.format == "json":
        payload = {"points": pts.tolist(), "rank": ranks.tolist()}
        if at_atom is not None:
            payload["at_atom"] = at_atom.tolist()
        _emit(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return _EXIT_OK
    d = ev.d
    header = ([f"x{i+1}" for i in range(d)] + [f"r{i+1}" for i in range(d)]
              + (["at_atom"] if at_atom is not None else []))
    lines = [",".join(header)]
    for i in range(pts.shape[0]):
        row = list(pts[i]) + list(ranks[i])
        if at_atom is not None:
            row.append(at_atom[i])
        lines.append(_fmt_row(row))
    _emit(args, "\n".join(lines) + "\n")
    return _EXIT_OK


def cmd_quantile(args):
    measure = _measure(args)
    ev = _evaluator(args, measure)
    _require(args, "alpha", "direction")
    u = np.array([float(t) for t in args.direction.split(",")])
    if u.shape[0] != ev.d:
        raise ConfigError(f"direction has {u.shape[0]} components, "
                          f"measure dimension is {ev.d}")
    nrm = np.linalg.norm(u)
    if nrm == 0:
        raise ConfigError("direction must be nonzero")
    try:
        q = QuantileQuery(args.alpha, u / nrm)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    x = solve_quantile(ev, q, args.tol)
    residual = float(np.linalg.norm(ev.rank(x) - q.alpha * q.u))
    if args.format == "json":
        _emit(args, json.dumps({"quantile": x.tolist(),
                                "residual": residual}, indent=2,
                               sort_keys=True) + "\n")
    else:
        header = ",".join([f"q{i+1}" for i in range(ev.d)] + ["residual"])
        _emit(args, header + "\n" + _fmt_row(list(x) + [residual]) + "\n")
    return _EXIT_OK


def _static_validate_reconstruct(args, measure):
    d = measure.d
    odd = d % 2 == 1
    if args.method == "odd-local" and not odd:
        raise ConfigError(f"method odd-local requires odd dimension, got d={d}")
    if args.method in ("singular", "hankel", "extension") and odd:
        raise ConfigError(f"method {args.method} requires even dimension, "
                          f"got d={d}")
    if args.method == "hankel" and not isinstance(measure, RadialClosedForm):
        raise ConfigError("the hankel method applies to the closed-form "
                          "radial families only")
    if (args.method == "singular"
            and not isinstance(measure, RadialClosedForm)
            and not args.points):
        raise ConfigError("singular reconstruction of an empirical measure "
                          "needs --points")


def cmd_reconstruct(args):
    measure = _measure(args)
    _require(args, "method")
    _static_validate_reconstruct(args, measure)
    ev = _evaluator(args, measure)
    radii = _parse_range(args.radii, "radii") if args.radii else None
    points = _read_points(args.points, measure.d) if args.points else None
    box = args.box.split(":")
    if len(box) != 2:
        raise ConfigError("box spec must be lo:hi")
    try:
        cfg = ReconstructionConfig(
            method=args.method, eta=args.eta, r_max=args.rmax,
            fd_order=args.fd_order, grid_box=(float(box[0]), float(box[1])),
            grid_nodes=args.nodes, mc_budget=args.mc_budget,
            seed=args.seed or 0, extension_height=args.height, radii=radii,
            points=points)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.workers = args.threads
    if args.method == "odd-local":
        rep = reconstruct_odd_local(ev, cfg)
    elif args.method == "singular":
        rep = reconstruct_even_singular(ev, cfg)
    elif args.method == "hankel":
        rep = reconstruct_isotropic_hankel(ev, cfg)
    else:
        rep = reconstruct_extension(ev, cfg)
    if not args.reference:
        rep.f_reference = None
    if args.format == "json":
        payload = rep.to_json_dict()
        if rep.kind == "radial_curve":
            payload["r"] = rep.radii.tolist()
            payload["f_hat"] = rep.f_hat.tolist()
            if rep.f_reference is not None:
                payload["f_reference"] = rep.f_reference.tolist()
        _emit(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return _EXIT_OK
    if rep.kind == "radial_curve":
        cols = [rep.radii, rep.f_hat]
        names = ["r", "f_hat"]
        if rep.f_reference is not None:
            cols += [rep.f_reference, rep.abs_error]
            names += ["f_reference", "abs_error"]
        lines = [",".join(names)]
        for row in zip(*cols):
            lines.append(_fmt_row(row))
        _emit(args, "\n".join(lines) + "\n")
    else:
        if rep.kind == "grid":
            pts = rep.grid.nodes()
            vals = rep.grid.values.reshape(pts.shape[0], -1)
        else:                        # evaluation at explicit points
            pts = rep.points
            vals = rep.f_hat.reshape(pts.shape[0], -1)
        lines = [",".join([f"x{i+1}" for i in range(pts.shape[1])]
                          + ["f_hat"])]
        for p, v in zip(pts, vals):
            lines.append(_fmt_row(list(p) + list(v)))
        _emit(args, "\n".join(lines) + "\n")
    return _EXIT_OK


def cmd_contour(args):
    measure = _measure(args)
    ev = _evaluator(args, measure)
    _require(args, "beta")
    if not 0.0 <= args.beta < 1.0:
        raise ConfigError("beta must lie in [0, 1)")
    c = depth_contour(ev, args.beta, n_rays=args.rays, tol=args.tol)
    if c.kind == "radial":
        payload = c.summary()
        _emit(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return _EXIT_OK
    if args.format == "json":
        payload = c.summary()
        payload["directions"] = c.directions.tolist()
        payload["radii"] = c.radii.tolist()
        payload["rank_norm"] = c.achieved.tolist()
        _emit(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return _EXIT_OK
    d = c.directions.shape[1]
    names = [f"u{i+1}" for i in range(d)] + ["radius", "rank_norm"]
    lines = [",".join(names)]
    for u, r, a in zip(c.directions, c.radii, c.achieved):
        lines.append(_fmt_row(list(u) + [r, a]))
    _emit(args, "\n".join(lines) + "\n")
    return _EXIT_OK


def cmd_content(args):
    measure = _measure(args)
    ev = _evaluator(args, measure)
    _require(args, "radius")
    if ev.d % 2 == 0:
        raise ConfigError("surface-integral content requires odd dimension")
    value = probability_content_surface(ev, args.radius, path=args.path)
    payload = {"radius": args.radius, "content": value, "path": args.path}
    if isinstance(measure, RadialClosedForm):
        payload["oracle"] = radial_content_oracle(measure, args.radius)
        payload["abs_error"] = abs(value - payload["oracle"])
    _emit(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return _EXIT_OK


def cmd_selftest(args):
    passed, results, notes = selftest_mod.run_selftest()
    if getattr(args, "json", False):
        _emit(args, json.dumps({"passed": passed, "checks": results,
                                "notes": notes}, indent=2, sort_keys=True)
              + "\n")
    else:
        lines = []
        for c in results:
            status = "pass" if c["passed"] else "FAIL"
            lines.append(f"[{status}] {c['name']:<45s} "
                         f"err={c['error']:.3e} tol={c['tolerance']:.1e}")
        lines.append(f"{sum(c['passed'] for c in results)}/{len(results)} "
                     "checks passed")
        for note in notes:
            lines.append(f"note: {note}")
        _emit(args, "\n".join(lines) + "\n")
    return _EXIT_OK if passed else _EXIT_SELFTEST


_HANDLERS = {
    "rank": cmd_rank,
    "quantile": cmd_quantile,
    "reconstruct": cmd_reconstruct,
    "contour": cmd_contour,
    "content": cmd_content,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        merged = _merge_config(args)
        return _HANDLERS[merged.command](merged)
    except (ConfigError, ParseError) as exc:
        print(f"georank: configuration error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"georank: solver did not converge: {exc}", file=sys.stderr)
        return _EXIT_NONCONV
    except ParityError as exc:
        # statically checkable parity problems are caught before compute and
        # reported as config errors; anything here surfaced mid-computation
        print(f"georank: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except (GeorankError, ValueError) as exc:
        print(f"georank: numeric failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
