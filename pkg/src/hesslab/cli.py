"""Command-line entry point: ``hesslab <command> [flags]``.

Every command prints one JSON document on stdout and writes the same payload,
a CSV table and a run manifest to ``--out-dir``.  Exit codes: 0 success,
1 failed check or estimator failure, 2 usage or parameter error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, acceptance, catalog, garding, lelong, slicing
from .errors import HesslabError, ParameterError
from .integrate import EstimatorConfig

SEED_ENV = "HESSLAB_SEED"


class UsageError(ParameterError):
    pass


# -- parsing helpers ----------------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--params entries must look like key=value, got {item!r}")
        out[key] = _parse_value(value)
    return out


def _parse_point(text: str, dim: int) -> np.ndarray:
    """'0' means the origin; otherwise comma-separated complex numbers such as '0.5,1+2j'."""
    text = text.strip()
    try:
        values = [complex(v.replace(" ", "")) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse point {text!r}") from None
    if len(values) == 1 and values[0] == 0:
        return np.zeros(dim, dtype=complex)
    if len(values) != dim:
        raise UsageError(f"expected {dim} coordinates, got {len(values)} in {text!r}")
    return np.asarray(values, dtype=complex)


def _build_function(args, index_m: int | None = None) -> catalog.TestFunction:
    params = _parse_params(args.params)
    if args.n is not None:
        params.setdefault("n", args.n)
    ctor = catalog.FAMILIES.get(args.function)
    if ctor is None:
        raise UsageError(f"unknown function {args.function!r}; known: {sorted(catalog.FAMILIES)}")
    needs = ctor.__code__.co_varnames[: ctor.__code__.co_argcount]
    if "m" in needs and "m" not in params and index_m is not None:
        params["m"] = index_m
    if "p" in needs and "p" not in params and getattr(args, "p", None) is not None:
        params["p"] = args.p
    return catalog.lookup(args.function, **params)


def _config(args) -> EstimatorConfig:
    return EstimatorConfig(samples=args.samples, seed=args.seed, radial_quadrature=not args.monte_carlo,
                           workers=args.workers)


def _ladder(args) -> lelong.RadiusLadder:
    return lelong.RadiusLadder(args.r0, args.theta, args.rungs)


def _pairs(z) -> list[list[float]]:
    return [[float(c.real), float(c.imag)] for c in np.ravel(z)]


# -- commands -----------------------------------------------------------------


def cmd_classify(args):
    label = garding.classify_vab(args.n, args.a, args.b, args.tol)
    payload = {"n": args.n, "a": args.a, "b": args.b, **label.to_dict()}
    return payload, [payload]


def cmd_table1(args):
    rows = garding.table1(args.n, grid=args.grid)
    table = [r.to_dict() for r in rows]
    return {"n": args.n, "rows": table}, [{k: r[k] for k in ("region_id", "a", "b", "m", "k", "delta")}
                                          for r in table]


def cmd_boundaries(args):
    curves = garding.region_boundaries(args.n)
    payload = {"n": args.n, "extent": args.extent, "curves": []}
    table = []
    for cid, c in enumerate(curves, start=1):
        rec = {"id": cid, **c.to_dict()}
        branches = c.sample(-args.extent, args.extent, args.points)
        rec["branches"] = [{"a": [pt[0] for pt in br], "b": [pt[1] for pt in br]} for br in branches]
        payload["curves"].append(rec)
        for bid, br in enumerate(branches):
            table.extend({"curve_id": cid, "source": c.source, "k": c.k, "branch": bid, "a": x, "b": y}
                         for x, y in br)
    return payload, table


def cmd_msh_check(args):
    f = _build_function(args, index_m=args.m)
    rep = garding.msh_check(f, args.m, samples=args.samples, seed=args.seed, radius=args.radius,
                            exclusion=args.exclusion)
    row = {k: rep[k] for k in ("m", "samples", "min_relative_sk", "worst_k", "fd_max_relative_error", "pass",
                               "violated")}
    return rep, [row]


def cmd_lelong(args):
    f = _build_function(args, index_m=args.m)
    center = _parse_point(args.center, f.n)
    estimator = {"sphere": lelong.lelong_point_sphere, "ball": lelong.lelong_point_ball,
                 "mass": lelong.lelong_point_mass}[args.estimator]
    est = estimator(f, center, args.m, _ladder(args), _config(args))
    payload = {"function": f.describe(), "center": _pairs(center), "m": args.m, "estimator": args.estimator,
               "ladder": _ladder(args).to_dict(), "seed": args.seed, **est.to_dict()}
    return payload, payload["per_radius"]


def cmd_slice_index(args):
    f = _build_function(args)
    xprime = _parse_point(args.xprime, args.p)
    probes = slicing.probe_points(f.n - args.p, args.probes, args.probe_radius, args.seed)
    idx = slicing.slice_index(f, xprime, probes, args.tol)
    payload = {"function": f.describe(), "p": args.p, "xprime": _pairs(xprime), "probes": args.probes,
               "probe_radius": args.probe_radius, "slice_index": idx}
    return payload, [{"p": args.p, "probes": args.probes, "slice_index": idx}]


def cmd_exceptional_scan(args):
    f = _build_function(args)
    rep = slicing.exceptional_scan(f, args.p, args.grid, _config(args))
    rep["seed"] = args.seed
    table = [{"x_re": p["xprime"][0][0], "x_im": p["xprime"][0][1], "verdict": p["verdict"]} for p in rep["points"]]
    return rep, table


def cmd_directional(args):
    f = _build_function(args, index_m=args.m)
    center = _parse_point(args.bprime_center, args.p)
    xsecond = _parse_point(args.xsecond, f.n - args.p)
    est = slicing.directional_lelong(f, (center, args.bprime_radius), xsecond, args.m, args.q, _ladder(args),
                                     _config(args))
    payload = {"function": f.describe(), "bprime": {"center": _pairs(center), "radius": args.bprime_radius},
               "xsecond": _pairs(xsecond), "ladder": _ladder(args).to_dict(), "seed": args.seed,
               "decomposition_residual": slicing.decomposition_residual(est), "j_rate": slicing.j_rate(est),
               **est.to_dict()}
    return payload, payload["per_radius"]


def cmd_verify(args):
    results = acceptance.run_suite(args.suite, args.seed)
    payload = {"suite": args.suite, "seed": args.seed, "criteria": [r.to_dict() for r in results],
               "pass": all(r.passed for r in results)}
    for r in results:
        print(r.line(), file=sys.stderr)
    table = [{"id": r.id, "title": r.title, "pass": r.passed} for r in results]
    return payload, table


COMMANDS = {
    "classify": cmd_classify,
    "table1": cmd_table1,
    "boundaries": cmd_boundaries,
    "msh-check": cmd_msh_check,
    "lelong": cmd_lelong,
    "slice-index": cmd_slice_index,
    "exceptional-scan": cmd_exceptional_scan,
    "directional": cmd_directional,
    "verify": cmd_verify,
}


# -- parser -------------------------------------------------------------------


def _function_flags(p: argparse.ArgumentParser):
    p.add_argument("--function", required=True, help="catalog family name")
    p.add_argument("--n", type=int, help="ambient dimension")
    p.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE",
                   help="extra family parameters, values parsed as JSON")


def _estimator_flags(p: argparse.ArgumentParser, samples: int = 65536):
    p.add_argument("--samples", type=int, default=samples)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--monte-carlo", action="store_true", help="disable the radial quadrature shortcut")


def _ladder_flags(p: argparse.ArgumentParser):
    p.add_argument("--r0", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--rungs", type=int, default=8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hesslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hesslab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help=f"RNG seed (overridden by ${SEED_ENV})")
    common.add_argument("--out-dir", default="hesslab_out", help="directory for JSON, CSV and manifest files")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="region label of v_{a,b}")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--tol", type=float, default=garding.DEFAULT_TOL)

    p = sub.add_parser("table1", parents=[common], help="region table of v_{a,b}")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", type=int, default=241)

    p = sub.add_parser("boundaries", parents=[common], help="boundary curves of the (a,b) regions")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--extent", type=float, default=6.0)
    p.add_argument("--points", type=int, default=241)

    p = sub.add_parser("msh-check", parents=[common], help="scan S_k signs of Hessian spectra")
    _function_flags(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--exclusion", type=float, default=0.1)

    p = sub.add_parser("lelong", parents=[common], help="point m-Lelong number")
    _function_flags(p)
    p.add_argument("--center", default="0")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--estimator", choices=("sphere", "ball", "mass"), default="sphere")
    _ladder_flags(p)
    _estimator_flags(p)

    p = sub.add_parser("slice-index", parents=[common], help="subharmonicity index of a slice")
    _function_flags(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--xprime", default="0")
    p.add_argument("--probes", type=int, default=64)
    p.add_argument("--probe-radius", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=garding.DEFAULT_TOL)

    p = sub.add_parser("exceptional-scan", parents=[common], help="slices that fail to be integrable")
    _function_flags(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--grid", type=int, default=11)
    _estimator_flags(p)

    p = sub.add_parser("directional", parents=[common], help="directional (m-q)-Lelong masses with I/J columns")
    _function_flags(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--xsecond", default="0")
    p.add_argument("--bprime-center", default="0")
    p.add_argument("--bprime-radius", type=float, default=1.0)
    _ladder_flags(p)
    _estimator_flags(p)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--suite", choices=sorted(acceptance.SUITES), default="all")
    return parser


# -- output -------------------------------------------------------------------


def _clean(obj):
    """Recursively convert to JSON-safe values; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(payload) -> str:
    return json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_schema(command: str) -> dict:
    text = resources.files("hesslab").joinpath("schemas", f"{command}.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(command: str, payload) -> None:
    jsonschema.validate(payload, load_schema(command))


def _csv_text(rows) -> str:
    rows = [_clean(r) for r in rows]
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        for r in rows[1:]:
            fields.extend(k for k in r if k not in fields)
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: "" if r.get(k) is None else r.get(k) for k in fields})
    return buf.getvalue()


def _arguments(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out_dir",)}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            args.seed = int(env_seed)
        except ValueError:
            parser.error(f"${SEED_ENV} must be an integer, got {env_seed!r}")
    start = time.perf_counter()
    try:
        payload, table = COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"hesslab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except HesslabError as exc:
        print(f"hesslab {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    payload = _clean(payload)
    try:
        validate(args.command, payload)
    except jsonschema.ValidationError as exc:
        print(f"hesslab {args.command}: payload does not match its schema: {exc.message}", file=sys.stderr)
        return 1
    text = dumps(payload)
    sys.stdout.write(text)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.command
    json_path, csv_path = out / f"{stem}.json", out / f"{stem}.csv"
    json_path.write_text(text, encoding="utf-8")
    csv_path.write_text(_csv_text(table), encoding="utf-8")
    manifest = {
        "command": args.command,
        "parameters": _arguments(args),
        "seed": args.seed,
        "tool_version": __version__,
        "wall_time_seconds": time.perf_counter() - start,
        "outputs": [str(json_path), str(csv_path)],
    }
    (out / f"{stem}.manifest.json").write_text(dumps(manifest), encoding="utf-8")
    if args.command == "verify" and not payload["pass"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
