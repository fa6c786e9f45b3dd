"""``igcx`` command-line front end.

Exit codes: 0 success, 1 validation failure, 2 invalid input, 3 oracle deviation.
Every file written with ``--out`` gets a ``<out>.manifest.json`` next to it;
passing that manifest back through ``--config`` reproduces the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from datetime import datetime, timezone

import numpy as np

from . import __version__, complexity, geodesics, geometry, models, validation
from ._accel import backend_name, thread_cap
from .core import (
    DEFAULT_TOLERANCES,
    DomainError,
    IgcxError,
    ModelParams3,
    ModelParams4,
    check_correlation,
    determinant,
    invert_spd,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INVALID = 2
EXIT_DEVIATION = 3

QUADRATURE_LIMIT = 1e-5
GEODESIC_LIMIT = 1e-5

PUBLIC_MODELS = ("full4d", "reduced3d", "diagonal")
HIDDEN_MODELS = ("flat-test",)

# arguments that steer where output goes rather than what is computed
_NOT_PARAMETERS = {"command", "config", "out", "handler"}


class UsageError(Exception):
    """Invalid input detected after argument parsing."""


def _fmt(x) -> str:
    return "%.17g" % x


def _write_csv(header, rows, stream, footer=None):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    if footer is not None:
        stream.write("# " + json.dumps(footer, sort_keys=True) + "\n")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _parameters(args) -> dict:
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in _NOT_PARAMETERS}


def write_manifest(path: str, args, seed=None) -> str:
    manifest = {
        "command": args.command,
        "parameters": _parameters(args),
        "tool_version": __version__,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "backend": backend_name(),
        "prng": models.PRNG_ALGORITHM,
    }
    target = f"{path}.manifest.json"
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return target


def _emit(args, text: str, seed=None):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        write_manifest(args.out, args, seed)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# metric


def _field_and_point(args):
    """Metric field and coordinates for the model/point flags."""
    if args.model == "reduced3d":
        p = ModelParams3(args.mu_x, args.mu_y, args.sigma, args.r)
        return p, geometry.reduced_field(p.r), p.point
    if args.model == "full4d":
        p = ModelParams4(args.mu_x, args.sigma_x, args.mu_y, args.sigma_y, args.r)
        return p, geometry.full_field(p.r), p.point
    if args.model == "diagonal":
        m = models.DiagonalGaussianProduct((args.mu_x, args.mu_y), (args.sigma_x, args.sigma_y))
        point = np.array([m.means[0], m.sigmas[0], m.means[1], m.sigmas[1]])
        return m, geometry.diagonal_field(2), point
    point = np.array([args.mu_x, args.mu_y, args.sigma])
    return None, geometry.flat_field(3), point


def _quadrature_estimate(args, params):
    if args.model == "full4d":
        return models.fisher_metric_quadrature(models.BivariateGaussian(params))
    if args.model == "diagonal":
        p4 = ModelParams4(params.means[0], params.sigmas[0], params.means[1], params.sigmas[1], 0.0)
        return models.fisher_metric_quadrature(models.BivariateGaussian(p4))
    if args.model == "reduced3d":
        # equal spreads embed (mu_x, mu_y, sigma) -> (mu_x, sigma, mu_y, sigma)
        p4 = ModelParams4(params.mu_x, params.sigma, params.mu_y, params.sigma, params.r)
        g4 = models.fisher_metric_quadrature(models.BivariateGaussian(p4))
        J = np.array([[1.0, 0, 0], [0, 0, 1.0], [0, 1.0, 0], [0, 0, 1.0]])
        return J.T @ g4 @ J
    raise UsageError("--check-quadrature is not available for this model")


def cmd_metric(args) -> int:
    params, field, point = _field_and_point(args)
    g = field.at(point)
    ginv = invert_spd(g)
    result = {
        "model": args.model,
        "coords": list(field.coords),
        "point": point.tolist(),
        "metric": g.tolist(),
        "inverse": np.asarray(ginv).tolist(),
        "determinant": determinant(g),
    }
    code = EXIT_OK
    if args.check_quadrature:
        q = _quadrature_estimate(args, params)
        dev = float(np.max(np.abs(q - g)))
        result["quadrature"] = np.asarray(q).tolist()
        result["max_deviation"] = dev
        if dev > QUADRATURE_LIMIT:
            code = EXIT_DEVIATION
            print(f"quadrature deviates from the closed form by {dev:.3e} (> {QUADRATURE_LIMIT:g})", file=sys.stderr)
    if args.format == "json":
        text = json.dumps(result, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["quantity", "i", "j", "value"])
        for key in ("metric", "inverse", "quadrature"):
            if key in result:
                for i, row in enumerate(result[key]):
                    for j, v in enumerate(row):
                        writer.writerow([key, i + 1, j + 1, _fmt(v)])
        writer.writerow(["determinant", "", "", _fmt(result["determinant"])])
        if "max_deviation" in result:
            writer.writerow(["max_deviation", "", "", _fmt(result["max_deviation"])])
        text = buf.getvalue()
    _emit(args, text)
    return code


# --------------------------------------------------------------------------
# curvature


def cmd_curvature(args) -> int:
    _, field, point = _field_and_point(args)
    mode = args.mode
    if mode is None:
        mode = "fd" if field.d1 is None else "analytic"
    if mode == "analytic" and field.d1 is None:
        raise UsageError(f"model {args.model} has no analytic derivatives; use --mode fd")
    field = field.with_mode(geometry.ANALYTIC if mode == "analytic" else geometry.FINITE_DIFFERENCE)
    rep = geometry.curvature_report(field, point, DEFAULT_TOLERANCES)
    result = {
        "model": args.model,
        "mode": mode,
        "point": point.tolist(),
        "christoffel": [{"k": k, "i": i, "j": j, "value": v} for (k, i, j), v in rep.christoffel.nonzero()],
        "ricci": np.asarray(rep.ricci).tolist(),
        "scalar": rep.scalar,
    }
    if args.format == "json":
        text = json.dumps(result, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["quantity", "k", "i", "j", "value"])
        for item in result["christoffel"]:
            writer.writerow(["christoffel", item["k"], item["i"], item["j"], _fmt(item["value"])])
        for i, row in enumerate(result["ricci"]):
            for j, v in enumerate(row):
                writer.writerow(["ricci", "", i + 1, j + 1, _fmt(v)])
        writer.writerow(["scalar", "", "", "", _fmt(rep.scalar)])
        text = buf.getvalue()
    _emit(args, text)
    return EXIT_OK


# --------------------------------------------------------------------------
# geodesic


def _row_drift(states, a1, a2):
    return np.array([geodesics.conserved_drift(states[i : i + 1], a1, a2) for i in range(states.shape[0])])


def cmd_geodesic(args) -> int:
    if int(args.steps) != args.steps or args.steps < 1:
        raise UsageError(f"--steps must be a positive integer, got {args.steps!r}")
    cfg = geodesics.GeodesicConfig(args.r, args.sigma0, args.a1, args.a2, args.tau_max, int(args.steps) + 1)
    exact = geodesics.closed_form_geodesic(cfg)
    header = ["tau", *geodesics.STATE_COLUMNS]
    code = EXIT_OK
    if args.method == "closed":
        table = np.column_stack([exact.taus, exact.states])
    else:
        path = geodesics.integrate_geodesic(cfg, exact.states[0])
        table = np.column_stack([path.taus, path.states])
        if args.method == "both":
            err = np.abs(path.states[:, :3] - exact.states[:, :3])
            drift = _row_drift(path.states, args.a1, args.a2)
            table = np.column_stack([table, err, drift])
            header += ["abs_err_mu_x", "abs_err_mu_y", "abs_err_sigma", "conserved_drift"]
            worst = float(np.max(err))
            if worst > GEODESIC_LIMIT:
                code = EXIT_DEVIATION
                print(f"ODE deviates from the closed form by {worst:.3e} (> {GEODESIC_LIMIT:g})", file=sys.stderr)
    buf = io.StringIO()
    _write_csv(header, table, buf)
    _emit(args, buf.getvalue())
    return code


# --------------------------------------------------------------------------
# igc


def cmd_igc(args) -> int:
    if not (0.0 < args.tau_min < args.tau_max) or not all(map(math.isfinite, (args.tau_min, args.tau_max))):
        raise UsageError("need 0 < --tau-min < --tau-max")
    if int(args.points) != args.points or args.points < 2:
        raise UsageError(f"--points must be an integer >= 2, got {args.points!r}")
    grid = complexity.default_grid(args.tau_min, args.tau_max, int(args.points), args.log_grid)
    cfg = complexity.IgcConfig(args.r, args.sigma0, args.a, tuple(grid))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        curve = complexity.igc_curve(cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    footer = {
        "fitted_exponent": curve.fitted_exponent,
        "asymptotic_constant": complexity.asymptotic_constant(cfg),
        "decay_rate": cfg.decay,
    }
    buf = io.StringIO()
    _write_csv(["tau", "vol", "avg_vol", "ige"], np.column_stack([curve.taus, curve.vol, curve.avg_vol, curve.ige]), buf, footer)
    _emit(args, buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------
# ratio


def cmd_ratio(args) -> int:
    for name in ("r_min", "r_max"):
        try:
            check_correlation(getattr(args, name), positive=True)
        except DomainError as exc:
            raise UsageError(f"--{name.replace('_', '-')}: {exc}") from None
    if not args.r_min < args.r_max:
        raise UsageError("need --r-min < --r-max")
    if int(args.points) != args.points or args.points < 2:
        raise UsageError(f"--points must be an integer >= 2, got {args.points!r}")
    rs = np.linspace(args.r_min, args.r_max, int(args.points))
    f = np.array([complexity.compression_ratio(r) for r in rs])
    buf = io.StringIO()
    _write_csv(["r", "F"], np.column_stack([rs, f]), buf)
    _emit(args, buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    results = validation.run_checks(DEFAULT_TOLERANCES)
    _emit(args, validation.format_report(results, DEFAULT_TOLERANCES) + "\n", seed=validation.SEED)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _common(p):
    p.add_argument("--config", metavar="FILE", help="JSON file of flag values (or a run manifest); flags win")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout, with a manifest beside it")


def _point_flags(p):
    p.add_argument(
        "--model",
        choices=PUBLIC_MODELS + HIDDEN_MODELS,
        default="reduced3d",
        metavar="{" + ",".join(PUBLIC_MODELS) + "}",
    )
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=1.0, help="common spread (reduced3d)")
    p.add_argument("--sigma-x", type=float, default=1.0)
    p.add_argument("--sigma-y", type=float, default=1.0)
    p.add_argument("--mu-x", type=float, default=0.0)
    p.add_argument("--mu-y", type=float, default=0.0)
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    parser = _Parser(prog="igcx", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"igcx {__version__} ({backend_name()})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = sub.add_parser("metric", help="Fisher-Rao metric, inverse and determinant")
    _point_flags(p)
    p.add_argument("--check-quadrature", action="store_true", help="compare with the score-outer-product quadrature")
    p.set_defaults(handler=cmd_metric)
    subs["metric"] = p

    p = sub.add_parser("curvature", help="Christoffel symbols, Ricci tensor and scalar curvature")
    _point_flags(p)
    p.add_argument("--mode", choices=("analytic", "fd"), default=None)
    p.set_defaults(handler=cmd_curvature)
    subs["curvature"] = p

    p = sub.add_parser("geodesic", help="geodesic of the equal-spread model as CSV")
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--a1", type=float, default=1.0)
    p.add_argument("--a2", type=float, default=-1.0)
    p.add_argument("--tau-max", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--method", choices=("closed", "ode", "both"), default="both")
    p.set_defaults(handler=cmd_geodesic)
    subs["geodesic"] = p

    p = sub.add_parser("igc", help="statistical volume, IGC and IGE curves as CSV")
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--tau-min", type=float, default=0.1)
    p.add_argument("--tau-max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--log-grid", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(handler=cmd_igc)
    subs["igc"] = p

    p = sub.add_parser("ratio", help="compression ratio F(r) as CSV")
    p.add_argument("--r-min", type=float, default=0.001)
    p.add_argument("--r-max", type=float, default=0.999)
    p.add_argument("--points", type=int, default=999)
    p.set_defaults(handler=cmd_ratio)
    subs["ratio"] = p

    p = sub.add_parser("validate", help="run the oracle suite and print a pass/fail table")
    p.set_defaults(handler=cmd_validate)
    subs["validate"] = p

    for p in subs.values():
        _common(p)
    return parser, subs


def _load_config(path: str, command: str, subparser) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    if "parameters" in data and isinstance(data["parameters"], dict):
        if data.get("command") not in (None, command):
            raise UsageError(f"manifest {path} belongs to command {data['command']!r}, not {command!r}")
        data = data["parameters"]
    known = {a.dest for a in subparser._actions}
    values = {}
    for key, value in data.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest in _NOT_PARAMETERS or dest not in known:
            raise UsageError(f"config {path}: unknown setting {key!r} for {command}")
        values[dest] = value
    return values


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        thread_cap()
        args = parser.parse_args(argv)
        if args.config:
            sp = subs[args.command]
            sp.set_defaults(**_load_config(args.config, args.command, sp))
            args = parser.parse_args(argv)
        return args.handler(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    except (UsageError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IgcxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEVIATION


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
