"""Scenario runner: ``kklab <command> --config <file>`` and ``kklab catalog``.

A scenario is a JSON document, for example::

    {"command": "verify-identity", "geometry": "hopf",
     "points": {"random": 20, "seed": 0}, "convention": "positive"}

Reports are written to ``<out>/<command>.<format>``; JSON reports carry a
single ``timestamp`` field and are otherwise a deterministic function of the
configuration.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bundle as kk
from . import catalog as cat
from . import chart as cc
from . import quantum as qm
from . import stochastic as st
from .bundle import KKBundle
from .chart import ChartedMetric, FDScheme, SignConvention
from .errors import (
    ConfigError,
    InsufficientPaths,
    InvalidStructure,
    KKLabError,
    NumericalFailure,
    OutOfDomain,
    RepresentationMismatch,
    SingularMetric,
)
from .lie import group_by_name
from .params import PhysicalParams

COMMANDS = ("curvature", "decompose", "jacobian", "verify-identity", "hamiltonian", "mc-reduce")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
DEFAULT_TOL = 1e-4
_KNOWN_KEYS = {
    "command", "geometry", "points", "fd", "physical", "convention", "mc", "output",
    "tolerance", "representation", "casimir_weight", "jtilde",
}

# -- inline geometries --------------------------------------------------------

_SAFE = {name: getattr(np, name) for name in (
    "sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "arctan", "abs", "pi",
)}


def _compile_expr(text, n_vars):
    if isinstance(text, (int, float)):
        value = float(text)
        return lambda x: np.full(x.shape[:-1], value)
    if not isinstance(text, str):
        raise ConfigError(f"expression must be a string or number, got {text!r}")
    try:
        code = compile(text, "<geometry>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {text!r}: {exc.msg}") from exc
    allowed = set(_SAFE) | {f"x{i}" for i in range(n_vars)}
    unknown = set(code.co_names) - allowed
    if unknown:
        raise ConfigError(f"unknown names in {text!r}: {sorted(unknown)}")

    def fn(x):
        env = dict(_SAFE)
        env.update({f"x{i}": x[..., i] for i in range(n_vars)})
        return np.broadcast_to(np.asarray(eval(code, {"__builtins__": {}}, env), dtype=float), x.shape[:-1])

    return fn


def _matrix_field(rows, n_vars, shape):
    try:
        arr = np.asarray(rows, dtype=object)
    except Exception as exc:  # ragged input
        raise ConfigError(f"matrix field has a ragged shape: {exc}") from exc
    if arr.shape != shape:
        raise ConfigError(f"matrix field has shape {arr.shape}, expected {shape}")
    fns = [[_compile_expr(arr[i, j], n_vars) for j in range(shape[1])] for i in range(shape[0])]

    def field(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + shape)
        for i in range(shape[0]):
            for j in range(shape[1]):
                out[..., i, j] = fns[i][j](x)
        return out

    return field


def _symmetrized(field):
    return lambda x: (lambda g: 0.5 * (g + np.swapaxes(g, -1, -2)))(field(x))


def _box(spec, key_lo, key_hi, key_per, dim):
    try:
        lower = np.asarray(spec[key_lo], dtype=float)
        upper = np.asarray(spec[key_hi], dtype=float)
    except KeyError as exc:
        raise ConfigError(f"inline geometry needs {exc.args[0]!r}") from exc
    periodic = tuple(bool(v) for v in spec.get(key_per, [False] * dim))
    if lower.shape != (dim,) or upper.shape != (dim,) or len(periodic) != dim:
        raise ConfigError("domain bounds must have one entry per coordinate")
    return lower, upper, periodic


def build_inline(spec: dict):
    """Build a metric or bundle from an inline description with ``x0, x1, ...``."""
    kind = spec.get("kind")
    if kind == "metric":
        dim = int(spec.get("dim", 0))
        if dim < 1:
            raise ConfigError("inline metric needs a positive 'dim'")
        lower, upper, periodic = _box(spec, "lower", "upper", "periodic", dim)
        g = _symmetrized(_matrix_field(spec.get("metric"), dim, (dim, dim)))
        try:
            return ChartedMetric(dim, g, lower, upper, periodic, spec.get("label", "inline"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "bundle":
        n = int(spec.get("base_dim", 0))
        if n < 1:
            raise ConfigError("inline bundle needs a positive 'base_dim'")
        try:
            ls, _ = group_by_name(str(spec.get("group", "")))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"unknown group {spec.get('group')!r}") from exc
        k = ls.dim_g
        lower, upper, periodic = _box(spec, "base_lower", "base_upper", "base_periodic", n)
        h = _symmetrized(_matrix_field(spec.get("h"), n, (n, n)))
        gamma = _symmetrized(_matrix_field(spec.get("gamma"), n, (k, k)))
        A = _matrix_field(spec.get("A", [[0] * k] * n), n, (n, k))
        pot = spec.get("potential")
        V = None if pot is None else _compile_expr(pot, n)
        return KKBundle(n, ls, h, gamma, A, lower, upper, periodic, V, spec.get("label", "inline"))
    raise ConfigError("inline geometry 'kind' must be 'metric' or 'bundle'")


def resolve_geometry(value):
    if isinstance(value, str):
        try:
            _, obj = cat.lookup(value)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad arguments in {value!r}: {exc}") from exc
        label = value
    elif isinstance(value, dict):
        obj = build_inline(value)
        label = value.get("label", "inline")
    else:
        raise ConfigError("'geometry' must be a catalog name or an inline object")
    try:
        cat.self_check(obj)
    except (SingularMetric, FloatingPointError, ValueError) as exc:
        raise ConfigError(f"geometry {label!r} fails validation: {exc}") from exc
    return label, obj


# -- configuration --------------------------------------------------------------

def _points(spec, obj, chart_dim):
    if spec is None:
        spec = {"random": 20, "seed": 0}
    if isinstance(spec, list):
        pts = np.asarray(spec, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != chart_dim:
            raise ConfigError(f"points must be a list of {chart_dim}-vectors")
        return pts
    if isinstance(spec, dict) and "random" in spec:
        return cat.random_points(obj, int(spec["random"]), int(spec.get("seed", 0)), float(spec.get("margin", 0.05)))
    if isinstance(spec, dict) and "grid" in spec:
        g = spec["grid"]
        try:
            axes = [np.linspace(lo, hi, int(k)) for lo, hi, k in zip(g["lower"], g["upper"], g["n"])]
        except (KeyError, TypeError) as exc:
            raise ConfigError("grid needs 'lower', 'upper' and 'n'") from exc
        if len(axes) != chart_dim:
            raise ConfigError("grid dimension does not match the chart")
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart_dim)
    raise ConfigError("'points' must be a list, {'random': N} or {'grid': {...}}")


def _fd(spec) -> FDScheme:
    spec = spec or {}
    try:
        return FDScheme(float(spec.get("step", 1e-3)), int(spec.get("order", 4)), bool(spec.get("richardson", False)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad fd scheme: {exc}") from exc


def _physical(spec) -> PhysicalParams:
    spec = spec or {}
    try:
        return PhysicalParams(float(spec.get("hbar", 1.0)), float(spec.get("m", 1.0)), float(spec.get("kappa", 1.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad physical parameters: {exc}") from exc


def _representation(spec, b: KKBundle) -> qm.Representation:
    if spec is None or spec == "trivial":
        return qm.trivial_rep(b.dim_g)
    if spec in ("spin-1/2", "spin-half"):
        return qm.spin_half()
    if isinstance(spec, dict) and "charge" in spec:
        return qm.u1_charge(float(spec["charge"]))
    if isinstance(spec, dict) and "generators" in spec:
        gens = spec["generators"]
        try:
            if isinstance(gens, dict):
                J = np.asarray(gens["re"], dtype=float) + 1j * np.asarray(gens["im"], dtype=float)
            else:
                J = np.asarray(gens, dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad generator matrices: {exc}") from exc
        return qm.Representation(J, spec.get("label", "user"))
    raise ConfigError(f"unknown representation {spec!r}")


def parse_config(text: str) -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if cfg.get("command") not in COMMANDS:
        raise ConfigError(f"'command' must be one of {COMMANDS}")
    if "geometry" not in cfg:
        raise ConfigError("'geometry' is required")
    try:
        cfg["_convention"] = SignConvention(cfg.get("convention", "positive"))
    except ValueError as exc:
        raise ConfigError(f"unknown convention {cfg.get('convention')!r}") from exc
    return cfg


# -- commands ----------------------------------------------------------------------

def _require_bundle(obj, command):
    if not isinstance(obj, KKBundle):
        raise ConfigError(f"command {command!r} needs a bundle geometry")
    return obj


def _fail(msg):
    raise NumericalFailure(msg)


def _cmd_curvature(cfg, label, obj, fd, params):
    conv = cfg["_convention"]
    metric = kk.assemble_kk_metric(obj) if isinstance(obj, KKBundle) else obj
    pts = _points(cfg.get("points"), obj if not isinstance(obj, KKBundle) else metric, metric.dim)
    rows = []
    tol = float(cfg.get("tolerance", DEFAULT_TOL))
    for p in pts:
        pack = cc.curvature_pack(metric, p, fd, conv)
        ric_asym = float(np.max(np.abs(pack.ricci - pack.ricci.T)))
        if ric_asym > tol:
            _fail(f"Ricci tensor not symmetric at point {p.tolist()} (residual {ric_asym:.2e})")
        rows.append({"point": p.tolist(), "scalar": float(pack.scalar), "ricci": pack.ricci.tolist(),
                     "ricci_asymmetry": ric_asym, "convention": conv.value})
    return rows, ["point", "scalar", "ricci_asymmetry", "convention"], {}


def _cmd_decompose(cfg, label, obj, fd, params, verify=False):
    b = _require_bundle(obj, cfg["command"])
    conv = cfg["_convention"]
    tol = float(cfg.get("tolerance", DEFAULT_TOL))
    rows = []
    for p in _points(cfg.get("points"), b, b.base_dim):
        r = kk.decomposition_report(b, p, fd, conv)
        rows.append(r.to_dict())
        if verify and not abs(r.residual) < tol:
            _fail(f"identity residual {r.residual:.3e} exceeds {tol:g} at point {r.point} "
                  f"(R_P={r.R_P:.6g}, R_M={r.R_M:.6g}, R_G={r.R_G:.6g}, F2={r.F2_term:.6g}, |j|^2={r.j_norm2:.6g})")
    checks = {"max_abs_residual": max(abs(r["residual"]) for r in rows), "tolerance": tol} if verify else {}
    return rows, list(kk.DecompositionReport.FIELDS), checks


def _cmd_jacobian(cfg, label, obj, fd, params):
    b = _require_bundle(obj, "jacobian")
    tol = float(cfg.get("tolerance", DEFAULT_TOL))
    rows = []
    for p in _points(cfg.get("points"), b, b.base_dim):
        jd = kk.jacobian_direct(b, p, fd, params)
        jg = kk.jacobian_geometric(b, p, fd, cfg["_convention"])
        diff = float(jd.J_tilde) - jg
        if not abs(diff) < tol:
            _fail(f"J~ routes disagree by {diff:.3e} at point {p.tolist()}")
        rows.append({"point": p.tolist(), "J": float(jd.J), "J_tilde_direct": float(jd.J_tilde),
                     "J_tilde_geometric": jg, "difference": diff})
    return rows, ["point", "J", "J_tilde_direct", "J_tilde_geometric", "difference"], {"tolerance": tol}


def _cmd_hamiltonian(cfg, label, obj, fd, params):
    b = _require_bundle(obj, "hamiltonian")
    rep = _representation(cfg.get("representation"), b)
    w = cfg.get("casimir_weight")
    rows = []
    for p in _points(cfg.get("points"), b, b.base_dim):
        c = qm.matrix_hamiltonian_coeffs(b, rep, p, fd, params, None if w is None else float(w),
                                         cfg.get("jtilde", "geometric"))
        herm = c.hermiticity_residual()
        if herm > 1e-10:
            _fail(f"zeroth-order matrix not Hermitian at point {p.tolist()} (residual {herm:.2e})")
        row = c.to_dict()
        row["hermiticity_residual"] = herm
        rows.append(row)
    checks = {"kappa_identity_residual": qm.kappa_identity_residual(params)}
    return rows, ["point", "J_tilde", "potential", "kinetic_weight", "hermiticity_residual", "zeroth_order_matrix"], checks


def _cmd_mc_reduce(cfg, label, obj, fd, params):
    b = _require_bundle(obj, "mc-reduce")
    mc = dict(cfg.get("mc") or {})
    try:
        x_a = mc.pop("x_a")
        x_b = mc.pop("x_b")
    except KeyError as exc:
        raise ConfigError(f"mc section needs {exc.args[0]!r}") from exc
    try:
        dt = float(mc.get("dt", 1e-3))
        n_paths = int(mc.get("n_paths", 100000))
        seed = int(mc.get("seed", 0))
        t_a, t_b = float(mc.get("t_a", 0.0)), float(mc.get("t_b", 0.5))
        width = mc.get("smoothing_width")
        width = None if width is None else float(width)
        r = st.reduction_check(
            b, x_a, x_b, t_a, t_b, dt, n_paths, width, seed, params,
            quad_resolution=mc.get("quad_resolution"), beta=float(mc.get("beta", 4.0)),
            workers=int(mc.get("workers", 1)), s=fd, case=label,
        )
    except ValueError as exc:
        raise ConfigError(f"bad mc settings: {exc}") from exc
    rel_tol = mc.get("rel_tol")
    n_sigma = float(mc.get("n_sigma", 3.0))
    if rel_tol is not None:
        ok = abs(r.ratio - 1.0) <= float(rel_tol)
        crit = f"|ratio - 1| <= {float(rel_tol):g}"
    else:
        ok = r.within(n_sigma)
        crit = f"|ratio - 1| <= {n_sigma:g} stderr"
    if not math.isfinite(r.ratio) or not ok:
        _fail(f"reduction ratio {r.ratio:.5f} +- {r.stderr:.5f} fails {crit}")
    return [r.to_record()], ["case", "lhs", "rhs", "ratio", "stderr", "n_paths", "dt", "seed"], {
        "criterion": crit, "n_discarded": r.n_discarded, **r.details}


_DISPATCH = {
    "curvature": _cmd_curvature,
    "decompose": _cmd_decompose,
    "verify-identity": lambda *a: _cmd_decompose(*a, verify=True),
    "jacobian": _cmd_jacobian,
    "hamiltonian": _cmd_hamiltonian,
    "mc-reduce": _cmd_mc_reduce,
}


def _csv_cell(v):
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return v


def _to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def execute(cfg: dict) -> dict:
    """Run a parsed scenario and return the report document (no timestamp)."""
    label, obj = resolve_geometry(cfg["geometry"])
    fd = _fd(cfg.get("fd"))
    params = _physical(cfg.get("physical"))
    rows, columns, checks = _DISPATCH[cfg["command"]](cfg, label, obj, fd, params)
    public = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return {"command": cfg["command"], "geometry": label, "config": public, "columns": columns,
            "rows": rows, "checks": checks, "status": "ok"}


def run_scenario(config_text: str, out_dir=None, fmt=None, command=None):
    """Parse, execute and write a scenario.  Returns ``(exit_code, report_or_error, path)``."""
    try:
        cfg = parse_config(config_text)
        if command is not None and cfg["command"] != command:
            raise ConfigError(f"command {command!r} does not match config command {cfg['command']!r}")
        output = cfg.get("output") or {}
        fmt = fmt or output.get("format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        out_dir = out_dir or output.get("dir")
        report = execute(cfg)
    except (ConfigError, OutOfDomain, RepresentationMismatch, InvalidStructure) as exc:
        return EXIT_CONFIG, {"status": "config-error", "error": str(exc)}, None
    except (NumericalFailure, SingularMetric, InsufficientPaths, KKLabError, FloatingPointError) as exc:
        return EXIT_NUMERIC, {"status": "numerical-failure", "error": str(exc)}, None
    path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{report['command']}.{fmt}"
        if fmt == "json":
            doc = dict(report)
            doc["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
            path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        else:
            path.write_text(_to_csv(report["rows"], report["columns"]))
    return EXIT_OK, report, path


def catalog_listing(check: bool = False):
    lines, ok = [], True
    for name, e in cat.CATALOG.items():
        status = ""
        if check:
            try:
                cat.self_check(e.builder())
                status = "  [ok]"
            except KKLabError as exc:
                status = f"  [FAILED: {exc}]"
                ok = False
        ref = "" if not e.reference else "  reference: " + ", ".join(f"{k}={v}" for k, v in e.reference.items())
        lines.append(f"{name:<22}{e.kind:<8}{e.description}{ref}{status}")
    return lines, ok


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kklab", description="Kaluza-Klein reduction laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run a {name} scenario")
        p.add_argument("--config", required=True, help="JSON scenario file")
        p.add_argument("--out", default=None, help="output directory (default: print to stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=None)
    p = sub.add_parser("catalog", help="list built-in geometries")
    p.add_argument("--check", action="store_true", help="self-validate every entry")
    args = parser.parse_args(argv)

    if args.command == "catalog":
        lines, ok = catalog_listing(args.check)
        print("\n".join(lines))
        return EXIT_OK if ok else EXIT_NUMERIC

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, report, path = run_scenario(text, args.out, args.format, command=args.command)
    if code != EXIT_OK:
        print(f"error: {report['error']}", file=sys.stderr)
        return code
    if path is not None:
        print(path)
    elif (args.format or "json") == "csv":
        sys.stdout.write(_to_csv(report["rows"], report["columns"]))
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
