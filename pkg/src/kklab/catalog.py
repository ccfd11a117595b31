"""Named geometries used by the CLI and the test-suite.

Metric entries build a :class:`ChartedMetric`; bundle entries build a
:class:`KKBundle` in adapted coordinates.  Names may carry arguments, e.g.
``s2(0.5)``, ``flat-torus(3)`` or ``warped-u1-line(1.0, 2)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bundle import KKBundle, assemble_kk_metric
from .chart import ChartedMetric, check_metric
from .lie import build_abelian, build_su2

HOPF_POLE_MARGIN = 0.2


def _diag(*entries):
    def fn(shape):
        return entries

    return fn


def flat_torus(n: int = 2) -> ChartedMetric:
    n = int(n)

    def metric(p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(np.eye(n), p.shape[:-1] + (n, n)).copy()

    return ChartedMetric(n, metric, np.zeros(n), np.full(n, 2 * np.pi), (True,) * n, f"flat-torus({n})")


def round_s2(r: float = 1.0) -> ChartedMetric:
    r = float(r)

    def metric(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1] + (2, 2))
        out[..., 0, 0] = r * r
        out[..., 1, 1] = (r * np.sin(p[..., 0])) ** 2
        return out

    return ChartedMetric(2, metric, [0.0, 0.0], [np.pi, 2 * np.pi], (False, True), f"s2({r:g})")


def round_s3(r: float = 1.0) -> ChartedMetric:
    """Hyperspherical chart ``(chi, theta, phi)``."""
    r = float(r)

    def metric(p):
        p = np.asarray(p, dtype=float)
        chi, th = p[..., 0], p[..., 1]
        out = np.zeros(p.shape[:-1] + (3, 3))
        out[..., 0, 0] = r * r
        out[..., 1, 1] = (r * np.sin(chi)) ** 2
        out[..., 2, 2] = (r * np.sin(chi) * np.sin(th)) ** 2
        return out

    return ChartedMetric(3, metric, [0.0, 0.0, 0.0], [np.pi, np.pi, 2 * np.pi], (False, False, True), f"s3({r:g})")


def polar_plane() -> ChartedMetric:
    def metric(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = p[..., 0] ** 2
        return out

    return ChartedMetric(2, metric, [0.0, 0.0], [50.0, 2 * np.pi], (False, True), "polar-plane")


def hopf() -> KKBundle:
    """Unit S^3 as a U(1) bundle over S^2(1/2).

    Base chart ``(theta, phi)`` away from the poles, fibre angle ``a = psi/2``;
    ``A_phi = cos(theta)/2`` is the monopole potential, ``gamma = 1``.
    """
    ls, _ = build_abelian(1)

    def h(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 0.25
        out[..., 1, 1] = 0.25 * np.sin(x[..., 0]) ** 2
        return out

    def gamma(x):
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1] + (1, 1))

    def A(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (2, 1))
        out[..., 1, 0] = 0.5 * np.cos(x[..., 0])
        return out

    m = HOPF_POLE_MARGIN
    return KKBundle(2, ls, h, gamma, A, np.array([m, 0.0]), np.array([np.pi - m, 2 * np.pi]), (False, True), label="hopf")


def trivial_su2_product(n_base: int = 1, scale: float = 1.0) -> KKBundle:
    """Flat ``n_base``-torus times SU(2) with a constant bi-invariant fibre metric."""
    ls, _ = build_su2()
    n = int(n_base)
    scale = float(scale)

    def h(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()

    def gamma(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(scale * np.eye(3), x.shape[:-1] + (3, 3)).copy()

    def A(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (n, 3))

    return KKBundle(n, ls, h, gamma, A, np.zeros(n), np.full(n, 2 * np.pi), (True,) * n, label="trivial-su2-product")


def _warped_L(x):
    x1, x2 = x[..., 0], x[..., 1]
    L = np.zeros(x.shape[:-1] + (3, 3))
    L[..., 0, 0] = 1.0 + 0.3 * np.sin(x1)
    L[..., 0, 1] = 0.2 * np.cos(x2)
    L[..., 0, 2] = 0.1 * np.sin(x1 + x2)
    L[..., 1, 0] = 0.2 * np.sin(x2)
    L[..., 1, 1] = 1.0 + 0.25 * np.cos(x1)
    L[..., 1, 2] = 0.15 * np.cos(x1 - x2)
    L[..., 2, 0] = 0.1 * np.cos(x1)
    L[..., 2, 1] = 0.2 * np.sin(x1 + x2)
    L[..., 2, 2] = 0.8 + 0.3 * np.sin(x2)
    return L


def warped_su2(delta: float = 0.5) -> KKBundle:
    """Flat 2-torus base, SU(2) fibre, ``gamma = L^T L + delta`` and a non-abelian ``A``."""
    ls, _ = build_su2()
    delta = float(delta)

    def h(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)).copy()

    def gamma(x):
        x = np.asarray(x, dtype=float)
        L = _warped_L(x)
        return np.swapaxes(L, -1, -2) @ L + delta * np.eye(3)

    def A(x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 3))
        out[..., 0, 0] = 0.3 * np.sin(x2)
        out[..., 0, 1] = 0.2 * np.cos(x1)
        out[..., 0, 2] = 0.25 * np.sin(x1 + x2)
        out[..., 1, 0] = 0.15 * np.cos(x2)
        out[..., 1, 1] = 0.35 * np.sin(x1)
        out[..., 1, 2] = 0.2 * np.cos(x1 - x2)
        return out

    return KKBundle(2, ls, h, gamma, A, np.zeros(2), np.full(2, 2 * np.pi), (True, True), label="warped-su2")


def warped_u1_line(eps: float = 0.1, power: int = 1) -> KKBundle:
    """Line base with U(1) fibre and ``gamma = exp(2 eps x^power)``.

    With ``A = 0`` and ``h = 1`` the total space is a warped product; for
    ``power = 1`` it is a hyperbolic plane of curvature ``-eps^2``.
    """
    ls, _ = build_abelian(1)
    eps, power = float(eps), int(power)
    half = min(10.0, (10.0 / max(abs(eps), 1e-12)) ** (1.0 / power))

    def h(x):
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1] + (1, 1))

    def gamma(x):
        x = np.asarray(x, dtype=float)
        return np.exp(2 * eps * x[..., :1] ** power)[..., None]

    def A(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (1, 1))

    return KKBundle(1, ls, h, gamma, A, np.array([-half]), np.array([half]), (False,), label="warped-u1-line")


def flat_circle_u1(length: float = 2 * np.pi, gamma0: float = 1.0) -> KKBundle:
    """Flat circle times U(1) with constant fibre metric (reduction sanity case)."""
    ls, _ = build_abelian(1)

    def h(x):
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1] + (1, 1))

    def gamma(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1] + (1, 1), float(gamma0))

    def A(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (1, 1))

    return KKBundle(1, ls, h, gamma, A, np.zeros(1), np.array([float(length)]), (True,), label="flat-circle-u1")


@dataclass(frozen=True)
class GeometryCatalogEntry:
    name: str
    builder: Callable
    kind: str
    description: str
    reference: dict = field(default_factory=dict)


CATALOG = {
    e.name: e
    for e in [
        GeometryCatalogEntry("flat-torus", flat_torus, "metric", "flat n-torus, period 2 pi", {"scalar": 0.0}),
        GeometryCatalogEntry("s2", round_s2, "metric", "round 2-sphere of radius r", {"scalar": "2/r^2"}),
        GeometryCatalogEntry("s3", round_s3, "metric", "round 3-sphere of radius r, hyperspherical chart", {"scalar": "6/r^2"}),
        GeometryCatalogEntry("polar-plane", polar_plane, "metric", "flat plane in polar coordinates", {"scalar": 0.0}),
        GeometryCatalogEntry(
            "hopf", hopf, "bundle", "S^3 -> S^2(1/2) as a U(1) bundle, monopole connection, gamma = 1",
            {"R_P": 6.0, "R_M": 8.0, "R_G": 0.0, "F2_term": 2.0, "j_norm2": 0.0, "J_tilde": 0.0},
        ),
        GeometryCatalogEntry(
            "trivial-su2-product", trivial_su2_product, "bundle", "flat torus base x SU(2), constant bi-invariant gamma",
            {"J_tilde": 0.0, "R_G": "3/(2 scale)"},
        ),
        GeometryCatalogEntry(
            "warped-su2", warped_su2, "bundle", "flat 2-torus base x SU(2), gamma = L^T L + delta, non-abelian A", {},
        ),
        GeometryCatalogEntry(
            "warped-u1-line", warped_u1_line, "bundle", "line x U(1), gamma = exp(2 eps x^power)",
            {"J_tilde": "eps^2 for power 1; 4 + 4x^2 for eps 1, power 2"},
        ),
        GeometryCatalogEntry("flat-circle-u1", flat_circle_u1, "bundle", "flat circle x U(1), constant gamma", {"J_tilde": 0.0}),
    ]
}

_NAME_RE = re.compile(r"^\s*([A-Za-z0-9_\-]+?)\s*(?:\((.*)\))?\s*$")


def parse_name(spec: str):
    m = _NAME_RE.match(spec)
    if not m:
        raise KeyError(f"malformed geometry name {spec!r}")
    name, args = m.group(1), m.group(2)
    values = []
    if args and args.strip():
        for tok in args.split(","):
            tok = tok.strip()
            values.append(int(tok) if re.fullmatch(r"[+-]?\d+", tok) else float(tok))
    return name, values


def lookup(spec: str):
    """Build the geometry named by ``spec``; returns ``(entry, object)``."""
    name, args = parse_name(spec)
    if name not in CATALOG:
        raise KeyError(f"unknown geometry {name!r}")
    entry = CATALOG[name]
    return entry, entry.builder(*args)


def _sample_box(lower, upper, periodic, n, rng, margin):
    lo = np.where(np.isfinite(lower), lower, -5.0)
    hi = np.where(np.isfinite(upper), upper, 5.0)
    periodic = np.asarray(periodic, dtype=bool)
    lo = np.where(periodic, lo, lo + margin)
    hi = np.where(periodic, hi, hi - margin)
    return lo + (hi - lo) * rng.random((n, len(lo)))


def random_points(obj, n: int, seed: int = 0, margin: float = 0.05) -> np.ndarray:
    """Random interior points of a metric chart or of a bundle's base chart."""
    rng = np.random.default_rng(seed)
    if isinstance(obj, KKBundle):
        return _sample_box(obj.base_lower, obj.base_upper, obj.base_periodic, n, rng, margin)
    return _sample_box(obj.lower, obj.upper, obj.periodic, n, rng, margin)


def self_check(obj, n: int = 10, seed: int = 0) -> None:
    """Symmetry / positivity checks of a catalog object at random points."""
    if isinstance(obj, KKBundle):
        x = random_points(obj, n, seed)
        check_metric(obj.base_metric, x)
        check_metric(obj.fibre_metric, x)
        total = assemble_kk_metric(obj)
        a = 0.9 * _sample_box(obj.chart.lower, obj.chart.upper, obj.chart.periodic, n, np.random.default_rng(seed + 1), 0.0)
        check_metric(total, np.concatenate([x, a], axis=-1), sym_tol=1e-13)
    else:
        check_metric(obj, random_points(obj, n, seed))
