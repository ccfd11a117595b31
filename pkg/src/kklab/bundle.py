"""Kaluza–Klein geometry of a principal bundle in adapted coordinates.

A bundle is given by its reduced data ``(h_ij, gamma_mn, A^m_i)`` on the base
chart together with a group chart.  Everything fibre-dependent is evaluated
at the identity ``a = e`` where ``rho = 1``; all scalars below are independent
of the fibre point.

Index layout: ``A[i, m] = A^m_i``, ``F[i, j, m] = F^m_ij``,
``Dgamma[i, m, n] = D_i gamma_mn``, ``j[n, a, b] = j^n_ab``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import chart as cc
from .chart import ChartedMetric, FDScheme, SignConvention, invert_spd
from .errors import SingularMetric
from .lie import LieStructure, orbit_scalar_curvature
from .params import PhysicalParams

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KKBundle:
    base_dim: int
    group: LieStructure
    h: ArrayFn
    gamma: ArrayFn
    A: ArrayFn
    base_lower: np.ndarray
    base_upper: np.ndarray
    base_periodic: tuple = ()
    V_tilde: Optional[ArrayFn] = None
    label: str = ""

    @property
    def chart(self):
        return self.group.chart

    @property
    def dim_g(self) -> int:
        return self.group.dim_g

    @property
    def total_dim(self) -> int:
        return self.base_dim + self.dim_g

    @property
    def base_metric(self) -> ChartedMetric:
        return ChartedMetric(
            self.base_dim, self.h, self.base_lower, self.base_upper,
            self.base_periodic or (False,) * self.base_dim, f"{self.label}:base",
        )

    @property
    def fibre_metric(self) -> ChartedMetric:
        """``gamma`` viewed as a matrix field on the base chart (domain checks only)."""
        return ChartedMetric(
            self.base_dim, self.gamma, self.base_lower, self.base_upper,
            self.base_periodic or (False,) * self.base_dim, f"{self.label}:gamma",
        )

    def identity_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = np.broadcast_to(self.chart.coords_at_identity, x.shape[:-1] + (self.dim_g,))
        return np.concatenate([x, e], axis=-1)

    def potential(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.V_tilde is None:
            return np.zeros(x.shape[:-1])
        return np.asarray(self.V_tilde(x), dtype=float)


def assemble_kk_metric(b: KKBundle) -> ChartedMetric:
    """Total-space metric on the ``(x, a)`` chart.

    Blocks ``h + A gamma A^T``, ``A gamma u_bar`` and ``u_bar^T gamma u_bar``;
    the inverse uses the horizontal frame ``d_i - A^m_i v_bar_m``.
    """
    n = b.base_dim
    gc = b.chart

    def metric(q):
        q = np.asarray(q, dtype=float)
        x, a = q[..., :n], q[..., n:]
        h, g, A = b.h(x), b.gamma(x), b.A(x)
        u = gc.u_bar(a)
        Ag = A @ g
        top = h + Ag @ np.swapaxes(A, -1, -2)
        off = Ag @ u
        fib = np.swapaxes(u, -1, -2) @ g @ u
        return np.concatenate(
            [np.concatenate([top, off], axis=-1), np.concatenate([np.swapaxes(off, -1, -2), fib], axis=-1)],
            axis=-2,
        )

    def inverse(q):
        q = np.asarray(q, dtype=float)
        x, a = q[..., :n], q[..., n:]
        hinv = invert_spd(b.h(x))
        ginv = invert_spd(b.gamma(x))
        A = b.A(x)
        vb = gc.v_bar(a)
        At = np.swapaxes(A, -1, -2)
        off = -hinv @ A @ np.swapaxes(vb, -1, -2)
        fib = vb @ (ginv + At @ hinv @ A) @ np.swapaxes(vb, -1, -2)
        return np.concatenate(
            [np.concatenate([hinv, off], axis=-1), np.concatenate([np.swapaxes(off, -1, -2), fib], axis=-1)],
            axis=-2,
        )

    def recharter(q):
        q = np.array(q, dtype=float, copy=True)
        q[..., n:] = gc.canonical(q[..., n:])
        return q

    periodic = tuple(b.base_periodic or (False,) * n) + tuple(gc.periodic)
    return ChartedMetric(
        b.total_dim,
        metric,
        np.concatenate([b.base_lower, gc.lower]),
        np.concatenate([b.base_upper, gc.upper]),
        periodic,
        f"{b.label}:total",
        inverse_at=inverse,
        recharter=recharter,
    )


def _base_point(b: KKBundle, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != b.base_dim:
        raise ValueError(f"expected base points of dimension {b.base_dim}")
    b.base_metric.require_inside(x)
    return x


def _fibre_inverse(g):
    g = np.asarray(g, dtype=float)
    try:
        cc.check_conditioning(g)
    except SingularMetric as exc:
        raise SingularMetric(f"orbit metric gamma degenerate: {exc}") from exc
    return invert_spd(g)


def field_strength(b: KKBundle, x, s: FDScheme = FDScheme()) -> np.ndarray:
    """``F^a_im = d_i A^a_m - d_m A^a_i + c^a_mn A^m_i A^n_m``, shape (n, n, g)."""
    x = _base_point(b, x)
    A, dA, _ = cc.stencil_derivatives(b.A, x, s, b.base_metric, second=False)
    lead = x.ndim - 1
    quad = np.einsum("amn,...im,...jn->...ija", b.group.c, A, A)
    f = dA - np.swapaxes(dA, lead, lead + 1) + quad
    return 0.5 * (f - np.swapaxes(f, lead, lead + 1))


def f_squared_term(b: KKBundle, x, F=None, s: FDScheme = FDScheme()) -> float:
    """``1/4 gamma_mn F^m_ij F^n_kl h^ik h^jl``."""
    x = _base_point(b, x)
    F = field_strength(b, x, s) if F is None else F
    hinv = invert_spd(b.h(x))
    return 0.25 * float(np.einsum("mn,ijm,kln,ik,jl->", b.gamma(x), F, F, hinv, hinv))


def _gamma_jet(b: KKBundle, x, s: FDScheme, second: bool):
    g, dg, ddg = cc.stencil_derivatives(b.gamma, x, s, b.base_metric, second=second)
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    if second:
        ddg = 0.5 * (ddg + np.swapaxes(ddg, -1, -2))
    return g, dg, ddg


def _covariant_from(c, A, g, dg):
    t = np.einsum("ksm,...is,...kn->...imn", c, A, g)
    return dg - t - np.swapaxes(t, -1, -2)


def covariant_D_gamma(b: KKBundle, x, s: FDScheme = FDScheme()) -> np.ndarray:
    """``D_i gamma_mn = d_i gamma_mn - c^k_sm A^s_i gamma_kn - c^k_sn A^s_i gamma_mk``."""
    x = _base_point(b, x)
    g, dg, _ = _gamma_jet(b, x, s, second=False)
    return _covariant_from(b.group.c, b.A(x), g, dg)


def second_fundamental_form(b: KKBundle, x, s: FDScheme = FDScheme()) -> np.ndarray:
    """Reduced second fundamental form ``j^n_ab = -1/2 h^ni D_i gamma_ab``."""
    x = _base_point(b, x)
    hinv = invert_spd(b.h(x))
    return -0.5 * np.einsum("ni,iab->nab", hinv, covariant_D_gamma(b, x, s))


class AmbientSFF(NamedTuple):
    j: np.ndarray          # (n, g, g) projected onto the base
    j_total: np.ndarray    # (N, g, g) Pi(nabla_K K) in total-space components
    orbit_metric: np.ndarray  # d_ab = K G K at (x, e)


def second_fundamental_form_ambient(b: KKBundle, x, s: FDScheme = FDScheme(), full: bool = False):
    """Second fundamental form from ``Pi(nabla_K K)`` in the total space.

    Uses the Christoffel symbols of the assembled metric at ``(x, e)`` and the
    Killing fields of the right action; an independent route to
    :func:`second_fundamental_form`.
    """
    x = _base_point(b, x)
    n, g = b.base_dim, b.dim_g
    total = assemble_kk_metric(b)
    q = b.identity_point(x)
    G, dG, _ = cc.metric_jet(total, q, s, second=False)
    gam = cc._christoffel_parts(G, dG)[2]

    def killing(points):
        points = np.asarray(points, dtype=float)
        v = b.chart.v(points[..., n:])
        zeros = np.zeros(points.shape[:-1] + (n, g))
        return np.concatenate([zeros, v], axis=-2)

    K, dK, _ = cc.stencil_derivatives(killing, q, s, total, second=False)
    nab = np.einsum("ca,ceb->eab", K, dK) + np.einsum("ecd,ca,db->eab", gam, K, K)
    sym = 0.5 * (nab + np.swapaxes(nab, 1, 2))
    klow = G @ K
    d = K.T @ klow
    dinv = _fibre_inverse(d)
    proj = np.eye(n + g) - K @ dinv @ klow.T
    j_total = np.einsum("ce,eab->cab", proj, sym)
    hinv = invert_spd(b.h(x))
    j = np.einsum("ni,ci,cab->nab", hinv, G[:, :n], j_total)
    if full:
        return AmbientSFF(j, j_total, d)
    return j


def j_norm_squared(b: KKBundle, x, j) -> float:
    """``h_kn gamma^am gamma^bn j^k_ab j^n_mn``."""
    ginv = _fibre_inverse(b.gamma(x))
    return float(np.einsum("kn,am,bv,kab,nmv->", b.h(x), ginv, ginv, j, j))


def dgamma_squared_term(b: KKBundle, x, D) -> float:
    """``1/4 h^ij gamma^ms gamma^nk D_i gamma_mn D_j gamma_sk``."""
    ginv = _fibre_inverse(b.gamma(x))
    hinv = invert_spd(b.h(x))
    return 0.25 * float(np.einsum("ij,ms,nk,imn,jsk->", hinv, ginv, ginv, D, D))


class JacobianValue(NamedTuple):
    J: np.ndarray | float
    J_tilde: np.ndarray | float


def log_det_gamma(b: KKBundle, x) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(b.gamma(np.asarray(x, dtype=float)))
    if np.any(sign <= 0):
        raise SingularMetric("det gamma is not positive")
    return logdet


def jacobian_direct(b: KKBundle, x, s: FDScheme = FDScheme(), params: PhysicalParams = PhysicalParams()) -> JacobianValue:
    """Reduction Jacobian from derivatives of ``ln det gamma``.

    ``J~ = Lap_M ln gamma + 1/4 h^ni d_n ln gamma d_i ln gamma`` and
    ``J = -(mu^2 kappa / 8) J~``.  Works on one point or a batch ``(N, n)``.
    """
    x = _base_point(b, x)
    base = b.base_metric
    f = lambda q: log_det_gamma(b, q)  # noqa: E731
    lap = cc.laplace_beltrami(base, f, x, s)
    grad = cc.gradient(f, x, s, base)
    hinv = base.inverse(x)
    jt = lap + 0.25 * np.einsum("...i,...ij,...j->...", grad, hinv, grad)
    if np.ndim(jt) == 0:
        jt = float(jt)
    return JacobianValue(-params.diffusion / 8.0 * jt, jt)


def expanded_gamma_lines(b: KKBundle, x, s: FDScheme = FDScheme()) -> float:
    """The ``gamma``-derivative terms of the expanded curvature identity.

    ``1/4 h^ij tr(g^-1 d_i g) tr(g^-1 d_j g) - h^ij tr(g^-1 d_i g g^-1 d_j g)
    + h^ij g^mn (d_i d_j g_mn - Gamma^k_ij d_k g_mn)``.
    """
    x = _base_point(b, x)
    g, dg, ddg = _gamma_jet(b, x, s, second=True)
    ginv = _fibre_inverse(g)
    hinv = invert_spd(b.h(x))
    gam_h = cc.christoffel(b.base_metric, x, s)
    tr = np.einsum("mn,inm->i", ginv, dg)
    m1 = np.einsum("ms,imn->isn", ginv, dg)
    t1 = 0.25 * hinv @ tr @ tr
    t2 = -np.einsum("ij,isn,jns->", hinv, m1, m1)
    hess = ddg - np.einsum("kij,kmn->ijmn", gam_h, dg)
    t3 = np.einsum("ij,mn,ijmn->", hinv, ginv, hess)
    return float(t1 + t2 + t3)


def horizontal_basis_terms(b: KKBundle, x, s: FDScheme = FDScheme()) -> float:
    """Curvature-identity terms written in the horizontal-lift basis at ``a = e``.

    ``1/4 h^ij g^ab g^mn [D_i g_am D_j g_bn + D_i g_ab D_j g_mn]
    + h^ij nabla_i (g^ab D_j g_ab)``; the divergence uses nested differences.
    """
    x = _base_point(b, x)
    base = b.base_metric
    c = b.group.c
    D = covariant_D_gamma(b, x, s)
    ginv = _fibre_inverse(b.gamma(x))
    hinv = invert_spd(b.h(x))
    quad = 0.25 * (
        np.einsum("ij,ab,mn,iam,jbn->", hinv, ginv, ginv, D, D)
        + np.einsum("ij,ab,mn,iab,jmn->", hinv, ginv, ginv, D, D)
    )

    def trace_D(q):
        g, dg, _ = cc.stencil_derivatives(b.gamma, q, s, base, second=False)
        Dq = _covariant_from(c, b.A(q), g, dg)
        return np.einsum("...ab,...iab->...i", invert_spd(g), Dq)

    def flux(q):
        h = b.h(q)
        return np.sqrt(np.linalg.det(h))[..., None] * np.einsum("...ij,...j->...i", invert_spd(h), trace_D(q))

    _, dflux, _ = cc.stencil_derivatives(flux, x, s, base, second=False)
    div = np.trace(dflux) / np.sqrt(np.linalg.det(b.h(x)))
    return float(quad + div)


@dataclass
class DecompositionReport:
    """Every term of the curvature identity at one base point.

    ``residual`` is the identity residual for this report's convention:
    the expanded identity ``R_P - (R_M + R_G + F2 + Dg2 + lines)`` in the
    negative convention, and ``R_P - (R_M + R_G - F2 - |j|^2 - J~)`` in the
    positive one.  Both raw residuals are kept as separate fields.
    """

    point: list
    R_P: float
    R_M: float
    R_G: float
    F2_term: float
    Dgamma2_term: float
    j_norm2: float
    J_tilde_direct: float
    J_tilde_geometric: float
    residual: float
    convention: str
    expanded_gamma_lines: float = 0.0
    expanded_residual: float = 0.0
    remark_residual: float = 0.0

    FIELDS = (
        "point", "R_P", "R_M", "R_G", "F2_term", "Dgamma2_term", "j_norm2",
        "J_tilde_direct", "J_tilde_geometric", "residual", "convention",
        "expanded_gamma_lines", "expanded_residual", "remark_residual",
    )

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> list:
        d = self.to_dict()
        d["point"] = " ".join(repr(float(v)) for v in self.point)
        return [d[k] for k in self.FIELDS]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DecompositionReport.FIELDS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def _geometric_terms(b: KKBundle, x, s: FDScheme, convention: SignConvention) -> dict:
    convention = SignConvention(convention)
    total = assemble_kk_metric(b)
    R_P = cc.curvature_pack(total, b.identity_point(x), s, convention).scalar
    R_M = cc.curvature_pack(b.base_metric, x, s, convention).scalar
    R_G = orbit_scalar_curvature(b.group, b.gamma(x), convention)
    F2 = f_squared_term(b, x, field_strength(b, x, s))
    D = covariant_D_gamma(b, x, s)
    j = -0.5 * np.einsum("ni,iab->nab", invert_spd(b.h(x)), D)
    return dict(R_P=R_P, R_M=R_M, R_G=R_G, F2=F2, Dg2=dgamma_squared_term(b, x, D), j2=j_norm_squared(b, x, j))


def _jtilde_from_terms(t: dict, convention: SignConvention) -> float:
    if SignConvention(convention) is SignConvention.NEGATIVE:
        return t["R_P"] - t["R_M"] - t["R_G"] - t["F2"] - t["j2"]
    return t["R_M"] + t["R_G"] - t["F2"] - t["j2"] - t["R_P"]


def jacobian_geometric(b: KKBundle, x, s: FDScheme = FDScheme(), convention: SignConvention = SignConvention.POSITIVE) -> float:
    """``J~`` from curvatures, field strength and second fundamental form.

    The value does not depend on ``convention``; only the relation used to
    combine the convention-dependent curvatures does.
    """
    x = _base_point(b, x)
    return float(_jtilde_from_terms(_geometric_terms(b, x, s, convention), convention))


def decomposition_report(
    b: KKBundle,
    x,
    s: FDScheme = FDScheme(),
    convention: SignConvention = SignConvention.POSITIVE,
) -> DecompositionReport:
    convention = SignConvention(convention)
    x = _base_point(b, x)
    t = _geometric_terms(b, x, s, convention)
    jt_direct = jacobian_direct(b, x, s).J_tilde
    lines = expanded_gamma_lines(b, x, s)
    expanded = t["R_P"] - (t["R_M"] + t["R_G"] + t["F2"] + t["Dg2"] + lines)
    remark = t["R_P"] - (t["R_M"] + t["R_G"] - t["F2"] - t["j2"] - jt_direct)
    residual = expanded if convention is SignConvention.NEGATIVE else remark
    return DecompositionReport(
        point=[float(v) for v in np.atleast_1d(x)],
        R_P=t["R_P"], R_M=t["R_M"], R_G=t["R_G"], F2_term=t["F2"], Dgamma2_term=t["Dg2"],
        j_norm2=t["j2"], J_tilde_direct=float(jt_direct),
        J_tilde_geometric=float(_jtilde_from_terms(t, convention)),
        residual=float(residual), convention=convention.value,
        expanded_gamma_lines=lines, expanded_residual=float(expanded), remark_residual=float(remark),
    )
