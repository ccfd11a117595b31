"""Compact Lie groups in a coordinate chart.

Two families are built in: the tori ``U(1)^n`` and the SU(2) Lie algebra with
structure constants ``c^a_{mn} = eps_{amn}`` in exponential coordinates.  The
SU(2) chart is the ball ``|a| <= pi``; a chart point represents the pair
``{g, -g}``, i.e. the chart covers the adjoint group SO(3) = SU(2)/{+-1}.  All
local geometry (frames, curvature, structure constants) is that of SU(2).

Frame conventions (columns are vector fields, ``M[row, col] = M^row_col``):

``v_bar(a)``  right-invariant frame, ``d Phi^a(b, a) / d b^c`` at ``b = e``
``u_bar(a)``  its inverse, the right-invariant coframe
``v(a)``      left-invariant frame; these generate the right action and are
              the Killing vectors of any right-invariant metric
``rho(a)``    ``u_bar(a) @ v(a)``, the adjoint representation
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .chart import ChartedMetric, SignConvention, invert_spd
from .errors import InvalidStructure, OutOfDomain, SingularMetric

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GroupChart:
    dim: int
    v_bar: ArrayFn
    u_bar: ArrayFn
    v: ArrayFn
    rho: ArrayFn
    composition: Callable[[np.ndarray, np.ndarray], np.ndarray]
    inverse: ArrayFn
    canonical: ArrayFn
    embedding: ArrayFn
    lower: np.ndarray
    upper: np.ndarray
    periodic: tuple
    volume: float
    kind: str
    coords_at_identity: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.coords_at_identity is None:
            object.__setattr__(self, "coords_at_identity", np.zeros(self.dim))

    def in_chart(self, a) -> bool:
        a = np.asarray(a, dtype=float)
        free = ~np.array(self.periodic, dtype=bool)
        return bool(np.all((a[..., free] >= self.lower[free]) & (a[..., free] <= self.upper[free])))

    def haar_density(self, a) -> np.ndarray:
        """Normalized Haar density with respect to ``d^n a``."""
        return np.abs(np.linalg.det(self.u_bar(np.asarray(a, dtype=float)))) / self.volume


@dataclass(frozen=True)
class LieStructure:
    dim_g: int
    c: np.ndarray
    chart: Optional[GroupChart] = None
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        n = self.dim_g
        if c.shape != (n, n, n):
            raise InvalidStructure("structure constants must have shape (n, n, n)")
        if not np.array_equal(c, -np.swapaxes(c, 1, 2)):
            raise InvalidStructure("structure constants are not antisymmetric")
        if jacobi_residual(c) > 1e-12:
            raise InvalidStructure("Jacobi identity violated")
        if np.max(np.abs(np.einsum("kmk->m", c)), initial=0.0) > 1e-12:
            raise InvalidStructure("group is not unimodular (c^k_mk != 0)")
        object.__setattr__(self, "c", c)


def jacobi_residual(c) -> float:
    """Max |c^a_bs c^s_mn + c^a_ms c^s_nb + c^a_ns c^s_bm|."""
    c = np.asarray(c, dtype=float)
    t = np.einsum("abs,smn->abmn", c, c)
    total = t + np.transpose(t, (0, 2, 3, 1)) + np.transpose(t, (0, 3, 1, 2))
    return float(np.max(np.abs(total), initial=0.0))


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        eps[i, j, k] = s
    return eps


# -- SU(2) closed forms -----------------------------------------------------

def _hat(a):
    a = np.asarray(a, dtype=float)
    k = np.zeros(a.shape + (3,))
    x, y, z = a[..., 0], a[..., 1], a[..., 2]
    k[..., 0, 1], k[..., 0, 2] = -z, y
    k[..., 1, 0], k[..., 1, 2] = z, -x
    k[..., 2, 0], k[..., 2, 1] = -y, x
    return k


def _coeffs(theta):
    """sin t/t, (1-cos t)/t^2, (t-sin t)/t^3 and 1/t^2 - cot(t/2)/(2t)."""
    t = np.asarray(theta, dtype=float)
    small = t < 5e-2
    ts = np.where(small, 1.0, t)
    t2 = t * t
    a = np.where(small, 1 - t2 / 6 + t2**2 / 120 - t2**3 / 5040, np.sin(ts) / ts)
    b = np.where(small, 0.5 - t2 / 24 + t2**2 / 720 - t2**3 / 40320, (1 - np.cos(ts)) / ts**2)
    c = np.where(small, 1 / 6 - t2 / 120 + t2**2 / 5040 - t2**3 / 362880, (ts - np.sin(ts)) / ts**3)
    d = np.where(
        small,
        1 / 12 + t2 / 720 + t2**2 / 30240 + t2**3 / 1209600,
        1 / ts**2 - 1 / (2 * ts * np.tan(ts / 2)),
    )
    return a, b, c, d


def _series(a, which):
    a = np.asarray(a, dtype=float)
    k = _hat(a)
    k2 = k @ k
    ca, cb, cc, cd = (x[..., None, None] for x in _coeffs(np.linalg.norm(a, axis=-1)))
    eye = np.eye(3)
    if which == "Ad":
        return eye + ca * k + cb * k2
    if which == "Jl":
        return eye + cb * k + cc * k2
    if which == "Jl_inv":
        return eye - 0.5 * k + cd * k2
    if which == "Jr_inv":
        return eye + 0.5 * k + cd * k2
    raise ValueError(which)


def su2_quaternion(a) -> np.ndarray:
    """Unit quaternion of ``exp(a^k X_k)`` with ``X_k = -i sigma_k / 2``."""
    a = np.asarray(a, dtype=float)
    th = np.linalg.norm(a, axis=-1)
    w = np.cos(th / 2)
    s = 0.5 * np.sinc(th / (2 * np.pi))
    return np.concatenate([w[..., None], s[..., None] * a], axis=-1)


def _qmul(p, q):
    w1, x1, y1, z1 = np.moveaxis(p, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def su2_log(q) -> np.ndarray:
    """Chart point (``|a| <= pi``) of the unit quaternion ``q`` (mod sign)."""
    q = np.asarray(q, dtype=float)
    q = np.where(q[..., :1] < 0, -q, q)
    w, vec = q[..., 0], q[..., 1:]
    s = np.linalg.norm(vec, axis=-1)
    th = 2 * np.arctan2(s, w)
    factor = np.where(s > 1e-300, th / np.where(s > 1e-300, s, 1.0), 2.0)
    return factor[..., None] * vec


def build_su2():
    """SU(2) with ``c = eps`` in exponential coordinates."""
    chart = GroupChart(
        dim=3,
        v_bar=lambda a: _series(a, "Jl_inv"),
        u_bar=lambda a: _series(a, "Jl"),
        v=lambda a: _series(a, "Jr_inv"),
        rho=lambda a: _series(a, "Ad"),
        composition=lambda a, b: su2_log(_qmul(su2_quaternion(a), su2_quaternion(b))),
        inverse=lambda a: -np.asarray(a, dtype=float),
        canonical=lambda a: su2_log(su2_quaternion(a)),
        embedding=su2_quaternion,
        lower=np.full(3, -np.pi),
        upper=np.full(3, np.pi),
        periodic=(False, False, False),
        # int_{|a|<pi} 2(1 - cos|a|)/|a|^2 d^3a
        volume=8 * np.pi**2,
        kind="su2",
    )
    return LieStructure(3, levi_civita(), chart, "su2"), chart


def _wrap_angle(a):
    return np.mod(np.asarray(a, dtype=float) + np.pi, 2 * np.pi) - np.pi


def build_abelian(n: int = 1):
    """``U(1)^n`` with angle coordinates in ``[-pi, pi)``."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def eye(a):
        a = np.asarray(a, dtype=float)
        return np.broadcast_to(np.eye(n), a.shape[:-1] + (n, n)).copy()

    chart = GroupChart(
        dim=n,
        v_bar=eye,
        u_bar=eye,
        v=eye,
        rho=eye,
        composition=lambda a, b: _wrap_angle(np.asarray(a, dtype=float) + np.asarray(b, dtype=float)),
        inverse=lambda a: _wrap_angle(-np.asarray(a, dtype=float)),
        canonical=_wrap_angle,
        embedding=lambda a: np.asarray(a, dtype=float),
        lower=np.full(n, -np.pi),
        upper=np.full(n, np.pi),
        periodic=(True,) * n,
        volume=(2 * np.pi) ** n,
        kind="torus",
    )
    label = "u1" if n == 1 else f"torus{n}"
    return LieStructure(n, np.zeros((n, n, n)), chart, label), chart


def group_by_name(name: str):
    name = name.strip().lower()
    if name == "su2":
        return build_su2()
    if name == "u1":
        return build_abelian(1)
    if name.startswith("torus"):
        return build_abelian(int(name[5:]))
    raise KeyError(f"unknown group {name!r}")


# -- operations -------------------------------------------------------------

def orbit_scalar_curvature(ls: LieStructure, gamma, convention: SignConvention = SignConvention.POSITIVE) -> float:
    """Scalar curvature of a group orbit with (right-)invariant metric ``gamma``.

    Closed form ``1/2 g^{mn} c^s_ma c^a_ns + 1/4 g_ms g^{ab} g^{en} c^m_ea c^s_nb``,
    which is the curvature in the negative-spheres convention; the positive
    convention returns its negative.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (ls.dim_g, ls.dim_g):
        raise ValueError("gamma has the wrong shape")
    if np.linalg.cond(gamma) > 1e12 or np.any(np.linalg.eigvalsh(0.5 * (gamma + gamma.T)) <= 0):
        raise SingularMetric("orbit metric is not invertible")
    ginv = invert_spd(gamma)
    c = ls.c
    killing = np.einsum("sma,ans->mn", c, c)
    t1 = 0.5 * np.einsum("mn,mn->", ginv, killing)
    t2 = 0.25 * np.einsum("ms,ab,en,mea,snb->", gamma, ginv, ginv, c, c)
    value = float(t1 + t2)
    return value if SignConvention(convention) is SignConvention.NEGATIVE else -value


def orbit_metric(gc: GroupChart, gamma) -> ChartedMetric:
    """The right-invariant metric ``u_bar^T gamma u_bar`` on the group chart."""
    gamma = np.asarray(gamma, dtype=float)

    def metric(a):
        u = gc.u_bar(a)
        return np.swapaxes(u, -1, -2) @ gamma @ u

    return ChartedMetric(gc.dim, metric, gc.lower, gc.upper, gc.periodic, "orbit")


@dataclass(frozen=True)
class HaarQuadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f) -> float:
        vals = np.asarray(f(self.nodes))
        return np.tensordot(self.weights, vals, axes=(0, 0))


def haar_quadrature(gc: GroupChart, resolution: int) -> HaarQuadrature:
    """Deterministic product rule for the normalized Haar measure."""
    if resolution < 1:
        raise ValueError("resolution must be positive")
    if gc.kind == "torus":
        x = -np.pi + 2 * np.pi * np.arange(resolution) / resolution
        grids = np.meshgrid(*([x] * gc.dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        weights = np.full(len(nodes), 1.0 / len(nodes))
        return HaarQuadrature(nodes, weights)
    if gc.kind == "su2":
        xr, wr = np.polynomial.legendre.leggauss(resolution)
        r = 0.5 * np.pi * (xr + 1)
        wr = 0.5 * np.pi * wr * (1 - np.cos(r)) / np.pi
        u, wu = np.polynomial.legendre.leggauss(resolution)
        wu = wu / 2
        n_phi = 2 * resolution
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        wphi = np.full(n_phi, 1.0 / n_phi)
        R, U, P = np.meshgrid(r, u, phi, indexing="ij")
        W = wr[:, None, None] * wu[None, :, None] * wphi[None, None, :]
        st = np.sqrt(1 - U**2)
        nodes = np.stack([R * st * np.cos(P), R * st * np.sin(P), R * U], axis=-1).reshape(-1, 3)
        weights = W.ravel()
        return HaarQuadrature(nodes, weights / weights.sum())
    raise ValueError(f"no quadrature for group kind {gc.kind!r}")


def killing_vectors_adapted(gc: GroupChart, a) -> np.ndarray:
    """Fibre components ``K[s, alpha] = K^s_alpha`` of the right-action generators."""
    a = np.asarray(a, dtype=float)
    if not gc.in_chart(a):
        raise OutOfDomain("group point outside chart")
    return gc.v(a)


# -- invariant smoothing bumps on the group ---------------------------------

@dataclass(frozen=True)
class ClassBump:
    """Smooth class function on the group, normalized to Haar mass one.

    ``su2``: ``exp(beta * <q_node, q>^2) / Z`` (the squared overlap is
    ``cos^2`` of half the relative rotation angle).  ``torus``: product of von
    Mises factors ``exp(beta cos(a_i - node_i)) / I0(beta)``.
    """

    kind: str
    beta: float
    norm: float

    def relative_values(self, emb_nodes, emb_points):
        """Bump value for every (point, node) pair, shape (N, K)."""
        if self.kind == "su2":
            overlap = emb_points @ emb_nodes.T
            return np.exp(self.beta * overlap**2) / self.norm
        diff = emb_points[:, None, :] - emb_nodes[None, :, :]
        return np.exp(self.beta * np.cos(diff).sum(-1)) / self.norm


def class_bump(gc: GroupChart, beta: float) -> ClassBump:
    if gc.kind == "su2":
        # relative angle w in [0, pi]; Haar density (1 - cos w)/pi; overlap^2 = cos^2(w/2)
        z, _ = integrate.quad(lambda w: np.exp(beta * np.cos(w / 2) ** 2) * (1 - np.cos(w)) / np.pi, 0, np.pi,
                              epsabs=1e-14, epsrel=1e-13)
        return ClassBump("su2", beta, z)
    if gc.kind == "torus":
        return ClassBump("torus", beta, float(special.i0(beta)) ** gc.dim)
    raise ValueError(gc.kind)
