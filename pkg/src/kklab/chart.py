"""Pointwise tensor calculus on a single coordinate chart.

Metrics are plain callables mapping an array of points with shape
``(..., dim)`` to matrices ``(..., dim, dim)``.  All derivatives are central
finite differences; a stencil that would leave a non-periodic axis raises
:class:`~kklab.errors.OutOfDomain` instead of falling back to one-sided
differences, so the truncation error stays uniform over the domain.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import OutOfDomain, SingularMetric

COND_LIMIT = 1e12

ArrayFn = Callable[[np.ndarray], np.ndarray]


class SignConvention(str, enum.Enum):
    """Overall sign of the Riemann tensor.

    ``POSITIVE`` is the usual convention in which round spheres have positive
    scalar curvature.  ``NEGATIVE`` contracts ``R_{AMC}{}^M`` of
    ``G(Omega(X, Y) Z, Z')``, which flips every curvature scalar.
    """

    POSITIVE = "positive"
    NEGATIVE = "negative"

    @property
    def sign(self) -> float:
        return 1.0 if self is SignConvention.POSITIVE else -1.0

    @property
    def other(self) -> "SignConvention":
        if self is SignConvention.POSITIVE:
            return SignConvention.NEGATIVE
        return SignConvention.POSITIVE


@dataclass(frozen=True)
class ChartedMetric:
    """A metric field ``G_AB`` on a box-shaped coordinate chart.

    ``lower``/``upper`` bound each axis (``±inf`` allowed on non-periodic
    axes).  Periodic axes use ``[lower, upper)`` as their period.  The
    optional ``inverse_at`` hook returns ``G^{AB}`` in closed form, and
    ``recharter`` maps points to a canonical representative when the chart
    carries a non-box identification (used by the diffusion code).
    """

    dim: int
    metric_at: ArrayFn
    lower: np.ndarray
    upper: np.ndarray
    periodic: tuple = ()
    label: str = ""
    inverse_at: Optional[ArrayFn] = None
    recharter: Optional[ArrayFn] = None

    def __post_init__(self):
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,)).copy()
        periodic = tuple(bool(v) for v in self.periodic) or (False,) * self.dim
        if len(periodic) != self.dim:
            raise ValueError("periodic flags must have one entry per axis")
        if np.any(upper <= lower):
            raise ValueError("empty chart domain")
        for k in range(self.dim):
            if periodic[k] and not (np.isfinite(lower[k]) and np.isfinite(upper[k])):
                raise ValueError("periodic axes need a finite period")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "periodic", periodic)

    def __call__(self, points) -> np.ndarray:
        return np.asarray(self.metric_at(np.asarray(points, dtype=float)), dtype=float)

    @property
    def extent(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def periodic_mask(self) -> np.ndarray:
        return np.array(self.periodic, dtype=bool)

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Reduce periodic coordinates into ``[lower, upper)``."""
        points = np.array(points, dtype=float, copy=True)
        mask = self.periodic_mask
        if mask.any():
            lo, span = self.lower[mask], self.extent[mask]
            points[..., mask] = lo + np.mod(points[..., mask] - lo, span)
        return points

    def inside(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask: strictly inside every non-periodic axis."""
        points = np.asarray(points, dtype=float)
        free = ~self.periodic_mask
        if not free.any():
            return np.ones(points.shape[:-1], dtype=bool)
        sub = points[..., free]
        return np.all((sub > self.lower[free]) & (sub < self.upper[free]), axis=-1)

    def require_inside(self, points: np.ndarray) -> None:
        if not np.all(self.inside(points)):
            raise OutOfDomain(f"point or stencil outside the domain of {self.label or 'metric'}")

    def inverse(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.inverse_at is not None:
            return np.asarray(self.inverse_at(points), dtype=float)
        return invert_spd(self(points))


@dataclass(frozen=True)
class FDScheme:
    """Central finite-difference settings."""

    step: float | Sequence[float] = 1e-3
    order: int = 4
    richardson: bool = False

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError("order must be 2 or 4")
        if np.any(np.asarray(self.step, dtype=float) <= 0):
            raise ValueError("step must be positive")

    def steps(self, dim: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.step, dtype=float), (dim,)).copy()

    def validate_for(self, m: ChartedMetric) -> None:
        steps = self.steps(m.dim)
        ext = m.extent
        finite = np.isfinite(ext)
        if np.any(steps[finite] >= ext[finite] / 10):
            raise ValueError("finite-difference step must be below a tenth of the domain extent")


@dataclass
class CurvaturePack:
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    convention: SignConvention = SignConvention.POSITIVE
    metric: Optional[np.ndarray] = field(default=None, repr=False)


def invert_spd(g: np.ndarray) -> np.ndarray:
    """Inverse by LU solve with partial pivoting, batched over leading axes."""
    g = np.asarray(g, dtype=float)
    eye = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    try:
        return np.linalg.solve(g, eye)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(str(exc)) from exc


def check_conditioning(g: np.ndarray, limit: float = COND_LIMIT) -> None:
    """Raise SingularMetric unless every matrix in ``g`` is SPD with cond <= limit."""
    g = np.asarray(g, dtype=float)
    sym = 0.5 * (g + np.swapaxes(g, -1, -2))
    if not np.all(np.isfinite(sym)):
        raise SingularMetric("non-finite metric component")
    eig = np.linalg.eigvalsh(sym)
    lo, hi = eig[..., 0], eig[..., -1]
    if np.any(lo <= 0):
        raise SingularMetric("metric is not positive definite")
    if np.any(hi / lo > limit):
        raise SingularMetric(f"metric condition number exceeds {limit:g}")


# -- stencils ---------------------------------------------------------------

_FIRST = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}
_SECOND = {
    2: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0])),
    4: (np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
}


@functools.lru_cache(maxsize=64)
def _stencil(dim: int, order: int, second: bool):
    """Offsets (in units of step) and coefficient tables for all derivatives.

    Returns ``offsets`` (K, dim), ``c1`` (dim, K) and ``c2`` (dim, dim, K); the
    coefficient tables still have to be divided by ``h_a`` resp. ``h_a h_b``.
    """
    rows: dict[tuple, int] = {}

    def idx(vec):
        key = tuple(vec)
        if key not in rows:
            rows[key] = len(rows)
        return rows[key]

    zero = [0.0] * dim
    idx(zero)
    entries1 = []
    n1, w1 = _FIRST[order]
    for a in range(dim):
        for s, w in zip(n1, w1):
            v = list(zero)
            v[a] = s
            entries1.append((a, idx(v), w))
    entries2 = []
    if second:
        n2, w2 = _SECOND[order]
        for a in range(dim):
            for s, w in zip(n2, w2):
                v = list(zero)
                v[a] = s
                entries2.append((a, a, idx(v), w))
            for b in range(a + 1, dim):
                for s, ws in zip(n1, w1):
                    for t, wt in zip(n1, w1):
                        v = list(zero)
                        v[a], v[b] = s, t
                        k = idx(v)
                        entries2.append((a, b, k, ws * wt))
                        entries2.append((b, a, k, ws * wt))
    K = len(rows)
    offsets = np.zeros((K, dim))
    for key, k in rows.items():
        offsets[k] = key
    c1 = np.zeros((dim, K))
    for a, k, w in entries1:
        c1[a, k] += w
    c2 = np.zeros((dim, dim, K))
    for a, b, k, w in entries2:
        c2[a, b, k] += w
    return offsets, c1, c2


def _raw_derivatives(fn, p, h, order, second, metric):
    dim = p.shape[-1]
    offsets, c1, c2 = _stencil(dim, order, second)
    pts = p[..., None, :] + offsets * h
    if metric is not None:
        metric.require_inside(pts)
        pts = metric.wrap(pts)
    vals = np.asarray(fn(pts))
    if vals.dtype.kind not in "fc":
        vals = vals.astype(float)
    lead = p.ndim - 1
    # vals: (..., K, *shape); move K to the front for contraction
    vals = np.moveaxis(vals, lead, 0)
    f0 = vals[0]
    # every stencil's weights sum to zero, so differencing against the centre
    # value is exact algebraically and makes constant fields give exact zeros
    vals = vals - f0
    d1 = np.tensordot(c1 / h[:, None], vals, axes=(1, 0))
    d2 = None
    if second:
        d2 = np.tensordot(c2 / (h[:, None, None] * h[None, :, None]), vals, axes=(2, 0))
    # put derivative axes right after the batch axes
    d1 = np.moveaxis(d1, 0, lead)
    if d2 is not None:
        d2 = np.moveaxis(np.moveaxis(d2, 0, lead), 0, lead + 1)
    return f0, d1, d2, pts


def stencil_derivatives(
    fn: ArrayFn,
    p,
    scheme: FDScheme,
    metric: Optional[ChartedMetric] = None,
    second: bool = True,
):
    """Value, gradient and Hessian of an array-valued field by central FD.

    ``p`` has shape ``(..., dim)``; ``fn`` must accept ``(..., K, dim)`` and
    return ``(..., K, *shape)``.  The results have shapes ``(..., *shape)``,
    ``(..., dim, *shape)`` and ``(..., dim, dim, *shape)``.  If ``metric`` is
    given, stencil points are checked against and wrapped into its domain.
    """
    p = np.asarray(p, dtype=float)
    h = scheme.steps(p.shape[-1])
    f0, d1, d2, _ = _raw_derivatives(fn, p, h, scheme.order, second, metric)
    if scheme.richardson:
        _, e1, e2, _ = _raw_derivatives(fn, p, h / 2, scheme.order, second, metric)
        k = 2.0**scheme.order
        d1 = (k * e1 - d1) / (k - 1)
        if second:
            d2 = (k * e2 - d2) / (k - 1)
    return f0, d1, d2


def gradient(fn: ArrayFn, p, scheme: FDScheme, metric: Optional[ChartedMetric] = None):
    return stencil_derivatives(fn, p, scheme, metric, second=False)[1]


def _sym(a, i, j):
    return 0.5 * (a + np.swapaxes(a, i, j))


def metric_jet(m: ChartedMetric, p, s: FDScheme, second: bool = True, check: bool = True):
    """``G``, ``dG[c,a,b] = d_c G_ab`` and ``ddG[c,e,a,b]`` at a single point."""
    p = np.asarray(p, dtype=float)
    if p.shape != (m.dim,):
        raise ValueError(f"expected a point of dimension {m.dim}")
    s.validate_for(m)
    m.require_inside(p)
    if check:
        h = s.steps(m.dim)
        offsets, _, _ = _stencil(m.dim, s.order, second)
        pts = p + offsets * h
        m.require_inside(pts)
        check_conditioning(m(m.wrap(pts)))
    g, dg, ddg = stencil_derivatives(m.metric_at, p, s, m, second=second)
    g = _sym(g, -1, -2)
    dg = _sym(dg, -1, -2)
    if second:
        ddg = _sym(_sym(ddg, -1, -2), 0, 1)
    return g, dg, ddg


def _christoffel_parts(g, dg):
    ginv = invert_spd(g)
    # X[d,b,c] = d_b G_dc + d_c G_db - d_d G_bc
    x = np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg
    x = _sym(x, 1, 2)
    gam = 0.5 * np.einsum("ad,dbc->abc", ginv, x)
    return ginv, x, gam


def christoffel(m: ChartedMetric, p, s: FDScheme = FDScheme()) -> np.ndarray:
    """Christoffel symbols ``Gamma[a,b,c] = Gamma^a_bc`` at ``p``."""
    g, dg, _ = metric_jet(m, p, s, second=False)
    return _christoffel_parts(g, dg)[2]


def curvature_from_jet(g, dg, ddg, convention: SignConvention = SignConvention.POSITIVE) -> CurvaturePack:
    """Curvature quantities from a metric 2-jet."""
    convention = SignConvention(convention)
    ginv, x, gam = _christoffel_parts(g, dg)
    dginv = -np.einsum("ad,edf,fb->eab", ginv, dg, ginv)
    # dX[e,d,b,c] = d_e of X[d,b,c]
    dx = np.transpose(ddg, (0, 2, 1, 3)) + np.transpose(ddg, (0, 2, 3, 1)) - ddg
    dx = _sym(dx, 2, 3)
    dgam = 0.5 * (np.einsum("ead,dbc->eabc", dginv, x) + np.einsum("ad,edbc->eabc", ginv, dx))
    dgam = _sym(dgam, 2, 3)
    # R^a_bcd = d_c Gam^a_db - d_d Gam^a_cb + Gam^a_ce Gam^e_db - Gam^a_de Gam^e_cb
    t = np.transpose(dgam, (1, 3, 0, 2)) + np.einsum("ace,edb->abcd", gam, gam)
    riemann = convention.sign * (t - np.swapaxes(t, 2, 3))
    ricci = np.einsum("abad->bd", riemann)
    scalar = float(np.einsum("bd,bd->", ginv, ricci))
    return CurvaturePack(gam, riemann, ricci, scalar, convention, g)


def curvature_pack(
    m: ChartedMetric,
    p,
    s: FDScheme = FDScheme(),
    convention: SignConvention = SignConvention.POSITIVE,
) -> CurvaturePack:
    """Christoffel symbols, Riemann, Ricci and scalar curvature at ``p``.

    The Riemann tensor is built from ``Omega(X,Y) = [nabla_X, nabla_Y] -
    nabla_[X,Y]`` in the coordinate basis, ``riemann[a,b,c,d] = R^a_bcd``.
    """
    g, dg, ddg = metric_jet(m, p, s, second=True)
    return curvature_from_jet(g, dg, ddg, convention)


def scalar_curvature(m, p, s=FDScheme(), convention=SignConvention.POSITIVE) -> float:
    return curvature_pack(m, p, s, convention).scalar


def laplace_beltrami(m: ChartedMetric, f: ArrayFn, p, s: FDScheme = FDScheme()):
    """``G^{-1/2} d_A (G^{AB} G^{1/2} d_B f)`` by nested finite differences.

    ``f`` maps ``(..., dim)`` points to scalars; ``p`` may be a single point or
    a batch ``(N, dim)``.
    """
    p = np.asarray(p, dtype=float)
    s.validate_for(m)

    def flux(q):
        g = m(q)
        ginv = m.inverse(q)
        sqrtg = np.sqrt(np.linalg.det(g))
        grad = gradient(f, q, s, m)
        return sqrtg[..., None] * np.einsum("...ab,...b->...a", ginv, grad)

    m.require_inside(p)
    g0 = m(m.wrap(p))
    check_conditioning(g0)
    _, dflux, _ = stencil_derivatives(flux, p, s, m, second=False)
    div = np.trace(dflux, axis1=-2, axis2=-1)
    return div / np.sqrt(np.linalg.det(g0))


def check_metric(m: ChartedMetric, points, sym_tol: float = 1e-14) -> None:
    """Assert the ChartedMetric invariants (symmetry, SPD) at ``points``."""
    g = m(np.asarray(points, dtype=float))
    asym = np.max(np.abs(g - np.swapaxes(g, -1, -2)), initial=0.0)
    if asym > sym_tol * max(1.0, float(np.max(np.abs(g)))):
        raise SingularMetric(f"metric not symmetric (residual {asym:.2e})")
    check_conditioning(g)
