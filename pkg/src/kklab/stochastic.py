"""Monte Carlo Feynman-Kac kernels and the path-integral reduction check.

Paths are simulated in blocks of ``BLOCK`` paths.  Block ``k`` of stream
``s`` draws its noise from ``Philox(SeedSequence(seed, spawn_key=(s, k)))``,
so the set of paths depends only on ``(seed, stream, n_paths)`` and not on
how blocks are scheduled over workers.  Per-path contributions are reduced
in index order with compensated summation.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from . import bundle as kk
from . import kernels
from .bundle import KKBundle
from .chart import ChartedMetric, FDScheme, check_conditioning
from .errors import InsufficientPaths, SingularMetric
from .lie import _qmul, _wrap_angle, class_bump, haar_quadrature, su2_log, su2_quaternion
from .params import PhysicalParams

BLOCK = 8192
DRIFT_STEP = 1e-4
LHS_STREAM, RHS_STREAM = 0, 1


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(block)))))


def metric_sqrt_frame(m: ChartedMetric, p) -> np.ndarray:
    """Principal symmetric square root of ``G^{-1}`` at ``p`` (batched)."""
    g = m(np.asarray(p, dtype=float))
    check_conditioning(g)
    return _inverse_root(g)


def _inverse_root(g):
    lam, vec = np.linalg.eigh(0.5 * (g + np.swapaxes(g, -1, -2)))
    if np.any(lam <= 0):
        raise SingularMetric("metric is not positive definite")
    root = (vec * lam[..., None, :] ** -0.5) @ np.swapaxes(vec, -1, -2)
    return 0.5 * (root + np.swapaxes(root, -1, -2))


@dataclass(frozen=True)
class SDESpec:
    """Diffusion generated by ``1/2 mu^2 kappa Lap`` on a charted metric.

    ``potential`` enters the Feynman-Kac exponent as ``V / (mu^2 kappa m)``;
    ``extra_rate`` is added to the exponent as is (used for the reduction
    Jacobian on the base).
    """

    metric: ChartedMetric
    params: PhysicalParams = PhysicalParams()
    potential: Optional[Callable] = None
    extra_rate: Optional[Callable] = None
    drift_step: float = DRIFT_STEP

    @property
    def dim(self) -> int:
        return self.metric.dim

    def drift(self, q) -> np.ndarray:
        """``1/2 mu^2 kappa G^{-1/2} d_B (G^{1/2} G^{AB})`` by central differences."""
        q = np.asarray(q, dtype=float)
        d = self.dim
        h = self.drift_step
        offs = np.concatenate([np.zeros((1, d)), np.eye(d) * h, -np.eye(d) * h])
        inv, det = kernels.spd_inv_det(self.metric.metric_at(q[..., None, :] + offs))
        if np.any(det <= 0):
            raise SingularMetric("metric is not positive definite along a path")
        flux = np.sqrt(det)[..., None, None] * inv
        # sum_B (flux(q + h e_B)[:, B] - flux(q - h e_B)[:, B]) / 2h
        div = (np.einsum("...bab->...a", flux[..., 1:d + 1, :, :]) - np.einsum("...bab->...a", flux[..., d + 1:, :, :])) / (2 * h)
        return 0.5 * self.params.diffusion * div / np.sqrt(det[..., 0])[..., None]

    def frame(self, q) -> np.ndarray:
        return kernels.spd_inv_sqrt(self.metric.metric_at(np.asarray(q, dtype=float)))

    def rate(self, q) -> Optional[np.ndarray]:
        r = None
        if self.potential is not None:
            r = self.params.potential_scale * np.asarray(self.potential(q), dtype=float)
        if self.extra_rate is not None:
            e = np.asarray(self.extra_rate(q), dtype=float)
            r = e if r is None else r + e
        return r


def _n_steps(t_a: float, t_b: float, dt: float) -> int:
    if not t_b > t_a or dt <= 0:
        raise ValueError("need t_b > t_a and dt > 0")
    n = int(round((t_b - t_a) / dt))
    if n < 1 or abs(n * dt - (t_b - t_a)) > 1e-9 * max(1.0, t_b - t_a):
        raise ValueError("dt must divide t_b - t_a")
    return n


@dataclass
class PathBlock:
    end: np.ndarray
    log_weight: np.ndarray
    alive: np.ndarray
    path: Optional[np.ndarray] = None


def _simulate_block(spec: SDESpec, start, n_steps, dt, rng, size, record=False) -> PathBlock:
    m = spec.metric
    d = spec.dim
    x = np.tile(np.asarray(start, dtype=float), (size, 1))
    logw = np.zeros(size)
    alive = np.ones(size, dtype=np.uint8)
    lower = np.ascontiguousarray(m.lower, dtype=float)
    upper = np.ascontiguousarray(m.upper, dtype=float)
    periodic = np.ascontiguousarray(m.periodic_mask, dtype=np.uint8)
    scale = math.sqrt(spec.params.diffusion)
    sdt = math.sqrt(dt)
    path = np.empty((n_steps + 1, size, d)) if record else None
    if record:
        path[0] = x
    for k in range(n_steps):
        r = spec.rate(x)
        if r is not None:
            logw += r * dt
        drift = np.ascontiguousarray(spec.drift(x))
        frame = np.ascontiguousarray(spec.frame(x))
        dw = rng.standard_normal((size, d)) * sdt
        kernels.em_step(x, drift, frame, dw, dt, scale, lower, upper, periodic, alive)
        if m.recharter is not None:
            x[:] = m.recharter(x)
        if record:
            path[k + 1] = x
    return PathBlock(x, logw, alive.astype(bool), path)


def simulate_paths(
    spec: SDESpec,
    start,
    t_a: float,
    t_b: float,
    dt: float,
    n_paths: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> PathBlock:
    """Endpoints, log Feynman-Kac weights and survival flags of ``n_paths`` paths."""
    n_steps = _n_steps(t_a, t_b, dt)
    start = np.asarray(start, dtype=float)
    spec.metric.require_inside(start)

    def run(k, rng, size):
        return _simulate_block(spec, start, n_steps, dt, rng, size)

    return _run_blocks(run, n_paths, seed, stream, workers)


def _run_blocks(fn, n_paths: int, seed: int, stream: int, workers: int) -> PathBlock:
    sizes = [min(BLOCK, n_paths - lo) for lo in range(0, n_paths, BLOCK)]

    def run(k):
        return fn(k, block_rng(seed, stream, k), sizes[k])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, range(len(sizes))))
    else:
        blocks = [run(k) for k in range(len(sizes))]
    return PathBlock(
        np.concatenate([b.end for b in blocks]),
        np.concatenate([b.log_weight for b in blocks]),
        np.concatenate([b.alive for b in blocks]),
    )


@dataclass
class PathResult:
    times: np.ndarray
    path: np.ndarray
    log_weight: float
    exited: bool

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)


def euler_maruyama_path(spec: SDESpec, start, t_a: float, t_b: float, dt: float, seed: int, stream: int = 0) -> PathResult:
    """A single discretized path with its accumulated Feynman-Kac log weight."""
    n_steps = _n_steps(t_a, t_b, dt)
    start = np.asarray(start, dtype=float)
    spec.metric.require_inside(start)
    blk = _simulate_block(spec, start, n_steps, dt, block_rng(seed, stream, 0), 1, record=True)
    return PathResult(t_a + dt * np.arange(n_steps + 1), blk.path[:, 0, :], float(blk.log_weight[0]), not bool(blk.alive[0]))


class KKDiffusion:
    """Total-space diffusion of a bundle, integrated with group increments.

    The inverse metric splits as ``h^ij H_i H_j + gamma^ab L_a L_b`` with
    horizontal fields ``H_i = d_i - A^a_i L_a`` and the invariant vertical
    fields ``L_a`` (the columns of ``v_bar``).  Each step moves the base
    coordinates by ``1/2 mu^2 kappa Y dt + mu sqrt(kappa) X_h dW`` and the
    fibre point by ``g -> exp(xi) g`` with

        xi = -A^T (mu sqrt(kappa) X_h dW) + mu sqrt(kappa) X_gamma dW'
             - 1/2 mu^2 kappa (A^T Y + h^ij d_i A_j) dt,

    ``Y^i = d_j h^ij + h^ij d_j ln sqrt(det h det gamma)``.  The generator is
    ``1/2 mu^2 kappa Lap_P``; :meth:`chart_coefficients` returns the implied
    drift in the ``(x, a)`` chart for comparison with :class:`SDESpec`.
    """

    def __init__(self, b: KKBundle, params: PhysicalParams = PhysicalParams(), drift_step: float = DRIFT_STEP):
        self.b = b
        self.params = params
        self.drift_step = drift_step
        self.kind = b.chart.kind
        if self.kind not in ("su2", "torus"):
            raise ValueError(f"no group-increment integrator for {self.kind!r}")

    def base_coefficients(self, x):
        """``(Y, divA, X_h, X_gamma, A)`` at base points ``x`` of shape ``(N, n)``."""
        b = self.b
        n = b.base_dim
        h = self.drift_step
        offs = np.concatenate([np.zeros((1, n)), np.eye(n) * h, -np.eye(n) * h])
        pts = x[:, None, :] + offs
        hinv, deth = kernels.spd_inv_det(b.h(pts))
        _, detg = kernels.spd_inv_det(b.gamma(pts))
        if np.any(deth <= 0) or np.any(detg <= 0):
            raise SingularMetric("h or gamma is not positive definite along a path")
        A = b.A(pts)
        half_logvol = 0.5 * np.log(deth * detg)

        def d(f):
            return (f[:, 1:n + 1] - f[:, n + 1:]) / (2 * h)

        dlog = d(half_logvol)                       # (N, n)
        dhinv = d(hinv)                             # (N, j, i, k)
        dA = d(A)                                   # (N, j, i, a)
        h0 = hinv[:, 0]
        Y = np.einsum("njij->ni", dhinv) + np.einsum("nij,nj->ni", h0, dlog)
        divA = np.einsum("nij,nija->na", h0, dA)
        X_h = kernels.spd_inv_sqrt(b.h(x))
        X_g = kernels.spd_inv_sqrt(b.gamma(x))
        return Y, divA, X_h, X_g, A[:, 0]

    def _fibre_identity(self, size):
        if self.kind == "su2":
            q = np.zeros((size, 4))
            q[:, 0] = 1.0
            return q
        return np.zeros((size, self.b.dim_g))

    def _fibre_update(self, state, xi):
        if self.kind == "su2":
            q = _qmul(su2_quaternion(xi), state)
            return q / np.linalg.norm(q, axis=-1, keepdims=True)
        return _wrap_angle(state + xi)

    def fibre_coordinates(self, state):
        return su2_log(state) if self.kind == "su2" else state

    def fibre_embedding(self, state):
        return state

    def simulate_block(self, start_x, n_steps, dt, rng, size) -> PathBlock:
        b = self.b
        n, g = b.base_dim, b.dim_g
        base = b.base_metric
        lower, upper = base.lower, base.upper
        per = base.periodic_mask
        c = self.params.diffusion
        scale = math.sqrt(c)
        sdt = math.sqrt(dt)
        x = np.tile(np.asarray(start_x, dtype=float), (size, 1))
        fib = self._fibre_identity(size)
        logw = np.zeros(size)
        alive = np.ones(size, dtype=bool)
        for _ in range(n_steps):
            if b.V_tilde is not None:
                logw += self.params.potential_scale * np.asarray(b.V_tilde(x), dtype=float) * dt
            Y, divA, X_h, X_g, A = self.base_coefficients(x)
            dw = rng.standard_normal((size, n + g)) * sdt
            nh = scale * np.einsum("nij,nj->ni", X_h, dw[:, :n])
            xi = (
                -np.einsum("nia,ni->na", A, nh)
                + scale * np.einsum("nab,nb->na", X_g, dw[:, n:])
                - 0.5 * c * (np.einsum("nia,ni->na", A, Y) + divA) * dt
            )
            x[alive] += (0.5 * c * Y * dt + nh)[alive]
            fib[alive] = self._fibre_update(fib[alive], xi[alive])
            if per.any():
                x[:, per] = lower[per] + np.mod(x[:, per] - lower[per], (upper - lower)[per])
            if (~per).any():
                alive &= np.all((x[:, ~per] > lower[~per]) & (x[:, ~per] < upper[~per]), axis=1)
        return PathBlock(np.concatenate([x, fib], axis=1), logw, alive)

    def simulate(self, x_a, t_a, t_b, dt, n_paths, seed, stream=0, workers=1) -> PathBlock:
        """Paths from ``(x_a, e)``; ``end`` holds base coordinates then the fibre state."""
        n_steps = _n_steps(t_a, t_b, dt)
        x_a = np.atleast_1d(np.asarray(x_a, dtype=float))
        self.b.base_metric.require_inside(x_a)
        return _run_blocks(lambda k, rng, size: self.simulate_block(x_a, n_steps, dt, rng, size), n_paths, seed, stream, workers)

    def chart_coefficients(self, q):
        """Drift and diffusion matrix implied in the ``(x, a)`` chart at points ``q``.

        The fibre drift picks up ``1/2 C^ab L_a(L_b)`` from the second-order
        part of ``exp(xi)``, with ``C = mu^2 kappa (gamma^-1 + A^T h^-1 A)``.
        """
        q = np.atleast_2d(np.asarray(q, dtype=float))
        b = self.b
        n, g = b.base_dim, b.dim_g
        c = self.params.diffusion
        x, a = q[:, :n], q[:, n:]
        Y, divA, _, _, A = self.base_coefficients(x)
        hinv = kernels.spd_inv_det(b.h(x))[0]
        ginv = kernels.spd_inv_det(b.gamma(x))[0]
        vb = b.chart.v_bar(a)
        hs = self.drift_step
        offs = np.concatenate([np.eye(g) * hs, -np.eye(g) * hs])
        vpts = b.chart.v_bar(a[:, None, :] + offs)
        dvb = (vpts[:, :g] - vpts[:, g:]) / (2 * hs)          # (N, t, s, b): d_t vb^s_b
        Q = np.einsum("nta,ntsb->nsab", vb, dvb)               # L_a (L_b^s)
        C = c * (ginv + np.einsum("nia,nij,njb->nab", A, hinv, A))
        b_xi = -0.5 * c * (np.einsum("nia,ni->na", A, Y) + divA)
        drift = np.concatenate([0.5 * c * Y, np.einsum("nsa,na->ns", vb, b_xi) + 0.5 * np.einsum("nab,nsab->ns", C, Q)], axis=1)
        diffusion = c * kk.assemble_kk_metric(b).inverse(q)
        return drift, diffusion


def _mean_and_error(values: np.ndarray):
    n = len(values)
    mean = kernels.neumaier_sum(np.ascontiguousarray(values, dtype=float)) / n
    var = kernels.neumaier_sum(np.ascontiguousarray((values - mean) ** 2)) / max(n - 1, 1)
    return mean, math.sqrt(var / n)


def _displacement(x, x_b, lower, upper, periodic):
    d = np.asarray(x, dtype=float) - np.asarray(x_b, dtype=float)
    per = np.asarray(periodic, dtype=bool)
    if per.any():
        period = (np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float))[per]
        d[..., per] = d[..., per] - period * np.round(d[..., per] / period)
    return d


def gaussian_bump(disp, width: float) -> np.ndarray:
    """Normalized isotropic Gaussian in coordinate space."""
    n = disp.shape[-1]
    return np.exp(-0.5 * np.sum(disp**2, axis=-1) / width**2) / (2 * np.pi * width**2) ** (n / 2)


def default_width(params: PhysicalParams, dt: float) -> float:
    return 3.0 * math.sqrt(params.diffusion * dt)


@dataclass
class KernelEstimate:
    value: float
    std_error: float
    n_paths: int
    n_discarded: int
    time_step: float
    start: list
    t_a: float
    end: list
    t_b: float
    smoothing_width: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def feynman_kac_kernel(
    spec: SDESpec,
    x_a,
    t_a: float,
    x_b,
    t_b: float,
    dt: float,
    n_paths: int,
    smoothing_width: float,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> KernelEstimate:
    """Kernel ``G(x_b, t_b; x_a, t_a)`` with the delta at ``x_b`` replaced by a Gaussian
    bump normalized against the Riemannian volume.

    Paths that leave a non-periodic chart contribute zero and are counted.
    """
    if smoothing_width <= 0:
        raise ValueError("smoothing_width must be positive")
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    m = spec.metric
    blk = simulate_paths(spec, x_a, t_a, t_b, dt, n_paths, seed, stream, workers)
    if not blk.alive.any():
        raise InsufficientPaths("every path left the chart")
    disp = _displacement(blk.end, x_b, m.lower, m.upper, m.periodic)
    sqrtg = np.sqrt(np.linalg.det(m.metric_at(blk.end)))
    vals = np.where(blk.alive, np.exp(blk.log_weight) * gaussian_bump(disp, smoothing_width) / sqrtg, 0.0)
    mean, err = _mean_and_error(vals)
    return KernelEstimate(
        float(mean), float(err), int(n_paths), int((~blk.alive).sum()), float(dt),
        [float(v) for v in np.atleast_1d(x_a)], float(t_a), [float(v) for v in np.atleast_1d(x_b)], float(t_b),
        float(smoothing_width),
    )


def reduction_jacobian_field(b: KKBundle, s: FDScheme = FDScheme(), params: PhysicalParams = PhysicalParams(), n_grid: int = 257):
    """``J(x) = -(mu^2 kappa / 8) J~(x)`` as a fast callable for the path loop.

    ``J~`` is tabulated on a grid with :func:`kk.jacobian_direct` and
    interpolated with cubic splines (constant fields are detected and
    returned as constants).  Bases of dimension above two are evaluated
    directly.
    """
    n = b.base_dim
    if n > 2:
        return lambda x: kk.jacobian_direct(b, x, s, params).J
    margin = 6 * s.step
    axes = []
    per = tuple(b.base_periodic or (False,) * n)
    for i in range(n):
        lo, hi = float(b.base_lower[i]), float(b.base_upper[i])
        if per[i]:
            axes.append(np.linspace(lo, hi, n_grid))
        else:
            axes.append(np.linspace(lo + margin, hi - margin, n_grid))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    jt = np.asarray(kk.jacobian_direct(b, mesh.reshape(-1, n), s, params).J).reshape(mesh.shape[:-1])
    if np.ptp(jt) <= 1e-12 * max(1.0, float(np.max(np.abs(jt)))):
        c = float(np.mean(jt))
        return lambda x: np.full(np.shape(x)[:-1], c)
    if n == 1:
        if per[0]:
            jt[-1] = jt[0]
        spline = CubicSpline(axes[0], jt, bc_type="periodic" if per[0] else "not-a-knot")
        lo, hi = float(b.base_lower[0]), float(b.base_upper[0])
        if per[0]:
            return lambda x: spline(lo + np.mod(np.asarray(x)[..., 0] - lo, hi - lo))
        return lambda x: spline(np.asarray(x)[..., 0])
    interp = RegularGridInterpolator(axes, jt, method="cubic", bounds_error=False, fill_value=None)
    lower, upper = np.asarray(b.base_lower, float), np.asarray(b.base_upper, float)
    pmask = np.asarray(per, dtype=bool)

    def field_fn(x):
        x = np.array(x, dtype=float, copy=True)
        x[..., pmask] = lower[pmask] + np.mod(x[..., pmask] - lower[pmask], (upper - lower)[pmask])
        return interp(x)

    return field_fn


@dataclass
class ReductionCheck:
    case: str
    lhs: float
    rhs: float
    lhs_error: float
    rhs_error: float
    n_paths: int
    dt: float
    seed: int
    n_discarded: int = 0
    details: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs

    @property
    def stderr(self) -> float:
        """Standard error of ``ratio`` from the two independent estimates."""
        return abs(self.ratio) * math.hypot(self.lhs_error / self.lhs, self.rhs_error / self.rhs)

    def within(self, n_sigma: float) -> bool:
        return abs(self.ratio - 1.0) <= n_sigma * self.stderr

    def to_record(self) -> dict:
        return {
            "case": self.case, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
            "stderr": self.stderr, "n_paths": self.n_paths, "dt": self.dt, "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def reduction_check(
    b: KKBundle,
    x_a,
    x_b,
    t_a: float,
    t_b: float,
    dt: float,
    n_paths: int,
    smoothing_width: Optional[float],
    seed: int,
    params: PhysicalParams = PhysicalParams(),
    quad_resolution: Optional[int] = None,
    beta: float = 4.0,
    workers: int = 1,
    s: FDScheme = FDScheme(),
    case: Optional[str] = None,
) -> ReductionCheck:
    """Both sides of the group-averaged kernel relation, estimated independently.

    ``lhs = gamma(x_b)^{-1/4} gamma(x_a)^{-1/4} G_M`` with the Jacobian in the
    exponent; ``rhs`` averages total-space kernels from ``(x_a, e)`` to
    ``(x_b, theta)`` over Haar quadrature nodes ``theta``.  The fibre delta is
    smoothed by an invariant bump centred at each node, so the node sum is a
    class-function average and the fibre smoothing introduces no bias.
    """
    x_a = np.atleast_1d(np.asarray(x_a, dtype=float))
    x_b = np.atleast_1d(np.asarray(x_b, dtype=float))
    w = default_width(params, dt) if smoothing_width is None else float(smoothing_width)
    n = b.base_dim
    base = b.base_metric
    potential = b.V_tilde

    lhs_spec = SDESpec(base, params, potential, reduction_jacobian_field(b, s, params))
    base_blk = simulate_paths(lhs_spec, x_a, t_a, t_b, dt, n_paths, seed, LHS_STREAM, workers)
    disp = _displacement(base_blk.end, x_b, base.lower, base.upper, base.periodic)
    sqrth = np.sqrt(np.linalg.det(b.h(base_blk.end)))
    lvals = np.where(base_blk.alive, np.exp(base_blk.log_weight) * gaussian_bump(disp, w) / sqrth, 0.0)
    g_m, g_m_err = _mean_and_error(lvals)
    dress = (np.linalg.det(b.gamma(x_a)) * np.linalg.det(b.gamma(x_b))) ** -0.25

    tot_blk = KKDiffusion(b, params).simulate(x_a, t_a, t_b, dt, n_paths, seed, RHS_STREAM, workers)
    xe, fe = tot_blk.end[:, :n], tot_blk.end[:, n:]
    disp = _displacement(xe, x_b, base.lower, base.upper, base.periodic)
    vol = np.sqrt(np.linalg.det(b.h(xe)) * np.linalg.det(b.gamma(xe)))
    gc = b.chart
    if quad_resolution is None:
        quad_resolution = 8 if gc.kind == "su2" else 16
    quad = haar_quadrature(gc, quad_resolution)
    bump = class_bump(gc, beta)
    fibre = kernels.class_bump_sum(
        np.ascontiguousarray(fe), np.ascontiguousarray(gc.embedding(quad.nodes)),
        np.ascontiguousarray(quad.weights), float(beta), float(bump.norm), int(gc.kind == "su2"),
    )
    rvals = np.where(tot_blk.alive, np.exp(tot_blk.log_weight) * gaussian_bump(disp, w) / vol * fibre, 0.0)
    rhs, rhs_err = _mean_and_error(rvals)
    return ReductionCheck(
        case or b.label, float(dress * g_m), float(rhs), float(dress * g_m_err), float(rhs_err),
        int(n_paths), float(dt), int(seed), int((~base_blk.alive).sum() + (~tot_blk.alive).sum()),
        {"smoothing_width": w, "t_a": float(t_a), "t_b": float(t_b), "x_a": x_a.tolist(), "x_b": x_b.tolist(),
         "quad_resolution": quad_resolution, "beta": beta, "fibre_average_mean": float(np.mean(fibre))},
    )
