"""Coefficient fields of the reduced Hamiltonians.

The operators are written as

    H psi = w_kin [ Lap_M psi + first_order^j d_j psi + divergence psi ]
            + zeroth_order psi

with ``w_kin = -hbar^2 / 2m``.  The horizontal Laplacian uses the covariant
derivative ``nabla_i = d_i + Gamma_i`` with ``Gamma_i = A^a_i J_a``, so

    Lap^E = Lap_M + 2 h^ij Gamma_i d_j + h^ij (nabla^M_i Gamma_j) + h^ij Gamma_i Gamma_j.

The divergence ``h^ij nabla^M_i Gamma_j`` is kept separate from the
Hermitian zeroth-order matrix; with anti-Hermitian generators it combines
with the first-order term into a symmetric operator.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import bundle as kk
from . import chart as cc
from .bundle import KKBundle
from .chart import FDScheme, invert_spd
from .errors import RepresentationMismatch
from .lie import LieStructure
from .params import PhysicalParams


@dataclass(frozen=True)
class Representation:
    """Generators ``generators[a] = (J_a)_pq`` of a representation of the Lie algebra."""

    generators: np.ndarray
    label: str = ""

    def __post_init__(self):
        J = np.asarray(self.generators, dtype=complex)
        if J.ndim != 3 or J.shape[1] != J.shape[2]:
            raise RepresentationMismatch("generators must have shape (dim_g, dim_V, dim_V)")
        object.__setattr__(self, "generators", J)

    @property
    def dim_V(self) -> int:
        return self.generators.shape[1]

    @property
    def dim_g(self) -> int:
        return self.generators.shape[0]

    def commutator_residual(self, ls: LieStructure) -> float:
        J = self.generators
        comm = np.einsum("apq,bqr->abpr", J, J) - np.einsum("bpq,aqr->abpr", J, J)
        rhs = np.einsum("mab,mpr->abpr", ls.c, J)
        return float(np.max(np.abs(comm - rhs), initial=0.0))

    def validate(self, ls: LieStructure, tol: float = 1e-10) -> None:
        if self.dim_g != ls.dim_g:
            raise RepresentationMismatch(f"{self.dim_g} generators for a {ls.dim_g}-dimensional algebra")
        res = self.commutator_residual(ls)
        if res > tol:
            raise RepresentationMismatch(f"commutation relations fail (residual {res:.2e})")


def trivial_rep(dim_g: int, dim_V: int = 1) -> Representation:
    return Representation(np.zeros((dim_g, dim_V, dim_V)), "trivial")


def spin_half() -> Representation:
    """``J_k = -i sigma_k / 2``, matching ``c = eps``."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return Representation(-0.5j * np.stack([sx, sy, sz]), "spin-1/2")


def u1_charge(q: float) -> Representation:
    return Representation(np.array([[[1j * q]]]), f"charge-{q:g}")


def _mat_json(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        if np.max(np.abs(a.imag), initial=0.0) == 0.0:
            return a.real.tolist()
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    return a.tolist()


@dataclass
class HamiltonianCoeffs:
    point: list
    kinetic_inverse_metric: np.ndarray
    first_order: np.ndarray          # (n, V, V): 2 h^ij Gamma_j
    zeroth_order_matrix: np.ndarray  # (V, V), Hermitian part
    divergence_term: np.ndarray      # (V, V): h^ij nabla^M_i Gamma_j
    kinetic_weight: float
    J_tilde: float
    potential: float
    metadata: dict = field(default_factory=dict)

    @property
    def dim_V(self) -> int:
        return self.zeroth_order_matrix.shape[0]

    def hermiticity_residual(self) -> float:
        z = self.zeroth_order_matrix
        return float(np.max(np.abs(z - z.conj().T), initial=0.0))

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "kinetic_inverse_metric": _mat_json(self.kinetic_inverse_metric),
            "first_order": _mat_json(self.first_order),
            "zeroth_order_matrix": _mat_json(self.zeroth_order_matrix),
            "divergence_term": _mat_json(self.divergence_term),
            "kinetic_weight": self.kinetic_weight,
            "J_tilde": self.J_tilde,
            "potential": self.potential,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def connection_coefficients(b: KKBundle, rep: Representation, x) -> np.ndarray:
    """``Gamma_i = A^a_i J_a``, shape ``(..., n, V, V)``."""
    return np.einsum("...ia,apq->...ipq", b.A(np.asarray(x, dtype=float)), rep.generators)


def casimir_block(gamma, rep: Representation) -> np.ndarray:
    """``-gamma^{ab} J_a J_b``; equals ``3/4`` for spin one half with ``gamma = 1``."""
    ginv = invert_spd(np.asarray(gamma, dtype=float))
    return -np.einsum("ab,apq,bqr->pr", ginv, rep.generators, rep.generators)


def _divergence(b: KKBundle, rep: Representation, x, s: FDScheme) -> np.ndarray:
    base = b.base_metric

    def flux(q):
        h = b.h(q)
        G = connection_coefficients(b, rep, q)
        return np.sqrt(np.linalg.det(h))[..., None, None, None] * np.einsum("...ij,...jpq->...ipq", invert_spd(h), G)

    _, dflux, _ = cc.stencil_derivatives(flux, x, s, base, second=False)
    return np.einsum("iipq->pq", dflux) / np.sqrt(np.linalg.det(b.h(x)))


def _jtilde(b: KKBundle, x, s: FDScheme, source: str) -> float:
    if source == "geometric":
        return kk.jacobian_geometric(b, x, s)
    if source == "direct":
        return float(kk.jacobian_direct(b, x, s).J_tilde)
    raise ValueError(f"unknown J~ source {source!r}")


def matrix_hamiltonian_coeffs(
    b: KKBundle,
    rep: Representation,
    x,
    s: FDScheme = FDScheme(),
    p: PhysicalParams = PhysicalParams(),
    casimir_weight: Optional[float] = None,
    jtilde: str = "geometric",
) -> HamiltonianCoeffs:
    """Coefficients of the reduced Hamiltonian on the associated bundle.

    ``casimir_weight`` multiplies ``gamma^{ab} J_a J_b``; by default it is
    the Laplacian weight ``-hbar^2 / 2m``.
    """
    rep.validate(b.group)
    x = np.asarray(x, dtype=float)
    b.base_metric.require_inside(x)
    w_kin = -p.hbar**2 / (2 * p.m)
    w_cas = w_kin if casimir_weight is None else float(casimir_weight)
    hinv = invert_spd(b.h(x))
    G = connection_coefficients(b, rep, x)
    V = rep.dim_V
    eye = np.eye(V)
    jt = _jtilde(b, x, s, jtilde)
    pot = float(b.potential(x))
    gg = np.einsum("ij,ipq,jqr->pr", hinv, G, G)
    cas = -casimir_block(b.gamma(x), rep)
    zeroth = w_kin * gg + w_cas * cas + (p.hbar**2 / (8 * p.m) * jt + pot) * eye
    first = 2 * np.einsum("ij,jpq->ipq", hinv, G)
    div = _divergence(b, rep, x, s) if np.any(rep.generators != 0) else np.zeros((V, V))
    if not np.iscomplexobj(rep.generators) or np.max(np.abs(rep.generators.imag), initial=0.0) == 0.0:
        zeroth, first, div = zeroth.real, first.real, div.real
    return HamiltonianCoeffs(
        point=[float(v) for v in np.atleast_1d(x)],
        kinetic_inverse_metric=hinv,
        first_order=first,
        zeroth_order_matrix=zeroth,
        divergence_term=div,
        kinetic_weight=w_kin,
        J_tilde=jt,
        potential=pot,
        metadata={"representation": rep.label, "casimir_weight": w_cas, "J_tilde_source": jtilde},
    )


def scalar_hamiltonian_coeffs(
    b: KKBundle,
    x,
    s: FDScheme = FDScheme(),
    p: PhysicalParams = PhysicalParams(),
    jtilde: str = "geometric",
) -> HamiltonianCoeffs:
    """Zero-momentum Hamiltonian: ``-hbar^2/2m Lap_M + hbar^2/8m J~ + V``."""
    return matrix_hamiltonian_coeffs(b, trivial_rep(b.dim_g), x, s, p, jtilde=jtilde)


def kappa_form_coeffs(p: PhysicalParams, kappa: complex) -> dict:
    """Weights of ``Lap_M``, ``J~`` and ``V`` in the generator ``H_kappa``."""
    return {
        "laplacian": p.hbar * kappa / (2 * p.m),
        "J_tilde": -p.hbar * kappa / (8 * p.m),
        "potential": 1.0 / (p.hbar * kappa),
    }


def kappa_identity_residual(p: PhysicalParams) -> float:
    """``max |H - (-(hbar/kappa) H_kappa)|_{kappa=i}`` over the three weights."""
    k = kappa_form_coeffs(p, 1j)
    mapped = {name: -(p.hbar / 1j) * w for name, w in k.items()}
    target = {"laplacian": -p.hbar**2 / (2 * p.m), "J_tilde": p.hbar**2 / (8 * p.m), "potential": 1.0}
    return float(max(abs(mapped[n] - target[n]) for n in target))


def apply_hamiltonian(
    b: KKBundle,
    rep: Representation,
    psi: Callable[[np.ndarray], np.ndarray],
    x,
    s: FDScheme = FDScheme(),
    p: PhysicalParams = PhysicalParams(),
    coeffs: Optional[HamiltonianCoeffs] = None,
) -> np.ndarray:
    """``(H psi)(x)`` for a section ``psi`` mapping ``(..., n)`` to ``(..., V)``."""
    x = np.asarray(x, dtype=float)
    c = matrix_hamiltonian_coeffs(b, rep, x, s, p) if coeffs is None else coeffs
    f0, d1, d2 = cc.stencil_derivatives(psi, x, s, b.base_metric, second=True)
    gam = cc.christoffel(b.base_metric, x, s)
    hinv = c.kinetic_inverse_metric
    lap = np.einsum("ij,ijp->p", hinv, d2) - np.einsum("ij,mij,mp->p", hinv, gam, d1)
    first = np.einsum("jpq,jq->p", c.first_order, d1)
    return c.kinetic_weight * (lap + first + c.divergence_term @ f0) + c.zeroth_order_matrix @ f0
