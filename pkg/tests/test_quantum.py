import json

import numpy as np
import pytest

from kklab import catalog as cat
from kklab.bundle import KKBundle, jacobian_direct, jacobian_geometric
from kklab.errors import RepresentationMismatch
from kklab.lie import build_abelian, build_su2
from kklab.params import PhysicalParams
from kklab.quantum import (
    Representation,
    apply_hamiltonian,
    casimir_block,
    kappa_form_coeffs,
    kappa_identity_residual,
    matrix_hamiltonian_coeffs,
    scalar_hamiltonian_coeffs,
    spin_half,
    trivial_rep,
    u1_charge,
)

P = PhysicalParams(hbar=1.3, m=0.7, kappa=1.0)


def const_u1(A0):
    ls, _ = build_abelian(1)
    return KKBundle(2, ls, lambda x: np.broadcast_to(np.diag([1.0, 2.0]), np.shape(x)[:-1] + (2, 2)).copy(),
                    lambda x: np.ones(np.shape(x)[:-1] + (1, 1)),
                    lambda x: np.broadcast_to(np.asarray(A0, float)[:, None], np.shape(x)[:-1] + (2, 1)).copy(),
                    np.zeros(2), np.ones(2) * 5)


def test_spin_half_commutators():
    ls, _ = build_su2()
    rep = spin_half()
    assert rep.commutator_residual(ls) < 1e-15
    assert np.allclose(casimir_block(np.eye(3), rep), 0.75 * np.eye(2), atol=1e-12)


def test_representation_mismatch():
    ls, _ = build_su2()
    bad = Representation(np.stack([1j * np.diag([0.5, -0.5])] * 3), "bad")
    with pytest.raises(RepresentationMismatch):
        bad.validate(ls)
    b = cat.warped_su2()
    with pytest.raises(RepresentationMismatch):
        matrix_hamiltonian_coeffs(b, u1_charge(1.0), np.array([1.0, 1.0]))


@pytest.mark.parametrize("name", ["hopf", "trivial-su2-product", "warped-su2", "warped-u1-line(1.0)", "flat-circle-u1"])
def test_trivial_rep_equals_scalar(bundles, name):
    b = bundles[name]
    x = cat.random_points(b, 1, seed=4)[0]
    s = scalar_hamiltonian_coeffs(b, x, p=P)
    m = matrix_hamiltonian_coeffs(b, trivial_rep(b.dim_g), x, p=P)
    for k in ("kinetic_inverse_metric", "first_order", "zeroth_order_matrix", "divergence_term"):
        assert np.array_equal(getattr(s, k), getattr(m, k))
    assert s.dim_V == 1


def test_scalar_zeroth_order_values(bundles):
    w = P.hbar**2 / (8 * P.m)
    prod = scalar_hamiltonian_coeffs(bundles["trivial-su2-product"], np.array([1.0]), p=P)
    assert abs(prod.zeroth_order_matrix[0, 0]) < 1e-6
    hopf = scalar_hamiltonian_coeffs(bundles["hopf"], np.array([1.0, 2.0]), p=P)
    assert abs(hopf.zeroth_order_matrix[0, 0]) < 1e-5
    b = bundles["warped-su2"]
    x = np.array([2.0, 0.5])
    warped = scalar_hamiltonian_coeffs(b, x, p=P)
    assert warped.zeroth_order_matrix[0, 0] == pytest.approx(w * jacobian_direct(b, x).J_tilde, abs=1e-4)
    assert warped.J_tilde == pytest.approx(jacobian_geometric(b, x))


def test_potential_enters_zeroth_order():
    base = cat.flat_circle_u1()
    b = KKBundle(base.base_dim, base.group, base.h, base.gamma, base.A, base.base_lower, base.base_upper,
                 base.base_periodic, V_tilde=lambda x: np.cos(np.asarray(x)[..., 0]))
    c = scalar_hamiltonian_coeffs(b, np.array([0.4]))
    assert c.zeroth_order_matrix[0, 0] == pytest.approx(np.cos(0.4), abs=1e-10)


def test_charge_first_order():
    q, A0 = 2.0, np.array([0.3, -0.4])
    c = matrix_hamiltonian_coeffs(const_u1(A0), u1_charge(q), np.array([1.0, 1.0]))
    hinv = np.diag([1.0, 0.5])
    assert np.allclose(c.first_order[:, 0, 0], 2 * hinv @ A0 * 1j * q, atol=1e-14)
    assert np.allclose(c.divergence_term, 0, atol=1e-12)


def test_casimir_in_zeroth_order():
    b = cat.trivial_su2_product()
    c = matrix_hamiltonian_coeffs(b, spin_half(), np.array([1.0]), p=P)
    w_kin = -P.hbar**2 / (2 * P.m)
    # gamma^{ab} J_a J_b = -3/4 for anti-Hermitian generators, so the energy shift is positive
    expected = w_kin * -0.75 + P.hbar**2 / (8 * P.m) * c.J_tilde
    assert np.allclose(c.zeroth_order_matrix, expected * np.eye(2), atol=1e-12)
    assert c.metadata["casimir_weight"] == w_kin
    knob = matrix_hamiltonian_coeffs(b, spin_half(), np.array([1.0]), p=P, casimir_weight=0.0)
    assert np.allclose(knob.zeroth_order_matrix, P.hbar**2 / (8 * P.m) * c.J_tilde * np.eye(2), atol=1e-12)


@pytest.mark.parametrize("name", ["warped-su2", "trivial-su2-product"])
def test_hermiticity(bundles, name):
    b = bundles[name]
    for x in cat.random_points(b, 5, seed=2):
        assert matrix_hamiltonian_coeffs(b, spin_half(), x).hermiticity_residual() < 1e-10


def test_gauge_covariance_u1():
    """Shifting A by d chi and psi by exp(-i q chi) maps H psi to exp(-i q chi) H psi."""
    b0 = cat.hopf()
    q = 1.0
    chi = lambda x: 0.3 * np.sin(x[..., 0]) * np.cos(x[..., 1])
    dchi = lambda x: np.stack([0.3 * np.cos(x[..., 0]) * np.cos(x[..., 1]),
                               -0.3 * np.sin(x[..., 0]) * np.sin(x[..., 1])], -1)
    b1 = KKBundle(b0.base_dim, b0.group, b0.h, b0.gamma, lambda x: b0.A(x) + dchi(np.asarray(x, float))[..., None],
                  b0.base_lower, b0.base_upper, b0.base_periodic)
    psi = lambda x: (np.exp(1j * x[..., 1]) * np.sin(x[..., 0]))[..., None]
    psi1 = lambda x: np.exp(-1j * q * chi(x))[..., None] * psi(x)
    rep = u1_charge(q)
    for x in cat.random_points(b0, 4, seed=1, margin=0.2):
        h0 = apply_hamiltonian(b0, rep, psi, x)
        h1 = apply_hamiltonian(b1, rep, psi1, x)
        assert np.allclose(h1, np.exp(-1j * q * chi(x)) * h0, atol=1e-6)


def test_scalar_operator_on_eigenfunction():
    """On the Hopf base S^2(1/2), cos(theta) is a Laplacian eigenfunction with eigenvalue -8."""
    b = cat.hopf()
    x = np.array([1.1, 0.4])
    val = apply_hamiltonian(b, trivial_rep(1), lambda q: np.cos(q[..., 0])[..., None], x, p=P)
    assert val[0] == pytest.approx(-P.hbar**2 / (2 * P.m) * -8 * np.cos(1.1), abs=1e-5)


def test_kappa_identity():
    assert kappa_identity_residual(P) < 1e-14
    w = kappa_form_coeffs(P, 1.0)
    assert w["laplacian"] == pytest.approx(P.hbar / (2 * P.m))


def test_json_roundtrip():
    b = cat.warped_su2()
    d = json.loads(matrix_hamiltonian_coeffs(b, spin_half(), np.array([1.0, 2.0])).to_json())
    z = np.array(d["zeroth_order_matrix"]["re"]) + 1j * np.array(d["zeroth_order_matrix"]["im"]) \
        if isinstance(d["zeroth_order_matrix"], dict) else np.array(d["zeroth_order_matrix"])
    assert z.shape == (2, 2)
    assert d["metadata"]["representation"] == spin_half().label
