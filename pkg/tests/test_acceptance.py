"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed at the end of the session (see ``conftest.py``).
"""
import json
import math
import time

import numpy as np
import pytest

from conftest import random_spd
from kklab import catalog as cat
from kklab.bundle import (
    assemble_kk_metric,
    decomposition_report,
    jacobian_direct,
    jacobian_geometric,
    second_fundamental_form,
    second_fundamental_form_ambient,
)
from kklab.chart import ChartedMetric, SignConvention, curvature_pack, scalar_curvature
from kklab.cli import run_scenario
from kklab.lie import (
    build_abelian,
    build_su2,
    haar_quadrature,
    jacobi_residual,
    orbit_metric,
    orbit_scalar_curvature,
    su2_quaternion,
)
from kklab.params import PhysicalParams
from kklab.quantum import (
    casimir_block,
    matrix_hamiltonian_coeffs,
    scalar_hamiltonian_coeffs,
    spin_half,
    trivial_rep,
)
from kklab.stochastic import SDESpec, feynman_kac_kernel, reduction_check, simulate_paths

RESULTS = {}

IDENTITY_BUNDLES = ["hopf", "trivial-su2-product", "warped-su2", "warped-u1-line"]
ALL_BUNDLES = IDENTITY_BUNDLES + ["warped-u1-line(1.0, 2)", "flat-circle-u1"]


def record(number, title, ok, detail=""):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    RESULTS[number] = line
    print(line)
    assert ok, line


def test_criterion_1_curvature_engine():
    worst_time = 0.0
    checks = []
    t0 = time.perf_counter()
    flat = abs(scalar_curvature(cat.flat_torus(2), np.array([1.0, 2.0])))
    worst_time = max(worst_time, time.perf_counter() - t0)
    checks.append(flat < 1e-8)
    errs = []
    for r in (0.5, 1.0, 2.0):
        t0 = time.perf_counter()
        val = scalar_curvature(cat.round_s2(r), np.array([1.0472, 0.3]))
        worst_time = max(worst_time, time.perf_counter() - t0)
        errs.append(abs(val - 2 / r**2))
    checks.append(max(errs) < 1e-6)
    t0 = time.perf_counter()
    s3 = abs(scalar_curvature(cat.round_s3(1.0), np.array([1.1, 1.3, 0.7])) - 6)
    worst_time = max(worst_time, time.perf_counter() - t0)
    checks.append(s3 < 1e-5)
    checks.append(worst_time < 1.0)
    record(1, "curvature engine", all(checks),
           f"flat {flat:.1e}, s2 err {max(errs):.1e}, s3 err {s3:.1e}, slowest point {worst_time:.3f}s")


def test_criterion_2_decomposition_identity():
    lines, ok = [], True
    for name in IDENTITY_BUNDLES:
        b = cat.lookup(name)[1]
        t0 = time.perf_counter()
        pts = cat.random_points(b, 20, seed=0)
        neg = [decomposition_report(b, x, convention=SignConvention.NEGATIVE) for x in pts]
        pos = [decomposition_report(b, x, convention=SignConvention.POSITIVE) for x in pts]
        elapsed = time.perf_counter() - t0
        expanded = max(abs(r.expanded_residual) for r in neg)
        remark = max(abs(r.remark_residual) for r in pos)
        # exclusivity: the expanded identity must fail with positive curvatures
        # unless every curvature term is sign-symmetric (pure product, no warping)
        wrong = max(abs(r.expanded_residual) for r in pos)
        sign_symmetric = all(abs(r.F2_term) + abs(r.Dgamma2_term) + abs(r.J_tilde_direct) < 1e-10 for r in neg)
        exclusive = wrong > 1e-4 or sign_symmetric
        ok &= expanded < 1e-4 and remark < 1e-4 and exclusive and elapsed < 30.0
        lines.append(f"{name} expanded(neg) {expanded:.1e} remark(pos) {remark:.1e} expanded(pos) {wrong:.1e}"
                     f"{' [sign-symmetric]' if sign_symmetric else ''} {elapsed:.1f}s")
    record(2, "decomposition identity", ok, "; ".join(lines))


def test_criterion_3_jacobian_equivalence():
    diffs = []
    for name in ("warped-su2", "warped-u1-line"):
        b = cat.lookup(name)[1]
        for x in cat.random_points(b, 20, seed=1):
            diffs.append(abs(jacobian_direct(b, x).J_tilde - jacobian_geometric(b, x)))
    lin = cat.warped_u1_line(1.0, 1)
    quad = cat.warped_u1_line(1.0, 2)
    xs = cat.random_points(quad, 20, seed=2)
    e1 = max(abs(jacobian_direct(lin, x).J_tilde - 1.0) for x in xs)
    e2 = max(abs(jacobian_direct(quad, x).J_tilde - (4 + 4 * x[0] ** 2)) for x in xs)
    record(3, "Jacobian equivalence", max(diffs) < 1e-4 and e1 < 1e-6 and e2 < 1e-6,
           f"direct vs geometric {max(diffs):.1e}, exp(2x) err {e1:.1e}, exp(2x^2) err {e2:.1e}")


def test_criterion_4_second_fundamental_form():
    worst, const_worst = 0.0, 0.0
    for name in ALL_BUNDLES:
        b = cat.lookup(name)[1]
        constant = name in ("hopf", "trivial-su2-product", "flat-circle-u1")
        for x in cat.random_points(b, 10, seed=3):
            red = second_fundamental_form(b, x)
            amb = second_fundamental_form_ambient(b, x)
            worst = max(worst, float(np.max(np.abs(red - amb))))
            if constant:
                const_worst = max(const_worst, float(np.max(np.abs(red))), float(np.max(np.abs(amb))))
    record(4, "second fundamental form", worst < 1e-4 and const_worst < 1e-10,
           f"reduced vs ambient {worst:.1e}, constant-gamma magnitude {const_worst:.1e}")


def test_criterion_5_determinant_identity():
    rng = np.random.default_rng(5)
    worst = 0.0
    for name in ALL_BUNDLES:
        b = cat.lookup(name)[1]
        total = assemble_kk_metric(b)
        x = cat.random_points(b, 100, seed=6)
        if b.chart.kind == "su2":
            d = rng.normal(size=(100, 3))
            a = d / np.linalg.norm(d, axis=1, keepdims=True) * rng.uniform(0, 3.0, (100, 1))
        else:
            a = rng.uniform(-np.pi, np.pi, (100, b.dim_g))
        q = np.concatenate([x, a], axis=1)
        lhs = np.linalg.det(total(q))
        rhs = np.linalg.det(b.h(x)) * np.linalg.det(b.gamma(x)) * np.linalg.det(b.chart.u_bar(a)) ** 2
        worst = max(worst, float(np.max(np.abs(lhs / rhs - 1))))
    record(5, "determinant identity", worst < 1e-10, f"max relative deviation {worst:.1e}")


def test_criterion_6_lie_structure():
    ls, gc = build_su2()
    jac = max(jacobi_residual(ls.c), jacobi_residual(build_abelian(3)[0].c))
    rng = np.random.default_rng(7)
    orbit = 0.0
    for _ in range(5):
        gamma = random_spd(rng, 3, floor=0.5)
        chart_val = curvature_pack(orbit_metric(gc, gamma), np.array([0.4, -0.3, 0.9])).scalar
        orbit = max(orbit, abs(orbit_scalar_curvature(ls, gamma) - chart_val))
    wsum = max(abs(haar_quadrature(g, r).weights.sum() - 1) for g in (gc, build_abelian(2)[1]) for r in (2, 5, 9, 12))
    q = haar_quadrature(gc, 12)
    ortho = q.integrate(lambda a: (2 * su2_quaternion(a)[..., 0]) ** 2)
    ok = jac == 0.0 and orbit < 1e-5 and wsum < 1e-12 and abs(ortho - 1) < 1e-3
    record(6, "Lie structure", ok,
           f"Jacobi {jac:.1e}, orbit curvature err {orbit:.1e}, weight sum err {wsum:.1e}, |chi|^2 integral {ortho:.6f}")


def test_criterion_7_hamiltonian_assembly():
    exact = True
    for name in ALL_BUNDLES:
        b = cat.lookup(name)[1]
        x = cat.random_points(b, 1, seed=8)[0]
        s = scalar_hamiltonian_coeffs(b, x)
        m = matrix_hamiltonian_coeffs(b, trivial_rep(b.dim_g), x)
        exact &= all(np.array_equal(getattr(s, k), getattr(m, k))
                     for k in ("kinetic_inverse_metric", "first_order", "zeroth_order_matrix", "divergence_term"))
    cas = float(np.max(np.abs(casimir_block(np.eye(3), spin_half()) - 0.75 * np.eye(2))))
    b = cat.warped_su2()
    herm = max(matrix_hamiltonian_coeffs(b, spin_half(), x).hermiticity_residual()
               for x in cat.random_points(b, 10, seed=9))
    record(7, "Hamiltonian assembly", exact and cas < 1e-12 and herm < 1e-10,
           f"trivial == scalar {exact}, Casimir err {cas:.1e}, Hermiticity {herm:.1e}")


MC_CASES = [
    ("flat-circle-u1", [1.0], [1.3], "sigma"),
    ("trivial-su2-product", [1.0], [1.3], "sigma"),
    ("warped-u1-line(0.1)", [0.0], [0.2], "percent"),
]


@pytest.mark.slow
def test_criterion_8_monte_carlo_reduction():
    parts, ok, results = [], True, {}
    for name, xa, xb, rule in MC_CASES:
        b = cat.lookup(name)[1]
        t0 = time.perf_counter()
        res = reduction_check(b, xa, xb, 0.0, 0.5, 1e-3, 100_000, None, seed=7, case=name)
        elapsed = time.perf_counter() - t0
        results[name] = res
        passed = res.within(3.0) if rule == "sigma" else abs(res.ratio - 1) < 0.05
        ok &= passed
        parts.append(f"{name} ratio {res.ratio:.4f} +- {res.stderr:.4f} ({elapsed:.0f}s)")
    again = reduction_check(cat.flat_circle_u1(), [1.0], [1.3], 0.0, 0.5, 1e-3, 100_000, None, seed=7,
                            case="flat-circle-u1")
    deterministic = again.to_json() == results["flat-circle-u1"].to_json()
    record(8, "Monte Carlo reduction", ok and deterministic, "; ".join(parts) + f"; deterministic {deterministic}")


def test_criterion_9_stochastic_engine():
    p = PhysicalParams()
    line = ChartedMetric(1, lambda q: np.ones(np.shape(q)[:-1] + (1, 1)), [-100.0], [100.0])
    n = 100_000
    blk = simulate_paths(SDESpec(line, p), [0.0], 0.0, 0.5, 1e-3, n, seed=1)
    var = float(np.var(blk.end[:, 0], ddof=1))
    target = p.diffusion * 0.5
    var_ok = abs(var - target) < 3 * target * math.sqrt(2 / (n - 1))
    spec = SDESpec(cat.flat_torus(1), p)
    errs = [feynman_kac_kernel(spec, [1.0], 0.0, [1.4], 0.2, 1e-2, m, 0.3, seed=4).std_error for m in (2000, 20000)]
    exponent = -math.log10(errs[1] / errs[0])
    cfg = json.dumps({"command": "mc-reduce", "geometry": "flat-circle-u1",
                      "mc": {"x_a": [1.0], "x_b": [1.3], "dt": 0.01, "n_paths": 4000, "seed": 3, "t_b": 0.2}})
    reports = [json.dumps(run_scenario(cfg)[1], sort_keys=True) for _ in range(2)]
    identical = reports[0] == reports[1]
    record(9, "stochastic engine", var_ok and 0.4 <= exponent <= 0.6 and identical,
           f"variance {var:.4f} vs {target:.4f}, stderr exponent {exponent:.3f}, identical reports {identical}")
