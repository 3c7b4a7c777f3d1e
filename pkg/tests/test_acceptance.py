"""Acceptance gate: one test per top-level criterion, stated tolerances.

Each test prints a single pass line on success; a failure surfaces
through the assert itself.  Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import time

import numpy as np
import pytest

from finsler_area import cartan, graphsolver, meshes, metrics, radon, surfaces

from conftest import random_directions, zoo_specs
from test_radon import random_even_coeffs


def report(line):
    print(f"\n[acceptance] {line}: PASS", end="")


def test_criterion_1_sharp_anisotropy_thresholds():
    targets = {
        "randers": 0.5773502691896258,     # 1/sqrt(3)
        "two_order": 0.31622776601683794,  # 1/sqrt(10)
        "matsumoto": 0.5,
    }
    for family, target in targets.items():
        t0 = time.time()
        got = metrics.bisect_threshold(family, 2, tol=2e-3, grid_resolution=128)
        elapsed = time.time() - t0
        assert got == pytest.approx(target, abs=5e-3), family
        assert elapsed <= 60.0, f"{family} scan took {elapsed:.1f}s"
    report("criterion 1: sharp thresholds randers/two-order/matsumoto "
           "within 5e-3 at grid 128, under 60 s each")


def test_criterion_2_euclidean_closure(rng):
    E = metrics.euclidean(3)
    Zs = random_directions(rng, 50)
    vals = cartan.area_integrand_many(E, None, Zs, 256)
    np.testing.assert_allclose(vals, np.linalg.norm(Zs, axis=1), rtol=1e-10)
    _, lam1, lam2 = cartan.area_hessian_many(E, None, Zs[:20], 256)
    np.testing.assert_allclose(lam1, 1.0, atol=1e-6)
    np.testing.assert_allclose(lam2, 1.0, atol=1e-6)
    rep = metrics.check_validity(E, 2, 64)
    assert rep.f_min == pytest.approx(1.0, abs=1e-12)
    assert rep.f_max == pytest.approx(1.0, abs=1e-12)
    assert rep.g_eigen_max == pytest.approx(1.0, abs=1e-12)
    report("criterion 2: Euclidean closure (integrand = |Z| at 1e-10, "
           "eigenvalues and sphere extremes all one)")


def test_criterion_3_drift_integrand_closed_form():
    for b in (0.3, 0.5, 0.7):
        spec = metrics.randers([0, 0, b])
        want = (1.0 - b * b) ** 1.5
        got = cartan.area_integrand(spec, None, [1.0, 0.0, 0.0], 256)
        assert got == pytest.approx(want, rel=1e-8), b
        est = cartan.area_integrand_mc_oracle(spec, None, [1.0, 0.0, 0.0],
                                              10 ** 6, seed=int(b * 100))
        assert abs(est.value - got) <= 3.0 * est.stderr, b
    report("criterion 3: drift integrand (1-b^2)^(3/2) at 1e-8 vs quadrature "
           "and within 3 sigma of the Monte Carlo oracle")


def test_criterion_4_transform_properties(rng):
    # odd annihilation
    for _ in range(20):
        a = rng.normal(size=3)
        f = lambda y: (y / np.linalg.norm(y, axis=-1)[:, None]) @ a
        zeta = rng.normal(size=3)
        rho = np.max(np.abs(f(metrics.sphere_grid(2, 24))))
        assert abs(radon.spherical_radon(f, zeta / np.linalg.norm(zeta))) \
            <= 1e-12 * max(rho, 1.0)
    # reciprocal homogeneity of the extension
    g = lambda y: (np.linalg.norm(y, axis=-1) + 0.4 * y[:, 2]) ** -2.0
    Z = rng.normal(size=3)
    base = radon.extended_radon(g, Z)
    for t in rng.uniform(0.1, 9.0, size=10):
        assert radon.extended_radon(g, t * Z) == pytest.approx(base / t,
                                                               rel=1e-12)
    # inverse transform round trip on an even band-limited function
    f = radon.SynthesizedSphereFunction(random_even_coeffs(rng, 8))

    def forward(points):
        points = np.atleast_2d(points)
        return np.array([radon.spherical_radon(f, z, N=64) for z in points])

    inv = radon.funk_inverse(forward, L=10)
    probe = metrics.sphere_grid(2, 32)
    assert np.max(np.abs(inv(probe) - f(probe))) <= 1e-8
    report("criterion 4: transform annihilates odd parts at 1e-12, extension "
           "scales exactly, band-limited inversion at 1e-8")


def test_criterion_5_gradient_machinery(rng):
    pool = zoo_specs()
    for i in range(50):
        spec = pool[i % len(pool)]
        Z = rng.normal(size=3) + 0.1
        grad = cartan.area_gradient(spec, None, Z, 256)
        h = 1e-5 * np.linalg.norm(Z)
        fd = np.array([
            (cartan.area_integrand(spec, None, Z + h * e, 256)
             - cartan.area_integrand(spec, None, Z - h * e, 256)) / (2 * h)
            for e in np.eye(3)])
        assert np.max(np.abs(grad - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))
    for spec in pool:
        Z = rng.normal(size=3) + 0.1
        rep = cartan.integrand_report(spec, None, Z, 256)
        assert rep.euler_gradient_residual <= 1e-6
        assert rep.euler_hessian_residual <= 1e-6
    m = 2
    Zs = metrics.sphere_grid(2, 16)
    for b in (0.1, 0.2, 0.3, 0.4, 0.5):
        spec = metrics.randers([0, 0, b])
        val = metrics.check_validity(spec, 2, 64)
        bound = val.f_max ** m * np.sqrt(
            1.0 + val.g_eigen_max * (m + 1) * m ** 2 / val.f_min ** 2)
        norms = np.linalg.norm(cartan.area_gradient_many(spec, None, Zs), axis=1)
        assert np.all(norms <= bound + 1e-12), b
    report("criterion 5: gradients match differences at 1e-6 over 50 pairs, "
           "Euler residuals below 1e-6, gradient bound holds for drifts")


def test_criterion_6_ellipticity_witness(rng):
    spec = metrics.perturbed_quartic(1.0, dim=3)
    for n in (50, 100):
        witness = cartan.ellipticity_witness(spec, n, L=32)
        assert metrics.check_validity(witness, 2, 48).verdict == "finsler", n
        Zs = random_directions(rng, 30)
        got = cartan.area_integrand_many(witness, None, Zs)
        want = cartan.area_integrand_many(spec, None, Zs) \
            - np.linalg.norm(Zs, axis=1) / n
        np.testing.assert_allclose(got, want, rtol=1e-6)
    report("criterion 6: quartic witness metrics pass validity for n >= 50 "
           "and reproduce the clipped integrand at 1e-6")


def test_criterion_7_solver_rigidity_and_uniqueness(rng):
    spec = metrics.randers([0, 0, 0.4])
    mesh = meshes.disk_mesh(58)
    assert mesh.n_triangles >= 2 * 10 ** 4
    data = lambda uv: 0.6 * uv[:, 0] - 0.3 * uv[:, 1] + 0.2
    prob = graphsolver.GraphProblem.from_function(mesh, data, spec)
    t0 = time.time()
    sol = graphsolver.solve(prob, initial="zero")
    elapsed = time.time() - t0
    assert elapsed <= 120.0, f"solve took {elapsed:.1f}s"
    assert np.max(np.abs(sol.f - data(mesh.vertices))) <= 1e-8

    small = meshes.disk_mesh(20)
    prob2 = graphsolver.GraphProblem.from_function(
        small, lambda uv: 0.3 * np.sin(2 * np.pi * uv[:, 0]) + 0.2 * uv[:, 1],
        spec)
    runs = []
    for _ in range(2):
        start = np.where(small.boundary_mask, prob2.boundary_values,
                         rng.uniform(-1.0, 1.0, size=small.n_vertices))
        runs.append(graphsolver.solve(prob2, initial=start))
    assert np.max(np.abs(runs[0].f - runs[1].f)) <= 1e-8
    for sol2 in runs:
        assert graphsolver.maximum_principle_check(sol2, 1e-8).holds
    report("criterion 7: affine rigidity at 1e-8 on 2e4 triangles in time, "
           "random initializations agree at 1e-8, maximum principle holds")


def test_criterion_8_inequality_suite(rng):
    # area comparison sandwich on random graph patches
    spec = metrics.randers([0.1, 0.0, 0.4])
    val = metrics.check_validity(spec, 2, 64)
    E = metrics.euclidean(3)
    for _ in range(20):
        coef = rng.normal(scale=0.3, size=4)

        def X(U, V):
            f = coef[0] * U + coef[1] * V \
                + coef[2] * np.sin(np.pi * U) + coef[3] * U * V
            return np.stack([U, V, f], axis=-1)

        patch = surfaces.ImmersedPatch.from_grid(
            X, np.linspace(0, 1, 13), np.linspace(0, 1, 13))
        ae = surfaces.finsler_area(patch, E)
        af = surfaces.finsler_area(patch, spec)
        assert val.f_min ** 2 * ae * (1 - 1e-9) <= af \
            <= val.f_max ** 2 * ae * (1 + 1e-9)

    for b in (0.0, 0.2, 0.4):
        drift = metrics.euclidean(3) if b == 0.0 else metrics.randers([0, 0, b])
        mesh = meshes.disk_mesh(16)
        data = lambda uv: 0.3 * np.cos(2 * np.arctan2(uv[:, 1], uv[:, 0]))
        sol = graphsolver.solve(
            graphsolver.GraphProblem.from_function(mesh, data, drift))
        patch = surfaces.ImmersedPatch.from_graph_solution(sol)
        for which in ("isop1", "isop2"):
            assert surfaces.verify_isoperimetric(patch, drift, which).holds, \
                (b, which)
        assert surfaces.convex_hull_check(patch).max_violation <= 1e-6, b
    report("criterion 8: area sandwich on 20 patches, ball and length "
           "isoperimetric bounds plus hull check on minimal graphs")


def test_criterion_9_symmetrization_identity(rng):
    pool = zoo_specs()
    count = 0
    for i in range(100):
        spec = pool[i % len(pool)]
        sym = metrics.symmetrize(spec, 2)
        Z = rng.normal(size=3) + 0.1
        a = cartan.area_integrand(spec, None, Z)
        b = cartan.area_integrand(sym, None, Z)
        assert b == pytest.approx(a, rel=1e-10)
        count += 1
    assert count == 100
    report("criterion 9: symmetrized metrics reproduce the area integrand "
           "at 1e-10 across 100 zoo samples")
