"""Discrete graph-area energy and the damped-Newton Dirichlet solver."""

import numpy as np
import pytest

from finsler_area import cartan, meshes, metrics, graphsolver
from finsler_area.errors import EllipticityLost, MeshDegenerate

from euclidean_reference import solve_minimal_graph


def scherk(uv):
    return np.log(np.cos(uv[:, 1]) / np.cos(uv[:, 0]))


def affine_data(a1, a2, c):
    return lambda uv: a1 * uv[:, 0] + a2 * uv[:, 1] + c


class TestMeshes:
    def test_square_area(self):
        mesh = meshes.unit_square_mesh(12)
        assert mesh.signed_areas().sum() == pytest.approx(1.0, rel=1e-12)
        assert np.all(mesh.signed_areas() > 0)

    def test_disk_polygon_area(self):
        rings = 8
        mesh = meshes.disk_mesh(rings)
        k = 6 * rings
        assert mesh.signed_areas().sum() == pytest.approx(
            0.5 * k * np.sin(2 * np.pi / k), rel=1e-12)
        assert mesh.n_triangles == 6 * rings ** 2

    def test_boundary_loop_closes(self):
        mesh = meshes.disk_mesh(6)
        loop = meshes.boundary_loop(mesh)
        assert len(loop) == 36
        np.testing.assert_allclose(np.linalg.norm(mesh.vertices[loop], axis=1),
                                   1.0, rtol=1e-12)

    def test_degenerate_triangle_rejected(self):
        with pytest.raises(MeshDegenerate):
            meshes.make_mesh(np.array([[0, 0], [1, 0], [2, 0]]),
                             np.array([[0, 1, 2]]))


class TestEnergy:
    def test_flat_square_energy(self):
        mesh = meshes.unit_square_mesh(10)
        prob = graphsolver.GraphProblem(
            mesh=mesh, boundary_values=np.zeros(mesh.n_vertices),
            metric=metrics.euclidean(3))
        assert graphsolver.discrete_energy(prob, np.zeros(mesh.n_vertices)) \
            == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("spec", [metrics.euclidean(3),
                                      metrics.randers([0, 0.1, 0.4]),
                                      metrics.perturbed_quartic(1.0, dim=3)],
                             ids=lambda s: s.kind)
    def test_affine_energy_is_constant_integrand(self, spec):
        mesh = meshes.unit_square_mesh(9)
        slope = (0.4, -0.3)
        f = affine_data(*slope, 0.2)(mesh.vertices)
        prob = graphsolver.GraphProblem(mesh=mesh, boundary_values=f, metric=spec)
        want = cartan.area_integrand(spec, None, [-slope[0], -slope[1], 1.0],
                                     prob.quad_order)
        assert graphsolver.discrete_energy(prob, f) == pytest.approx(want,
                                                                     rel=1e-12)

    def test_gradient_matches_differences(self, rng):
        mesh = meshes.unit_square_mesh(6)
        spec = metrics.randers([0, 0, 0.4])
        f = 0.2 * rng.normal(size=mesh.n_vertices)
        prob = graphsolver.GraphProblem(mesh=mesh, boundary_values=f, metric=spec)
        grad = graphsolver.discrete_energy_gradient(prob, f)
        interior = np.flatnonzero(~mesh.boundary_mask)
        for i in interior[:: max(1, len(interior) // 10)]:
            h = 1e-6
            fp, fm = f.copy(), f.copy()
            fp[i] += h
            fm[i] -= h
            fd = (graphsolver.discrete_energy(prob, fp)
                  - graphsolver.discrete_energy(prob, fm)) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-10)

    def test_midpoint_convexity(self, rng):
        mesh = meshes.unit_square_mesh(8)
        spec = metrics.randers([0, 0, 0.5])
        base = rng.normal(size=mesh.n_vertices)
        prob = graphsolver.GraphProblem(mesh=mesh, boundary_values=base,
                                        metric=spec)
        for _ in range(10):
            f = base.copy()
            g = base.copy()
            bump = ~mesh.boundary_mask
            f[bump] += 0.3 * rng.normal(size=bump.sum())
            g[bump] += 0.3 * rng.normal(size=bump.sum())
            mid = graphsolver.discrete_energy(prob, 0.5 * (f + g))
            avg = 0.5 * (graphsolver.discrete_energy(prob, f)
                         + graphsolver.discrete_energy(prob, g))
            assert mid <= avg + 1e-12


class TestSolve:
    @pytest.mark.parametrize("spec", [metrics.euclidean(3),
                                      metrics.randers([0.2, 0, 0.4]),
                                      metrics.matsumoto([0, 0, 0.3])],
                             ids=lambda s: s.kind)
    def test_affine_data_gives_affine_solution(self, spec):
        mesh = meshes.disk_mesh(10)
        data = affine_data(0.6, -0.2, 0.1)
        prob = graphsolver.GraphProblem.from_function(mesh, data, spec)
        sol = graphsolver.solve(prob, initial="zero")
        assert np.max(np.abs(sol.f - data(mesh.vertices))) <= 1e-8

    def test_matches_independent_euclidean_solver(self):
        mesh = meshes.rectangle_mesh(24, 24, -0.6, 0.6, -0.6, 0.6)
        prob = graphsolver.GraphProblem.from_function(mesh, scherk,
                                                      metrics.euclidean(3))
        sol = graphsolver.solve(prob, initial="zero")
        ref = solve_minimal_graph(mesh, prob.boundary_values.copy())
        assert np.max(np.abs(sol.f - ref)) <= 1e-8

    def test_scherk_discretization_order(self):
        errs = {}
        for n in (16, 32):
            mesh = meshes.rectangle_mesh(n, n, -0.6, 0.6, -0.6, 0.6)
            prob = graphsolver.GraphProblem.from_function(mesh, scherk,
                                                          metrics.euclidean(3))
            sol = graphsolver.solve(prob, initial="zero")
            errs[n] = np.max(np.abs(sol.f - scherk(mesh.vertices)))
        order = np.log2(errs[16] / errs[32])
        assert order >= 1.5

    def test_initialization_independence(self, rng):
        spec = metrics.randers([0, 0, 0.4])
        mesh = meshes.disk_mesh(10)
        prob = graphsolver.GraphProblem.from_function(
            mesh, lambda uv: 0.3 * np.sin(2 * np.pi * uv[:, 0]), spec)
        sols = []
        for _ in range(2):
            start = np.where(mesh.boundary_mask, prob.boundary_values,
                             rng.uniform(-1, 1, size=mesh.n_vertices))
            sols.append(graphsolver.solve(prob, initial=start).f)
        assert np.max(np.abs(sols[0] - sols[1])) <= 1e-8

    def test_energy_descent(self, rng):
        spec = metrics.randers([0, 0, 0.3])
        mesh = meshes.disk_mesh(8)
        prob = graphsolver.GraphProblem.from_function(
            mesh, lambda uv: 0.4 * uv[:, 0] * uv[:, 1], spec)
        sol = graphsolver.solve(prob, initial="zero")
        hist = np.array(sol.energy_history)
        assert np.all(np.diff(hist) <= 1e-13)

    def test_energy_refinement_order(self):
        spec = metrics.euclidean(3)
        data = lambda uv: 0.3 * np.sin(2 * np.pi * uv[:, 0]) \
            + 0.1 * np.cos(np.pi * uv[:, 1])
        es = []
        for n in (16, 32, 64):
            mesh = meshes.unit_square_mesh(n)
            prob = graphsolver.GraphProblem.from_function(mesh, data, spec)
            es.append(graphsolver.solve(prob).energy)
        order = np.log2(abs(es[0] - es[1]) / abs(es[1] - es[2]))
        assert order >= 1.5

    def test_translation_equivariance(self):
        spec = metrics.randers([0, 0.2, 0.4])
        mesh = meshes.disk_mesh(8)
        data = lambda uv: 0.4 * np.cos(3 * np.arctan2(uv[:, 1], uv[:, 0]))
        s0 = graphsolver.solve(
            graphsolver.GraphProblem.from_function(mesh, data, spec))
        s1 = graphsolver.solve(
            graphsolver.GraphProblem.from_function(
                mesh, lambda uv: data(uv) + 1.7, spec))
        assert np.max(np.abs(s1.f - s0.f - 1.7)) <= 1e-10

    def test_ellipticity_loss_detected(self):
        bad = metrics.randers([0, 0, 0.65])
        mesh = meshes.unit_square_mesh(8)
        prob = graphsolver.GraphProblem.from_function(
            mesh, lambda uv: 0.05 * np.sin(2 * np.pi * uv[:, 0]), bad)
        with pytest.raises(EllipticityLost):
            graphsolver.solve(prob, initial="zero")

    def test_solution_beats_competitors(self, rng):
        spec = metrics.randers([0, 0, 0.3])
        mesh = meshes.disk_mesh(8)
        prob = graphsolver.GraphProblem.from_function(
            mesh, lambda uv: 0.2 * uv[:, 0] ** 2, spec)
        sol = graphsolver.solve(prob)
        for _ in range(5):
            rival = sol.f.copy()
            rival[~mesh.boundary_mask] += 0.05 * rng.normal(
                size=np.count_nonzero(~mesh.boundary_mask))
            assert graphsolver.discrete_energy(prob, rival) >= sol.energy


class TestDiagnostics:
    def test_maximum_principle_affine(self):
        spec = metrics.euclidean(3)
        mesh = meshes.disk_mesh(8)
        prob = graphsolver.GraphProblem.from_function(
            mesh, affine_data(0.5, 0.1, 0.0), spec)
        rep = graphsolver.maximum_principle_check(graphsolver.solve(prob))
        assert rep.holds
        assert rep.interior_min >= rep.boundary_min
        assert rep.interior_max <= rep.boundary_max

    @pytest.mark.parametrize("spec", [metrics.euclidean(3),
                                      metrics.randers([0, 0, 0.5])],
                             ids=lambda s: s.kind)
    def test_maximum_principle_oscillatory(self, spec):
        mesh = meshes.disk_mesh(10)
        data = lambda uv: np.sin(3 * np.arctan2(uv[:, 1], uv[:, 0]))
        rep = graphsolver.maximum_principle_check(
            graphsolver.solve(graphsolver.GraphProblem.from_function(
                mesh, data, spec)))
        assert rep.holds

    def test_uniqueness_gap_zero_for_equal(self):
        spec = metrics.euclidean(3)
        mesh = meshes.disk_mesh(6)
        prob = graphsolver.GraphProblem.from_function(
            mesh, affine_data(0.2, 0.3, 0.0), spec)
        f = prob.boundary_values
        assert graphsolver.uniqueness_energy_gap(prob, f, f) == 0.0

    def test_uniqueness_gap_between_solves(self, rng):
        spec = metrics.randers([0, 0, 0.4])
        mesh = meshes.disk_mesh(8)
        prob = graphsolver.GraphProblem.from_function(
            mesh, lambda uv: 0.3 * uv[:, 0], spec)
        f1 = graphsolver.solve(prob, initial="zero").f
        start = np.where(mesh.boundary_mask, prob.boundary_values,
                         rng.uniform(-0.5, 0.5, size=mesh.n_vertices))
        f2 = graphsolver.solve(prob, initial=start).f
        assert graphsolver.uniqueness_energy_gap(prob, f1, f2) <= 1e-12

    def test_uniqueness_gap_positive_for_perturbation(self, rng):
        spec = metrics.euclidean(3)
        mesh = meshes.disk_mesh(6)
        prob = graphsolver.GraphProblem.from_function(
            mesh, affine_data(0.2, -0.1, 0.3), spec)
        sol = graphsolver.solve(prob)
        rival = sol.f.copy()
        rival[~mesh.boundary_mask] += 0.1
        assert graphsolver.uniqueness_energy_gap(prob, sol.f, rival) > 1e-6
