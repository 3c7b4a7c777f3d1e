"""Dirichlet solver for Finsler-minimal graphs over planar domains.

Minimizes the discrete graph-area energy ``sum_T |T| A((-grad f_T, 1))``
over piecewise-linear functions on a triangulation with fixed boundary
values.  Under the symmetrization assumption the integrand Hessian is
positive on the graph slice, the energy is convex, and damped Newton with
a backtracking line search converges to the unique minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import cartan as _cartan
from .errors import EllipticityLost, MeshDegenerate, NonConvergence
from .meshes import Mesh

HESSIAN_FLOOR = 1e-10      # eigenvalue floor for the per-triangle blocks
ELLIPTICITY_TOL = 1e-6     # indefiniteness beyond this aborts the solve


@dataclass
class GraphProblem:
    """Mesh, Dirichlet data, and metric for a graph-area minimization."""

    mesh: Mesh
    boundary_values: np.ndarray      # (nv,), read on boundary vertices only
    metric: object                   # MetricSpec with dim == 3, Minkowski
    # 128 circle nodes already put the quadrature error of smooth zoo
    # metrics far below the solver tolerance; 256 doubles the solve cost
    quad_order: int = 128
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if self.metric.dim != 3:
            raise ValueError("graph solver handles surfaces in R^3 (dim = 3)")
        if self.metric.x_dependent:
            raise ValueError("graph energy requires a position-free metric")
        self.boundary_values = np.asarray(self.boundary_values, dtype=float)
        if self.boundary_values.shape != (self.mesh.n_vertices,):
            raise ValueError("boundary_values must be given per vertex")

    @classmethod
    def from_function(cls, mesh: Mesh, boundary_fn, metric, **kw):
        vals = np.zeros(mesh.n_vertices)
        vb = mesh.boundary_mask
        vals[vb] = np.asarray(boundary_fn(mesh.vertices[vb]), dtype=float)
        return cls(mesh=mesh, boundary_values=vals, metric=metric, **kw)


@dataclass
class GraphSolution:
    """Converged vertex values with solver diagnostics."""

    f: np.ndarray
    energy: float
    gradient_norm: float
    iterations: int
    tri_gradients: np.ndarray
    energy_history: list = field(default_factory=list)
    problem: Optional[GraphProblem] = None


def _p1_operators(mesh: Mesh):
    """Areas and constant shape-function gradients per triangle.

    ``B[t]`` maps the three vertex values of triangle t to the planar
    gradient: ``grad f_T = B[t] @ f[tris[t]]`` with shape (2, 3).
    """
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0.0):
        raise MeshDegenerate("non-positive triangle area")
    areas = 0.5 * det
    # gradients of barycentric coordinates
    g1 = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 0] - p[:, 1, 0]], axis=-1)
    g2 = np.stack([p[:, 2, 1] - p[:, 0, 1], p[:, 0, 0] - p[:, 2, 0]], axis=-1)
    g3 = np.stack([p[:, 0, 1] - p[:, 1, 1], p[:, 1, 0] - p[:, 0, 0]], axis=-1)
    B = np.stack([g1, g2, g3], axis=-1) / det[:, None, None]
    return areas, B


def tri_gradients(mesh: Mesh, f, ops=None) -> np.ndarray:
    """Per-triangle gradient of a vertex function, shape (nt, 2)."""
    _, B = ops if ops is not None else _p1_operators(mesh)
    return np.einsum("tij,tj->ti", B, np.asarray(f, dtype=float)[mesh.triangles])


def _graph_normals(grads):
    # X = (u, f(u)) has tangent cross product (-f_u1, -f_u2, 1) per cell
    return np.concatenate([-grads, np.ones((len(grads), 1))], axis=1)


def discrete_energy(problem: GraphProblem, f, ops=None) -> float:
    """Graph-area energy of vertex values ``f``."""
    mesh = problem.mesh
    f = np.asarray(f, dtype=float)
    if f.shape != (mesh.n_vertices,):
        raise ValueError("vertex value count mismatch")
    areas, B = ops if ops is not None else _p1_operators(mesh)
    grads = np.einsum("tij,tj->ti", B, f[mesh.triangles])
    vals = _cartan.area_integrand_many(problem.metric, None,
                                       _graph_normals(grads), problem.quad_order)
    return float(areas @ vals)


def discrete_energy_gradient(problem: GraphProblem, f, ops=None) -> np.ndarray:
    """Energy gradient per vertex; boundary entries are zeroed (fixed)."""
    mesh = problem.mesh
    f = np.asarray(f, dtype=float)
    areas, B = ops if ops is not None else _p1_operators(mesh)
    grads = np.einsum("tij,tj->ti", B, f[mesh.triangles])
    aZ = _cartan.area_gradient_many(problem.metric, None,
                                    _graph_normals(grads), problem.quad_order)
    # d/df_v A((-grad f, 1)) = -aZ[:2] . B[:, :, v]
    contrib = -np.einsum("ti,tiv->tv", aZ[:, :2], B) * areas[:, None]
    out = np.zeros(mesh.n_vertices)
    np.add.at(out, mesh.triangles, contrib)
    out[mesh.boundary_mask] = 0.0
    return out


def _slice_hessian_blocks(problem: GraphProblem, normals):
    """2x2 integrand Hessian blocks on the graph slice (columns 1..2 only).

    Central differences of the analytic gradient along the two planar
    axes; the vertical column never enters the energy Hessian.
    """
    step = _cartan.HESSIAN_STEP
    nrm = np.linalg.norm(normals, axis=-1)
    S = np.empty((len(normals), 2, 2))
    for j in range(2):
        h = (step * nrm)[:, None]
        e = np.zeros((1, 3))
        e[0, j] = 1.0
        gp = _cartan.area_gradient_many(problem.metric, None,
                                        normals + h * e, problem.quad_order)
        gm = _cartan.area_gradient_many(problem.metric, None,
                                        normals - h * e, problem.quad_order)
        S[:, :, j] = ((gp - gm) / (2.0 * h))[:, :2]
    return 0.5 * (S + np.swapaxes(S, 1, 2))


def _energy_hessian(problem: GraphProblem, f, ops, interior,
                    ellipticity_tol=ELLIPTICITY_TOL):
    """Sparse Hessian on interior vertices with per-triangle SPD flooring."""
    mesh = problem.mesh
    areas, B = ops
    grads = np.einsum("tij,tj->ti", B, np.asarray(f, dtype=float)[mesh.triangles])
    S = _slice_hessian_blocks(problem, _graph_normals(grads))
    w, V = np.linalg.eigh(S)
    if np.min(w) < -ellipticity_tol:
        raise EllipticityLost(
            f"graph-slice Hessian eigenvalue {np.min(w):.3e} < -{ellipticity_tol:.1e}")
    w = np.maximum(w, HESSIAN_FLOOR)
    S = np.einsum("tik,tk,tjk->tij", V, w, V)
    K = np.einsum("tia,tij,tjb,t->tab", B, S, B, areas)
    tris = mesh.triangles
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    mat = sp.coo_matrix((K.ravel(), (rows, cols)),
                        shape=(mesh.n_vertices, mesh.n_vertices)).tocsr()
    return mat[interior][:, interior]


def _initial_values(problem: GraphProblem, initial):
    mesh = problem.mesh
    f = problem.boundary_values.copy()
    vb = mesh.boundary_mask
    if isinstance(initial, np.ndarray) or isinstance(initial, (list, tuple)):
        f0 = np.asarray(initial, dtype=float)
        if f0.shape != (mesh.n_vertices,):
            raise ValueError("initial guess must be per vertex")
        f[~vb] = f0[~vb]
        return f
    if initial == "zero":
        f[~vb] = 0.0
        return f
    if initial == "affine_fit":
        # least-squares affine fit of the boundary data
        pts = mesh.vertices[vb]
        A = np.column_stack([pts, np.ones(len(pts))])
        coef, *_ = np.linalg.lstsq(A, f[vb], rcond=None)
        f[~vb] = np.column_stack(
            [mesh.vertices[~vb], np.ones(np.count_nonzero(~vb))]) @ coef
        return f
    raise ValueError(f"unknown initialization {initial!r}")


def solve(problem: GraphProblem, initial="affine_fit") -> GraphSolution:
    """Damped Newton minimization of the graph-area energy.

    Stops when the interior gradient max-norm drops below ``problem.tol``;
    raises NonConvergence when the iteration budget runs out and
    EllipticityLost when a triangle's energy block turns indefinite.
    """
    mesh = problem.mesh
    ops = _p1_operators(mesh)
    interior = np.flatnonzero(~mesh.boundary_mask)
    f = _initial_values(problem, initial)
    energy = discrete_energy(problem, f, ops)
    history = [energy]
    residual = np.inf

    for it in range(problem.max_iter):
        grad = discrete_energy_gradient(problem, f, ops)
        residual = float(np.max(np.abs(grad))) if interior.size else 0.0
        if residual <= problem.tol:
            return GraphSolution(
                f=f, energy=energy, gradient_norm=residual, iterations=it,
                tri_gradients=tri_gradients(mesh, f, ops),
                energy_history=history, problem=problem)
        K = _energy_hessian(problem, f, ops, interior)
        d = np.zeros(mesh.n_vertices)
        d[interior] = spla.spsolve(K, -grad[interior])
        slope = float(grad[interior] @ d[interior])
        if slope > 0.0:   # safeguard: fall back to steepest descent
            d[interior] = -grad[interior]
            slope = -float(grad[interior] @ grad[interior])
        alpha = 1.0
        # Armijo with an absolute float-noise allowance on the energy
        while alpha > 1e-14:
            f_try = f + alpha * d
            e_try = discrete_energy(problem, f_try, ops)
            if e_try <= energy + 1e-4 * alpha * slope + 1e-13 * (1.0 + abs(energy)):
                break
            alpha *= 0.5
        else:
            break  # stalled at float noise; final residual check decides
        f, energy = f_try, e_try
        history.append(energy)

    grad = discrete_energy_gradient(problem, f, ops)
    residual = float(np.max(np.abs(grad))) if interior.size else 0.0
    if residual <= problem.tol:
        return GraphSolution(
            f=f, energy=energy, gradient_norm=residual,
            iterations=problem.max_iter, tri_gradients=tri_gradients(mesh, f, ops),
            energy_history=history, problem=problem)
    raise NonConvergence(
        f"no convergence in {problem.max_iter} iterations; residual {residual:.3e}")


@dataclass
class MaxPrincipleReport:
    """Interior range of a solution against its boundary range."""

    boundary_min: float
    boundary_max: float
    interior_min: float
    interior_max: float
    epsilon: float
    holds: bool

    def to_dict(self):
        return {"boundary_min": self.boundary_min, "boundary_max": self.boundary_max,
                "interior_min": self.interior_min, "interior_max": self.interior_max,
                "epsilon": self.epsilon, "holds": bool(self.holds)}


def maximum_principle_check(solution: GraphSolution,
                            epsilon: float = 1e-8) -> MaxPrincipleReport:
    """Check that interior values stay inside the boundary range."""
    mesh = solution.problem.mesh
    vb = mesh.boundary_mask
    bmin, bmax = float(np.min(solution.f[vb])), float(np.max(solution.f[vb]))
    imin, imax = float(np.min(solution.f[~vb])), float(np.max(solution.f[~vb]))
    holds = (bmin - epsilon <= imin) and (imax <= bmax + epsilon)
    return MaxPrincipleReport(boundary_min=bmin, boundary_max=bmax,
                              interior_min=imin, interior_max=imax,
                              epsilon=epsilon, holds=bool(holds))


def uniqueness_energy_gap(problem: GraphProblem, f1, f2) -> float:
    """Weighted gradient-gap integral between two boundary-equal functions.

    The weight is the inverse cube of the larger graph-area element; the
    value vanishes exactly when the planar gradients agree almost
    everywhere, which is the discrete footprint of uniqueness.
    """
    mesh = problem.mesh
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    vb = mesh.boundary_mask
    if not np.allclose(f1[vb], f2[vb], atol=1e-12):
        raise ValueError("functions must share boundary values")
    ops = _p1_operators(mesh)
    areas, _ = ops
    g1 = tri_gradients(mesh, f1, ops)
    g2 = tri_gradients(mesh, f2, ops)
    s1 = np.sqrt(1.0 + np.sum(g1 * g1, axis=1))
    s2 = np.sqrt(1.0 + np.sum(g2 * g2, axis=1))
    mu = np.maximum(s1, s2) ** -3.0
    diff = np.sum((g1 - g2) ** 2, axis=1)
    return float(np.sum(areas * mu * diff))
