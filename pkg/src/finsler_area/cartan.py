"""Area integrand of a Finsler metric and its ellipticity machinery.

The integrand assigns to a normal direction Z the ratio of the Euclidean
to the Finslerian unit-ball measure inside the hyperplane orthogonal to
Z; computationally it is the reciprocal extended Radon transform of
``F^(-m)``.  This module evaluates the integrand, its first derivative
(via the Radon differentiation rule) and second derivative (differences
of the analytic first derivative), scans tangential Hessian eigenvalues,
and builds near-Finsler witness metrics from clipped integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import metrics as _metrics
from . import radon as _radon
from .errors import (
    NonPositive,
    NonPositiveDenominator,
    NumericalBreakdown,
    OddInput,
    ZeroDirection,
)

_CHUNK = 4096            # directions per batched quadrature block
HESSIAN_STEP = 1e-4      # relative step for differences of the gradient


def _ball_volume(m: int) -> float:
    return math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0)


def _normalize_rows(Zs):
    Zs = np.asarray(Zs, dtype=float)
    nrm = np.linalg.norm(Zs, axis=-1)
    if np.any(nrm == 0.0):
        raise ZeroDirection("integrand direction is the zero vector")
    return Zs / nrm[..., None], nrm


def _batch_circle_nodes(zhat, N):
    """Great-circle nodes for a batch of unit directions, shape (B, N, 3)."""
    U = _radon._perp_basis_batch(zhat)
    th = _radon._circle_angles(N)
    return (np.cos(th)[None, :, None] * U[:, None, :, 0]
            + np.sin(th)[None, :, None] * U[:, None, :, 1])


def _batch_sphere_nodes(zhat, N):
    """Product-rule nodes and normalized weights in each hyperplane, m = 3."""
    U = _radon._perp_basis_batch(zhat)
    t, w = np.polynomial.legendre.leggauss(N)
    psi = _radon._circle_angles(2 * N)
    s = np.sqrt(1.0 - t ** 2)
    B, n = zhat.shape
    circ = (np.cos(psi)[None, :, None] * U[:, None, :, 0]
            + np.sin(psi)[None, :, None] * U[:, None, :, 1])          # (B, 2N, n)
    nodes = (s[None, :, None, None] * circ[:, None, :, :]
             + t[None, :, None, None] * U[:, None, None, :, 2])       # (B, N, 2N, n)
    weights = (w[:, None] * (2.0 * np.pi / (2 * N)) * np.ones(2 * N)[None, :]).ravel()
    return nodes.reshape(B, -1, n), weights / (4.0 * np.pi)


def _mean_over_subsphere(spec, x, zhat, N, power, also_grad=False):
    """Batched subsphere means of F^power (and the gradient term).

    Returns ``r0`` with shape (B,) and, when requested, the vector mean
    ``(B, n)`` of ``omega * F^(power-1) * (zhat . F_y)(omega)``.
    """
    m = zhat.shape[-1] - 1
    B, n = zhat.shape
    r0 = np.empty(B)
    r1 = np.empty((B, n)) if also_grad else None
    for lo in range(0, B, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, B))
        zc = zhat[sl]
        if m == 2:
            nodes = _batch_circle_nodes(zc, N)
            wts = np.full(nodes.shape[1], 1.0 / nodes.shape[1])
        else:
            nodes, wts = _batch_sphere_nodes(zc, N)
        flat = nodes.reshape(-1, n)
        F = spec._eval(x, flat).reshape(nodes.shape[:2])
        r0[sl] = (F ** power) @ wts
        if also_grad:
            Fy = spec.grad(x, flat).reshape(nodes.shape)
            zdot = np.einsum("bkn,bn->bk", Fy, zc)
            integ = (F ** (power - 1.0)) * zdot
            r1[sl] = np.einsum("bkn,bk,k->bn", nodes, integ, wts)
    return (r0, r1) if also_grad else r0


def area_integrand_many(spec, x, Zs, N: Optional[int] = None) -> np.ndarray:
    """Integrand values for a batch of directions, shape (B,)."""
    Zs = np.atleast_2d(np.asarray(Zs, dtype=float))
    zhat, nrm = _normalize_rows(Zs)
    m = spec.dim - 1
    if N is None:
        N = _radon.DEFAULT_ORDER if m == 2 else _radon.DEFAULT_ORDER_M3
    r0 = _mean_over_subsphere(spec, x, zhat, N, -float(m))
    if np.any(~np.isfinite(r0)) or np.any(r0 <= 0.0):
        raise NonPositiveDenominator("transform of F^(-m) is not positive")
    return nrm / r0


def area_integrand(spec, x, Z, N: Optional[int] = None) -> float:
    """Area integrand at one direction: volume ratio, 1-homogeneous in Z."""
    return float(area_integrand_many(spec, x, np.asarray(Z, dtype=float)[None, :], N)[0])


def area_gradient_many(spec, x, Zs, N: Optional[int] = None) -> np.ndarray:
    """Integrand gradients for a batch of directions, shape (B, n).

    Evaluated on the unit sphere through the Radon differentiation rule
    and extended 0-homogeneously.  The radial part of the correction term
    vanishes because the nodes are orthogonal to the direction, so the
    Euler identity ``Z . grad = value`` holds by construction.
    """
    Zs = np.atleast_2d(np.asarray(Zs, dtype=float))
    zhat, _ = _normalize_rows(Zs)
    m = spec.dim - 1
    if N is None:
        N = _radon.DEFAULT_ORDER if m == 2 else _radon.DEFAULT_ORDER_M3
    r0, r1 = _mean_over_subsphere(spec, x, zhat, N, -float(m), also_grad=True)
    if np.any(r0 <= 0.0):
        raise NonPositiveDenominator("transform of F^(-m) is not positive")
    return zhat / r0[:, None] - (m / r0 ** 2)[:, None] * r1


def area_gradient(spec, x, Z, N: Optional[int] = None) -> np.ndarray:
    """Gradient of the integrand at one direction (0-homogeneous)."""
    return area_gradient_many(spec, x, np.asarray(Z, dtype=float)[None, :], N)[0]


def area_hessian_many(spec, x, Zs, N: Optional[int] = None,
                      step: float = HESSIAN_STEP, symmetry_tol: float = 1e-5):
    """Hessians by central differences of the analytic gradient.

    Returns ``(H, lam_min, lam_max)`` where the eigenvalues are those of
    ``|Z| H`` restricted to the orthogonal complement of each direction.
    """
    Zs = np.atleast_2d(np.asarray(Zs, dtype=float))
    B, n = Zs.shape
    nrm = np.linalg.norm(Zs, axis=-1)
    H = np.empty((B, n, n))
    for j in range(n):
        h = (step * nrm)[:, None]
        e = np.zeros((1, n))
        e[0, j] = 1.0
        gp = area_gradient_many(spec, x, Zs + h * e, N)
        gm = area_gradient_many(spec, x, Zs - h * e, N)
        H[:, :, j] = (gp - gm) / (2.0 * h)
    defect = np.max(np.abs(H - np.swapaxes(H, 1, 2)))
    if defect > symmetry_tol:
        raise NumericalBreakdown(f"Hessian symmetry defect {defect:.2e}")
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    U = _radon._perp_basis_batch(Zs)
    tang = np.einsum("bia,bij,bjc->bac", U, H, U) * nrm[:, None, None]
    eigs = np.linalg.eigvalsh(tang)
    return H, eigs[:, 0], eigs[:, -1]


def area_hessian(spec, x, Z, N: Optional[int] = None, step: float = HESSIAN_STEP):
    """Hessian at one direction plus tangential eigenvalue bounds."""
    H, lam1, lam2 = area_hessian_many(spec, x, np.asarray(Z, dtype=float)[None, :],
                                      N, step)
    return H[0], float(lam1[0]), float(lam2[0])


@dataclass
class IntegrandReport:
    """Integrand value and derivatives at one direction."""

    Z: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    tangential_eigen_min: float
    tangential_eigen_max: float
    quad_order: int
    euler_gradient_residual: float   # |Z . grad - value|
    euler_hessian_residual: float    # max |H Z|

    def to_dict(self):
        return {
            "Z": self.Z.tolist(),
            "value": self.value,
            "gradient": self.gradient.tolist(),
            "hessian": self.hessian.tolist(),
            "tangential_eigen_min": self.tangential_eigen_min,
            "tangential_eigen_max": self.tangential_eigen_max,
            "quad_order": self.quad_order,
            "euler_gradient_residual": self.euler_gradient_residual,
            "euler_hessian_residual": self.euler_hessian_residual,
        }


def integrand_report(spec, x, Z, N: Optional[int] = None) -> IntegrandReport:
    """Joint value/gradient/Hessian evaluation with Euler residuals."""
    Z = np.asarray(Z, dtype=float)
    m = spec.dim - 1
    order = N if N is not None else (_radon.DEFAULT_ORDER if m == 2
                                     else _radon.DEFAULT_ORDER_M3)
    value = area_integrand(spec, x, Z, N)
    grad = area_gradient(spec, x, Z, N)
    H, lam1, lam2 = area_hessian(spec, x, Z, N)
    return IntegrandReport(
        Z=Z, value=value, gradient=grad, hessian=H,
        tangential_eigen_min=lam1, tangential_eigen_max=lam2,
        quad_order=order,
        euler_gradient_residual=float(abs(Z @ grad - value)),
        euler_hessian_residual=float(np.max(np.abs(H @ Z))),
    )


class MCEstimate(NamedTuple):
    """A Monte Carlo value with its standard error."""

    value: float
    stderr: float
    accepted: int


def area_integrand_mc_oracle(spec, x, Z, sample_count: int = 10 ** 6,
                             seed: int = 0) -> MCEstimate:
    """Independent integrand estimate from the unit-ball measure ratio.

    Rejection-samples the Finslerian unit body inside the hyperplane
    orthogonal to Z within a box of radius 1/min(F); the integrand equals
    |Z| times the Euclidean ball measure over the body measure.
    """
    Z = np.asarray(Z, dtype=float)
    nrm = np.linalg.norm(Z)
    if nrm == 0.0:
        raise ZeroDirection("direction is the zero vector")
    m = spec.dim - 1
    U = _radon.perp_basis(Z)
    probe = _radon.great_subsphere_quadrature(Z, 512 if m == 2 else 24, m)
    radius = 1.0 / float(np.min(spec._eval(x, probe.nodes))) * (1.0 + 1e-3)
    rng = np.random.default_rng(seed)
    accepted = 0
    for lo in range(0, sample_count, 10 ** 6):
        k = min(10 ** 6, sample_count - lo)
        c = rng.uniform(-radius, radius, size=(k, m))
        T = c @ U.T
        accepted += int(np.count_nonzero(spec._eval(x, T) <= 1.0))
    frac = accepted / sample_count
    if frac == 0.0:
        raise NonPositive("no samples accepted inside the bounding box")
    body = (2.0 * radius) ** m * frac
    value = nrm * _ball_volume(m) / body
    stderr = value * math.sqrt((1.0 - frac) / (frac * sample_count))
    return MCEstimate(value=float(value), stderr=float(stderr), accepted=accepted)


@dataclass
class BoundsReport:
    """Pointwise comparison of two integrands via metric ratio bounds."""

    c1: float
    c2: float
    max_low_violation: float
    max_high_violation: float
    holds: bool

    def to_dict(self):
        return {"c1": self.c1, "c2": self.c2,
                "max_low_violation": self.max_low_violation,
                "max_high_violation": self.max_high_violation,
                "holds": bool(self.holds)}


def pointwise_bounds_check(spec1, spec2, x=None, sphere_resolution: int = 64,
                           z_resolution: int = 16, N: Optional[int] = None,
                           rel_tol: float = 1e-9) -> BoundsReport:
    """Check ``c1^m A1 <= A2 <= c2^m A1`` with c the metric ratio extremes."""
    m = spec1.dim - 1
    pts = _metrics.sphere_grid(m, sphere_resolution)
    ratio = spec2._eval(x, pts) / spec1._eval(x, pts)
    c1, c2 = float(np.min(ratio)), float(np.max(ratio))
    Zs = _metrics.sphere_grid(m, z_resolution)
    a1 = area_integrand_many(spec1, x, Zs, N)
    a2 = area_integrand_many(spec2, x, Zs, N)
    low = np.max(c1 ** m * a1 - a2)
    high = np.max(a2 - c2 ** m * a1)
    scale = float(np.max(a2))
    holds = bool(low <= rel_tol * scale and high <= rel_tol * scale)
    return BoundsReport(c1=c1, c2=c2, max_low_violation=float(low),
                        max_high_violation=float(high), holds=holds)


@dataclass
class EllipticityScan:
    """Grid scan of the tangential Hessian eigenvalue range."""

    metric: str
    grid_resolution: int
    quad_order: int
    lambda_min: float
    lambda_max: float
    directions: np.ndarray
    values: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray

    def to_dict(self):
        return {"metric": self.metric, "grid_resolution": self.grid_resolution,
                "quad_order": self.quad_order,
                "lambda_min": self.lambda_min, "lambda_max": self.lambda_max}

    def rows(self):
        """CSV rows: direction components, value, eigen bounds."""
        for Z, a, l1, l2 in zip(self.directions, self.values, self.lam1, self.lam2):
            yield list(Z) + [a, l1, l2]


def ellipticity_scan(spec, x=None, grid_resolution: int = 32,
                     N: Optional[int] = None) -> EllipticityScan:
    """Scan tangential eigenvalues of the integrand Hessian over S^m."""
    m = spec.dim - 1
    Zs = _metrics.sphere_grid(m, grid_resolution)
    order = N if N is not None else (_radon.DEFAULT_ORDER if m == 2
                                     else _radon.DEFAULT_ORDER_M3)
    vals = area_integrand_many(spec, x, Zs, N)
    _, lam1, lam2 = area_hessian_many(spec, x, Zs, N)
    return EllipticityScan(
        metric=spec.name or spec.kind, grid_resolution=grid_resolution,
        quad_order=order, lambda_min=float(np.min(lam1)),
        lambda_max=float(np.max(lam2)), directions=Zs, values=vals,
        lam1=lam1, lam2=lam2)


def ellipticity_witness(spec, n_witness: int, L: int = 32,
                        N: Optional[int] = None) -> _metrics.MetricSpec:
    """Metric whose integrand is the input integrand minus |Z|/n (m = 2).

    Clips the integrand by a sliver of the Euclidean one, inverts the
    great-circle transform of its reciprocal, and returns the resulting
    even metric.  For valid inputs and large enough n the result is a
    Finsler metric whose integrand is exactly the clipped integrand.
    """
    if spec.dim != 3:
        raise ValueError("witness construction is specific to m = 2")
    if spec.x_dependent:
        raise ValueError("witness construction needs a position-free metric")
    if not spec.reversible:
        probe = _metrics.sphere_grid(2, 24)
        if np.max(np.abs(spec._eval(None, probe) - spec._eval(None, -probe))) > 1e-10:
            raise OddInput("witness construction needs a reversible metric")
    c1 = float(np.min(spec._eval(None, _metrics.sphere_grid(2, 64))))
    if n_witness < math.ceil(1.0 / c1):
        raise NonPositive(f"witness index below ceil(1/c1) = {math.ceil(1.0 / c1)}")

    def clipped_reciprocal(pts):
        a = area_integrand_many(spec, None, pts, N)
        phi = a - 1.0 / n_witness
        if np.any(phi <= 0.0):
            raise NonPositive("clipped integrand touches zero; increase n")
        return 1.0 / phi

    synth = _radon.funk_inverse(clipped_reciprocal, L=L)
    if np.any(synth(_metrics.sphere_grid(2, 64)) <= 0.0):
        raise NonPositive("inverse transform is not positive; increase n or L")

    def w_eval(x, y):
        y = np.asarray(y, dtype=float)
        nrm = np.linalg.norm(y, axis=-1)
        return nrm * synth(y) ** (-0.5)

    return _metrics.custom(
        w_eval, dim=3, reversible=True,
        name=f"witness[{spec.name or spec.kind}, n={n_witness}, L={L}]")
