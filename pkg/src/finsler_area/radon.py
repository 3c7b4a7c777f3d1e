"""Spherical Radon transform, homogeneous extension, and Funk inversion.

The transform averages a sphere function over the great subsphere
orthogonal to a direction.  Its homogeneous extension acts on
``(-m)``-homogeneous functions and returns ``(-1)``-homogeneous ones; on
even band-limited functions (m = 2) it is inverted degree by degree
through Legendre multipliers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import eval_legendre, gammaln

from .errors import DegreeTruncation, OddInput, ZeroDirection

DEFAULT_ORDER = 256       # great-circle nodes for m = 2
DEFAULT_ORDER_M3 = 64     # Gauss-Legendre polar count for m = 3 (azimuth 2x)

_SUBSPHERE_MEASURE = {2: 2.0 * np.pi, 3: 4.0 * np.pi}


@dataclass
class HomogeneousFunction:
    """Positively homogeneous function on R^(m+1) minus the origin."""

    degree_q: float
    fn: Callable
    dim: int
    parity: str = "none"  # even | odd | none
    grad: Optional[Callable] = None

    def __call__(self, y):
        return self.fn(np.asarray(y, dtype=float))


@dataclass
class SphereQuadrature:
    """Nodes and weights on the great subsphere orthogonal to a direction."""

    center: np.ndarray          # unit vector
    basis: np.ndarray           # (n, m) orthonormal basis of center-perp
    nodes: np.ndarray           # (K, n) unit vectors
    weights: np.ndarray         # (K,) positive, summing to H^(m-1)(S^(m-1))
    order: int


def perp_basis(Z) -> np.ndarray:
    """Deterministic orthonormal basis of the hyperplane orthogonal to Z.

    Columns are images of the first coordinate vectors under the
    Householder reflection that sends Z/|Z| to (a sign of) the last axis.
    """
    return _perp_basis_batch(np.asarray(Z, dtype=float)[None, :])[0]


def _perp_basis_batch(Zs):
    Zs = np.asarray(Zs, dtype=float)
    nrm = np.linalg.norm(Zs, axis=-1, keepdims=True)
    if np.any(nrm == 0.0):
        raise ZeroDirection("direction is the zero vector")
    zhat = Zs / nrm
    n = Zs.shape[-1]
    sign = np.where(zhat[..., -1:] >= 0.0, 1.0, -1.0)
    v = zhat.copy()
    v[..., -1:] += sign
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    eye = np.broadcast_to(np.eye(n)[:, : n - 1], Zs.shape[:-1] + (n, n - 1))
    return eye - 2.0 * v[..., :, None] * v[..., None, : n - 1]


def _circle_angles(N):
    return 2.0 * np.pi * np.arange(N) / N


def great_subsphere_quadrature(Z, N: Optional[int] = None,
                               m: Optional[int] = None) -> SphereQuadrature:
    """Quadrature on S^m intersected with the hyperplane orthogonal to Z.

    m = 2: N equally spaced circle nodes (trapezoidal; spectrally accurate
    for smooth integrands).  m = 3: Gauss-Legendre x uniform product rule
    on the 2-sphere inside the hyperplane, N polar times 2N azimuthal.
    """
    Z = np.asarray(Z, dtype=float)
    n = Z.size
    if m is None:
        m = n - 1
    if m != n - 1:
        raise ValueError("m must equal dim(Z) - 1")
    if N is None:
        N = DEFAULT_ORDER if m == 2 else DEFAULT_ORDER_M3
    if N < 4:
        raise ValueError("quadrature order must be at least 4")
    U = perp_basis(Z)
    zhat = Z / np.linalg.norm(Z)
    if m == 2:
        th = _circle_angles(N)
        nodes = np.cos(th)[:, None] * U[:, 0] + np.sin(th)[:, None] * U[:, 1]
        weights = np.full(N, 2.0 * np.pi / N)
    elif m == 3:
        t, w = np.polynomial.legendre.leggauss(N)
        psi = _circle_angles(2 * N)
        s = np.sqrt(1.0 - t ** 2)
        nodes = (s[:, None, None] * (np.cos(psi)[None, :, None] * U[:, 0]
                                     + np.sin(psi)[None, :, None] * U[:, 1])
                 + t[:, None, None] * U[:, 2]).reshape(-1, n)
        weights = (w[:, None] * (2.0 * np.pi / (2 * N))
                   * np.ones_like(psi)[None, :]).ravel()
    else:
        raise ValueError(f"unsupported surface dimension m={m}")
    return SphereQuadrature(center=zhat, basis=U, nodes=nodes,
                            weights=weights, order=N)


def _call(f, pts):
    fn = f.fn if isinstance(f, HomogeneousFunction) else f
    return np.asarray(fn(pts), dtype=float)


def spherical_radon(f, zeta, N: Optional[int] = None) -> float:
    """Mean of ``f`` over the great subsphere orthogonal to ``zeta``."""
    zeta = np.asarray(zeta, dtype=float)
    m = zeta.size - 1
    quad = great_subsphere_quadrature(zeta, N, m)
    vals = _call(f, quad.nodes)
    return float(quad.weights @ vals) / _SUBSPHERE_MEASURE[m]


def extended_radon(g, Z, N: Optional[int] = None) -> float:
    """Homogeneous extension: ``|Z|^-1`` times the mean on the unit sphere."""
    Z = np.asarray(Z, dtype=float)
    nrm = np.linalg.norm(Z)
    if nrm == 0.0:
        raise ZeroDirection("direction is the zero vector")
    return spherical_radon(g, Z / nrm, N) / nrm


def radon_gradient_term(g, Z, N: Optional[int] = None,
                        grad: Optional[Callable] = None) -> np.ndarray:
    """Contracted differentiation-rule term at the normalized direction.

    Entry sigma is the transform of ``zhat . grad_y (y^sigma g)``, i.e.
    ``zhat^sigma R[g] + R[y^sigma (zhat . grad g)]``; the gradient of the
    extended transform equals minus this vector over |Z|^2.  ``grad``
    falls back to central differences of ``g`` when absent.
    """
    Z = np.asarray(Z, dtype=float)
    nrm = np.linalg.norm(Z)
    if nrm == 0.0:
        raise ZeroDirection("direction is the zero vector")
    zhat = Z / nrm
    m = Z.size - 1
    if isinstance(g, HomogeneousFunction):
        if g.degree_q != -(m):
            raise ValueError("differentiation rule needs a (-m)-homogeneous input")
        if grad is None:
            grad = g.grad
    quad = great_subsphere_quadrature(zhat, N, m)
    pts = quad.nodes
    g_vals = _call(g, pts)
    if grad is not None:
        dirderiv = np.asarray(grad(pts), dtype=float) @ zhat
    else:
        h = 1e-5
        dirderiv = (_call(g, pts + h * zhat) - _call(g, pts - h * zhat)) / (2.0 * h)
    r0 = float(quad.weights @ g_vals) / _SUBSPHERE_MEASURE[m]
    mean_dir = quad.weights @ (dirderiv[:, None] * pts) / _SUBSPHERE_MEASURE[m]
    return zhat * r0 + mean_dir


def radon_gradient(g, Z, N: Optional[int] = None,
                   grad: Optional[Callable] = None) -> np.ndarray:
    """Gradient of the extended transform via the differentiation rule."""
    Z = np.asarray(Z, dtype=float)
    nrm = np.linalg.norm(Z)
    if nrm == 0.0:
        raise ZeroDirection("direction is the zero vector")
    return -radon_gradient_term(g, Z, N, grad) / nrm ** 2


# ---------------------------------------------------------------------------
# real spherical harmonics on S^2: analysis, synthesis, Funk multipliers


def _legendre_table(L, x):
    """Associated Legendre values P_l^k(x), 0 <= k <= l <= L, no CS phase."""
    x = np.asarray(x, dtype=float)
    sx = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    tab = {}
    pkk = np.ones_like(x)
    for k in range(L + 1):
        if k > 0:
            pkk = pkk * (2 * k - 1) * sx
        tab[(k, k)] = pkk
        if k + 1 <= L:
            tab[(k + 1, k)] = x * (2 * k + 1) * pkk
        for l in range(k + 2, L + 1):
            tab[(l, k)] = ((2 * l - 1) * x * tab[(l - 1, k)]
                           - (l + k - 1) * tab[(l - 2, k)]) / (l - k)
    return tab


def harmonic_index(l: int, k: int) -> int:
    return l * l + l + k


def real_harmonic_matrix(L: int, theta, phi) -> np.ndarray:
    """Design matrix of orthonormal real harmonics, shape (P, (L+1)^2)."""
    theta = np.asarray(theta, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float).ravel()
    tab = _legendre_table(L, np.cos(theta))
    out = np.empty((theta.size, (L + 1) ** 2))
    for l in range(L + 1):
        for k in range(l + 1):
            norm = np.sqrt((2 * l + 1) / (4.0 * np.pi)
                           * np.exp(gammaln(l - k + 1) - gammaln(l + k + 1)))
            plk = norm * tab[(l, k)]
            if k == 0:
                out[:, harmonic_index(l, 0)] = plk
            else:
                out[:, harmonic_index(l, k)] = np.sqrt(2.0) * plk * np.cos(k * phi)
                out[:, harmonic_index(l, -k)] = np.sqrt(2.0) * plk * np.sin(k * phi)
    return out


def analysis_grid(L: int):
    """Gauss-Legendre latitudes x uniform longitudes, exact to band 2L."""
    xs, w = np.polynomial.legendre.leggauss(L + 1)
    theta = np.arccos(xs)
    nlon = 2 * L + 2
    phi = 2.0 * np.pi * np.arange(nlon) / nlon
    T, P = np.meshgrid(theta, phi, indexing="ij")
    weights = np.repeat(w, nlon) * (2.0 * np.pi / nlon)
    return T.ravel(), P.ravel(), weights


def _angles_of(points):
    points = np.asarray(points, dtype=float)
    nrm = np.linalg.norm(points, axis=-1)
    p = points / nrm[..., None]
    theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    phi = np.arctan2(p[..., 1], p[..., 0])
    return theta, phi


def _sphere_points(theta, phi):
    return np.stack([np.sin(theta) * np.cos(phi),
                     np.sin(theta) * np.sin(phi),
                     np.cos(theta)], axis=-1)


@dataclass
class SphericalHarmonicCoeffs:
    """Real harmonic coefficients up to a band limit (m = 2 only)."""

    max_degree: int
    values: np.ndarray  # flat, index l*l + l + k

    def degree_energy(self) -> np.ndarray:
        L = self.max_degree
        return np.array([float(np.sum(self.values[l * l:(l + 1) ** 2] ** 2))
                         for l in range(L + 1)])

    def synthesize(self, points) -> np.ndarray:
        theta, phi = _angles_of(points)
        B = real_harmonic_matrix(self.max_degree, theta, phi)
        return (B @ self.values).reshape(np.shape(points)[:-1])

    def to_dict(self):
        L = self.max_degree
        return {"max_degree": L,
                "coefficients": [
                    {"l": l, "k": k,
                     "value": float(self.values[harmonic_index(l, k)])}
                    for l in range(L + 1) for k in range(-l, l + 1)]}


def analyze(f, L: int) -> SphericalHarmonicCoeffs:
    """Project a sphere function onto the real harmonic basis."""
    theta, phi, w = analysis_grid(L)
    vals = _call(f, _sphere_points(theta, phi))
    B = real_harmonic_matrix(L, theta, phi)
    return SphericalHarmonicCoeffs(max_degree=L, values=B.T @ (w * vals))


def funk_multipliers(L: int) -> np.ndarray:
    """Great-circle-mean eigenvalue per degree: Legendre value at zero."""
    lam = np.zeros((L + 1) ** 2)
    for l in range(L + 1):
        lam[l * l:(l + 1) ** 2] = eval_legendre(l, 0.0)
    return lam


class SynthesizedSphereFunction:
    """Callable band-limited sphere function backed by coefficients."""

    def __init__(self, coeffs: SphericalHarmonicCoeffs):
        self.coeffs = coeffs

    def __call__(self, points):
        return self.coeffs.synthesize(points)


def funk_forward(f, L: int = 32) -> SynthesizedSphereFunction:
    """Great-circle-mean transform of a band-limited function."""
    coeffs = f if isinstance(f, SphericalHarmonicCoeffs) else analyze(f, L)
    out = coeffs.values * funk_multipliers(coeffs.max_degree)
    return SynthesizedSphereFunction(
        SphericalHarmonicCoeffs(coeffs.max_degree, out))


def funk_inverse(phi, L: int = 32, odd_tol: float = 1e-8,
                 truncation_tol: float = 1e-6) -> SynthesizedSphereFunction:
    """Invert the great-circle mean on even band-limited functions (m = 2).

    Analysis to harmonics, division of even degrees by the Legendre
    multiplier, odd degrees zeroed.  Raises OddInput when the odd share of
    the energy exceeds ``odd_tol``; warns when the top band still carries
    more than ``truncation_tol`` of the energy.
    """
    if isinstance(phi, SynthesizedSphereFunction):
        phi = phi.coeffs
    sampled = not isinstance(phi, SphericalHarmonicCoeffs)
    coeffs = analyze(phi, L) if sampled else phi
    L = coeffs.max_degree
    per_degree = coeffs.degree_energy()
    total = float(np.sum(per_degree))
    odd = float(np.sum(per_degree[1::2]))
    if total > 0.0 and odd > odd_tol * total:
        raise OddInput(f"odd-energy fraction {odd / total:.3e} exceeds {odd_tol:.1e}")
    top = float(per_degree[L])
    # an exact coefficient input cannot have been truncated by the analysis
    if sampled and total > 0.0 and top > truncation_tol * total:
        warnings.warn(
            f"top-band energy fraction {top / total:.3e}; raise the band limit",
            DegreeTruncation)
    out = np.zeros_like(coeffs.values)
    lam = funk_multipliers(L)
    for l in range(0, L + 1, 2):
        sl = slice(l * l, (l + 1) ** 2)
        out[sl] = coeffs.values[sl] / lam[sl]
    return SynthesizedSphereFunction(SphericalHarmonicCoeffs(L, out))


def seminorm_rho(f, k: int = 0, grid: int = 64, dim: int = 3) -> float:
    """Max of |f| (k = 0) and of all first partials (k = 1) on the sphere."""
    from .metrics import sphere_grid  # local import to avoid a cycle

    if k not in (0, 1):
        raise ValueError("only k in {0, 1} is supported")
    pts = sphere_grid(dim - 1, grid)
    best = float(np.max(np.abs(_call(f, pts))))
    if k == 1:
        h = 1e-5
        for i in range(dim):
            step = np.zeros(dim)
            step[i] = h
            d = (_call(f, pts + step) - _call(f, pts - step)) / (2.0 * h)
            best = max(best, float(np.max(np.abs(d))))
    return best
