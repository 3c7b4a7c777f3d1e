"""Minkowski/Finsler metric zoo and validity checks.

A metric is a positively 1-homogeneous function ``F(x, y)`` on
``R^n x (R^n \\ {0})`` with ``n = m + 1``.  Evaluators are vectorized over
a trailing axis of direction vectors.  All zoo metrics are Minkowski
(independent of the base point ``x``); position-dependent metrics enter
through the ``custom`` kind.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    NoTransition,
    NumericalBreakdown,
    ParamOutOfRange,
    ZeroDirection,
)

ZOO_KINDS = ("euclidean", "randers", "alpha_beta", "matsumoto",
             "two_order", "perturbed_quartic")

POSITIVITY_TOL = 1e-8     # verdict threshold separating degeneracy from noise
FD_TENSOR_STEP = 8e-4     # base step for second differences on the unit sphere;
                          # smaller steps let roundoff through the Richardson
                          # combination exceed the 1e-8 quadratic-form budget,
                          # larger ones surface the O(h^4) truncation term
FD_GRAD_STEP = 1e-5       # relative step for gradient fallback


def _norms(y):
    return np.sqrt(np.einsum("...i,...i->...", y, y))


def _as_directions(y, dim):
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != dim:
        raise ValueError(f"direction has dimension {y.shape[-1]}, expected {dim}")
    if np.any(_norms(y) == 0.0):
        raise ZeroDirection("metric evaluated at the zero vector")
    return y


@dataclass(frozen=True)
class MetricSpec:
    """A metric candidate: closed-form zoo member or user evaluator.

    ``_eval(x, y)`` maps an array of directions ``(..., dim)`` to values
    ``(...)``; ``_grad`` is the analytic derivative in ``y`` when available.
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict)
    x_dependent: bool = False
    reversible: bool = False
    name: str = ""
    _eval: Callable = None
    _grad: Callable = None

    def eval(self, x, y):
        y = _as_directions(y, self.dim)
        out = self._eval(x, y)
        return float(out) if y.ndim == 1 else out

    def grad(self, x, y):
        y = _as_directions(y, self.dim)
        if self._grad is not None:
            out = self._grad(x, y)
        else:
            out = _fd_gradient(self._eval, x, y)
        return np.asarray(out, dtype=float)

    def __repr__(self):
        return f"MetricSpec({self.name or self.kind}, dim={self.dim})"

    def to_json(self) -> str:
        if self.kind not in ZOO_KINDS:
            raise ValueError(f"kind {self.kind!r} has no serialized form")
        payload = {"kind": self.kind, "dim": self.dim,
                   "params": {k: v for k, v in self.params.items()}}
        return json.dumps(payload, sort_keys=True)


def _fd_gradient(eval_fn, x, y):
    # central differences, step scaled per point by |y|
    h = FD_GRAD_STEP * _norms(y)[..., None]
    grad = np.empty_like(y, dtype=float)
    for i in range(y.shape[-1]):
        step = np.zeros_like(y)
        step[..., i] = h[..., 0]
        grad[..., i] = (eval_fn(x, y + step) - eval_fn(x, y - step)) / (2 * h[..., 0])
    return grad


# ---------------------------------------------------------------------------
# constructors


def euclidean(dim: int = 3) -> MetricSpec:
    """The Euclidean norm ``|y|``."""
    return MetricSpec(
        kind="euclidean", dim=dim, reversible=True, name="euclidean",
        _eval=lambda x, y: _norms(y),
        _grad=lambda x, y: y / _norms(y)[..., None],
    )


def _alpha_beta_eval(b, phi):
    def _eval(x, y):
        alpha = _norms(y)
        s = (y @ b) / alpha
        return alpha * phi(s)
    return _eval


def _alpha_beta_grad(b, phi, dphi):
    def _grad(x, y):
        alpha = _norms(y)
        s = (y @ b) / alpha
        p, dp = phi(s), dphi(s)
        return ((p - s * dp) / alpha)[..., None] * y + dp[..., None] * b
    return _grad


def randers(b) -> MetricSpec:
    """``F(y) = |y| + b.y`` for a constant drift vector with ``|b| < 1``."""
    b = np.asarray(b, dtype=float)
    bn = float(np.linalg.norm(b))
    if bn >= 1.0:
        raise ParamOutOfRange(f"|b| = {bn:.4f} >= 1 makes F vanish on a ray")
    return MetricSpec(
        kind="randers", dim=b.size, params={"b": b.tolist()},
        reversible=(bn == 0.0), name=f"randers(|b|={bn:.4g})",
        _eval=lambda x, y: _norms(y) + y @ b,
        _grad=lambda x, y: y / _norms(y)[..., None] + b,
    )


def matsumoto(b) -> MetricSpec:
    """Slope-of-a-mountain metric ``alpha^2 / (alpha - beta)``."""
    b = np.asarray(b, dtype=float)
    bn = float(np.linalg.norm(b))
    if bn > 1.0 - 1e-6:
        raise ParamOutOfRange(f"|b| = {bn:.4f} puts beta/alpha at the pole of phi")

    def phi(s):
        s = np.asarray(s)
        if np.any(s >= 1.0 - 1e-6):
            raise ParamOutOfRange("beta/alpha >= 1 - 1e-6: phi singular")
        return 1.0 / (1.0 - s)

    def dphi(s):
        return 1.0 / (1.0 - s) ** 2

    return MetricSpec(
        kind="matsumoto", dim=b.size, params={"b": b.tolist()},
        reversible=(bn == 0.0), name=f"matsumoto(|b|={bn:.4g})",
        _eval=_alpha_beta_eval(b, phi), _grad=_alpha_beta_grad(b, phi, dphi),
    )


def two_order(b) -> MetricSpec:
    """Quadratic perturbation ``alpha (1 + beta/alpha)^2``."""
    b = np.asarray(b, dtype=float)
    bn = float(np.linalg.norm(b))
    if bn >= 1.0:
        raise ParamOutOfRange(f"|b| = {bn:.4f} >= 1 makes F vanish on a ray")
    phi = lambda s: (1.0 + s) ** 2
    dphi = lambda s: 2.0 * (1.0 + s)
    return MetricSpec(
        kind="two_order", dim=b.size, params={"b": b.tolist()},
        reversible=(bn == 0.0), name=f"two_order(|b|={bn:.4g})",
        _eval=_alpha_beta_eval(b, phi), _grad=_alpha_beta_grad(b, phi, dphi),
    )


def alpha_beta(phi: Callable, b, dphi: Optional[Callable] = None,
               name: str = "alpha_beta") -> MetricSpec:
    """General ``F = alpha * phi(beta/alpha)`` with a user scalar profile.

    ``phi`` must be positive on ``[-|b|, |b|]``; ``dphi`` falls back to
    central differences when omitted.
    """
    b = np.asarray(b, dtype=float)
    bn = float(np.linalg.norm(b))
    ss = np.linspace(-bn, bn, 65)
    if np.any(np.asarray(phi(ss)) <= 0.0):
        raise ParamOutOfRange("phi must stay positive on [-|b|, |b|]")
    if dphi is None:
        dphi = lambda s: (phi(s + 1e-6) - phi(s - 1e-6)) / 2e-6
    return MetricSpec(
        kind="alpha_beta", dim=b.size, params={"b": b.tolist(), "phi": name},
        reversible=False, name=f"{name}(|b|={bn:.4g})",
        _eval=_alpha_beta_eval(b, phi), _grad=_alpha_beta_grad(b, phi, dphi),
    )


def perturbed_quartic(epsilon: float, b=None, dim: int = 3) -> MetricSpec:
    """Reversible quartic-root norm plus an optional linear drift."""
    if epsilon <= 0.0:
        raise ParamOutOfRange("epsilon must be positive")
    if b is None:
        b = np.zeros(dim)
    b = np.asarray(b, dtype=float)
    dim = b.size
    bn = float(np.linalg.norm(b))
    # min of the reversible part on the sphere is sqrt(1/sqrt(dim) + eps)
    if bn >= math.sqrt(1.0 / math.sqrt(dim) + epsilon):
        raise ParamOutOfRange("drift dominates the reversible part")

    def _rev(y):
        quart = np.sqrt(np.einsum("...i,...i->...", y * y, y * y))
        return np.sqrt(quart + epsilon * np.einsum("...i,...i->...", y, y))

    def _eval(x, y):
        return _rev(y) + y @ b

    def _grad(x, y):
        quart = np.sqrt(np.einsum("...i,...i->...", y * y, y * y))
        rev = np.sqrt(quart + epsilon * np.einsum("...i,...i->...", y, y))
        return (y ** 3 / quart[..., None] + epsilon * y) / rev[..., None] + b

    return MetricSpec(
        kind="perturbed_quartic", dim=dim,
        params={"epsilon": float(epsilon), "b": b.tolist()},
        reversible=(bn == 0.0), name=f"perturbed_quartic(eps={epsilon:g},|b|={bn:.4g})",
        _eval=_eval, _grad=_grad,
    )


def custom(eval_fn: Callable, dim: int, grad_fn: Optional[Callable] = None,
           x_dependent: bool = False, reversible: bool = False,
           name: str = "custom") -> MetricSpec:
    """Wrap a user evaluator ``eval_fn(x, y_array) -> values``."""
    return MetricSpec(
        kind="custom", dim=dim, params={},
        x_dependent=x_dependent, reversible=reversible, name=name,
        _eval=eval_fn, _grad=grad_fn,
    )


_NAMED_PHIS = {
    # odd-bump profile whose symmetrization collapses to the Euclidean norm
    "tanh_bump": (lambda c, m: (lambda s: (1.0 + c * np.tanh(s)) ** (-1.0 / m))),
}


def from_json(text: str) -> MetricSpec:
    """Rebuild a zoo metric from its JSON form ``{kind, params, dim}``."""
    payload = json.loads(text) if isinstance(text, str) else dict(text)
    allowed = {"kind", "params", "dim"}
    unknown = set(payload) - allowed
    if unknown:
        raise ValueError(f"unknown metric fields: {sorted(unknown)}")
    kind = payload.get("kind")
    dim = int(payload.get("dim", 3))
    params = dict(payload.get("params", {}))
    if kind == "euclidean":
        return euclidean(dim)
    if kind == "randers":
        return randers(params["b"])
    if kind == "matsumoto":
        return matsumoto(params["b"])
    if kind == "two_order":
        return two_order(params["b"])
    if kind == "perturbed_quartic":
        return perturbed_quartic(params["epsilon"], params.get("b"), dim)
    if kind == "alpha_beta":
        phi_name = params.get("phi", "tanh_bump")
        if phi_name not in _NAMED_PHIS:
            raise ValueError(f"unknown phi profile {phi_name!r}")
        c = float(params.get("c", 0.5))
        m = dim - 1
        return alpha_beta(_NAMED_PHIS[phi_name](c, m), params["b"], name=phi_name)
    raise ValueError(f"unknown metric kind {kind!r}")


# ---------------------------------------------------------------------------
# operations


def eval_metric(spec: MetricSpec, x, y):
    """Evaluate ``F(x, y)``; raises ZeroDirection on ``y = 0``."""
    return spec.eval(x, y)


def metric_gradient(spec: MetricSpec, x, y):
    """Derivative ``F_y(x, y)``, positively 0-homogeneous in ``y``."""
    return spec.grad(x, y)


@dataclass
class FundamentalTensor:
    """Hessian of ``F^2/2`` in ``y`` at a single point, with its spectrum."""

    g: np.ndarray
    x: object
    y: np.ndarray
    eigen_min: float
    eigen_max: float


def _half_square(spec, x, Y):
    F = spec._eval(x, Y)
    return 0.5 * F * F


def _fd_tensor_batch(spec, x, Y, h=FD_TENSOR_STEP):
    """Second differences of F^2/2 with one Richardson step; Y is (P, n)."""
    n = Y.shape[-1]
    eye = np.eye(n)

    def hess(hh):
        H = np.empty(Y.shape[:-1] + (n, n))
        W0 = _half_square(spec, x, Y)
        for i in range(n):
            ei = hh * eye[i]
            H[..., i, i] = (_half_square(spec, x, Y + ei)
                            - 2.0 * W0
                            + _half_square(spec, x, Y - ei)) / hh ** 2
        for i in range(n):
            for j in range(i + 1, n):
                ei, ej = hh * eye[i], hh * eye[j]
                v = (_half_square(spec, x, Y + ei + ej)
                     - _half_square(spec, x, Y + ei - ej)
                     - _half_square(spec, x, Y - ei + ej)
                     + _half_square(spec, x, Y - ei - ej)) / (4.0 * hh ** 2)
                H[..., i, j] = v
                H[..., j, i] = v
        return H

    coarse = hess(h)
    fine = hess(h / 2.0)
    if np.max(np.abs(fine - coarse)) > 1e-2 * (1.0 + np.max(np.abs(fine))):
        raise NumericalBreakdown("second differences of F^2/2 do not converge")
    H = (4.0 * fine - coarse) / 3.0
    return 0.5 * (H + np.swapaxes(H, -1, -2))


def _tensor_batch(spec, x, Y):
    """Fundamental tensors at unit directions Y (P, n) -> (P, n, n)."""
    Y = Y / _norms(Y)[..., None]
    if spec.kind == "euclidean":
        n = spec.dim
        return np.broadcast_to(np.eye(n), Y.shape[:-1] + (n, n)).copy()
    if spec.kind == "randers":
        b = np.asarray(spec.params["b"], dtype=float)
        w = Y + b
        outer_w = w[..., :, None] * w[..., None, :]
        outer_y = Y[..., :, None] * Y[..., None, :]
        c = 1.0 + Y @ b
        return outer_w + c[..., None, None] * (np.eye(spec.dim) - outer_y)
    return _fd_tensor_batch(spec, x, Y)


def fundamental_tensor(spec: MetricSpec, x, y) -> FundamentalTensor:
    """Fundamental tensor ``g = (F^2/2)_yy`` at one direction (normalized)."""
    y = _as_directions(y, spec.dim)
    yhat = y / np.linalg.norm(y)
    g = _tensor_batch(spec, x, yhat[None, :])[0]
    eigs = np.linalg.eigvalsh(g)
    return FundamentalTensor(g=g, x=x, y=yhat,
                             eigen_min=float(eigs[0]), eigen_max=float(eigs[-1]))


def symmetrize(spec: MetricSpec, m: Optional[int] = None) -> MetricSpec:
    """m-harmonic symmetrization: even metric with the same area integrand.

    ``F_sym = [2 / (F(x,y)^-m + F(x,-y)^-m)]^(1/m)`` wrapped as a custom
    metric; the derivative is assembled from the base derivative by the
    chain rule so downstream code keeps an analytic path.
    """
    mm = spec.dim - 1 if m is None else int(m)
    base_eval = spec._eval
    base_grad = spec._grad

    def f_sym(x, Y):
        fwd = base_eval(x, Y)
        bwd = base_eval(x, -Y)
        return (2.0 / (fwd ** (-mm) + bwd ** (-mm))) ** (1.0 / mm)

    g_sym = None
    if base_grad is not None:
        def g_sym(x, Y):
            fwd = base_eval(x, Y)
            bwd = base_eval(x, -Y)
            u = fwd ** (-mm) + bwd ** (-mm)
            lead = 2.0 ** (1.0 / mm) * u ** (-1.0 / mm - 1.0)
            diff = ((fwd ** (-mm - 1.0))[..., None] * base_grad(x, Y)
                    - (bwd ** (-mm - 1.0))[..., None] * base_grad(x, -Y))
            return lead[..., None] * diff

    return MetricSpec(
        kind="custom", dim=spec.dim, params={"base": spec.name, "m": mm},
        x_dependent=spec.x_dependent, reversible=True,
        name=f"sym[{spec.name}]", _eval=f_sym, _grad=g_sym,
    )


# ---------------------------------------------------------------------------
# sphere sampling and validity reports


def sphere_grid(m: int, resolution: int) -> np.ndarray:
    """Deterministic sampling grid on the unit sphere S^m.

    m = 2: latitude-longitude midpoint grid plus the two poles.
    m = 3: double-angle product grid (two planar angles plus a mixing angle).
    """
    if m == 2:
        theta = np.pi * (np.arange(resolution) + 0.5) / resolution
        phi = 2.0 * np.pi * np.arange(resolution) / resolution
        T, P = np.meshgrid(theta, phi, indexing="ij")
        pts = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P),
                        np.cos(T)], axis=-1).reshape(-1, 3)
        poles = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        return np.vstack([pts, poles])
    if m == 3:
        n_eta = max(2, resolution // 4)
        eta = 0.5 * np.pi * (np.arange(n_eta) + 0.5) / n_eta
        ang = 2.0 * np.pi * np.arange(resolution) / resolution
        E, A1, A2 = np.meshgrid(eta, ang, ang, indexing="ij")
        pts = np.stack([np.cos(E) * np.cos(A1), np.cos(E) * np.sin(A1),
                        np.sin(E) * np.cos(A2), np.sin(E) * np.sin(A2)],
                       axis=-1).reshape(-1, 4)
        axes = np.vstack([np.eye(4), -np.eye(4)])
        return np.vstack([pts, axes])
    raise ValueError(f"sphere_grid supports m in (2, 3), got {m}")


@dataclass
class ValidityReport:
    """Scan summary deciding whether a candidate is a Finsler metric."""

    verdict: str
    is_homogeneous: bool
    f_min: float
    f_max: float
    g_eigen_min: float
    g_eigen_max: float
    grid_resolution: int
    tol: float = POSITIVITY_TOL

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "is_homogeneous": bool(self.is_homogeneous),
            "f_min": self.f_min,
            "f_max": self.f_max,
            "g_eigen_min": self.g_eigen_min,
            "g_eigen_max": self.g_eigen_max,
            "grid_resolution": self.grid_resolution,
            "tol": self.tol,
        }


def _x_samples(spec, x_box, x_resolution):
    if not spec.x_dependent:
        return [None]
    box = x_box if x_box is not None else [(-1.0, 1.0)] * spec.dim
    axes = [np.linspace(lo, hi, x_resolution) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return list(np.stack([g.ravel() for g in mesh], axis=-1))


def check_validity(spec: MetricSpec, m: Optional[int] = None,
                   grid_resolution: int = 64, tol_pos: float = POSITIVITY_TOL,
                   x_box=None, x_resolution: int = 3) -> ValidityReport:
    """Sample F and its fundamental tensor over S^m (and an x box if needed).

    Verdict ``finsler`` requires a positive minimum of F and of the tensor
    spectrum; a clearly negative eigenvalue yields ``indefinite``, anything
    pinned near zero ``degenerate``.
    """
    mm = spec.dim - 1 if m is None else int(m)
    if mm != spec.dim - 1:
        raise ValueError("surface dimension must equal dim - 1")
    if grid_resolution < 16:
        raise ValueError("grid_resolution must be at least 16")
    Y = sphere_grid(mm, grid_resolution)

    f_min, f_max = np.inf, -np.inf
    eig_min, eig_max = np.inf, -np.inf
    for x in _x_samples(spec, x_box, x_resolution):
        F = spec._eval(x, Y)
        f_min = min(f_min, float(np.min(F)))
        f_max = max(f_max, float(np.max(F)))
        if f_min <= tol_pos:
            # tensor values are meaningless once F touches zero
            eig_min = min(eig_min, 0.0)
            continue
        g = _tensor_batch(spec, x, Y)
        eigs = np.linalg.eigvalsh(g)
        eig_min = min(eig_min, float(np.min(eigs[..., 0])))
        eig_max = max(eig_max, float(np.max(eigs[..., -1])))

    # homogeneity spot check on a deterministic subset
    rng = np.random.default_rng(1234)
    sub = Y[rng.choice(len(Y), size=min(64, len(Y)), replace=False)]
    t = rng.uniform(0.1, 10.0, size=len(sub))
    x0 = None if not spec.x_dependent else np.zeros(spec.dim)
    ratio = spec._eval(x0, t[:, None] * sub) / (t * spec._eval(x0, sub))
    is_homog = bool(np.max(np.abs(ratio - 1.0)) <= 1e-9)

    if f_min > tol_pos and eig_min > tol_pos:
        verdict = "finsler"
    elif eig_min < -tol_pos:
        verdict = "indefinite"
    else:
        verdict = "degenerate"
    return ValidityReport(
        verdict=verdict, is_homogeneous=is_homog,
        f_min=f_min, f_max=f_max,
        g_eigen_min=eig_min, g_eigen_max=eig_max,
        grid_resolution=grid_resolution, tol=tol_pos,
    )


@dataclass
class GAReport:
    """Joint verdict: the metric itself and its symmetrization."""

    verdict: str
    metric_report: ValidityReport
    symmetrized_report: ValidityReport

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "metric": self.metric_report.to_dict(),
            "symmetrized": self.symmetrized_report.to_dict(),
        }


def check_ga(spec: MetricSpec, m: Optional[int] = None,
             grid_resolution: int = 64, tol_pos: float = POSITIVITY_TOL) -> GAReport:
    """Check that F is Finsler and that its symmetrization is, too.

    Both halves matter: the Matsumoto family fails on F itself while the
    Randers and two-order families fail on the symmetrized metric first.
    """
    base = check_validity(spec, m, grid_resolution, tol_pos)
    sym = check_validity(symmetrize(spec, m), m, grid_resolution, tol_pos)
    if base.verdict == "finsler" and sym.verdict == "finsler":
        verdict = "finsler"
    elif "indefinite" in (base.verdict, sym.verdict):
        verdict = "indefinite"
    else:
        verdict = "degenerate"
    return GAReport(verdict=verdict, metric_report=base, symmetrized_report=sym)


_FAMILY_MAKERS = {
    "randers": (randers, 0.995),
    "two_order": (two_order, 0.995),
    "matsumoto": (matsumoto, 0.98),
}


def bisect_threshold(family, m: int = 2, b_direction=None, tol: float = 1e-3,
                     grid_resolution: int = 128, b_max: Optional[float] = None) -> float:
    """Locate the drift strength where the symmetrization verdict flips.

    ``family`` is a zoo name or a callable ``t -> MetricSpec``.  The scan
    asserts a single monotone pass/fail transition over ``[0, b_max)`` and
    bisects it to within ``tol``.
    """
    dim = m + 1
    if b_direction is None:
        b_direction = np.zeros(dim)
        b_direction[-1] = 1.0
    b_direction = np.asarray(b_direction, dtype=float)
    b_direction = b_direction / np.linalg.norm(b_direction)

    if callable(family):
        maker = family
        if b_max is None:
            raise ValueError("b_max is required for a callable family")
    else:
        try:
            ctor, default_max = _FAMILY_MAKERS[family]
        except KeyError:
            raise ValueError(f"unknown family {family!r}") from None
        maker = lambda t: ctor(t * b_direction)
        if b_max is None:
            b_max = default_max

    def ga_ok(t: float) -> bool:
        return check_ga(maker(t), m, grid_resolution).verdict == "finsler"

    scan = np.linspace(0.0, b_max, 9)
    flags = [ga_ok(t) for t in scan]
    if all(flags) or not any(flags):
        raise NoTransition(f"verdict constant over [0, {b_max}]")
    if flags != sorted(flags, reverse=True):
        raise NumericalBreakdown("verdict is not monotone over the scan interval")

    lo = scan[max(i for i, ok in enumerate(flags) if ok)]
    hi = scan[min(i for i, ok in enumerate(flags) if not ok)]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ga_ok(mid):
            lo = mid
        else:
            hi = mid
    b_star = 0.5 * (lo + hi)
    if not ga_ok(max(b_star - tol, 0.0)) or ga_ok(b_star + tol):
        raise NumericalBreakdown("threshold bracket inconsistent at +-tol")
    return float(b_star)
