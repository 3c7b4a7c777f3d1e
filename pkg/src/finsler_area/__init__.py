"""Numerical toolkit for Busemann-Hausdorff (Finsler) area.

Computes the area integrand of a Finsler metric through the spherical
Radon transform, checks symmetrization/ellipticity conditions and sharp
anisotropy thresholds, solves the Dirichlet problem for Finsler-minimal
graphs, and verifies comparison, convex-hull, gradient-bound, and
isoperimetric inequalities.
"""

__version__ = "0.1.0"

from . import cartan, errors, graphsolver, meshes, metrics, radon, surfaces  # noqa: F401
