"""Optimal two-valued vorticity fields in planar domains.

Piecewise-linear finite elements for ``-Laplace(u) = f`` with zero boundary
values, bathtub rearrangements, low-contrast level-set optima, the
high-contrast ascent and gated descent iterations, and closed-form radial
solutions for checking disk results.
"""

from .mesh import Disk, Dumbbell, Heart, MeshError, Rectangle, TriMesh, generate_domain, load_mesh, save_mesh
from .optimize import maximize, minimize, multistart, swap_feasible
from .poisson_fem import SolverError, StreamSolution, VorticityField, solve
from .radial_oracle import RadialConfig, radial_psi, radial_solve
from .rearrange import LevelQuery, bathtub_set, bisection_level, vorticity_from_set

__version__ = "0.1.0"

__all__ = [
    "Disk", "Dumbbell", "Heart", "MeshError", "Rectangle", "TriMesh", "generate_domain", "load_mesh", "save_mesh",
    "maximize", "minimize", "multistart", "swap_feasible",
    "SolverError", "StreamSolution", "VorticityField", "solve",
    "RadialConfig", "radial_psi", "radial_solve",
    "LevelQuery", "bathtub_set", "bisection_level", "vorticity_from_set",
]
