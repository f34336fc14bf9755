"""P1 finite elements for ``-Laplace(u) = f`` in the domain, ``u = 0`` on its boundary.

The right-hand side is piecewise constant per element. The stiffness matrix on
the interior vertices is factorised once per mesh and reused by every solve.
"""

from __future__ import annotations

import csv
import weakref
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import NDArray

from .mesh import TriMesh

FloatArray = NDArray[np.float64]

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """The linear solve did not reach the requested residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class PoissonOperator:
    """Discrete operator bundle for one mesh.

    Attributes
    ----------
    stiffness : (n, n) CSR matrix over all vertices.
    load_map : (n, m) CSR matrix; ``load_map @ f`` gives the load vector for
        per-element values ``f`` (each element contributes ``f_e area_e / 3``
        to its three vertices).
    interior : indices of the interior vertices (the unknowns).
    """

    mesh: TriMesh
    stiffness: sp.csr_matrix
    load_map: sp.csr_matrix
    interior: NDArray[np.int64]
    _k_interior: sp.csc_matrix
    _lu: spla.SuperLU

    def load(self, f) -> FloatArray:
        return self.load_map @ _element_values(self.mesh, f)


@dataclass(frozen=True, eq=False)
class StreamSolution:
    nodal_u: FloatArray
    psi: float
    dirichlet: float
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class VorticityField:
    """Two-valued field: ``alpha`` on the elements of ``set_D``, ``beta`` elsewhere."""

    element_value: FloatArray
    alpha: float
    beta: float
    set_D: NDArray[np.int64]
    measure_D: float

    @property
    def mask(self) -> NDArray[np.bool_]:
        m = np.zeros(len(self.element_value), dtype=bool)
        m[self.set_D] = True
        return m


def _element_values(mesh: TriMesh, f) -> FloatArray:
    if isinstance(f, VorticityField):
        f = f.element_value
    vals = np.asarray(f, dtype=float)
    if vals.ndim == 0:
        vals = np.full(mesh.n_elements, float(vals))
    if vals.shape != (mesh.n_elements,):
        raise ValueError(f"expected {mesh.n_elements} element values, got shape {vals.shape}")
    if not np.isfinite(vals).all():
        raise ValueError("right-hand side has non-finite values")
    return vals


def local_stiffness(mesh: TriMesh) -> FloatArray:
    """Per-element 3x3 P1 stiffness blocks, ``K_ij = (e_i . e_j) / (4 area)``.

    ``e_i`` is the edge opposite vertex ``i``.
    """
    p = mesh.vertices[mesh.triangles]
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    return np.einsum("mik,mjk->mij", e, e) / (4.0 * mesh.element_area[:, None, None])


_OPERATORS: "weakref.WeakKeyDictionary[TriMesh, PoissonOperator]" = weakref.WeakKeyDictionary()


def assemble(mesh: TriMesh) -> PoissonOperator:
    """Assemble (or fetch the cached) operator bundle for ``mesh``."""
    op = _OPERATORS.get(mesh)
    if op is not None:
        return op
    interior = mesh.interior_vertices
    if len(interior) == 0:
        raise ValueError("mesh has no interior vertices: the Dirichlet problem has no unknowns")
    n, m = mesh.n_vertices, mesh.n_elements
    t = mesh.triangles
    kloc = local_stiffness(mesh)
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    K = sp.coo_matrix((kloc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()

    L = sp.coo_matrix(
        (np.repeat(mesh.element_area / 3.0, 3), (t.ravel(), np.repeat(np.arange(m), 3))), shape=(n, m)
    ).tocsr()

    K_ii = K[interior][:, interior].tocsc()
    lu = spla.splu(K_ii, permc_spec="COLAMD")
    op = PoissonOperator(mesh=mesh, stiffness=K, load_map=L, interior=interior, _k_interior=K_ii, _lu=lu)
    _OPERATORS[mesh] = op
    return op


def _operator(mesh_or_op) -> PoissonOperator:
    return mesh_or_op if isinstance(mesh_or_op, PoissonOperator) else assemble(mesh_or_op)


def solve_nodal(mesh_or_op, f, max_refinements: int = 5) -> tuple[FloatArray, float]:
    """Nodal solution and relative residual of the interior system."""
    op = _operator(mesh_or_op)
    b = op.load(f)[op.interior]
    u = np.zeros(op.mesh.n_vertices)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return u, 0.0
    x = op._lu.solve(b)
    res = np.linalg.norm(b - op._k_interior @ x) / bnorm
    for _ in range(max_refinements):
        if res <= RESIDUAL_TOL:
            break
        x = x + op._lu.solve(b - op._k_interior @ x)
        res = np.linalg.norm(b - op._k_interior @ x) / bnorm
    if res > RESIDUAL_TOL:
        x, info = spla.cg(op._k_interior, b, x0=x, rtol=RESIDUAL_TOL, maxiter=10 * len(b))
        res = np.linalg.norm(b - op._k_interior @ x) / bnorm
        if res > RESIDUAL_TOL:
            raise SolverError("Poisson solve did not converge", res)
    u[op.interior] = x
    return u, float(res)


def solve(mesh_or_op, f) -> StreamSolution:
    """Solve the Dirichlet problem with per-element right-hand side ``f``.

    ``f`` may be a :class:`VorticityField`, an array of element values or a
    scalar.
    """
    op = _operator(mesh_or_op)
    vals = _element_values(op.mesh, f)
    u, res = solve_nodal(op, vals)
    psi = float((op.load_map @ vals) @ u)
    return StreamSolution(nodal_u=u, psi=psi, dirichlet=dirichlet_energy(op, u), residual=res)


def energy_psi(mesh_or_op, f, u) -> float:
    """``sum_e f_e * area_e * mean(u over the vertices of e)``."""
    op = _operator(mesh_or_op)
    mesh = op.mesh
    vals = _element_values(mesh, f)
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise ValueError(f"expected {mesh.n_vertices} nodal values, got shape {u.shape}")
    return float(np.dot(vals * mesh.element_area, u[mesh.triangles].mean(axis=1)))


def dirichlet_energy(mesh_or_op, u) -> float:
    """Stiffness quadratic form ``u^T K u``, the discrete ``int |grad u|^2``."""
    op = _operator(mesh_or_op)
    u = np.asarray(u, dtype=float)
    if u.shape != (op.mesh.n_vertices,):
        raise ValueError(f"expected {op.mesh.n_vertices} nodal values, got shape {u.shape}")
    return float(u @ (op.stiffness @ u))


def l2_norm(mesh: TriMesh, f) -> float:
    vals = _element_values(mesh, f)
    return float(np.sqrt(np.dot(vals**2, mesh.element_area)))


def write_nodal_csv(path: str | Path, mesh: TriMesh, u: Sequence[float]) -> None:
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex_index", "x", "y", "u"])
        for i, ((x, y), ui) in enumerate(zip(mesh.vertices, u)):
            w.writerow([i, f"{x:.17g}", f"{y:.17g}", f"{ui:.17g}"])


def write_element_csv(path: str | Path, field: VorticityField) -> None:
    mask = field.mask
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element_index", "f", "indicator"])
        for i, (fv, ind) in enumerate(zip(field.element_value, mask)):
            w.writerow([i, f"{fv:.17g}", int(ind)])
