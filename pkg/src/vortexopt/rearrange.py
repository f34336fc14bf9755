"""Discrete bathtub principle and the bisection search for the threshold level.

Element sets are selected from per-element representative values of ``u``.
Sorting gives the authoritative selection; bisection on the distribution
function is kept as an independent route to the same threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .mesh import TriMesh
from .poisson_fem import VorticityField

Direction = Literal["super", "sub"]

DEFAULT_TOL_FRACTION = 5e-3


def default_tol(mesh: TriMesh) -> float:
    """Default measure tolerance, ``5e-3 * |domain|``."""
    return DEFAULT_TOL_FRACTION * mesh.total_area


@dataclass(frozen=True)
class LevelQuery:
    direction: Direction
    target_measure: float
    tol: float | None = None

    def __post_init__(self):
        if self.direction not in ("super", "sub"):
            raise ValueError(f"direction must be 'super' or 'sub', got {self.direction!r}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")

    def resolved_tol(self, mesh: TriMesh) -> float:
        return default_tol(mesh) if self.tol is None else self.tol


@dataclass(frozen=True)
class LevelResult:
    level: float
    measure: float
    plateau: bool
    iterations: int


@dataclass(frozen=True, eq=False)
class BathtubResult:
    level: float
    set_D: NDArray[np.int64]
    achieved_measure: float

    def mask(self, n_elements: int) -> NDArray[np.bool_]:
        m = np.zeros(n_elements, dtype=bool)
        m[self.set_D] = True
        return m


def element_representative(mesh: TriMesh, nodal_u) -> NDArray[np.float64]:
    """Mean of the three vertex values, i.e. the P1 interpolant at the centroid."""
    u = np.asarray(nodal_u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise ValueError(f"expected {mesh.n_vertices} nodal values, got shape {u.shape}")
    return u[mesh.triangles].mean(axis=1)


def _values(mesh: TriMesh, values) -> NDArray[np.float64]:
    v = np.asarray(values, dtype=float)
    if v.shape != (mesh.n_elements,):
        raise ValueError(f"expected {mesh.n_elements} element values, got shape {v.shape}")
    return v


def distribution(mesh: TriMesh, values, s: float, direction: Direction) -> float:
    """Area of the elements with value ``<= s`` (sub) or ``>= s`` (super)."""
    v = _values(mesh, values)
    sel = v <= s if direction == "sub" else v >= s
    return float(mesh.element_area[sel].sum())


def _check_target(mesh: TriMesh, A: float) -> None:
    if not 0 < A < mesh.total_area:
        raise ValueError(f"target measure {A} outside (0, {mesh.total_area})")


def bisection_level(mesh: TriMesh, values, query: LevelQuery, max_halvings: int = 200) -> LevelResult:
    """Bisection on the distribution function for the level ``t``.

    Stops as soon as ``|F(theta) - A| < tol``. When the distribution function
    jumps across ``A`` (a plateau of discrete values) no such level exists;
    then the jump level is returned with ``plateau=True``.
    """
    v = _values(mesh, values)
    A = float(query.target_measure)
    _check_target(mesh, A)
    tol = query.resolved_tol(mesh)
    sub = query.direction == "sub"

    lo, hi = float(v.min()), float(v.max())
    width_floor = 1e-15 * max(abs(lo), abs(hi), 1e-300)
    for it in range(1, max_halvings + 1):
        theta = 0.5 * (lo + hi)
        F = distribution(mesh, v, theta, query.direction)
        if abs(F - A) < tol:
            return LevelResult(theta, F, False, it)
        # F is non-decreasing in s for sub, non-increasing for super
        if (F < A) == sub:
            lo = theta
        else:
            hi = theta
        if hi - lo <= width_floor:
            break

    t = _jump_level(mesh, v, A, sub)
    return LevelResult(t, distribution(mesh, v, t, query.direction), True, it)


def _jump_level(mesh: TriMesh, v, A: float, sub: bool) -> float:
    """Level at which the distribution function first reaches ``A``."""
    order = np.argsort(v if sub else -v, kind="stable")
    cum = np.cumsum(mesh.element_area[order])
    k = min(int(np.searchsorted(cum, A * (1 - 1e-14))), len(v) - 1)
    return float(v[order[k]])


def _sort_order(values: NDArray[np.float64], direction: Direction) -> NDArray[np.int64]:
    idx = np.arange(len(values))
    # ties broken by ascending element index
    return np.lexsort((idx, values if direction == "sub" else -values))


def select_prefix(areas: NDArray[np.float64], A: float) -> int:
    """Length of the prefix whose cumulative area is closest to ``A``.

    Takes the longest prefix with cumulative area ``<= A`` and extends it by
    one element when that strictly reduces the distance to ``A``.
    """
    cum = np.cumsum(areas)
    k = int(np.searchsorted(cum, A, side="right"))
    if k < len(areas):
        below = cum[k - 1] if k > 0 else 0.0
        if abs(cum[k] - A) < abs(below - A):
            k += 1
    return k


def bathtub_set(mesh: TriMesh, values, query: LevelQuery) -> BathtubResult:
    """Elements of largest (super) or smallest (sub) value with total area close to ``A``."""
    v = _values(mesh, values)
    A = float(query.target_measure)
    _check_target(mesh, A)
    order = _sort_order(v, query.direction)
    k = select_prefix(mesh.element_area[order], A)
    chosen = np.sort(order[:k])
    level = float(v[order[k - 1]]) if k > 0 else float(v[order[0]])
    return BathtubResult(level=level, set_D=chosen, achieved_measure=float(mesh.element_area[chosen].sum()))


def vorticity_from_set(mesh: TriMesh, set_D, alpha: float, beta: float) -> VorticityField:
    """``alpha`` on the elements of ``set_D`` and ``beta`` elsewhere."""
    if not alpha > beta:
        raise ValueError(f"contrast must be positive: need alpha > beta, got alpha={alpha}, beta={beta}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    s = np.asarray(set_D)
    if s.dtype == bool:
        if s.shape != (mesh.n_elements,):
            raise ValueError("boolean set mask has the wrong length")
        idx = np.flatnonzero(s)
    else:
        idx = np.unique(s.astype(np.int64))
        if len(idx) and (idx[0] < 0 or idx[-1] >= mesh.n_elements):
            raise ValueError("element index out of range")
    vals = np.full(mesh.n_elements, float(beta))
    vals[idx] = float(alpha)
    return VorticityField(
        element_value=vals,
        alpha=float(alpha),
        beta=float(beta),
        set_D=idx,
        measure_D=float(mesh.element_area[idx].sum()),
    )


def write_set(path: str | Path, set_D, achieved_measure: float, level: float) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# achieved_measure={achieved_measure:.17g} t={level:.17g}\n")
        for i in np.asarray(set_D, dtype=np.int64):
            fh.write(f"{i}\n")


def read_set(path: str | Path) -> tuple[NDArray[np.int64], dict[str, float]]:
    meta: dict[str, float] = {}
    idx = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, val = item.partition("=")
                    meta[key] = float(val)
            elif line:
                idx.append(int(line))
    return np.array(idx, dtype=np.int64), meta
