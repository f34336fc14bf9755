"""High-contrast energy maximisation and minimisation over two-valued fields.

``maximize`` repeatedly replaces the set ``D`` by the super-level set of its own
stream function; the energy never decreases and the iteration settles on a
local maximiser.

``minimize`` computes the sub-level set of the current stream function as a
candidate but only moves part of the way: the lowest-``u`` part ``B2`` of the
new region is exchanged with the highest-``u`` part ``B1`` of the abandoned
region, with the exchanged measure halved until

    int_{B2} u - int_{B1} u + theta (alpha - beta) |B1|^{3/2} < 0,

which guarantees a strict decrease of the energy. ``theta = d / (2 sqrt(pi))``
for a domain of diameter ``d``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from . import poisson_fem as fem
from .low_contrast import low_contrast_sets, random_equal_measure_set
from .mesh import TriMesh, mesh_diameter
from .rearrange import LevelQuery, bathtub_set, default_tol, element_representative, select_prefix, vorticity_from_set

# default energy-change threshold for stopping
PSI_TOL = 5e-3

STOP_DELTA_PSI = "delta_psi_below_TOL"
STOP_SET_UNCHANGED = "set_unchanged"
STOP_MAX_ITER = "max_iter"
STOP_SWAP_FLOOR = "swap_floor"

GATES = ("theta", "exact")

Mask = NDArray[np.bool_]


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    psi: float
    measure_D: float
    set_change_area: float
    halvings: int = 0
    margin: float | None = None


@dataclass(frozen=True, eq=False)
class OptimizationTrace:
    iterations: tuple[IterationRecord, ...]
    final_field: fem.VorticityField
    final_solution: fem.StreamSolution
    stop_reason: str
    label: str = ""

    @property
    def psi(self) -> list[float]:
        return [r.psi for r in self.iterations]

    @property
    def final_psi(self) -> float:
        return self.iterations[-1].psi

    @property
    def final_mask(self) -> Mask:
        return self.final_field.mask


@dataclass(frozen=True, eq=False)
class SwapProposal:
    B1: NDArray[np.int64]
    B2: NDArray[np.int64]
    A_prime: float
    theta: float


def theta_constant(diameter: float, dim: int = 2) -> float:
    """``d / (N omega_N^{1/N})`` with ``omega_N`` the volume of the unit ball in R^N."""
    omega = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)
    return diameter / (dim * omega ** (1.0 / dim))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _check_params(mesh: TriMesh, alpha: float, beta: float, A: float) -> None:
    if not alpha > beta:
        raise ValueError(f"contrast must be positive: need alpha > beta, got alpha={alpha}, beta={beta}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not 0 < A < mesh.total_area:
        raise ValueError(f"A={A} outside (0, {mesh.total_area})")


def as_mask(mesh: TriMesh, set_D) -> Mask:
    s = np.asarray(set_D)
    if s.dtype == bool:
        if s.shape != (mesh.n_elements,):
            raise ValueError("boolean set mask has the wrong length")
        return s.copy()
    m = np.zeros(mesh.n_elements, dtype=bool)
    m[s.astype(np.int64)] = True
    return m


def symmetric_difference_area(mesh: TriMesh, a, b) -> float:
    return float(mesh.element_area[as_mask(mesh, a) ^ as_mask(mesh, b)].sum())


def elements_in_annulus(mesh: TriMesh, r_inner: float, r_outer: float, center=(0.0, 0.0)) -> Mask:
    """Elements whose centroid lies in ``r_inner <= |x - center| <= r_outer``."""
    r = np.linalg.norm(mesh.element_centroid - np.asarray(center, dtype=float), axis=1)
    return (r >= r_inner) & (r <= r_outer)


def ball_set(mesh: TriMesh, center, A: float) -> NDArray[np.int64]:
    """Elements nearest ``center`` (by centroid distance) with total area closest to ``A``."""
    d = np.linalg.norm(mesh.element_centroid - np.asarray(center, dtype=float), axis=1)
    order = np.lexsort((np.arange(mesh.n_elements), d))
    k = select_prefix(mesh.element_area[order], A)
    return np.sort(order[:k])


def random_set(mesh: TriMesh, A: float, seed: int) -> NDArray[np.int64]:
    return random_equal_measure_set(mesh, A, np.random.default_rng(seed))


def _integral(mesh: TriMesh, rep: NDArray[np.float64], idx) -> float:
    idx = np.asarray(idx, dtype=np.int64)
    return float(np.dot(mesh.element_area[idx], rep[idx]))


# ---------------------------------------------------------------------------
# maximisation
# ---------------------------------------------------------------------------


def maximize(
    mesh: TriMesh,
    alpha: float,
    beta: float,
    A: float,
    initial_D=None,
    tol: float | None = None,
    max_iter: int = 100,
    psi_tol: float = PSI_TOL,
    label: str = "",
) -> OptimizationTrace:
    """Energy ascent by repeated super-level-set updates.

    Stops when the energy changes by less than ``psi_tol``, when the set stops
    changing (or revisits an earlier set), or after ``max_iter`` updates. A
    candidate whose energy is lower than the current one can only come from
    the measure mismatch between element sets; it is not accepted and the run
    stops there.
    """
    _check_params(mesh, alpha, beta, A)
    op = fem.assemble(mesh)
    if initial_D is None:
        initial_D = low_contrast_sets(mesh, beta, A, tol).D_M
    D = as_mask(mesh, initial_D)
    fld = vorticity_from_set(mesh, D, alpha, beta)
    sol = fem.solve(op, fld)
    records = [IterationRecord(0, sol.psi, fld.measure_D, 0.0)]
    seen = {D.tobytes()}
    query = LevelQuery("super", A, tol)
    stop = STOP_MAX_ITER

    for n in range(1, max_iter + 1):
        res = bathtub_set(mesh, element_representative(mesh, sol.nodal_u), query)
        new = as_mask(mesh, res.set_D)
        key = new.tobytes()
        if key in seen:
            stop = STOP_SET_UNCHANGED
            break
        new_fld = vorticity_from_set(mesh, new, alpha, beta)
        new_sol = fem.solve(op, new_fld)
        dpsi = new_sol.psi - sol.psi
        if dpsi < 0:
            stop = STOP_DELTA_PSI
            break
        records.append(IterationRecord(n, new_sol.psi, new_fld.measure_D, symmetric_difference_area(mesh, D, new)))
        seen.add(key)
        D, fld, sol = new, new_fld, new_sol
        if dpsi < psi_tol:
            stop = STOP_DELTA_PSI
            break

    return OptimizationTrace(tuple(records), fld, sol, stop, label)


# ---------------------------------------------------------------------------
# minimisation
# ---------------------------------------------------------------------------


def swap_feasible(mesh: TriMesh, u, B1, B2, alpha: float, beta: float, theta: float) -> tuple[bool, float]:
    """Check the sufficient condition for an exchange to lower the energy.

    Returns ``(margin < 0, margin)`` with
    ``margin = int_{B2} u - int_{B1} u + theta (alpha - beta) |B1|^{3/2}``.
    """
    b1 = np.unique(np.asarray(B1, dtype=np.int64))
    b2 = np.unique(np.asarray(B2, dtype=np.int64))
    if np.intersect1d(b1, b2).size:
        raise ValueError("B1 and B2 must be disjoint")
    rep = element_representative(mesh, u)
    area_b1 = float(mesh.element_area[b1].sum())
    margin = _integral(mesh, rep, b2) - _integral(mesh, rep, b1) + theta * (alpha - beta) * area_b1**1.5
    return margin < 0.0, margin


def _lowest_part(mesh: TriMesh, rep, region: NDArray[np.int64], measure: float, lowest: bool) -> NDArray[np.int64]:
    """Part of ``region`` with the smallest (or largest) values of total area closest to ``measure``."""
    if measure <= 0 or region.size == 0:
        return region[:0]
    key = rep[region] if lowest else -rep[region]
    order = region[np.lexsort((region, key))]
    k = select_prefix(mesh.element_area[order], measure)
    return np.sort(order[:k])


def propose_swap(
    mesh: TriMesh,
    rep: NDArray[np.float64],
    D: Mask,
    candidate: Mask,
    A_prime: float,
    A: float,
    theta: float,
) -> SwapProposal:
    """``B2``: lowest-``u`` part of ``candidate \\ D`` of measure about ``A_prime``;
    ``B1``: highest-``u`` part of ``D \\ candidate`` of matching measure.

    ``B1`` is sized to also pull ``|D|`` back towards ``A`` by at most half an
    element, so repeated exchanges do not drift away from the target measure.
    """
    B = np.flatnonzero(candidate & ~D)
    Bp = np.flatnonzero(D & ~candidate)
    B2 = _lowest_part(mesh, rep, B, A_prime, lowest=True)
    half = 0.5 * float(mesh.element_area.max())
    drift = float(np.clip(mesh.element_area[D].sum() - A, -half, half))
    target = float(mesh.element_area[B2].sum()) + drift if B2.size else 0.0
    B1 = _lowest_part(mesh, rep, Bp, target, lowest=False)
    return SwapProposal(B1=B1, B2=B2, A_prime=A_prime, theta=theta)


def minimize(
    mesh: TriMesh,
    alpha: float,
    beta: float,
    A: float,
    initial_D=None,
    tol: float | None = None,
    max_iter: int = 100,
    swap_floor: float | None = None,
    psi_tol: float = PSI_TOL,
    label: str = "",
    gate: str = "theta",
) -> OptimizationTrace:
    """Energy descent by gated partial exchanges towards the sub-level set.

    Each outer iteration solves once for the current set, forms the
    sub-level-set candidate and stops if its energy differs from the current
    one by less than ``psi_tol``. Otherwise the exchanged measure starts at
    ``|candidate \\ D|`` and is halved until the exchange passes
    :func:`swap_feasible`, or drops below ``swap_floor`` (default: the
    smallest element area), which ends the run.

    ``gate="theta"`` accepts an exchange by the sufficient condition of
    :func:`swap_feasible`. ``gate="exact"`` requires a first-order decrease
    (``int_{B2} u < int_{B1} u``) and then checks the energy of the exchanged
    set directly; it costs one extra solve per trial but is far less
    conservative on fine meshes.
    """
    if gate not in GATES:
        raise ValueError(f"gate must be one of {GATES}, got {gate!r}")
    _check_params(mesh, alpha, beta, A)
    op = fem.assemble(mesh)
    if swap_floor is None:
        swap_floor = float(mesh.element_area.min())
    theta = theta_constant(mesh_diameter(mesh.vertices))
    if initial_D is None:
        initial_D = low_contrast_sets(mesh, beta, A, tol).D_m
    D = as_mask(mesh, initial_D)
    fld = vorticity_from_set(mesh, D, alpha, beta)
    sol = fem.solve(op, fld)
    records = [IterationRecord(0, sol.psi, fld.measure_D, 0.0)]
    query = LevelQuery("sub", A, tol)
    stop = STOP_MAX_ITER

    for n in range(1, max_iter + 1):
        rep = element_representative(mesh, sol.nodal_u)
        candidate = as_mask(mesh, bathtub_set(mesh, rep, query).set_D)
        if np.array_equal(candidate, D):
            stop = STOP_DELTA_PSI
            break
        cand_psi = fem.solve(op, vorticity_from_set(mesh, candidate, alpha, beta)).psi
        if abs(cand_psi - sol.psi) < psi_tol:
            stop = STOP_DELTA_PSI
            break

        A_prime = float(mesh.element_area[candidate & ~D].sum())
        halvings = 0
        new_sol = None
        while A_prime >= swap_floor:
            prop = propose_swap(mesh, rep, D, candidate, A_prime, A, theta)
            new = D.copy()
            new[prop.B1] = False
            new[prop.B2] = True
            if gate == "theta":
                ok, margin = swap_feasible(mesh, sol.nodal_u, prop.B1, prop.B2, alpha, beta, theta)
                if ok:
                    new_fld = vorticity_from_set(mesh, new, alpha, beta)
                    new_sol = fem.solve(op, new_fld)
                    break
            else:
                margin = _integral(mesh, rep, prop.B2) - _integral(mesh, rep, prop.B1)
                if margin < 0:
                    new_fld = vorticity_from_set(mesh, new, alpha, beta)
                    trial = fem.solve(op, new_fld)
                    if trial.psi < sol.psi:
                        new_sol = trial
                        break
            A_prime *= 0.5
            halvings += 1
        if new_sol is None:
            stop = STOP_SWAP_FLOOR
            break

        records.append(
            IterationRecord(
                n, new_sol.psi, new_fld.measure_D, symmetric_difference_area(mesh, D, new), halvings, margin
            )
        )
        D, fld, sol = new, new_fld, new_sol

    return OptimizationTrace(tuple(records), fld, sol, stop, label)


# ---------------------------------------------------------------------------
# multistart and the correlation probe
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Cluster:
    representative: OptimizationTrace
    members: list[OptimizationTrace] = field(default_factory=list)

    @property
    def psi(self) -> float:
        return self.representative.final_psi


def cluster_traces(mesh: TriMesh, traces: Sequence[OptimizationTrace], fraction: float = 0.02) -> list[Cluster]:
    """Group final sets whose symmetric difference is at most ``fraction * |domain|``.

    Traces are visited in order of decreasing final energy; each cluster is
    represented by its highest-energy member.
    """
    radius = fraction * mesh.total_area
    clusters: list[Cluster] = []
    for tr in sorted(traces, key=lambda t: -t.final_psi):
        for c in clusters:
            if symmetric_difference_area(mesh, c.representative.final_mask, tr.final_mask) <= radius:
                c.members.append(tr)
                break
        else:
            clusters.append(Cluster(tr, [tr]))
    return clusters


def multistart(
    mesh: TriMesh,
    alpha: float,
    beta: float,
    A: float,
    seeds: Sequence,
    tol: float | None = None,
    max_iter: int = 100,
    psi_tol: float = PSI_TOL,
    cluster_fraction: float = 0.02,
    direction: str = "max",
    gate: str = "theta",
) -> list[Cluster]:
    """Run :func:`maximize` (or :func:`minimize`) from several starts and
    return the distinct local optima.

    Each entry of ``seeds`` is an integer (random subset of measure about
    ``A`` drawn with that seed), a point ``(x, y)`` (ball of elements around
    it) or an explicit element set. Clusters come back sorted by energy,
    highest first. ``gate`` applies to minimisation only.
    """
    if len(seeds) == 0:
        raise ValueError("at least one seed is required")
    if direction not in ("max", "min"):
        raise ValueError(f"direction must be 'max' or 'min', got {direction!r}")
    traces = []
    for seed in seeds:
        init, label = initial_set(mesh, A, seed)
        if direction == "max":
            traces.append(maximize(mesh, alpha, beta, A, init, tol, max_iter, psi_tol, label=label))
        else:
            traces.append(minimize(mesh, alpha, beta, A, init, tol, max_iter, psi_tol=psi_tol, label=label, gate=gate))
    return cluster_traces(mesh, traces, cluster_fraction)


def initial_set(mesh: TriMesh, A: float, seed) -> tuple[NDArray[np.int64], str]:
    if isinstance(seed, (int, np.integer)):
        return random_set(mesh, A, int(seed)), f"random:{int(seed)}"
    arr = np.asarray(seed)
    if arr.dtype != bool and arr.shape == (2,) and arr.dtype.kind == "f":
        return ball_set(mesh, arr, A), f"ball:{arr[0]:g},{arr[1]:g}"
    return np.flatnonzero(as_mask(mesh, arr)), "explicit"


def correlation(mesh: TriMesh, f: fem.VorticityField, f_hat: fem.VorticityField) -> float:
    return float(np.sum(f.element_value * f_hat.element_value * mesh.element_area))


def rearrangement_correlation(
    mesh: TriMesh, f: fem.VorticityField, f_hat: fem.VorticityField
) -> tuple[float, fem.VorticityField]:
    """``int f f_hat`` and the member of the class of ``f`` that minimises it.

    The minimiser puts ``alpha`` on the elements where ``f_hat`` is smallest,
    with the usual index tie-break.
    """
    if f.alpha != f_hat.alpha or f.beta != f_hat.beta:
        raise ValueError("f and f_hat must share alpha and beta")
    if abs(f.measure_D - f_hat.measure_D) > float(mesh.element_area.max()):
        raise ValueError(
            f"f and f_hat must have the same measure of D, got {f.measure_D} and {f_hat.measure_D}"
        )
    res = bathtub_set(mesh, f_hat.element_value, LevelQuery("sub", f.measure_D))
    g = vorticity_from_set(mesh, res.set_D, f.alpha, f.beta)
    return correlation(mesh, f, f_hat), g


def conjecture_seed(mesh: TriMesh, f_hat: fem.VorticityField) -> NDArray[np.int64]:
    """Start set for maximisation that is farthest from ``f_hat`` within the class."""
    return rearrangement_correlation(mesh, f_hat, f_hat)[1].set_D


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def write_trace_csv(path: str | Path, trace: OptimizationTrace) -> None:
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "psi", "measure_D", "set_change_area", "halvings"])
        for r in trace.iterations:
            w.writerow([r.iteration, f"{r.psi:.17g}", f"{r.measure_D:.17g}", f"{r.set_change_area:.17g}", r.halvings])
        fh.write(f"# stop_reason={trace.stop_reason}\n")
