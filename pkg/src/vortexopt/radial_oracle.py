"""Closed-form radial solutions of the Dirichlet Poisson problem on a disk.

For a radially symmetric right-hand side that is constant on concentric rings,
``-(1/r) (r u')' = f(r)`` with ``u(R) = 0`` has, on ring ``k``, the solution

    u(r) = a_k + b_k ln r - f_k r^2 / 4.

These are used as ground truth for the finite-element disk experiments.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class RadialConfig:
    """Rings ``(outer_radius, f_value)`` covering ``(0, R]`` from the inside out."""

    rings: tuple[tuple[float, float], ...]

    def __init__(self, rings: Sequence[tuple[float, float]]):
        rings = tuple((float(r), float(f)) for r, f in rings)
        if not rings:
            raise ValueError("at least one ring is required")
        radii = [r for r, _ in rings]
        if radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError(f"ring radii must be positive and strictly increasing, got {radii}")
        if any(f < 0 or not math.isfinite(f) for _, f in rings):
            raise ValueError("ring values must be finite and non-negative")
        object.__setattr__(self, "rings", rings)

    @property
    def R(self) -> float:
        return self.rings[-1][0]

    @property
    def inner_radii(self) -> list[float]:
        return [0.0] + [r for r, _ in self.rings[:-1]]


@dataclass(frozen=True)
class RadialSolution:
    config: RadialConfig
    a: tuple[float, ...]
    b: tuple[float, ...]
    psi: float


def _u_ring(a: float, b: float, f: float, r):
    # b * ln r is taken as 0 at r = 0 on the regular inner ring (b = 0 there)
    r = np.asarray(r, dtype=float)
    log_term = np.zeros_like(r) if b == 0.0 else b * np.log(r)
    return a + log_term - f * r**2 / 4.0


def _ring_integral(a: float, b: float, f: float, r0: float, r1: float) -> float:
    """Exact value of ``2 pi * int_{r0}^{r1} r u(r) dr`` for one ring."""

    def anti(r: float) -> float:
        if r == 0.0:
            return 0.0
        # int r dr, int r ln r dr, int r^3 dr
        return a * r**2 / 2 + b * (r**2 / 2 * math.log(r) - r**2 / 4) - f * r**4 / 16

    return 2.0 * math.pi * (anti(r1) - anti(r0))


def radial_solve(config: RadialConfig) -> RadialSolution:
    """Solve the piecewise radial problem by integrating the flux ``r u'`` outward.

    The flux satisfies ``r u'(r) = -M(r)`` with ``M(r) = int_0^r f(s) s ds``,
    which fixes the ``b_k``; the ``a_k`` then follow from ``u(R) = 0`` and
    continuity at each interface, working inward.
    """
    inner = config.inner_radii
    bs: list[float] = []
    enclosed = 0.0
    for (outer, f), r0 in zip(config.rings, inner):
        bs.append(f * r0**2 / 2.0 - enclosed)
        enclosed += f * (outer**2 - r0**2) / 2.0
    bs[0] = 0.0

    a_rev: list[float] = []
    u_outer = 0.0
    for k in reversed(range(len(config.rings))):
        outer, f = config.rings[k]
        b = bs[k]
        a = u_outer - (b * math.log(outer) if b else 0.0) + f * outer**2 / 4.0
        a_rev.append(a)
        r0 = inner[k]
        u_outer = a + (b * math.log(r0) if (b and r0 > 0) else 0.0) - f * r0**2 / 4.0
    a_coef = tuple(reversed(a_rev))

    psi = sum(
        f * _ring_integral(a, b, f, r0, outer)
        for (outer, f), r0, a, b in zip(config.rings, inner, a_coef, bs)
    )
    return RadialSolution(config=config, a=a_coef, b=tuple(bs), psi=psi)


def radial_psi(solution: RadialSolution, config: RadialConfig | None = None) -> float:
    """Energy ``int f u`` over the disk, from the exact ring antiderivatives."""
    config = config or solution.config
    return sum(
        f * _ring_integral(a, b, f, r0, outer)
        for (outer, f), r0, a, b in zip(config.rings, config.inner_radii, solution.a, solution.b)
    )


def radial_eval(solution: RadialSolution, r):
    """Evaluate ``u`` at radius (or array of radii) ``r`` in ``[0, R]``."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    R = solution.config.R
    if np.any(r_arr < 0) or np.any(r_arr > R * (1 + 1e-14)):
        raise ValueError(f"radius outside [0, {R}]")
    outers = np.array([o for o, _ in solution.config.rings])
    ring = np.minimum(np.searchsorted(outers, r_arr, side="left"), len(outers) - 1)
    out = np.empty_like(r_arr)
    for k, (_, f) in enumerate(solution.config.rings):
        mask = ring == k
        out[mask] = _u_ring(solution.a[k], solution.b[k], f, r_arr[mask])
    if np.ndim(r) == 0:
        return float(out[0])
    return out


def write_profile_csv(path: str | Path, solution: RadialSolution, n_samples: int = 201) -> None:
    r = np.linspace(0.0, solution.config.R, n_samples)
    u = radial_eval(solution, r)
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "u"])
        for ri, ui in zip(r, u):
            w.writerow([f"{ri:.17g}", f"{ui:.17g}"])


def two_ring_config(R: float, inner_radius: float, inner_value: float, outer_value: float) -> RadialConfig:
    """Disk of radius ``R`` with ``inner_value`` on ``r < inner_radius`` and ``outer_value`` outside."""
    return RadialConfig([(inner_radius, inner_value), (R, outer_value)])
