"""Conforming P1 triangulations of the computational domains.

Meshes are built deterministically: the rectangle from a structured grid with
alternating diagonals, every curved shape (disk, dumbbell, heart) from a
resampled boundary polygon plus a hexagonal lattice of interior points,
Delaunay-triangulated and smoothed. Curved domains deliberately avoid
ring-aligned templates, whose rows of elements share nearly equal values of
radial solutions and make discrete level sets ambiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, Delaunay, cKDTree

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]


class MeshError(ValueError):
    """Invalid mesh input or generation request."""


# ---------------------------------------------------------------------------
# TriMesh
# ---------------------------------------------------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _signed_areas(vertices: FloatArray, triangles: IntArray) -> FloatArray:
    p0, p1, p2 = (vertices[triangles[:, i]] for i in range(3))
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))


def _edge_counts(triangles: IntArray) -> tuple[IntArray, IntArray]:
    """Unique undirected edges (sorted vertex pairs) and how many triangles share each."""
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    edges, counts = np.unique(e, axis=0, return_counts=True)
    return edges, counts


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangulation with boundary flags and per-element geometry.

    Use :meth:`from_arrays` to build one; it orients every triangle
    counter-clockwise and validates the mesh.
    """

    vertices: FloatArray
    triangles: IntArray
    boundary_vertex: NDArray[np.bool_]
    element_area: FloatArray
    element_centroid: FloatArray
    boundary_edges: IntArray = field(repr=False)

    @classmethod
    def from_arrays(cls, vertices, triangles) -> "TriMesh":
        v = np.asarray(vertices, dtype=np.float64)
        t = np.array(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) == 0:
            raise MeshError("vertices must have shape (n, 2)")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise MeshError("triangles must have shape (m, 3)")
        if not np.isfinite(v).all():
            raise MeshError("non-finite vertex coordinates")
        if t.min() < 0 or t.max() >= len(v):
            raise MeshError("triangle vertex index out of range")
        repeated = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
        if repeated.any():
            raise MeshError(f"degenerate triangle {int(np.flatnonzero(repeated)[0])}: repeated vertex index")

        area = _signed_areas(v, t)
        scale = max(np.ptp(v[:, 0]), np.ptp(v[:, 1]), 1e-300) ** 2
        flat = np.abs(area) <= 1e-14 * scale
        if flat.any():
            raise MeshError(f"degenerate triangle {int(np.flatnonzero(flat)[0])}: zero area")
        neg = area < 0
        t[neg] = t[neg][:, [0, 2, 1]]
        area = np.abs(area)

        pairs = cKDTree(v).query_pairs(r=1e-12)
        if pairs:
            i, j = sorted(pairs)[0]
            raise MeshError(f"duplicate vertices {i} and {j}")

        edges, counts = _edge_counts(t)
        if (counts > 2).any():
            raise MeshError("non-manifold edge shared by more than two triangles")
        bedges = edges[counts == 1]
        bflag = np.zeros(len(v), dtype=bool)
        bflag[bedges.ravel()] = True

        centroid = v[t].mean(axis=1)
        return cls(
            vertices=_frozen(v),
            triangles=_frozen(t),
            boundary_vertex=_frozen(bflag),
            element_area=_frozen(area),
            element_centroid=_frozen(centroid),
            boundary_edges=_frozen(bedges),
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def interior_vertices(self) -> IntArray:
        return np.flatnonzero(~self.boundary_vertex)

    @property
    def total_area(self) -> float:
        return float(self.element_area.sum())

    def edges(self) -> tuple[IntArray, IntArray]:
        return _edge_counts(self.triangles)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeshMetrics:
    total_area: float
    diameter: float
    h_min: float
    h_max: float


def element_diameters(mesh: TriMesh) -> FloatArray:
    v, t = mesh.vertices, mesh.triangles
    lengths = [np.linalg.norm(v[t[:, i]] - v[t[:, (i + 1) % 3]], axis=1) for i in range(3)]
    return np.max(lengths, axis=0)


def mesh_diameter(vertices: FloatArray) -> float:
    """Largest pairwise vertex distance (attained on convex-hull vertices)."""
    pts = np.asarray(vertices, dtype=float)
    if len(pts) > 3:
        pts = pts[ConvexHull(pts).vertices]
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1)).max())


def mesh_metrics(mesh: TriMesh) -> MeshMetrics:
    h = element_diameters(mesh)
    return MeshMetrics(
        total_area=mesh.total_area,
        diameter=mesh_diameter(mesh.vertices),
        h_min=float(h.min()),
        h_max=float(h.max()),
    )


def boundary_loops(mesh: TriMesh) -> list[IntArray]:
    """Boundary edges chained into closed vertex loops, oriented with the mesh (CCW outer)."""
    t = mesh.triangles
    directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(directed, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    bd = directed[counts[inv.ravel()] == 1]
    nxt = {int(a): int(b) for a, b in bd}
    loops = []
    remaining = set(nxt)
    while remaining:
        start = min(remaining)
        loop = [start]
        remaining.discard(start)
        cur = nxt[start]
        while cur != start:
            loop.append(cur)
            remaining.discard(cur)
            cur = nxt[cur]
        loops.append(np.array(loop))
    return loops


def shoelace_area(polygon: FloatArray) -> float:
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def boundary_polygon_area(mesh: TriMesh) -> float:
    """Signed shoelace area enclosed by the mesh's boundary loops (holes subtract)."""
    return sum(shoelace_area(mesh.vertices[loop]) for loop in boundary_loops(mesh))


# ---------------------------------------------------------------------------
# Shapes
# ---------------------------------------------------------------------------


def _resample_closed(points: FloatArray, h: float) -> FloatArray:
    """Resample a densely sampled closed curve at uniform arc length <= h."""
    closed = np.vstack([points, points[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(3, math.ceil(s[-1] / h))
    targets = np.arange(n) * (s[-1] / n)
    return np.column_stack([np.interp(targets, s, closed[:, 0]), np.interp(targets, s, closed[:, 1])])


def _polyline(points: FloatArray, h: float) -> FloatArray:
    """Open polyline resampled at spacing <= h; returns all points but the last."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(1, math.ceil(s[-1] / h))
    targets = np.arange(n) * (s[-1] / n)
    return np.column_stack([np.interp(targets, s, points[:, 0]), np.interp(targets, s, points[:, 1])])


@dataclass(frozen=True)
class Disk:
    radius: float

    def __post_init__(self):
        _check_positive(radius=self.radius)

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def characteristic_length(self) -> float:
        return self.radius


@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float

    def __post_init__(self):
        _check_positive(width=self.width, height=self.height)

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def characteristic_length(self) -> float:
        return min(self.width, self.height)


@dataclass(frozen=True)
class Dumbbell:
    """Two disks of radius ``lobe_radius`` joined by a straight neck.

    ``neck_length`` is the gap between the two disks along the axis, so the
    lobe centres sit at ``x = +-(lobe_radius + neck_length / 2)``.
    """

    lobe_radius: float
    neck_half_width: float
    neck_length: float

    def __post_init__(self):
        _check_positive(
            lobe_radius=self.lobe_radius, neck_half_width=self.neck_half_width, neck_length=self.neck_length
        )
        if self.neck_half_width >= self.lobe_radius:
            raise MeshError("dumbbell neck_half_width must be smaller than lobe_radius")

    @property
    def lobe_centers(self) -> tuple[tuple[float, float], tuple[float, float]]:
        c = self.lobe_radius + self.neck_length / 2
        return (-c, 0.0), (c, 0.0)

    @property
    def characteristic_length(self) -> float:
        return min(2 * self.neck_half_width, self.neck_length, self.lobe_radius)

    def boundary(self, h: float) -> FloatArray:
        R, w = self.lobe_radius, self.neck_half_width
        c = self.lobe_centers[1][0]
        phi0 = math.asin(w / R)
        x0 = c - R * math.cos(phi0)
        # resample each smooth piece separately so the four neck corners are vertices
        arc = np.linspace(-(math.pi - phi0), math.pi - phi0, 2000)
        right = _polyline(np.column_stack([c + R * np.cos(arc), R * np.sin(arc)]), h)
        top = _polyline(np.array([[x0, w], [-x0, w]]), h)
        arc = np.linspace(phi0, 2 * math.pi - phi0, 2000)
        left = _polyline(np.column_stack([-c + R * np.cos(arc), R * np.sin(arc)]), h)
        bottom = _polyline(np.array([[-x0, -w], [x0, -w]]), h)
        return np.vstack([right, top, left, bottom])

    @property
    def area(self) -> float:
        """Exact area of the union of the two disks and the neck strip."""
        R, w = self.lobe_radius, self.neck_half_width
        c = self.lobe_centers[1][0]
        # part of one disk inside the band |y| <= w on the neck side of its centre
        band = w * math.sqrt(R * R - w * w) + R * R * math.asin(w / R)
        return 2 * math.pi * R * R + 4 * w * c - 2 * band


def _heart_radius(phi: float) -> float:
    c, s = math.cos(phi), math.sin(phi)
    g = lambda r: (r * r - 1.0) ** 3 - r**5 * c * c * s**3  # noqa: E731
    return brentq(g, 1e-9, 3.0, xtol=1e-14, maxiter=500)


def _unit_heart(n: int = 4000) -> FloatArray:
    phi = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    r = np.array([_heart_radius(p) for p in phi])
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


_UNIT_HEART_AREA: float | None = None


def unit_heart_area() -> float:
    """Area enclosed by the curve (x^2 + y^2 - 1)^3 = x^2 y^3."""
    global _UNIT_HEART_AREA
    if _UNIT_HEART_AREA is None:
        _UNIT_HEART_AREA = shoelace_area(_unit_heart(20000))
    return _UNIT_HEART_AREA


@dataclass(frozen=True)
class Heart:
    """The curve (x^2 + y^2 - 1)^3 = x^2 y^3 scaled linearly by ``scale``."""

    scale: float

    def __post_init__(self):
        _check_positive(scale=self.scale)

    @classmethod
    def with_area(cls, area: float) -> "Heart":
        _check_positive(area=area)
        return cls(math.sqrt(area / unit_heart_area()))

    @property
    def area(self) -> float:
        return self.scale**2 * unit_heart_area()

    @property
    def characteristic_length(self) -> float:
        return self.scale

    def boundary(self, h: float) -> FloatArray:
        return _resample_closed(self.scale * _unit_heart(), h)


ShapeSpec = Union[Disk, Rectangle, Dumbbell, Heart]


def _check_positive(**params: float) -> None:
    for name, value in params.items():
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise MeshError(f"{name} must be a positive finite number, got {value!r}")


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _points_in_polygon(points: FloatArray, polygon: FloatArray) -> NDArray[np.bool_]:
    """Even-odd rule point-in-polygon test, vectorised over points."""
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = polygon[:, 0][None, :], polygon[:, 1][None, :]
    x1, y1 = np.roll(polygon[:, 0], -1)[None, :], np.roll(polygon[:, 1], -1)[None, :]
    crosses = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_int = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return (crosses & (x < x_int)).sum(axis=1) % 2 == 1


def _distance_to_polygon(points: FloatArray, polygon: FloatArray) -> FloatArray:
    a = polygon[None, :, :]
    b = np.roll(polygon, -1, axis=0)[None, :, :]
    p = points[:, None, :]
    ab = b - a
    t = np.clip(((p - a) * ab).sum(-1) / (ab * ab).sum(-1), 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.sqrt(((p - closest) ** 2).sum(-1)).min(axis=1)


def _hex_lattice(polygon: FloatArray, h: float) -> FloatArray:
    lo, hi = polygon.min(axis=0), polygon.max(axis=0)
    dy = h * math.sqrt(3) / 2
    ny = math.ceil((hi[1] - lo[1]) / dy) + 1
    nx = math.ceil((hi[0] - lo[0]) / h) + 2
    # centre the lattice on the bounding box so symmetric shapes get symmetric lattices
    cx = 0.5 * (lo[0] + hi[0])
    j = np.arange(ny)
    ys = 0.5 * (lo[1] + hi[1]) + (j - (ny - 1) / 2) * dy
    i = np.arange(-nx, nx + 1)
    xs = cx + i[None, :] * h + 0.5 * h * (j[:, None] % 2)
    pts = np.column_stack([xs.ravel(), np.repeat(ys, len(i))])
    return pts


def _triangulate_polygon(polygon: FloatArray, interior: FloatArray) -> tuple[FloatArray, IntArray]:
    pts = np.vstack([polygon, interior])
    tri = Delaunay(pts).simplices
    cen = pts[tri].mean(axis=1)
    keep = _points_in_polygon(cen, polygon)
    tri = tri[keep]
    area = np.abs(_signed_areas(pts, tri))
    return pts, tri[area > 1e-12 * np.median(area)]


def _missing_polygon_edges(polygon_size: int, triangles: IntArray) -> list[int]:
    edges, counts = _edge_counts(triangles)
    present = {(int(a), int(b)) for a, b in edges[counts == 1]}
    missing = []
    for k in range(polygon_size):
        a, b = k, (k + 1) % polygon_size
        if (min(a, b), max(a, b)) not in present:
            missing.append(k)
    return missing


def _mesh_polygon(polygon: FloatArray, h: float, smoothing_sweeps: int = 12) -> TriMesh:
    """Conforming Delaunay mesh of a simple polygon with boundary spacing <= h."""
    for _ in range(8):
        lattice = _hex_lattice(polygon, h)
        inside = _points_in_polygon(lattice, polygon)
        lattice = lattice[inside]
        lattice = lattice[_distance_to_polygon(lattice, polygon) > 0.55 * h]
        nb = len(polygon)
        pts, tri = _triangulate_polygon(polygon, lattice)
        for _ in range(smoothing_sweeps):
            # Laplacian smoothing of interior points, then re-triangulate
            n = len(pts)
            edges, _ = _edge_counts(tri)
            acc = np.zeros((n, 2))
            deg = np.zeros(n)
            np.add.at(acc, edges[:, 0], pts[edges[:, 1]])
            np.add.at(acc, edges[:, 1], pts[edges[:, 0]])
            np.add.at(deg, edges[:, 0], 1)
            np.add.at(deg, edges[:, 1], 1)
            moved = pts.copy()
            movable = np.arange(nb, n)
            movable = movable[deg[movable] > 0]
            moved[movable] = acc[movable] / deg[movable, None]
            pts, tri = _triangulate_polygon(polygon, moved[nb:])
        missing = _missing_polygon_edges(nb, tri)
        if not missing:
            break
        # split every boundary edge the triangulation failed to recover
        mids = {k: 0.5 * (polygon[k] + polygon[(k + 1) % nb]) for k in missing}
        out = []
        for k in range(nb):
            out.append(polygon[k])
            if k in mids:
                out.append(mids[k])
        polygon = np.array(out)
    else:
        raise MeshError("could not recover the boundary polygon in the triangulation")
    used = np.unique(tri)
    remap = np.full(len(pts), -1)
    remap[used] = np.arange(len(used))
    return TriMesh.from_arrays(pts[used], remap[tri])


def _disk_mesh(R: float, h: float) -> TriMesh:
    n = max(6, math.ceil(2 * math.pi * R / h))
    phi = np.arange(n) * (2 * math.pi / n)
    return _mesh_polygon(np.column_stack([R * np.cos(phi), R * np.sin(phi)]), h)


def _rectangle_mesh(W: float, H: float, h: float) -> TriMesh:
    nx, ny = math.ceil(W / h), math.ceil(H / h)
    xs = np.linspace(-W / 2, W / 2, nx + 1)
    ys = np.linspace(-H / 2, H / 2, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b, c, d = a + 1, a + nx + 1, a + nx + 2
            # union-jack diagonals keep the mesh mirror-symmetric about both axes
            if (i + j) % 2 == 0:
                tris += [(a, b, d), (a, d, c)]
            else:
                tris += [(a, b, c), (b, d, c)]
    return TriMesh.from_arrays(pts, np.array(tris))


def generate_domain(spec: ShapeSpec, target_h: float) -> TriMesh:
    """Triangulate the domain described by ``spec`` with element size about ``target_h``."""
    _check_positive(target_h=target_h)
    if target_h >= spec.characteristic_length:
        raise MeshError(
            f"target_h={target_h} must be smaller than the characteristic length {spec.characteristic_length}"
        )
    if isinstance(spec, Disk):
        return _disk_mesh(spec.radius, target_h)
    if isinstance(spec, Rectangle):
        return _rectangle_mesh(spec.width, spec.height, target_h)
    if isinstance(spec, Dumbbell):
        if 2 * spec.neck_half_width / target_h < 4:
            raise MeshError(
                f"target_h={target_h} too coarse for the dumbbell neck: fewer than 4 elements across "
                f"width {2 * spec.neck_half_width}"
            )
        return _mesh_polygon(spec.boundary(target_h), target_h)
    if isinstance(spec, Heart):
        return _mesh_polygon(spec.boundary(target_h), target_h)
    raise TypeError(f"unknown shape {spec!r}")


def _disk_segment_area(p: FloatArray, q: FloatArray, r: float) -> float:
    """Signed area of triangle (0, p, q) intersected with the disk |x| <= r."""
    d = q - p
    a = d @ d
    b = 2 * (p @ d)
    c = p @ p - r * r
    ts = [0.0]
    disc = b * b - 4 * a * c
    if disc > 0:
        sq = math.sqrt(disc)
        for t in sorted(((-b - sq) / (2 * a), (-b + sq) / (2 * a))):
            if 0.0 < t < 1.0:
                ts.append(t)
    ts.append(1.0)
    total = 0.0
    for t0, t1 in zip(ts, ts[1:]):
        x0, x1 = p + t0 * d, p + t1 * d
        mid = p + 0.5 * (t0 + t1) * d
        cross = x0[0] * x1[1] - x0[1] * x1[0]
        if mid @ mid <= r * r:
            total += 0.5 * cross
        else:
            total += 0.5 * r * r * math.atan2(cross, x0 @ x1)
    return total


def disk_overlap_area(mesh: TriMesh, radius: float, center=(0.0, 0.0)) -> FloatArray:
    """Exact area of each element inside the disk of ``radius`` about ``center``."""
    c = np.asarray(center, dtype=float)
    rel = mesh.vertices - c
    dist = np.linalg.norm(rel, axis=1)[mesh.triangles]
    out = np.where(dist.max(axis=1) <= radius, mesh.element_area, 0.0)
    # elements not entirely inside may still intersect the disk
    for e in np.flatnonzero(dist.max(axis=1) > radius):
        p = rel[mesh.triangles[e]]
        out[e] = abs(sum(_disk_segment_area(p[i], p[(i + 1) % 3], radius) for i in range(3)))
    return out


def annulus_overlap_area(mesh: TriMesh, r_inner: float, r_outer: float, center=(0.0, 0.0)) -> FloatArray:
    """Exact area of each element inside ``r_inner <= |x - center| <= r_outer``."""
    inner = disk_overlap_area(mesh, r_inner, center) if r_inner > 0 else 0.0
    return disk_overlap_area(mesh, r_outer, center) - inner


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def save_mesh(mesh: TriMesh, node_file: str | Path, element_file: str | Path) -> None:
    with open(node_file, "w", newline="\n") as fh:
        fh.write(f"{mesh.n_vertices} 2\n")
        for i, (x, y) in enumerate(mesh.vertices):
            fh.write(f"{i} {x:.17g} {y:.17g}\n")
    with open(element_file, "w", newline="\n") as fh:
        fh.write(f"{mesh.n_elements} 3\n")
        for i, (a, b, c) in enumerate(mesh.triangles):
            fh.write(f"{i} {a} {b} {c}\n")


def _read_table(path: str | Path, ncols: int, kind: str, conv) -> list[list]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MeshError(f"{path}:1: empty {kind} file")
    header = lines[0].split()
    try:
        count, dim = int(header[0]), int(header[1])
    except (IndexError, ValueError):
        raise MeshError(f"{path}:1: bad {kind} header {lines[0]!r}") from None
    if dim != ncols:
        raise MeshError(f"{path}:1: expected second header field {ncols}, got {dim}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != ncols + 1:
            raise MeshError(f"{path}:{lineno}: expected {ncols + 1} fields, got {len(parts)}")
        try:
            idx = int(parts[0])
            vals = [conv(p) for p in parts[1:]]
        except ValueError:
            raise MeshError(f"{path}:{lineno}: cannot parse {line!r}") from None
        if idx != len(rows):
            raise MeshError(f"{path}:{lineno}: expected index {len(rows)}, got {idx}")
        rows.append((lineno, vals))
    if len(rows) != count:
        raise MeshError(f"{path}:1: header declares {count} rows, found {len(rows)}")
    return rows


def load_mesh(node_file: str | Path, element_file: str | Path) -> TriMesh:
    """Read a mesh from the plain-text node/element format.

    Boundary flags are always recomputed from edge adjacency.
    """
    nodes = _read_table(node_file, 2, "node", float)
    elems = _read_table(element_file, 3, "element", int)
    vertices = np.array([v for _, v in nodes], dtype=float)
    n = len(vertices)
    for lineno, (a, b, c) in elems:
        if min(a, b, c) < 0 or max(a, b, c) >= n:
            raise MeshError(f"{element_file}:{lineno}: vertex index out of range [0, {n})")
        if len({a, b, c}) < 3:
            raise MeshError(f"{element_file}:{lineno}: degenerate triangle (repeated vertex index)")
    triangles = np.array([v for _, v in elems], dtype=np.int64)
    area = _signed_areas(vertices, triangles)
    scale = max(np.ptp(vertices[:, 0]), np.ptp(vertices[:, 1])) ** 2
    for k in np.flatnonzero(np.abs(area) <= 1e-14 * scale):
        raise MeshError(f"{element_file}:{elems[k][0]}: degenerate triangle (zero area)")
    return TriMesh.from_arrays(vertices, triangles)
