import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull, Delaunay

from conftest import unit_square_two_triangles
from vortexopt.mesh import (
    Disk,
    Dumbbell,
    Heart,
    MeshError,
    Rectangle,
    TriMesh,
    annulus_overlap_area,
    boundary_loops,
    boundary_polygon_area,
    disk_overlap_area,
    generate_domain,
    load_mesh,
    mesh_metrics,
    save_mesh,
    shoelace_area,
    unit_heart_area,
)


def check_invariants(mesh: TriMesh) -> None:
    v, t = mesh.vertices, mesh.triangles
    p = v[t]
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    assert (signed > 0).all()
    # per-triangle shoelace matches the stored areas
    shoelace = np.array([shoelace_area(tri) for tri in p[: min(len(p), 500)]])
    np.testing.assert_allclose(shoelace, mesh.element_area[: len(shoelace)], rtol=0, atol=1e-14)
    edges, counts = mesh.edges()
    assert set(np.unique(counts)) <= {1, 2}
    bd = edges[counts == 1]
    assert mesh.boundary_vertex[bd.ravel()].all()
    assert math.isclose(mesh.total_area, boundary_polygon_area(mesh), rel_tol=1e-12)
    m = mesh_metrics(mesh)
    assert 0 < m.h_min <= m.h_max <= m.diameter


class TestTriMesh:
    def test_unit_square(self):
        mesh = unit_square_two_triangles()
        m = mesh_metrics(mesh)
        assert m.total_area == pytest.approx(1.0, abs=1e-15)
        assert m.diameter == pytest.approx(math.sqrt(2), abs=1e-15)
        assert mesh.boundary_vertex.all()
        check_invariants(mesh)

    def test_clockwise_input_is_reoriented(self):
        v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = TriMesh.from_arrays(v, [[0, 2, 1]])
        assert mesh.element_area[0] == pytest.approx(0.5)
        check_invariants(mesh)

    def test_arrays_are_read_only(self):
        mesh = unit_square_two_triangles()
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 3.0

    @pytest.mark.parametrize(
        "verts, tris, match",
        [
            ([[0, 0], [1, 0], [0, 1]], [[0, 0, 1]], "repeated vertex index"),
            ([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], "zero area"),
            ([[0, 0], [1, 0], [0, 1]], [[0, 1, 3]], "out of range"),
            ([[0, 0], [1, 0], [0, 1], [0, 1e-13]], [[0, 1, 2], [3, 1, 2]], "duplicate vertices"),
        ],
    )
    def test_rejects_bad_input(self, verts, tris, match):
        with pytest.raises(MeshError, match=match):
            TriMesh.from_arrays(np.array(verts, dtype=float), tris)

    def test_rejects_non_manifold_edge(self):
        v = np.array([[0, 0], [1, 0], [0.5, 1], [0.5, -1], [0.5, 2.0]], dtype=float)
        with pytest.raises(MeshError, match="non-manifold"):
            TriMesh.from_arrays(v, [[0, 1, 2], [0, 1, 3], [0, 4, 1]])


class TestShapes:
    def test_parameters_must_be_positive(self):
        with pytest.raises(MeshError):
            Disk(0.0)
        with pytest.raises(MeshError):
            Rectangle(1.0, -2.0)
        with pytest.raises(MeshError):
            Heart(-1.0)

    def test_dumbbell_neck_narrower_than_lobe(self):
        with pytest.raises(MeshError, match="neck_half_width"):
            Dumbbell(1.0, 1.0, 1.0)

    def test_dumbbell_exact_area(self):
        # two unit disks, centres 3 apart, neck band |y| <= 0.2
        assert Dumbbell(1.0, 0.2, 1.0).area == pytest.approx(6.6885511067536166, rel=1e-14)

    def test_heart_scaled_to_area(self):
        assert unit_heart_area() == pytest.approx(3.6619726, abs=1e-6)
        assert Heart.with_area(18.85).area == pytest.approx(18.85, rel=1e-12)


class TestGenerateDomain:
    def test_disk_area_and_diameter(self, disk_fine):
        m = mesh_metrics(disk_fine)
        assert abs(m.total_area - 4 * math.pi) <= 0.01 * 4 * math.pi
        assert abs(m.diameter - 4.0) <= 0.04
        assert m.h_max <= 2 * 0.05
        check_invariants(disk_fine)

    def test_rectangle_exact(self):
        mesh = generate_domain(Rectangle(5.0, 4.0), 0.1)
        m = mesh_metrics(mesh)
        assert m.total_area == pytest.approx(20.0, rel=1e-10)
        assert m.diameter == pytest.approx(math.sqrt(41.0), rel=1e-10)
        assert m.h_max <= 0.2
        check_invariants(mesh)

    def test_dumbbell_area(self, dumbbell_mesh):
        m = mesh_metrics(dumbbell_mesh)
        loops = boundary_loops(dumbbell_mesh)
        assert len(loops) == 1
        polygon = shoelace_area(dumbbell_mesh.vertices[loops[0]])
        assert abs(m.total_area - polygon) <= 0.02 * polygon
        assert abs(m.total_area - Dumbbell(1.0, 0.2, 1.0).area) <= 0.02 * m.total_area
        assert m.h_max <= 0.1
        check_invariants(dumbbell_mesh)

    def test_heart(self, heart_mesh):
        assert abs(heart_mesh.total_area - 18.85) <= 0.02 * 18.85
        check_invariants(heart_mesh)

    def test_deterministic(self):
        a = generate_domain(Disk(1.0), 0.1)
        b = generate_domain(Disk(1.0), 0.1)
        assert np.array_equal(a.vertices, b.vertices)
        assert np.array_equal(a.triangles, b.triangles)

    @pytest.mark.parametrize("spec", [Disk(2.0), Rectangle(5.0, 4.0)])
    def test_area_error_shrinks_with_h(self, spec):
        errs = [abs(generate_domain(spec, h).total_area - spec.area) for h in (0.2, 0.1)]
        assert errs[1] <= errs[0]

    def test_rejects_coarse_h(self):
        with pytest.raises(MeshError, match="characteristic length"):
            generate_domain(Disk(1.0), 1.5)
        with pytest.raises(MeshError, match="fewer than 4 elements"):
            generate_domain(Dumbbell(1.0, 0.2, 1.0), 0.15)
        with pytest.raises(MeshError):
            generate_domain(Disk(1.0), 0.0)


class TestOverlap:
    def test_inscribed_disk_overlap_is_exact(self, disk_coarse):
        # the unit disk lies inside the polygonal radius-2 domain
        assert disk_overlap_area(disk_coarse, 1.0).sum() == pytest.approx(math.pi, rel=1e-12)
        full = disk_overlap_area(disk_coarse, 2.5)
        np.testing.assert_allclose(full, disk_coarse.element_area, rtol=1e-12)

    def test_annulus_is_difference(self, disk_coarse):
        ann = annulus_overlap_area(disk_coarse, 0.5, 1.5)
        assert ann.sum() == pytest.approx(math.pi * (1.5**2 - 0.5**2), rel=1e-12)
        assert (ann >= -1e-15).all()
        assert (ann <= disk_coarse.element_area + 1e-15).all()


class TestIO:
    def test_round_trip(self, tmp_path):
        mesh = generate_domain(Disk(2.0), 0.1)
        save_mesh(mesh, tmp_path / "m.node", tmp_path / "m.ele")
        back = load_mesh(tmp_path / "m.node", tmp_path / "m.ele")
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.triangles, mesh.triangles)
        assert mesh_metrics(back) == mesh_metrics(mesh)
        save_mesh(back, tmp_path / "b.node", tmp_path / "b.ele")
        assert (tmp_path / "b.node").read_bytes() == (tmp_path / "m.node").read_bytes()
        assert (tmp_path / "b.ele").read_bytes() == (tmp_path / "m.ele").read_bytes()

    def test_unit_square_file(self, tmp_path):
        (tmp_path / "n").write_text("4 2\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n")
        (tmp_path / "e").write_text("2 3\n0 0 1 2\n1 0 2 3\n")
        assert load_mesh(tmp_path / "n", tmp_path / "e").total_area == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "ele, match",
        [
            ("2 3\n0 0 1 2\n1 0 2 2\n", ":3: degenerate triangle"),
            ("2 3\n0 0 1 2\n1 0 2 7\n", ":3: vertex index out of range"),
            ("2 3\n0 0 1 2\n1 0 2 x\n", ":3: cannot parse"),
            ("2 3\n0 0 1 2\n", ":1: header declares 2"),
        ],
    )
    def test_load_errors_name_the_line(self, tmp_path, ele, match):
        (tmp_path / "n").write_text("4 2\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n")
        (tmp_path / "e").write_text(ele)
        with pytest.raises(MeshError, match=match):
            load_mesh(tmp_path / "n", tmp_path / "e")

    def test_zero_area_triangle_in_file(self, tmp_path):
        (tmp_path / "n").write_text("4 2\n0 0 0\n1 1 0\n2 2 0\n3 0 1\n")
        (tmp_path / "e").write_text("2 3\n0 0 1 3\n1 0 1 2\n")
        with pytest.raises(MeshError, match=":3: degenerate triangle \\(zero area\\)"):
            load_mesh(tmp_path / "n", tmp_path / "e")


points = st.lists(
    st.tuples(st.floats(-1, 1, allow_nan=False), st.floats(-1, 1, allow_nan=False)), min_size=4, max_size=40
)


@settings(max_examples=40, deadline=None)
@given(points)
def test_delaunay_meshes_cover_their_hull(pts):
    pts = np.unique(np.round(np.array(pts), 6), axis=0)
    if len(pts) < 4:
        return
    try:
        hull = ConvexHull(pts)
        tri = Delaunay(pts)
    except Exception:  # collinear input
        return
    # drop slivers the validator rightly rejects
    p = pts[tri.simplices]
    a = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    if a.min() <= 1e-12:
        return
    mesh = TriMesh.from_arrays(pts, tri.simplices)
    assert mesh.total_area == pytest.approx(hull.volume, rel=1e-10)
    check_invariants(mesh)
