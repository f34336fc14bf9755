import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PSI_CENTRAL_DISK, PSI_TORSION_R2, centre_patch, strip_mesh, unit_square_two_triangles
from vortexopt import poisson_fem as fem
from vortexopt.mesh import Rectangle, generate_domain, mesh_metrics
from vortexopt.rearrange import vorticity_from_set


def central_value(mesh, u):
    return float(u[np.argmin(np.linalg.norm(mesh.vertices, axis=1))])


class TestAssemble:
    def test_single_interior_vertex_cotangent_weights(self):
        mesh = centre_patch()
        op = fem.assemble(mesh)
        # each centre-to-corner edge sees two 45 degree angles: weight (1 + 1) / 2
        assert op.stiffness[4, 4] == pytest.approx(4.0, abs=1e-14)
        # finite difference of the Dirichlet energy in the centre value
        e = np.zeros(mesh.n_vertices)
        e[4] = 1.0
        h = 1e-4
        d2 = (fem.dirichlet_energy(op, h * e) + fem.dirichlet_energy(op, -h * e)) / h**2
        assert d2 / 2 == pytest.approx(op.stiffness[4, 4], rel=1e-8)

    def test_rows_sum_to_zero(self):
        mesh = generate_domain(Rectangle(1.0, 1.0), 0.1)
        K = fem.assemble(mesh).stiffness
        rows = np.asarray(K.sum(axis=1)).ravel()
        assert np.abs(rows[mesh.interior_vertices]).max() < 1e-12
        assert abs(K - K.T).max() < 1e-14

    def test_load_of_one_sums_to_area(self, disk_coarse):
        op = fem.assemble(disk_coarse)
        assert op.load(1.0).sum() == pytest.approx(disk_coarse.total_area, rel=1e-12)

    def test_operator_is_cached(self, disk_coarse):
        assert fem.assemble(disk_coarse) is fem.assemble(disk_coarse)

    def test_no_interior_vertex(self):
        with pytest.raises(ValueError, match="no interior vertices"):
            fem.assemble(unit_square_two_triangles())


class TestSolve:
    def test_torsion_disk(self, disk_fine):
        sol = fem.solve(disk_fine, 1.0)
        assert abs(central_value(disk_fine, sol.nodal_u) - 1.0) <= 0.01
        assert abs(sol.psi - PSI_TORSION_R2) <= 0.01 * PSI_TORSION_R2
        assert sol.residual <= fem.RESIDUAL_TOL

    def test_zero_rhs(self, disk_coarse):
        sol = fem.solve(disk_coarse, 0.0)
        assert not sol.nodal_u.any()
        assert sol.psi == 0.0

    def test_central_patch_energy(self, disk_fine):
        r = np.linalg.norm(disk_fine.element_centroid, axis=1)
        f = np.where(r < 1.0, 2.0, 1.0)
        sol = fem.solve(disk_fine, f)
        assert abs(sol.psi - PSI_CENTRAL_DISK) <= 0.01 * PSI_CENTRAL_DISK

    def test_solution_invariants(self, disk_coarse):
        rng = np.random.default_rng(3)
        f = rng.uniform(0.0, 3.0, disk_coarse.n_elements)
        sol = fem.solve(disk_coarse, f)
        u = sol.nodal_u
        assert not u[disk_coarse.boundary_vertex].any()
        assert u.min() >= -1e-10 * u.max()
        assert sol.psi >= 0
        assert sol.psi == pytest.approx(fem.energy_psi(disk_coarse, f, u), rel=1e-13)

    def test_bad_rhs(self, disk_coarse):
        with pytest.raises(ValueError, match="element values"):
            fem.solve(disk_coarse, np.ones(3))
        f = np.ones(disk_coarse.n_elements)
        f[0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            fem.solve(disk_coarse, f)

    def test_solver_error_carries_residual(self):
        err = fem.SolverError("no luck", 3e-6)
        assert err.residual == 3e-6
        assert "3.000e-06" in str(err)

    def test_linearity(self, disk_coarse):
        rng = np.random.default_rng(0)
        f1, f2 = rng.uniform(0, 1, (2, disk_coarse.n_elements))
        u12 = fem.solve(disk_coarse, f1 + f2).nodal_u
        u1, u2 = fem.solve(disk_coarse, f1).nodal_u, fem.solve(disk_coarse, f2).nodal_u
        np.testing.assert_allclose(u12, u1 + u2, atol=1e-12 * u12.max())

    def test_comparison(self, disk_coarse):
        rng = np.random.default_rng(1)
        f1 = rng.uniform(0, 1, disk_coarse.n_elements)
        f2 = f1 + rng.uniform(0, 1, disk_coarse.n_elements)
        u1, u2 = fem.solve(disk_coarse, f1).nodal_u, fem.solve(disk_coarse, f2).nodal_u
        assert (u1 <= u2 + 1e-10 * u2.max()).all()


class TestEnergies:
    def test_energy_psi_is_load_inner_product(self):
        mesh = generate_domain(Rectangle(1.0, 1.0), 0.1)
        x, y = mesh.vertices.T
        u = (x + 0.5) * (0.5 - x) * (y + 0.5) * (0.5 - y)  # product of hats, zero on the boundary
        op = fem.assemble(mesh)
        assert fem.energy_psi(mesh, 1.0, u) == pytest.approx(op.load(1.0) @ u, rel=1e-14)
        assert fem.energy_psi(mesh, 2.0, u) == pytest.approx(2 * fem.energy_psi(mesh, 1.0, u), rel=1e-15)

    def test_energy_psi_shape_mismatch(self, disk_coarse):
        with pytest.raises(ValueError, match="nodal values"):
            fem.energy_psi(disk_coarse, 1.0, np.zeros(4))

    def test_dirichlet_energy(self, disk_coarse):
        assert fem.dirichlet_energy(disk_coarse, np.zeros(disk_coarse.n_vertices)) == 0.0
        u = fem.solve(disk_coarse, 1.0).nodal_u
        assert fem.dirichlet_energy(disk_coarse, 3.0 * u) == pytest.approx(9.0 * fem.dirichlet_energy(disk_coarse, u))

    def test_l2_norm(self):
        mesh = strip_mesh([0.0, 0.5, 1.0])
        f = np.array([2.0, 2.0, 1.0, 1.0])
        assert fem.l2_norm(mesh, f) == pytest.approx(math.sqrt(2.5))


two_valued = st.tuples(
    st.floats(0.1, 5.0), st.floats(0.05, 5.0), st.floats(0.05, 0.95), st.integers(0, 2**31 - 1)
)


@settings(max_examples=25, deadline=None)
@given(two_valued)
def test_galerkin_identity_and_bound(disk_coarse, params):
    beta, contrast, frac, seed = params
    rng = np.random.default_rng(seed)
    mesh = disk_coarse
    D = rng.random(mesh.n_elements) < frac
    fld = vorticity_from_set(mesh, D, beta + contrast, beta)
    sol = fem.solve(mesh, fld)
    two_fu = 2 * fem.energy_psi(mesh, fld, sol.nodal_u)
    assert abs(two_fu - sol.dirichlet - sol.psi) <= 1e-8 * sol.psi
    d = mesh_metrics(mesh).diameter
    assert sol.nodal_u.max() <= d / (2 * math.sqrt(math.pi)) * fem.l2_norm(mesh, fld)


def test_csv_exports(tmp_path, disk_coarse):
    sol = fem.solve(disk_coarse, 1.0)
    fem.write_nodal_csv(tmp_path / "u.csv", disk_coarse, sol.nodal_u)
    rows = list(csv.reader(open(tmp_path / "u.csv")))
    assert rows[0] == ["vertex_index", "x", "y", "u"]
    assert len(rows) == disk_coarse.n_vertices + 1
    assert float(rows[5][3]) == sol.nodal_u[4]
    fld = vorticity_from_set(disk_coarse, [0, 2], 2.0, 1.0)
    fem.write_element_csv(tmp_path / "f.csv", fld)
    rows = list(csv.reader(open(tmp_path / "f.csv")))
    assert rows[0] == ["element_index", "f", "indicator"]
    assert rows[1] == ["0", "2", "1"] and rows[2] == ["1", "1", "0"]
    assert b"\r" not in (tmp_path / "f.csv").read_bytes()
