import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamgap.errors import SingularSystemError
from beamgap.homogenization import (
    CellProblem,
    HomogenizedTensor,
    appendix_corrector_theta,
    appendix_tensor_closed_form,
    homogenized_tensor,
    solve_cell_problem,
)
from beamgap.lattice import MaterialParams, UnitCellGraph, make_beam, with_materials


def cross_with(gamma, eta, kappa, cross):
    return with_materials(cross, stiff=MaterialParams(gamma, eta, kappa))


def horizontal_coordinate(corrector):
    s = corrector.field.ops.mesh.coordinates(0)
    return np.where(s <= 0.5, s, s - 1.0)


class TestClosedForm:
    def test_unit(self):
        np.testing.assert_allclose(appendix_tensor_closed_form(1, 1, 1).voigt, np.diag([1, 1, 6 / 13]), atol=1e-15)

    def test_shear_entry(self):
        assert appendix_tensor_closed_form(2, 3, 4).entry(1, 2, 1, 2) == pytest.approx(1.8)

    def test_stiff_bending_limit(self):
        assert appendix_tensor_closed_form(1, 1e12, 3).entry(1, 2, 1, 2) == pytest.approx(1.5, rel=1e-9)

    def test_symmetries(self):
        t = appendix_tensor_closed_form(2, 3, 4)
        assert t.entry(1, 2, 2, 1) == t.entry(2, 1, 1, 2) == t.entry(1, 2, 1, 2)
        assert t.entry(1, 1, 2, 2) == 0


class TestCellProblem:
    def test_axial_correctors_vanish(self, cross):
        for jl in ((1, 1), (2, 2)):
            c = solve_cell_problem(cross, *jl, h=1 / 32)
            assert np.abs(c.field.values).max() <= 1e-12

    @pytest.mark.parametrize("params", [(1, 1, 1), (2, 3, 4), (1, 0.1, 10)])
    def test_shear_corrector_matches_closed_form(self, cross, params):
        gamma, eta, kappa = params
        c = solve_cell_problem(cross_with(*params, cross), 1, 2, h=1 / 64)
        y = horizontal_coordinate(c)
        err = np.abs(c.theta(0) - appendix_corrector_theta(y, eta, kappa)).max()
        assert err <= 1e-6
        assert c.residual <= 1e-10

    def test_quarter_turn_symmetry(self, cross):
        # N21 = N12 + 1 on the horizontal beam, and N21 on it mirrors -N12 on the vertical one
        cp = CellProblem(cross, 1 / 32)
        n12, n21 = cp.solve(0, 1), cp.solve(1, 0)
        np.testing.assert_allclose(n21.theta(0), n12.theta(0) + 1.0, atol=1e-11)
        np.testing.assert_allclose(n21.theta(0), -n12.theta(1), atol=1e-11)

    def test_pinning_changes_only_translations(self, cross):
        a = CellProblem(cross, 1 / 16, pin=0).solve(0, 1)
        b = CellProblem(cross, 1 / 16, pin=1).solve(0, 1)
        np.testing.assert_allclose(a.theta(0), b.theta(0), atol=1e-12)
        np.testing.assert_allclose(a.theta(1), b.theta(1), atol=1e-12)

    def test_disconnected_stiff_part(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0]])
        g = UnitCellGraph(verts, [make_beam(verts, 0, 1, MaterialParams(), "stiff")], np.eye(2), [(0, 1, (1, 0))])
        with pytest.raises(SingularSystemError):
            CellProblem(g, 0.1)

    def test_bad_indices(self, cross):
        with pytest.raises(ValueError):
            solve_cell_problem(cross, 0, 1, 0.1)


class TestHomogenizedTensor:
    def test_unit_cross(self, cross):
        t = homogenized_tensor(cross, 1 / 64)
        np.testing.assert_allclose(t.voigt, np.diag([1, 1, 6 / 13]), atol=1e-12)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_random_parameters(self, gamma, eta, kappa):
        from beamgap.lattice import build_square_example, stiff_subgraph

        cross = stiff_subgraph(build_square_example(45.0, 0.25))
        t = homogenized_tensor(cross_with(gamma, eta, kappa, cross), 1 / 16)
        ref = appendix_tensor_closed_form(gamma, eta, kappa)
        np.testing.assert_allclose(t.voigt, ref.voigt, rtol=1e-10, atol=1e-12 * gamma)
        assert max(t.symmetry_residuals().values()) <= 1e-10
        assert abs(t.energy([[0, 1], [-1, 0]])) <= 1e-10 * gamma

    def test_shear_free_limit(self, cross):
        t = homogenized_tensor(cross_with(1, 1, 1e-6, cross), 1 / 64)
        assert t.entry(1, 2, 1, 2) == pytest.approx(6e-6 / (12 + 1e-6), rel=1e-8)

    def test_pinning_independence(self, cross):
        a = homogenized_tensor(cross, 1 / 16, pin=0)
        b = homogenized_tensor(cross, 1 / 16, pin=1)
        np.testing.assert_allclose(a.C, b.C, atol=1e-10)

    def test_coercivity(self, cross):
        t = homogenized_tensor(cross, 1 / 16)
        # unit shear strain e12 = e21 = 1/sqrt(2) has energy 2 C1212
        assert t.coercivity() == pytest.approx(12 / 13)

    def test_energy_is_minimal(self, cross):
        """Random admissible perturbations of the corrector never lower the cell energy."""
        cp = CellProblem(cross, 1 / 16)
        e = np.array([[0.3, 0.7], [0.7, -0.2]])
        fields = {(j, l): cp.solve(j, l) for j in range(2) for l in range(2)}

        def energy(perturb):
            strains = None
            for (j, l), c in fields.items():
                s = cp.strains(c, j, l)
                s = [tuple(e[j, l] * q for q in beam) for beam in s]
                strains = s if strains is None else [tuple(a + b for a, b in zip(x, y)) for x, y in zip(strains, s)]
            if perturb is not None:
                from beamgap.homogenization import CellCorrector

                extra = cp.strains(CellCorrector(0, 0, cp.ops.field(perturb), 0, 0.0), 0, 0)
                # remove the source term that strains() adds for (0, 0)
                base = cp.strains(CellCorrector(0, 0, cp.ops.field(np.zeros_like(perturb)), 0, 0.0), 0, 0)
                extra = [tuple(x - y for x, y in zip(a, b)) for a, b in zip(extra, base)]
                strains = [tuple(a + b for a, b in zip(x, y)) for x, y in zip(strains, extra)]
            return cp.energy_form(strains, strains)

        e0 = energy(None)
        t = homogenized_tensor(cross, 1 / 16)
        assert e0 == pytest.approx(t.energy(e), rel=1e-12)
        rng = np.random.default_rng(0)
        for _ in range(20):
            d = 1e-3 * rng.normal(size=cp.ops.layout.ndof)
            assert energy(d) >= e0 - 1e-8 * abs(e0)

    def test_voigt_round_trip(self):
        V = np.array([[3.0, 1.0, 0.2], [1.0, 2.0, 0.1], [0.2, 0.1, 0.7]])
        np.testing.assert_allclose(HomogenizedTensor.from_voigt(V).voigt, V)
