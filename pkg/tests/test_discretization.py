import numpy as np
import pytest
from tracking_control import Quantity, NumericalError
from tracking_control.discretization import (
    Mesh,
    TimeGrid,
    CoefficientSet,
    TridiagonalMatrix,
    build_mesh,
    build_time_grid,
    assemble_mass,
    assemble_operator,
    dirac_load,
    dirac_weights,
    trace,
    boundary_flux,
    discrete_norm
)


class TestMesh:

    def test_element_size_and_nodes(self):
        mesh = build_mesh(1.0, 200)
        assert mesh.h == pytest.approx(0.005)
        assert mesh.node_count == 201
        assert mesh.interior_count == 199

    def test_smallest_mesh(self):
        mesh = build_mesh(1.0, 2)
        assert np.array_equal(mesh.nodes, [0.0, 0.5, 1.0])

    def test_length_as_quantity(self):
        mesh = build_mesh(Quantity(2, 'm'), 4)
        assert mesh.h == pytest.approx(0.5)
        assert mesh.units == 'm'
        assert build_mesh('2 m', 4).length == 2.0

    @pytest.mark.parametrize('length, elements', [(0.0, 10), (-1.0, 10), (1.0, 1), (1.0, 2.5)])
    def test_invalid_mesh(self, length, elements):
        with pytest.raises(ValueError):
            Mesh(length, elements)

    def test_node_index(self):
        mesh = build_mesh(1.0, 20)
        assert mesh.node_index(0.3) == 6
        with pytest.raises(ValueError):
            mesh.node_index(0.31)

    def test_midpoint_is_an_exact_node(self):
        mesh = build_mesh(1.0, 200)
        assert mesh.nodes[100] == 0.5


class TestTimeGrid:

    def test_from_step_size(self):
        tg = build_time_grid(0.5, dt=1e-3)
        assert tg.step_count == 500
        assert tg.dt == pytest.approx(1e-3)
        assert len(tg.solve_times) == 500
        assert tg.solve_times[-1] == pytest.approx(0.5)

    def test_requires_steps_or_dt(self):
        with pytest.raises(ValueError):
            build_time_grid(1.0)

    def test_check_signal_length(self):
        tg = TimeGrid(1.0, 10)
        tg.check_signal(np.zeros(10))
        with pytest.raises(ValueError):
            tg.check_signal(np.zeros(11))

    def test_sample_broadcasts_constants(self):
        tg = TimeGrid(1.0, 4)
        assert np.array_equal(tg.sample(lambda t: 2.0), np.full(4, 2.0))


class TestTridiagonal:

    def test_factor_then_solve_matches_dense(self, rng):
        A = TridiagonalMatrix([1.0, -0.5], [4.0, 5.0, 3.0], [0.3, 2.0])
        b = rng.normal(size=3)
        x = A.factor().solve(b)
        assert np.allclose(x, np.linalg.solve(A.to_dense(), b), rtol=0, atol=1e-12)

    def test_large_system(self, rng):
        n = 50
        A = TridiagonalMatrix(rng.uniform(-1, 1, n - 1), rng.uniform(3, 4, n), rng.uniform(-1, 1, n - 1))
        b = rng.normal(size=n)
        assert np.allclose(A.matvec(A.factor().solve(b)), b, atol=1e-12)
        assert np.allclose(A.matvec(b), A.to_dense() @ b)

    def test_transpose(self):
        A = TridiagonalMatrix([1.0, 2.0], [3.0, 4.0, 5.0], [6.0, 7.0])
        assert np.array_equal(A.T.to_dense(), A.to_dense().T)

    def test_entry_convention(self):
        A = TridiagonalMatrix([1.0, 2.0], [3.0, 4.0, 5.0], [6.0, 7.0])
        assert A.entry(1, 0) == 1.0
        assert A.entry(0, 1) == 6.0
        assert A.entry(0, 2) == 0.0

    def test_window(self):
        A = TridiagonalMatrix(np.arange(4.0), np.arange(5.0) + 10, np.arange(4.0) + 20)
        W = A.window(0, 4)
        assert np.array_equal(W.to_dense(), A.to_dense()[1:4, 1:4])
        with pytest.raises(ValueError):
            A.window(2, 3)

    def test_zero_pivot(self):
        A = TridiagonalMatrix([1.0], [0.0, 1.0], [1.0])
        with pytest.raises(NumericalError):
            A.factor()

    def test_shape_check(self):
        with pytest.raises(ValueError):
            TridiagonalMatrix([1.0], [1.0, 2.0, 3.0], [1.0, 1.0])


class TestMass:

    def test_single_interior_node(self):
        M = assemble_mass(build_mesh(1.0, 2))
        assert M.size == 1
        assert M.main[0] == pytest.approx(1 / 3)

    def test_quarter_elements(self):
        M = assemble_mass(build_mesh(1.0, 4))
        assert np.allclose(M.main, 1 / 6)
        assert np.allclose(M.lower, 1 / 24)
        assert np.allclose(M.upper, 1 / 24)

    def test_row_sums_are_element_integrals(self):
        mesh = build_mesh(1.0, 10)
        M = assemble_mass(mesh, full=True).to_dense()
        sums = M.sum(axis=1)
        assert np.allclose(sums[1:-1], mesh.h)
        assert np.allclose(sums[[0, -1]], mesh.h / 2)

    @pytest.mark.parametrize('elements', [2, 3, 10, 57])
    def test_positive_definite(self, elements):
        M = assemble_mass(build_mesh(1.3, elements)).to_dense()
        np.linalg.cholesky(M)
        assert np.allclose(M, M.T)


def _oracle_matrix(mesh, a, drift, reaction, points=20):
    """Dense forward matrix by high-order Gauss-Legendre quadrature."""
    xg, wg = np.polynomial.legendre.leggauss(points)
    n = mesh.node_count
    K = np.zeros((n, n))
    h = mesh.h
    for e in range(mesh.element_count):
        x0 = mesh.nodes[e]
        x = x0 + 0.5 * h * (xg + 1)
        w = 0.5 * h * wg
        phi = [1 - (x - x0) / h, (x - x0) / h]
        dphi = [-1 / h, 1 / h]
        for i in range(2):
            for j in range(2):
                value = np.sum(w * (
                    a(x) * dphi[j] * dphi[i] + drift(x) * dphi[j] * phi[i] + reaction(x) * phi[j] * phi[i]
                ))
                K[e + i, e + j] += value
    return K


class TestOperator:

    def test_laplacian(self):
        mesh = build_mesh(1.0, 10)
        A = assemble_operator(mesh, CoefficientSet.constant(1.0), 0.0)
        assert np.allclose(A.main, 2 / mesh.h)
        assert np.allclose(A.lower, -1 / mesh.h)
        assert np.allclose(A.upper, -1 / mesh.h)

    def test_heat_operator_is_self_adjoint(self, heat):
        mesh = build_mesh(1.0, 10)
        forward = assemble_operator(mesh, heat, 0.3).to_dense()
        adjoint = assemble_operator(mesh, heat, 0.3, adjoint=True).to_dense()
        assert np.allclose(forward, adjoint)
        assert np.allclose(forward, forward.T)

    def test_variable_coefficients_match_oracle(self, variable_coefficients):
        mesh = build_mesh(1.0, 20)
        K = assemble_operator(mesh, variable_coefficients, 0.0, full=True).to_dense()
        oracle = _oracle_matrix(
            mesh,
            a=lambda x: 1 + 0.15 * np.cos(np.pi * x),
            drift=lambda x: -0.15 * np.pi * np.sin(np.pi * x) + 0.1 * np.sin(np.pi * x),
            reaction=lambda x: 0.3 + 0 * x
        )
        assert np.allclose(K, oracle, rtol=0, atol=1e-5)

    def test_adjoint_is_transpose_up_to_quadrature(self, variable_coefficients):
        # for a, b smooth the adjoint form equals the transposed forward form
        # after integrating the drift term by parts (no boundary terms on
        # the interior restriction)
        mesh = build_mesh(1.0, 40)
        forward = assemble_operator(mesh, variable_coefficients, 0.2).to_dense()
        adjoint = assemble_operator(mesh, variable_coefficients, 0.2, adjoint=True).to_dense()
        assert np.max(np.abs(adjoint - forward.T)) < 1e-2 * np.max(np.abs(forward))

    def test_non_finite_coefficients(self):
        bad = CoefficientSet(
            a=lambda t, x: np.where(x > 0.5, np.nan, 1.0),
            b=lambda t, x: 0 * x,
            c=lambda t, x: 0 * x,
            a0=1.0
        )
        with pytest.raises(NumericalError):
            assemble_operator(build_mesh(1.0, 4), bad, 0.0)


class TestCoefficients:

    def test_expression_derivatives_are_exact(self, variable_coefficients):
        x = np.linspace(0, 1, 7)
        assert np.allclose(variable_coefficients.da_dx(0.0, x), -0.15 * np.pi * np.sin(np.pi * x))
        assert np.allclose(variable_coefficients.d2a_dx2(0.0, x), -0.15 * np.pi ** 2 * np.cos(np.pi * x))
        assert np.allclose(variable_coefficients.db_dx(0.0, x), 0.1 * np.pi * np.cos(np.pi * x))

    def test_time_dependence_is_inferred(self, heat, variable_coefficients):
        assert not heat.time_dependent
        assert variable_coefficients.time_dependent
        assert heat.is_heat
        assert not variable_coefficients.is_heat

    def test_ellipticity_floor(self, variable_coefficients):
        assert variable_coefficients.a0 == pytest.approx(0.85)
        variable_coefficients.validate(build_mesh(1.0, 20), build_time_grid(0.5, 10))

    def test_violated_floor(self):
        coeffs = CoefficientSet.from_expressions('1 - x', a0=0.5)
        with pytest.raises(ValueError, match='ellipticity'):
            coeffs.validate(build_mesh(1.0, 10), build_time_grid(1.0, 5))

    def test_wrong_derivative(self):
        coeffs = CoefficientSet(
            a=lambda t, x: 1 + x ** 2,
            b=lambda t, x: 0 * x,
            c=lambda t, x: 0 * x,
            a0=1.0,
            a_x=lambda t, x: 3 * x
        )
        with pytest.raises(ValueError, match='a_x'):
            coeffs.validate(build_mesh(1.0, 10), build_time_grid(1.0, 5))

    def test_finite_difference_fallback(self):
        coeffs = CoefficientSet(
            a=lambda t, x: 1 + x ** 2,
            b=lambda t, x: np.sin(x),
            c=lambda t, x: 0 * x,
            a0=1.0
        )
        x = np.linspace(0.1, 0.9, 5)
        assert np.allclose(coeffs.da_dx(0.0, x), 2 * x, atol=1e-6)
        assert np.allclose(coeffs.d2a_dx2(0.0, x), 2.0, atol=1e-4)
        assert np.allclose(coeffs.db_dx(0.0, x), np.cos(x), atol=1e-6)

    def test_unknown_symbols(self):
        with pytest.raises(ValueError, match='unknown symbols'):
            CoefficientSet.from_expressions('1 + y')

    def test_nonpositive_diffusion(self):
        with pytest.raises(ValueError):
            CoefficientSet.constant(0.0)


class TestPointOperations:

    def test_dirac_on_a_node(self):
        mesh = build_mesh(1.0, 10)
        load = dirac_load(mesh, 0.3)
        expected = np.zeros(9)
        expected[2] = 1.0
        assert np.allclose(load, expected)

    def test_dirac_at_midpoint(self):
        mesh = build_mesh(1.0, 10)
        load = dirac_load(mesh, 0.35)
        assert load[2] == pytest.approx(0.5)
        assert load[3] == pytest.approx(0.5)
        assert load.sum() == pytest.approx(1.0)

    def test_dirac_at_half_on_fine_mesh(self):
        load = dirac_load(build_mesh(1.0, 200), 0.5, full=True)
        assert load[100] == 1.0
        assert load.sum() == 1.0

    @pytest.mark.parametrize('x', [0.0, 1.0, -0.1, 1.5])
    def test_dirac_outside(self, x):
        with pytest.raises(ValueError):
            dirac_weights(build_mesh(1.0, 10), x)

    def test_trace_reproduces_linears(self, rng):
        mesh = build_mesh(2.0, 8)
        for x in rng.uniform(0, 2, 10):
            assert trace(mesh, mesh.nodes, x) == pytest.approx(x)

    def test_trace_at_midpoint(self, rng):
        mesh = build_mesh(1.0, 10)
        nodal = rng.normal(size=11)
        assert trace(mesh, nodal, 0.45) == pytest.approx(0.5 * (nodal[4] + nodal[5]))
        assert trace(mesh, nodal, 0.7) == pytest.approx(nodal[7])

    def test_flux_of_linear_field(self):
        mesh = build_mesh(1.0, 10)
        nodal = 3.0 * mesh.nodes
        assert boundary_flux(mesh, nodal, 'left') == pytest.approx(3.0)
        assert boundary_flux(mesh, nodal, 'right') == pytest.approx(3.0)

    def test_flux_of_adjoint_profile(self):
        mesh = build_mesh(1.0, 10)
        nodal = np.zeros(11)
        nodal[-2] = 0.7
        assert boundary_flux(mesh, nodal, 'right') == pytest.approx(-0.7 / mesh.h)
        assert boundary_flux(mesh, np.zeros(11), 'left') == 0.0

    @pytest.mark.parametrize('side, exact', [('left', 1.0), ('right', np.e)])
    def test_flux_is_first_order(self, side, exact):
        errors = []
        for elements in (10, 20, 40):
            mesh = build_mesh(1.0, elements)
            errors.append(abs(boundary_flux(mesh, np.exp(mesh.nodes), side) - exact))
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all((orders >= 0.8) & (orders <= 1.2))

    def test_flux_of_stacked_fields(self):
        mesh = build_mesh(1.0, 4)
        nodal = np.outer([1.0, 2.0], mesh.nodes)
        assert np.allclose(boundary_flux(mesh, nodal, 'right'), [1.0, 2.0])


class TestDiscreteNorm:

    def test_zero_signals_give_smoothing_root(self):
        assert discrete_norm([np.zeros(10)], 0.1, 1e-14) == pytest.approx(1e-7)

    def test_unit_signal(self):
        assert discrete_norm([np.ones(1000)], 1e-3) == pytest.approx(1.0)

    def test_pythagorean(self):
        assert discrete_norm([np.array([1.0, 2.0, 2.0])], 1.0) == pytest.approx(3.0)

    def test_negative_smoothing(self):
        with pytest.raises(ValueError):
            discrete_norm([np.ones(3)], 1.0, -1.0)
