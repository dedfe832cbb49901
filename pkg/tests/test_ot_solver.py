import numpy as np
import pytest

from src.exceptions import InvalidConfigError, MarginalError
from src.ot_solver import (
    Marginals,
    TransportPlan,
    atoms,
    certify_optimality,
    default_tol_tight,
    gaussian_bump,
    load_masses,
    make_marginals,
    solve_primary,
    solve_transport,
    tight_set,
)


class TestMarginals:
    def test_negative_mass(self):
        with pytest.raises(MarginalError):
            Marginals(np.array([1.5, -0.5]), np.array([0.5, 0.5]))

    def test_unequal_totals(self):
        with pytest.raises(MarginalError):
            Marginals(np.array([1.0, 0.0]), np.array([0.5, 0.4]))

    def test_not_normalized(self):
        with pytest.raises(MarginalError):
            Marginals(np.array([1.0, 1.0]), np.array([1.0, 1.0]))

    def test_shape_mismatch(self):
        with pytest.raises(MarginalError):
            Marginals(np.array([1.0]), np.array([0.5, 0.5]))

    def test_zero_mass_cannot_be_normalized(self):
        with pytest.raises(MarginalError):
            Marginals.normalized(np.zeros(3), np.ones(3))

    def test_supports(self, path_marginals):
        assert path_marginals.support0.tolist() == [0, 1]
        assert path_marginals.support1.tolist() == [2, 3]
        assert path_marginals.support_bound == 3
        assert not path_marginals.absolutely_continuous

    def test_absolutely_continuous_lift(self):
        marginals = make_marginals(atoms(4, [0]), atoms(4, [3]), absolutely_continuous=True)
        assert marginals.absolutely_continuous
        assert marginals.mu0.sum() == pytest.approx(1.0)
        assert marginals.mu1.tolist() == [0.0, 0.0, 0.0, 1.0]

    def test_atoms(self):
        assert atoms(4, [1, 3]).tolist() == [0.0, 0.5, 0.0, 0.5]
        assert atoms(3, [0, 0], [0.25, 0.75]).tolist() == [1.0, 0.0, 0.0]
        with pytest.raises(InvalidConfigError):
            atoms(3, [3])

    def test_periodic_gaussian(self, small_torus):
        density = gaussian_bump(small_torus, [0.0, 0.0], 0.1)
        near_edge = 7 + 8 * 0  # x = 7/8 wraps to distance 1/8
        assert density[near_edge] == pytest.approx(density[1])

    def test_load_masses(self, tmp_path):
        path = tmp_path / "mu.csv"
        path.write_text("# masses\nnode,mass\n0,0.25\n2,0.75\n")
        assert load_masses(path, 4).tolist() == [0.25, 0.0, 0.75, 0.0]
        path.write_text("node,mass\n5,1.0\n")
        with pytest.raises(InvalidConfigError):
            load_masses(path, 4)


class TestPrimary:
    def test_path_value_and_potential(self, path_solution, path_marginals):
        plan, potential = path_solution
        assert plan.value == pytest.approx(2.0)
        assert potential.values == pytest.approx([0.0, 1.0, 2.0, 3.0])
        assert potential.anchor == 0
        assert plan.marginal_error(path_marginals) <= 1e-15
        assert set(plan.support) <= {(0, 2), (0, 3), (1, 2), (1, 3)}

    def test_equal_marginals_stay_put(self, path_graph, path_costs):
        uniform = Marginals(np.full(4, 0.25), np.full(4, 0.25))
        plan, _ = solve_primary(path_graph, path_costs, uniform)
        assert plan.value == 0.0
        assert plan.support == [(0, 0), (1, 1), (2, 2), (3, 3)]

    def test_single_atoms(self, path_graph, path_costs, path_rows):
        marginals = Marginals(atoms(4, [0]), atoms(4, [3]))
        plan, potential = solve_primary(path_graph, path_costs, marginals)
        assert plan.support == [(0, 3)]
        assert plan.value == pytest.approx(3.0)
        assert plan.cost_under(path_rows) == pytest.approx(3.0)
        assert potential[3] - potential[0] == pytest.approx(3.0)

    def test_marginals_on_another_space(self, path_graph, path_costs):
        with pytest.raises(MarginalError):
            solve_primary(path_graph, path_costs, Marginals(atoms(3, [0]), atoms(3, [2])))

    def test_randers_torus_matches_dense_transport(self, small_torus, randers_costs, randers_rows):
        marginals = make_marginals(
            gaussian_bump(small_torus, [0.3, 0.3], 0.15),
            gaussian_bump(small_torus, [0.7, 0.6], 0.15),
        )
        plan, potential = solve_primary(small_torus, randers_costs, marginals)
        assert plan.marginal_error(marginals) <= 1e-10
        assert plan.cost_under(randers_rows) == pytest.approx(plan.value, rel=1e-9)
        assert potential.edge_violation(small_torus, randers_costs) <= 1e-9

        dense = solve_transport(randers_rows.matrix(), marginals.mu0, marginals.mu1)
        assert dense.plan.value == pytest.approx(plan.value, rel=1e-9)

        certificate = certify_optimality(
            plan, potential, randers_rows, pair_samples=5000, manifold=small_torus, edge_costs=randers_costs
        )
        assert certificate.passed


class TestDenseTransport:
    def test_identity_is_free(self):
        solution = solve_transport(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.5, 0.5], [0.5, 0.5])
        assert solution.plan.value == pytest.approx(0.0)
        assert solution.assignment() == [(0, 0, 0.5), (1, 1, 0.5)]

    @pytest.mark.parametrize("shift", [0.0, -10.0])
    def test_three_by_three_permutation(self, shift):
        cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]]) + shift
        third = np.full(3, 1.0 / 3.0)
        solution = solve_transport(cost, third, third)
        assert solution.plan.value == pytest.approx(5.0 / 3.0 + shift)
        assert [(i, j) for i, j, _ in solution.assignment()] == [(0, 1), (1, 0), (2, 2)]


class TestCertificates:
    def test_optimal_pair_passes(self, path_solution, path_rows, path_graph, path_costs):
        plan, potential = path_solution
        certificate = certify_optimality(plan, potential, path_rows, manifold=path_graph, edge_costs=path_costs)
        assert certificate.passed
        assert certificate.duality_gap == pytest.approx(0.0, abs=1e-12)
        assert certificate.max_edge_feasibility_violation == 0.0

    def test_raised_potential_is_infeasible(self, path_solution, path_rows, path_graph, path_costs):
        plan, potential = path_solution
        raised = potential.shifted(2, 1e-6)
        certificate = certify_optimality(plan, raised, path_rows, manifold=path_graph, edge_costs=path_costs)
        assert not certificate.passed
        assert certificate.max_feasibility_violation == pytest.approx(1e-6, rel=1e-6)

    def test_suboptimal_plan_has_a_gap(self, path_graph, path_costs, path_rows):
        marginals = Marginals(atoms(4, [0, 3]), atoms(4, [1, 2]))
        optimal, potential = solve_primary(path_graph, path_costs, marginals)
        assert optimal.value == pytest.approx(1.0)
        crossed = TransportPlan.from_pairs({(0, 2): 0.5, (3, 1): 0.5})
        certificate = certify_optimality(crossed, potential, path_rows)
        assert not certificate.passed
        assert certificate.primal_value == pytest.approx(2.0)
        assert certificate.duality_gap == pytest.approx(1.0)

    def test_tight_set_on_the_path(self, path_solution, path_rows, path_marginals, path_costs):
        _, potential = path_solution
        tol = default_tol_tight(path_costs.weights)
        assert tol == pytest.approx(2e-9)
        tight = tight_set(potential, path_rows, path_marginals, tol)
        assert tight.pairs() == {(0, 2), (0, 3), (1, 2), (1, 3)}
        assert tight.lookup()[(0, 3)] == pytest.approx(3.0)
        assert tight.contains(1, 2)
        assert not tight.contains(2, 1)

    def test_tight_set_contains_plan_support(self, path_solution, path_rows, path_marginals):
        plan, potential = path_solution
        tight = tight_set(potential, path_rows, path_marginals, 1e-9)
        assert set(plan.support) <= tight.pairs()
