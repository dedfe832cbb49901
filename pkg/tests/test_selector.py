from types import SimpleNamespace

import numpy as np
import pytest

from src.exceptions import RestrictionError
from src.ot_solver import Marginals, TightSet, TransportPlan, make_marginals, solve_transport, tight_set
from src.ot_solver.primary import DualPotential
from src.selector import SecondaryCost, extract_map, monotonicity_check, solve_secondary


@pytest.fixture
def path_tight(path_solution, path_rows, path_marginals):
    _, potential = path_solution
    return tight_set(potential, path_rows, path_marginals, 1e-9)


@pytest.fixture
def path_selection(path_tight, path_marginals):
    return solve_secondary(path_tight, SecondaryCost.from_tight_set(path_tight), path_marginals)


class TestSecondary:
    def test_squared_costs(self, path_tight):
        sigma = SecondaryCost.from_tight_set(path_tight)
        assert sigma.values.tolist() == pytest.approx([4.0, 9.0, 1.0, 4.0])

    def test_path_selection(self, path_selection, path_marginals):
        assert path_selection.plan.support == [(0, 2), (1, 3)]
        assert path_selection.primary_cost == pytest.approx(2.0)
        assert path_selection.secondary_cost == pytest.approx(4.0)
        assert path_selection.map == {0: 2, 1: 3}
        assert path_selection.is_map
        assert path_selection.lambda_mass == 0.0
        assert path_selection.plan.marginal_error(path_marginals) <= 1e-10

    def test_support_bound(self, path_selection):
        assert path_selection.support_size == 2
        assert path_selection.support_bound == 3
        assert path_selection.degeneracy == 1

    def test_output_document(self, path_selection):
        document = path_selection.to_output("abc")
        dumped = document.model_dump(by_alias=True)
        assert dumped["lambda"] == []
        assert [(e["source"], e["target"]) for e in dumped["map"]] == [(0, 2), (1, 3)]
        assert dumped["config_digest"] == "abc"

    def test_primary_cost_is_kept(self, path_solution, path_selection):
        plan, _ = path_solution
        assert path_selection.primary_cost == pytest.approx(plan.value, rel=1e-12)

    def test_missing_support_node(self, path_marginals):
        starved = TightSet(np.array([0, 1]), np.array([2, 2]), np.array([2.0, 1.0]), 1e-9)
        with pytest.raises(RestrictionError):
            solve_secondary(starved, SecondaryCost.from_tight_set(starved), path_marginals)

    def test_infeasible_restriction(self):
        marginals = Marginals(np.array([0.75, 0.25, 0.0, 0.0]), np.array([0.0, 0.0, 0.5, 0.5]))
        diagonal = TightSet(np.array([0, 1]), np.array([2, 3]), np.array([2.0, 2.0]), 1e-9)
        with pytest.raises(RestrictionError):
            solve_secondary(diagonal, SecondaryCost.from_tight_set(diagonal), marginals)

    def test_empty_tight_set(self, path_marginals):
        empty = TightSet(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0), 1e-9)
        with pytest.raises(RestrictionError):
            solve_secondary(empty, SecondaryCost(np.zeros(0)), path_marginals)

    def test_randers_selection_is_a_vertex(self, small_torus, randers_costs, randers_rows):
        from src.ot_solver import gaussian_bump, solve_primary

        marginals = make_marginals(
            gaussian_bump(small_torus, [0.3, 0.3], 0.15),
            gaussian_bump(small_torus, [0.7, 0.6], 0.15),
            absolutely_continuous=True,
        )
        plan, potential = solve_primary(small_torus, randers_costs, marginals)
        tight = tight_set(potential, randers_rows, marginals, 1e-9 * (1.0 + randers_costs.weights.max()))
        selection = solve_secondary(tight, SecondaryCost.from_tight_set(tight), marginals)
        assert selection.support_size <= selection.support_bound
        assert selection.primary_cost == pytest.approx(plan.value, rel=1e-8)
        assert set(selection.plan.support) <= tight.pairs()

    def test_presolve_misreport_falls_back(self, monkeypatch, path_tight, path_marginals):
        from scipy.optimize import linprog

        from src.selector import secondary

        presolve_flags = []

        def linprog_without_presolve(*args, **kwargs):
            presolve_flags.append(kwargs["options"]["presolve"])
            if kwargs["options"]["presolve"]:
                return SimpleNamespace(status=2, message="The problem is infeasible.", x=None)
            return linprog(*args, **kwargs)

        monkeypatch.setattr(secondary, "LP_ATTEMPTS", ({"presolve": True}, {"presolve": False}))
        monkeypatch.setattr(secondary, "linprog", linprog_without_presolve)
        selection = solve_secondary(path_tight, SecondaryCost.from_tight_set(path_tight), path_marginals)
        assert presolve_flags == [True, False]
        assert selection.plan.support == [(0, 2), (1, 3)]

    def test_tiny_tail_masses(self):
        # every rightward plan on the line costs 2; the tails carry 5e-12
        mu0 = np.array([0.5 - 5e-12, 0.5, 5e-12, 0.0, 0.0, 0.0])
        mu1 = np.array([0.0, 0.0, 0.5 - 5e-12, 0.5, 5e-12, 0.0])
        marginals = Marginals(mu0, mu1)
        cost = np.abs(np.subtract.outer(np.arange(6.0), np.arange(6.0)))
        sources = np.array([0, 0, 1, 1, 1, 2, 2, 2])
        targets = np.array([2, 3, 2, 3, 4, 2, 3, 4])
        tight = TightSet(sources, targets, cost[sources, targets], 1e-9)
        reference = TransportPlan.from_pairs({(0, 2): 0.5 - 5e-12, (1, 3): 0.5, (2, 4): 5e-12}, value=2.0)
        selection = solve_secondary(tight, SecondaryCost.from_tight_set(tight), marginals, reference=reference)
        assert selection.primary_cost == pytest.approx(2.0)
        assert selection.plan.marginal_error(marginals) <= 1e-10
        assert selection.support_size <= selection.support_bound

    def test_infeasible_verdict_against_tight_reference(self, monkeypatch, path_tight, path_marginals,
                                                        path_solution):
        from src.selector import secondary

        plan, _ = path_solution
        monkeypatch.setattr(
            secondary, "linprog",
            lambda *args, **kwargs: SimpleNamespace(status=2, message="The problem is infeasible.", x=None),
        )
        with pytest.raises(RestrictionError, match="reference plan lies on the tight set"):
            solve_secondary(path_tight, SecondaryCost.from_tight_set(path_tight), path_marginals, reference=plan)


class TestExtractMap:
    def test_split_source(self):
        plan = TransportPlan.from_pairs({(0, 1): 0.3, (0, 2): 0.2, (1, 3): 0.5})
        mapping, lam, mass = extract_map(plan)
        assert mapping == {1: 3}
        assert lam.tolist() == [0]
        assert mass == pytest.approx(0.5)

    def test_dust_is_pruned(self):
        plan = TransportPlan.from_pairs({(0, 1): 0.5, (0, 2): 1e-13, (1, 3): 0.5})
        mapping, lam, mass = extract_map(plan)
        assert mapping == {0: 1, 1: 3}
        assert lam.size == 0
        assert mass == 0.0

    def test_permutation(self):
        solution = solve_transport(np.array([[1.0, 0.0], [0.0, 1.0]]), [0.5, 0.5], [0.5, 0.5])
        mapping, lam, _ = extract_map(solution.plan)
        assert mapping == {0: 3, 1: 2}
        assert lam.size == 0


class TestMonotonicity:
    def test_selected_plan_is_monotone(self, path_selection, path_solution, path_rows):
        _, potential = path_solution
        report = monotonicity_check(path_selection.plan, potential, path_rows)
        assert report.passed
        assert report.applicable == 1
        assert report.min_increment == pytest.approx(2.0)
        assert report.min_factored == pytest.approx(1.0)

    def test_crossed_plan_fails(self, path_solution, path_rows):
        _, potential = path_solution
        crossed = TransportPlan.from_pairs({(0, 3): 0.5, (1, 2): 0.5}, value=2.0)
        report = monotonicity_check(crossed, potential, path_rows)
        assert not report.passed
        assert report.min_increment == pytest.approx(-2.0)
        assert report.negative_count == 1

    def test_single_entry_is_trivially_monotone(self, path_rows):
        plan = TransportPlan.from_pairs({(0, 3): 1.0})
        report = monotonicity_check(plan, DualPotential(np.arange(4.0), 0), path_rows)
        assert report.passed
        assert report.min_increment is None

    def test_non_tight_swaps_are_skipped(self, path_rows):
        # u flat: no swapped pair is tight
        plan = TransportPlan.from_pairs({(0, 3): 0.5, (1, 2): 0.5})
        report = monotonicity_check(plan, DualPotential(np.zeros(4), 0), path_rows)
        assert report.applicable == 0
        assert report.passed
