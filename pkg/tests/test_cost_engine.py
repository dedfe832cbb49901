import numpy as np
import pytest

from src.cost_engine import (
    CostModel,
    CostRowProvider,
    EdgeCostTable,
    MatrixCostRows,
    certify_metric_axioms,
    compare_cost_models,
    critical_value,
    dp_residual,
    edge_cost_table,
    edge_weight_finsler,
    edge_weight_lagrangian,
    energy,
    energy_finite_difference,
    hamiltonian,
    mane_row,
    verify_certificate,
)
from src.cost_engine.critical import certificate_at, find_nonpositive_cycle
from src.exceptions import BracketError, SubcriticalError, SupercriticalityViolatedError
from src.geometry import FinslerMetric, Lagrangian, build_torus_grid, load_graph


@pytest.fixture
def unit_segment():
    return load_graph({"nodes": [[0, 0], [1, 0]], "edges": [[0, 1], [1, 0]]})


@pytest.fixture
def one_way_square():
    return load_graph({
        "nodes": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "edges": [[0, 1], [1, 2], [2, 3], [3, 0]],
    })


class TestEdgeWeights:
    def test_quadratic_action_at_half(self, unit_segment):
        lagrangian = Lagrangian.quadratic(2, k=0.5)
        cost = edge_weight_lagrangian(lagrangian, unit_segment, 0)
        assert cost.time == pytest.approx(1.0, rel=1e-10)
        assert cost.weight == pytest.approx(1.0, rel=1e-10)
        assert cost.energy_residual <= 1e-9

    def test_tilde_time_equals_finsler_length(self):
        manifold = build_torus_grid(4, stencil=8)
        metric = FinslerMetric.euclidean(manifold.n_nodes)
        edge = int(np.flatnonzero(np.isclose(manifold.lengths, 0.25))[0])
        cost = edge_weight_lagrangian(Lagrangian.tilde(metric), manifold, edge)
        assert cost.time == pytest.approx(0.25, rel=1e-10)
        assert cost.weight == pytest.approx(edge_weight_finsler(manifold, metric, edge).weight, rel=1e-10)

    def test_subcritical_edge(self, unit_segment):
        lagrangian = Lagrangian.quadratic(2, V=1.0, k=-1.0)
        with pytest.raises(SubcriticalError) as info:
            edge_weight_lagrangian(lagrangian, unit_segment, 0)
        assert info.value.edge == 0
        assert info.value.samples

    def test_randers_edge_weights_are_asymmetric(self, unit_segment):
        metric = FinslerMetric.randers(np.eye(2), [0.3, 0.0], 2)
        table = edge_cost_table(unit_segment, CostModel.from_metric(metric))
        assert table.weights[0] == pytest.approx(1.3)
        assert table.weights[1] == pytest.approx(0.7)
        assert np.array_equal(table.times, table.weights)
        assert table.delta == pytest.approx(0.9)

    def test_table_is_read_only(self, randers_costs):
        with pytest.raises(ValueError):
            randers_costs.weights[0] = 1.0

    def test_model_digest_tracks_the_shift(self):
        metric = FinslerMetric.euclidean(4)
        a = CostModel.from_lagrangian(Lagrangian.tilde(metric, k=0.0)).digest()
        b = CostModel.from_lagrangian(Lagrangian.tilde(metric, k=0.5)).digest()
        assert a != b


class TestEnergy:
    def test_tilde_energy_closed_form(self):
        lagrangian = Lagrangian.tilde(FinslerMetric.euclidean(1))
        v = np.array([0.6, 0.8])
        assert energy(lagrangian, 0, 2.0 * v) == pytest.approx(1.5)
        assert energy_finite_difference(lagrangian, 0, 2.0 * v) == pytest.approx(1.5, abs=1e-6)

    def test_randers_energy_matches_finite_difference(self):
        lagrangian = Lagrangian.tilde(FinslerMetric.randers(np.eye(2), [0.2, 0.1], 1))
        for v in ([1.0, 0.0], [-0.3, 0.7], [2.0, -1.5]):
            assert energy(lagrangian, 0, v) == pytest.approx(energy_finite_difference(lagrangian, 0, v), abs=1e-6)

    def test_quadratic_hamiltonian(self):
        lagrangian = Lagrangian.quadratic(1, V=1.0)
        assert hamiltonian(lagrangian, 0, [3.0, 4.0]) == pytest.approx(11.5)

    def test_tilde_hamiltonian(self):
        lagrangian = Lagrangian.tilde(FinslerMetric.euclidean(1))
        assert hamiltonian(lagrangian, 0, [1.0, 1.0]) == pytest.approx(0.5, abs=1e-8)


class TestManeRows:
    def test_one_way_cycle(self, one_way_square):
        costs = edge_cost_table(one_way_square, CostModel.from_metric(FinslerMetric.euclidean(4)))
        assert mane_row(one_way_square, costs, 0)[2] == pytest.approx(2.0)
        assert mane_row(one_way_square, costs, 1)[0] == pytest.approx(3.0)
        assert mane_row(one_way_square, costs, 2)[2] == 0.0

    def test_dp_residual_vanishes(self, small_torus, randers_costs):
        field = mane_row(small_torus, randers_costs, 5)
        assert dp_residual(field, small_torus, randers_costs) <= 1e-12

    def test_provider_rows_match_single_rows(self, small_torus, randers_costs, randers_rows):
        sources = [0, 7, 33, 63]
        rows = randers_rows.rows(sources)
        for source, row in zip(sources, rows):
            assert np.allclose(row, mane_row(small_torus, randers_costs, source).values)
        assert randers_rows.values([7], [33])[0, 0] == pytest.approx(rows[1, 33])
        assert randers_rows.pair_values(np.array([0, 63]), np.array([63, 0])) == pytest.approx([rows[0, 63], rows[3, 0]])

    def test_threaded_rows_keep_order(self, small_torus, randers_costs):
        serial = CostRowProvider(small_torus, randers_costs, threads=1)
        threaded = CostRowProvider(small_torus, randers_costs, threads=4)
        sources = np.arange(small_torus.n_nodes)[::-1]
        chunks = list(threaded.iter_rows(sources, chunk=8))
        assert np.array_equal(np.concatenate([block for block, _ in chunks]), sources)
        assert np.allclose(np.vstack([rows for _, rows in chunks]), serial.rows(sources))

    def test_nonpositive_weights_are_rejected(self, path_graph):
        weights = np.array([1.0, 0.0, 1.0, 1.0, 1.0, 1.0])
        table = EdgeCostTable(weights, weights.copy(), np.zeros(6), delta=0.9, model_digest="test")
        with pytest.raises(SupercriticalityViolatedError):
            mane_row(path_graph, table, 0)
        with pytest.raises(SupercriticalityViolatedError):
            CostRowProvider(path_graph, table)

    def test_matrix_rows(self):
        rows = MatrixCostRows(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert rows.n_nodes == 4
        assert rows.row(0)[3] == 1.0
        assert rows.row(0)[0] == 0.0
        assert np.isinf(rows.row(2)[0])


class TestCriticalValue:
    def test_constant_potential(self):
        manifold = build_torus_grid(4, stencil=8)
        lagrangian = Lagrangian.quadratic(manifold.n_nodes, V=1.0)
        result = critical_value(manifold, lagrangian, -2.0, 1.0, tol=1e-6)
        assert result.k_lo <= -1.0 + 1e-6
        assert result.k_hi >= -1.0 - 1e-6
        assert result.width <= 1e-6
        assert result.above.kind == "positive"
        assert result.below.kind in ("subcritical-edge", "nonpositive-cycle", "nonpositive-edge")
        assert verify_certificate(manifold, lagrangian, result.below)
        assert verify_certificate(manifold, lagrangian, result.above)

    def test_free_particle(self):
        manifold = build_torus_grid(4, stencil=8)
        result = critical_value(manifold, Lagrangian.quadratic(manifold.n_nodes), -1.0, 1.0, tol=1e-6)
        assert result.estimate == pytest.approx(0.0, abs=1e-6)

    def test_bracket_must_straddle(self):
        manifold = build_torus_grid(4, stencil=8)
        lagrangian = Lagrangian.quadratic(manifold.n_nodes, V=1.0)
        with pytest.raises(BracketError):
            critical_value(manifold, lagrangian, 0.0, 1.0)
        with pytest.raises(BracketError):
            critical_value(manifold, lagrangian, -3.0, -2.0)

    def test_certificate_above(self, unit_segment):
        certificate = certificate_at(unit_segment, Lagrangian.quadratic(2, V=1.0), -0.5)
        assert certificate.kind == "positive"
        assert certificate.min_weight > 0.0

    def test_forged_certificate_fails(self, unit_segment):
        lagrangian = Lagrangian.quadratic(2, V=1.0)
        forged = certificate_at(unit_segment, lagrangian, 0.5).model_copy(update={"kind": "subcritical-edge", "edge": 0})
        assert not verify_certificate(unit_segment, lagrangian, forged)

    def test_negative_cycle_is_found(self, one_way_square):
        cycle = find_nonpositive_cycle(one_way_square, np.array([1.0, 1.0, -3.0, 0.5]))
        assert sorted(cycle) == [0, 1, 2, 3]
        assert find_nonpositive_cycle(one_way_square, np.ones(4)) is None


class TestCertifications:
    def test_randers_costs_form_a_quasi_metric(self, randers_rows):
        report = certify_metric_axioms(randers_rows, triple_sample_count=20_000, seed=1)
        assert report.passed
        assert report.max_diagonal == 0.0

    def test_finsler_and_tilde_costs_agree(self, small_torus, randers_metric):
        comparison = compare_cost_models(small_torus, randers_metric, threads=1)
        assert comparison.max_edge_difference <= 1e-10
        assert comparison.max_row_difference <= 1e-9
