import math

import numpy as np
import pytest

from fairdesk.causal import (
    CausalGraph,
    GraphEdge,
    GraphNode,
    StructureConfig,
    acyclicity,
    acyclicity_grad,
    aggregate_to_features,
    drill_down,
    encode,
    learn_structure,
    same_feature_mask,
    squared_loss,
    topological_order,
)
from fairdesk.data import CATEGORICAL, NUMERIC, DataTable, synth_loans
from fairdesk.errors import ValidationError


def finite_diff(f, W, eps=1e-6):
    """Central finite differences of a scalar matrix function."""
    G = np.zeros_like(W)
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            up, down = W.copy(), W.copy()
            up[i, j] += eps
            down[i, j] -= eps
            G[i, j] = (f(up) - f(down)) / (2 * eps)
    return G


class TestEncode:
    def test_two_level_categorical_one_column(self):
        t = DataTable.build(
            ["g"], {"g": CATEGORICAL}, {"g": ["a", "b", "a", "b"]})
        enc = encode(t)
        assert len(enc.columns) == 1
        assert enc.columns[0].level == "b"  # first sorted level dropped

    def test_constant_numeric_all_zero(self):
        t = DataTable.build(["x", "y"], {"x": NUMERIC, "y": NUMERIC},
                            {"x": [5.0] * 6, "y": [1, 2, 3, 4, 5, 6.0]})
        enc = encode(t)
        assert np.all(enc.X[:, 0] == 0.0)

    def test_synth_dimension_arithmetic(self):
        t = synth_loans(3, 400)
        enc = encode(t)
        expected = 0
        for s in t.schema:
            expected += 1 if s.kind == NUMERIC else len(s.distinct_values) - 1
        assert enc.X.shape == (400, expected)

    def test_standardization_invariant(self):
        t = synth_loans(4, 300)
        enc = encode(t)
        means = enc.X.mean(axis=0)
        stds = enc.X.std(axis=0)
        assert np.all(np.abs(means) <= 1e-9)
        for j in range(enc.X.shape[1]):
            assert stds[j] == pytest.approx(1.0, abs=1e-9) or stds[j] == 0.0

    def test_missing_rows_dropped(self):
        t = DataTable.build(
            ["x", "y"], {"x": NUMERIC, "y": NUMERIC},
            {"x": [1.0, None, 3.0, 4.0], "y": [2.0, 5.0, None, 1.0]})
        enc = encode(t)
        assert enc.dropped_rows == 2
        assert enc.row_ids == (0, 3)

    def test_all_rows_missing_error(self):
        t = DataTable.build(
            ["x", "y"], {"x": NUMERIC, "y": NUMERIC},
            {"x": [1.0, None], "y": [None, 2.0]})
        with pytest.raises(ValidationError):
            encode(t)


class TestAcyclicity:
    def test_zero_matrix(self):
        assert acyclicity(np.zeros((4, 4))) == 0.0

    def test_two_cycle_closed_form(self):
        W = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert acyclicity(W) == pytest.approx(2 * math.cosh(1.0) - 2.0, abs=1e-9)

    def test_upper_triangular_is_acyclic(self):
        rng = np.random.default_rng(0)
        W = np.triu(rng.normal(0, 1, (6, 6)), k=1)
        assert acyclicity(W) <= 1e-12

    def test_non_square_error(self):
        with pytest.raises(ValidationError):
            acyclicity(np.zeros((2, 3)))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            W = rng.normal(0, 0.4, (5, 5))
            _, G = acyclicity_grad(W)
            G_fd = finite_diff(acyclicity, W)
            rel = np.linalg.norm(G - G_fd) / max(np.linalg.norm(G_fd), 1e-8)
            assert rel <= 1e-5


class TestSquaredLoss:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        X = rng.normal(0, 1, (60, 4))
        for _ in range(20):
            W = rng.normal(0, 0.5, (4, 4))
            _, G = squared_loss(W, X)
            G_fd = finite_diff(lambda M: squared_loss(M, X)[0], W)
            rel = np.linalg.norm(G - G_fd) / max(np.linalg.norm(G_fd), 1e-8)
            assert rel <= 1e-5


class TestLearnStructure:
    def test_two_variable_direction(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0, 1, 1000)
        y = 2 * x + rng.normal(0, 0.1, 1000)
        res = learn_structure(np.column_stack([x, y]))
        cfg = StructureConfig()
        assert abs(res.W[0, 1]) >= cfg.edge_threshold
        assert abs(res.W[1, 0]) < cfg.edge_threshold

    def test_independent_columns_empty(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((800, 5))
        res = learn_structure(X)
        W = res.W.copy()
        W[np.abs(W) < StructureConfig().edge_threshold] = 0
        assert (W != 0).sum() == 0

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((300, 4))
        X[:, 2] += 1.5 * X[:, 0]
        a = learn_structure(X)
        b = learn_structure(X)
        assert np.array_equal(a.W, b.W)

    def test_objective_monotone_per_phase(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((400, 4))
        X[:, 1] += X[:, 0]
        X[:, 3] += 0.8 * X[:, 2]
        seen = {}
        def on_step(phase, objective):
            if phase in seen:
                assert objective <= seen[phase] + 1e-9
            seen[phase] = objective
        learn_structure(X, on_step=on_step)
        assert seen

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            learn_structure(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_forbidden_mask_respected(self):
        rng = np.random.default_rng(9)
        x = rng.normal(0, 1, 600)
        y = 1.5 * x + rng.normal(0, 0.2, 600)
        X = np.column_stack([x, y])
        forbidden = np.array([[False, True], [False, False]])
        res = learn_structure(X, forbidden=forbidden)
        assert res.W[0, 1] == 0.0


def tiny_table():
    return DataTable.build(
        ["x", "y", "t"],
        {"x": CATEGORICAL, "y": CATEGORICAL, "t": CATEGORICAL},
        {"x": ["a", "a", "b", "b"], "y": ["u", "v", "u", "v"],
         "t": ["Y", "N", "Y", "N"]},
        target="t", positive_label="Y")


class TestAggregate:
    def test_single_weight_keeps_direction_and_strength(self):
        t = tiny_table()
        enc = encode(t)
        col = {c.feature: i for i, c in enumerate(enc.columns)}
        W = np.zeros((3, 3))
        W[col["x"], col["y"]] = 0.8
        g = aggregate_to_features(W, enc, t, omega=0.3)
        assert g.edges == (GraphEdge("x", "y", 0.8),)

    def test_max_rule_over_pair(self):
        t = tiny_table()
        enc = encode(t)
        col = {c.feature: i for i, c in enumerate(enc.columns)}
        W = np.zeros((3, 3))
        W[col["x"], col["y"]] = 0.4
        W[col["y"], col["x"]] = 0.9  # same pair, opposite entry
        g = aggregate_to_features(W, enc, t, omega=0.3)
        assert len(g.edges) == 1
        assert g.edges[0].strength == 0.9

    def test_target_orientation(self):
        t = tiny_table()
        enc = encode(t)
        col = {c.feature: i for i, c in enumerate(enc.columns)}
        W = np.zeros((3, 3))
        W[col["t"], col["x"]] = 0.7  # learned edge leaves the target
        g = aggregate_to_features(W, enc, t, omega=0.3)
        assert g.has_edge("x", "t")
        assert not g.has_edge("t", "x")

    def test_below_threshold_dropped(self):
        t = tiny_table()
        enc = encode(t)
        W = np.zeros((3, 3))
        W[0, 1] = 0.1
        g = aggregate_to_features(W, enc, t, omega=0.3)
        assert g.edges == ()

    def test_degrees_consistent(self):
        t = synth_loans(11, 800)
        enc = encode(t)
        cfg = StructureConfig()
        res = learn_structure(enc, cfg, forbidden=same_feature_mask(enc))
        g = aggregate_to_features(res.W, enc, t, cfg.edge_threshold)
        for node in g.nodes:
            assert node.out_degree == sum(1 for e in g.edges if e.src == node.feature)
            assert node.in_degree == sum(1 for e in g.edges if e.dst == node.feature)
        topological_order(g)  # must not raise


class TestDrillDown:
    def graph(self):
        nodes = (GraphNode("a", 0, 1, 0.1, False, False, False),
                 GraphNode("b", 1, 1, 0.2, True, False, False),
                 GraphNode("t", 1, 0, 0.0, False, True, False))
        edges = (GraphEdge("a", "b", 0.5), GraphEdge("b", "t", 0.7))
        return CausalGraph(nodes, edges, {"omega": 0.3})

    def test_keep_all_is_identity(self):
        g = self.graph()
        assert drill_down(g, ["a", "b", "t"]) == g

    def test_keep_one_includes_target(self):
        g = drill_down(self.graph(), ["b"])
        assert {n.feature for n in g.nodes} == {"b", "t"}
        assert g.edges == (GraphEdge("b", "t", 0.7),)

    def test_empty_keep_leaves_target(self):
        g = drill_down(self.graph(), [])
        assert {n.feature for n in g.nodes} == {"t"}

    def test_degrees_never_grow(self):
        g = self.graph()
        sub = drill_down(g, ["a", "t"])
        for n in sub.nodes:
            full = g.node(n.feature)
            assert n.in_degree <= full.in_degree
            assert n.out_degree <= full.out_degree

    def test_idempotent(self):
        g = self.graph()
        once = drill_down(g, ["b"])
        assert drill_down(once, ["b"]) == once

    def test_unknown_feature(self):
        with pytest.raises(ValidationError):
            drill_down(self.graph(), ["zzz"])
