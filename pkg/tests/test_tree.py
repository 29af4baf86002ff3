"""Regression-tree tests: toy cases, brute-force oracles for splitting and
pruning, cross-validation behavior, importance and prediction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiforecast import tree
from epiforecast.tree import (
    REDUCTION_TOL_REL,
    SplitRule,
    Table,
    TreeNode,
    best_split,
    cross_validate,
    grow,
    prune_sequence,
    table_from_arrays,
    variable_importance,
)

# ------------------------------------------------------------ oracles


def oracle_best_split(table, rows, minbucket):
    """Plain exhaustive enumeration over every admissible cut."""
    y = table.y[rows]
    parent = float(np.sum((y - y.mean()) ** 2))
    if parent <= tree.PURITY_TOL_REL * max(float(np.dot(y, y)), 1e-300):
        return None
    tol = parent * REDUCTION_TOL_REL
    best = None
    for var in range(table.n_vars):
        col = table.x[rows, var]
        if table.kinds[var] == tree.NUMERIC:
            for cut in sorted(set(col.tolist())):
                mask = col < cut
                n_left = int(mask.sum())
                if n_left < minbucket or len(rows) - n_left < minbucket or n_left == 0:
                    continue
                left, right = y[mask], y[~mask]
                reduction = (
                    parent
                    - float(np.sum((left - left.mean()) ** 2))
                    - float(np.sum((right - right.mean()) ** 2))
                )
                if reduction <= tol:
                    continue
                below = col[col < cut].max()
                threshold = (below + cut) / 2.0
                key = (-reduction, var, threshold)
                if best is None or key < best[0]:
                    best = (key, SplitRule(var=var, threshold=threshold))
        else:
            levels = sorted(set(col.tolist()))
            rest = levels[1:]
            for mask_bits in range(2 ** len(rest)):
                subset = frozenset(
                    [levels[0]] + [v for i, v in enumerate(rest) if mask_bits >> i & 1]
                )
                if len(subset) == len(levels):
                    continue
                mask = np.isin(col, list(subset))
                n_left = int(mask.sum())
                if n_left < minbucket or len(rows) - n_left < minbucket:
                    continue
                left, right = y[mask], y[~mask]
                reduction = (
                    parent
                    - float(np.sum((left - left.mean()) ** 2))
                    - float(np.sum((right - right.mean()) ** 2))
                )
                if reduction <= tol:
                    continue
                key = (-reduction, var, float(mask_bits))
                if best is None or key < best[0]:
                    best = (key, SplitRule(var=var, left_levels=subset))
    return best[1] if best else None


def enumerate_pruned_subtrees(node):
    """All consistent collapsings; (leaf-signature, sum of leaf sse, n_leaves)."""
    collapsed = (frozenset([frozenset(node.rows.tolist())]), node.sse, 1)
    if node.is_leaf:
        return [collapsed]
    out = [collapsed]
    for lsig, lsse, lleaves in enumerate_pruned_subtrees(node.left):
        for rsig, rsse, rleaves in enumerate_pruned_subtrees(node.right):
            out.append((lsig | rsig, lsse + rsse, lleaves + rleaves))
    return out


def oracle_optimal_subtree(candidates, alpha):
    """Min SSE + alpha * leaves; fewest leaves breaks cost ties."""
    return min(candidates, key=lambda c: (c[1] + alpha * c[2], c[2]))


def random_table(rng, n=None, n_vars=None):
    n = n or int(rng.integers(5, 51))
    n_vars = n_vars or int(rng.integers(1, 5))
    x = rng.normal(size=(n, n_vars))
    y = rng.normal(size=n)
    return table_from_arrays(x, y)


# ------------------------------------------------------------ best_split


class TestBestSplit:
    def test_constant_response_gives_none(self):
        tbl = table_from_arrays(np.arange(6.0)[:, None], np.full(6, 0.1))
        assert best_split(tbl, np.arange(6), 1) is None

    def test_toy_threshold(self):
        tbl = table_from_arrays(
            np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0.0, 0.0, 10.0, 10.0])
        )
        rule, reduction = best_split(tbl, np.arange(4), 1)
        assert rule.var == 0
        assert rule.threshold == 2.5
        assert reduction == pytest.approx(100.0)

    def test_threshold_lies_between_observed_values(self):
        rng = np.random.default_rng(0)
        tbl = random_table(rng, n=30, n_vars=2)
        rule, _ = best_split(tbl, np.arange(30), 1)
        col = sorted(tbl.x[:, rule.var])
        assert any(a < rule.threshold < b for a, b in zip(col, col[1:]))

    def test_minbucket_respected(self):
        tbl = table_from_arrays(
            np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0.0, 5.0, 5.0, 10.0])
        )
        rule, _ = best_split(tbl, np.arange(4), 2)
        mask = tbl.x[:, 0] < rule.threshold
        assert mask.sum() >= 2 and (~mask).sum() >= 2

    def test_categorical_subset_split(self):
        x = np.array([[0.0], [0.0], [1.0], [1.0], [-1.0], [-1.0]])
        y = np.array([5.0, 5.0, 0.0, 0.0, 5.0, 5.0])
        tbl = Table(("zone",), (tree.CATEGORICAL,), x, y)
        rule, _ = best_split(tbl, np.arange(6), 1)
        assert rule.left_levels in (frozenset({-1.0, 0.0}), frozenset({1.0}))

    def test_cfr_root_split_is_total_cases(self, cfr_table):
        rule, _ = best_split(cfr_table, np.arange(cfr_table.n), 1)
        assert cfr_table.names[rule.var] == "total_cases_thousands"

    @given(st.integers(0, 10_000))
    @settings(max_examples=150, deadline=None)
    def test_matches_exhaustive_oracle(self, seed):
        rng = np.random.default_rng(seed)
        tbl = random_table(rng)
        minbucket = int(rng.integers(1, 3))
        got = best_split(tbl, np.arange(tbl.n), minbucket)
        expected = oracle_best_split(tbl, np.arange(tbl.n), minbucket)
        if expected is None:
            assert got is None
        else:
            rule, _ = got
            assert rule == expected


# ------------------------------------------------------------ grow


class TestGrow:
    def test_single_row_is_leaf(self):
        tbl = table_from_arrays(np.array([[1.0]]), np.array([3.5]))
        fitted = grow(tbl)
        assert fitted.root.is_leaf
        assert fitted.root.mean == 3.5

    def test_toy_perfect_separation(self):
        tbl = table_from_arrays(
            np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0.0, 0.0, 10.0, 10.0])
        )
        fitted = grow(tbl, minsplit=2, minbucket=1)
        assert fitted.n_leaves() == 2
        assert fitted.training_sse() == 0.0

    def test_empty_table_rejected(self):
        tbl = table_from_arrays(np.empty((0, 1)), np.empty(0))
        with pytest.raises(ValueError, match="empty"):
            grow(tbl)

    def test_minsplit_must_cover_minbucket(self):
        tbl = table_from_arrays(np.arange(10.0)[:, None], np.arange(10.0))
        with pytest.raises(ValueError, match="minsplit"):
            grow(tbl, minsplit=3, minbucket=2)

    def test_cfr_training_quality(self, cfr_table):
        fitted = grow(cfr_table, minsplit=5, minbucket=1)
        preds = fitted.predict(cfr_table.x)
        ss_res = float(np.sum((cfr_table.y - preds) ** 2))
        ss_tot = float(np.sum((cfr_table.y - cfr_table.y.mean()) ** 2))
        assert 1 - ss_res / ss_tot >= 0.85

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_structural_invariants(self, seed):
        rng = np.random.default_rng(seed)
        tbl = random_table(rng)
        fitted = grow(tbl, minsplit=5, minbucket=1)
        for node in fitted.internal_nodes():
            assert node.count == node.left.count + node.right.count
            assert node.left.count >= 1 and node.right.count >= 1
            # weighted child mse never above the parent's
            child_sse = node.left.sse + node.right.sse
            assert child_sse <= node.sse + 1e-9


# ------------------------------------------------------------ pruning


class TestPrune:
    def test_root_only_tree(self):
        tbl = table_from_arrays(np.arange(3.0)[:, None], np.full(3, 2.0))
        sequence = prune_sequence(grow(tbl))
        assert len(sequence) == 1
        assert sequence[0][0] == 0.0
        assert sequence[0][1].root.is_leaf

    def test_zero_gain_split_collapses_immediately(self):
        # hand-built depth-1 tree whose split does not reduce error
        y = np.array([1.0, 1.0, 1.0, 1.0])
        rows = np.arange(4)
        root = TreeNode(rows=rows, count=4, mean=1.0, sse=0.0)
        root.rule = SplitRule(var=0, threshold=1.5)
        root.improvement = 0.0
        root.left = TreeNode(rows=rows[:2], count=2, mean=1.0, sse=0.0)
        root.right = TreeNode(rows=rows[2:], count=2, mean=1.0, sse=0.0)
        tbl = table_from_arrays(np.arange(4.0)[:, None], y)
        fitted = tree.RegressionTree(root=root, table=tbl, minsplit=2, minbucket=1)
        sequence = prune_sequence(fitted)
        assert len(sequence) == 1
        assert sequence[0][1].root.is_leaf

    def test_alphas_strictly_increase_and_subtrees_nest(self):
        rng = np.random.default_rng(8)
        tbl = random_table(rng, n=40, n_vars=3)
        sequence = prune_sequence(grow(tbl, minsplit=5, minbucket=1))
        alphas = [a for a, _ in sequence]
        assert all(b > a for a, b in zip(alphas, alphas[1:]))
        sizes = [t.n_leaves() for _, t in sequence]
        assert all(b < a for a, b in zip(sizes, sizes[1:]))
        # nesting: every later tree's leaves partition-coarsen the earlier tree's
        for (_, big), (_, small) in zip(sequence, sequence[1:]):
            big_leaves = [frozenset(leaf.rows.tolist()) for leaf in big.leaves()]
            for leaf in small.leaves():
                rows = frozenset(leaf.rows.tolist())
                assert all(b <= rows or not (b & rows) for b in big_leaves)

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_sequence_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        tbl = random_table(rng, n=int(rng.integers(10, 41)), n_vars=3)
        fitted = grow(tbl, minsplit=8, minbucket=2)
        sequence = prune_sequence(fitted)
        candidates = enumerate_pruned_subtrees(fitted.root)
        alphas = [a for a, _ in sequence]
        probes = [0.0]
        for a, b in zip(alphas, alphas[1:]):
            probes.append((a + b) / 2.0)
        probes.append(alphas[-1] * 2.0 + 1.0)
        for alpha in probes:
            sig, _, _ = oracle_optimal_subtree(candidates, alpha)
            mine = tree._tree_at_alpha(sequence, alpha)
            assert mine.leaf_signature() == sig


# ------------------------------------------------------------ cross-validation


class TestCrossValidate:
    def test_noise_yields_root_only_in_majority(self):
        rng = np.random.default_rng(123)
        tbl = table_from_arrays(rng.normal(size=(50, 4)), rng.normal(size=50))
        root_only = sum(
            cross_validate(tbl, minsplit=5, minbucket=1, folds=10, seed=seed).tree.root.is_leaf
            for seed in range(10)
        )
        assert root_only >= 6

    def test_separable_data_keeps_true_split(self):
        x = np.arange(12.0)[:, None]
        y = np.array([0.0] * 6 + [10.0] * 6)
        tbl = table_from_arrays(x, y)
        cv = cross_validate(tbl, minsplit=4, minbucket=1, folds=4, seed=0)
        assert cv.tree.n_leaves() == 2
        assert cv.tree.root.rule.threshold == 5.5

    def test_fold_count_validated(self):
        tbl = table_from_arrays(np.arange(6.0)[:, None], np.arange(6.0))
        with pytest.raises(ValueError, match="folds"):
            cross_validate(tbl, folds=7)

    def test_chosen_alpha_is_member_of_sequence(self, cfr_table):
        cv = cross_validate(cfr_table, minsplit=5, minbucket=1, folds=10, seed=0)
        assert cv.alpha in [a for a, _, _, _ in cv.table]

    def test_cfr_variable_count(self, cfr_table):
        cv = cross_validate(cfr_table, minsplit=5, minbucket=1, folds=10, seed=0)
        assert 6 <= len(cv.tree.used_variables()) <= 8


# ------------------------------------------------------------ importance & predict


class TestImportance:
    def test_root_only_all_zero(self):
        tbl = table_from_arrays(np.arange(4.0)[:, None], np.full(4, 1.0))
        fitted = grow(tbl)
        assert all(v == 0.0 for v in variable_importance(fitted).values())

    def test_single_split_single_variable(self):
        tbl = table_from_arrays(
            np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0.0, 0.0, 10.0, 10.0])
        )
        fitted = grow(tbl, minsplit=2, minbucket=1)
        importance = variable_importance(fitted)
        assert importance["v0"] == pytest.approx(100.0)

    def test_percentages_sum_to_100(self, cfr_table):
        fitted = grow(cfr_table, minsplit=5, minbucket=1)
        importance = variable_importance(fitted)
        assert sum(importance.values()) == pytest.approx(100.0)

    def test_cfr_top7_set(self, cfr_table):
        cv = cross_validate(cfr_table, minsplit=5, minbucket=1, folds=10, seed=0)
        importance = variable_importance(cv.tree)
        top7 = set(list(importance)[:7])
        assert top7 == {
            "total_cases_thousands",
            "pct_over_65",
            "population_millions",
            "doctors_per_1000",
            "lockdown_days",
            "outbreak_days",
            "hospital_beds_per_1000",
        }


class TestPredict:
    def test_root_only_returns_global_mean(self):
        tbl = table_from_arrays(np.arange(5.0)[:, None], np.array([1.0, 2, 3, 4, 5]))
        fitted = grow(tbl, minsplit=10, minbucket=1)
        assert tree.predict(fitted, [99.0]) == pytest.approx(3.0)

    def test_toy_routing(self):
        tbl = table_from_arrays(
            np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0.0, 0.0, 10.0, 10.0])
        )
        fitted = grow(tbl, minsplit=2, minbucket=1)
        assert tree.predict(fitted, [1.0]) == 0.0
        assert tree.predict(fitted, [4.0]) == 10.0

    def test_missing_routed_value_rejected(self):
        tbl = table_from_arrays(
            np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0.0, 0.0, 10.0, 10.0])
        )
        fitted = grow(tbl, minsplit=2, minbucket=1)
        with pytest.raises(ValueError, match="missing"):
            tree.predict(fitted, [float("nan")])

    def test_cfr_high_case_mid_population_rule(self, cfr_table):
        cv = cross_validate(cfr_table, minsplit=5, minbucket=1, folds=10, seed=0)
        record = dict.fromkeys(cfr_table.names, 0.0)
        record.update(
            total_cases_thousands=20.0,
            population_millions=40.0,
            pop_density_per_km2=100.0,
            pct_over_65=18.0,
            lockdown_days=15.0,
            outbreak_days=60.0,
            doctors_per_1000=3.5,
            hospital_beds_per_1000=3.0,
            income_level=1.0,
            climate_zone=0.0,
        )
        value = tree.predict(cv.tree, [record[n] for n in cfr_table.names])
        assert value == pytest.approx(0.10, abs=0.015)

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_prediction_piecewise_constant(self, seed):
        rng = np.random.default_rng(seed)
        tbl = random_table(rng, n=30, n_vars=2)
        fitted = grow(tbl, minsplit=5, minbucket=1)
        thresholds = sorted(
            node.rule.threshold for node in fitted.internal_nodes() if node.rule.var == 0
        )
        base = np.array([0.0, tbl.x[:, 1].mean()])
        value = tree.predict(fitted, base)
        # nudge the first coordinate without crossing any split threshold
        eps = min((t - base[0] for t in thresholds if t > base[0]), default=1.0) / 2
        nudged = base.copy()
        nudged[0] += eps * 0.9
        assert tree.predict(fitted, nudged) == value
