"""Regression tree: MSE-splitting growth, weakest-link cost-complexity pruning,
cross-validated size selection and variable importance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# A split is admitted only if it beats this share of the parent's SSE, so
# floating-point noise on a pure node can never manufacture a split. A node
# whose SSE is negligible against the response magnitude is pure outright.
REDUCTION_TOL_REL = 1e-12
PURITY_TOL_REL = 1e-24


@dataclass(frozen=True)
class Table:
    """Feature matrix with per-column kinds plus the numeric response."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 2:
            raise ValueError("x must be a 2-d array")
        if len(y) != x.shape[0]:
            raise ValueError("x and y row counts differ")
        if x.shape[1] != len(self.names) or len(self.names) != len(self.kinds):
            raise ValueError("names/kinds must match the number of columns")
        for kind in self.kinds:
            if kind not in (NUMERIC, CATEGORICAL):
                raise ValueError(f"unknown column kind {kind!r}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def n_vars(self) -> int:
        return self.x.shape[1]

    def subset(self, rows: np.ndarray) -> "Table":
        return Table(self.names, self.kinds, self.x[rows], self.y[rows])


def table_from_arrays(x, y, names=None, kinds=None) -> Table:
    x = np.asarray(x, dtype=float)
    m = x.shape[1]
    if names is None:
        names = tuple(f"v{i}" for i in range(m))
    if kinds is None:
        kinds = (NUMERIC,) * m
    return Table(tuple(names), tuple(kinds), x, np.asarray(y, dtype=float))


@dataclass(frozen=True)
class SplitRule:
    var: int
    threshold: float | None = None
    left_levels: frozenset | None = None

    def goes_left(self, value: float) -> bool:
        if self.threshold is not None:
            if math.isnan(value):
                raise ValueError(f"missing value for split variable {self.var}")
            return value < self.threshold
        if math.isnan(value):
            raise ValueError(f"missing value for split variable {self.var}")
        return value in self.left_levels

    def describe(self, names) -> str:
        if self.threshold is not None:
            return f"{names[self.var]} < {self.threshold:g}"
        levels = ",".join(f"{v:g}" for v in sorted(self.left_levels))
        return f"{names[self.var]} in {{{levels}}}"


@dataclass
class TreeNode:
    rows: np.ndarray
    count: int
    mean: float
    sse: float
    rule: SplitRule | None = None
    improvement: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.rule is None

    def collapse(self) -> None:
        self.rule = None
        self.improvement = 0.0
        self.left = None
        self.right = None

    def clone(self) -> "TreeNode":
        node = TreeNode(
            rows=self.rows,
            count=self.count,
            mean=self.mean,
            sse=self.sse,
            rule=self.rule,
            improvement=self.improvement,
        )
        if not self.is_leaf:
            node.left = self.left.clone()
            node.right = self.right.clone()
        return node


@dataclass
class RegressionTree:
    root: TreeNode
    table: Table
    minsplit: int
    minbucket: int
    complexity: list = field(default_factory=list)

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.nodes() if n.is_leaf]

    def nodes(self) -> list[TreeNode]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            if not node.is_leaf:
                stack.extend([node.right, node.left])
        return out

    def internal_nodes(self) -> list[TreeNode]:
        return [n for n in self.nodes() if not n.is_leaf]

    def training_sse(self) -> float:
        return sum(leaf.sse for leaf in self.leaves())

    def n_leaves(self) -> int:
        return len(self.leaves())

    def used_variables(self) -> set[int]:
        return {n.rule.var for n in self.internal_nodes()}

    def predict_row(self, row: np.ndarray) -> float:
        node = self.root
        while not node.is_leaf:
            node = node.left if node.rule.goes_left(row[node.rule.var]) else node.right
        return node.mean

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.array([self.predict_row(row) for row in x])

    def leaf_signature(self) -> frozenset:
        """Partition of the training rows into leaves, for structural comparison."""
        return frozenset(frozenset(leaf.rows.tolist()) for leaf in self.leaves())

    def clone(self) -> "RegressionTree":
        return RegressionTree(
            root=self.root.clone(),
            table=self.table,
            minsplit=self.minsplit,
            minbucket=self.minbucket,
            complexity=list(self.complexity),
        )

    def to_dict(self) -> dict:
        def node_dict(node: TreeNode) -> dict:
            out = {
                "count": int(node.count),
                "mean": float(node.mean),
                "sse": float(node.sse),
            }
            if not node.is_leaf:
                out["split"] = node.rule.describe(self.table.names)
                out["variable"] = self.table.names[node.rule.var]
                out["improvement"] = float(node.improvement)
                out["left"] = node_dict(node.left)
                out["right"] = node_dict(node.right)
            return out

        return {
            "minsplit": self.minsplit,
            "minbucket": self.minbucket,
            "n_leaves": self.n_leaves(),
            "root": node_dict(self.root),
            "complexity": [
                {"alpha": float(a), "n_leaves": int(size), "cv_error": cv}
                for a, size, cv in self.complexity
            ],
        }


def _sse(values: np.ndarray) -> float:
    return float(np.sum((values - values.mean()) ** 2))


def _categorical_partitions(levels: list[float]):
    """Proper subsets in canonical order, each partition listed once with the
    lowest level pinned to the left side."""
    rest = levels[1:]
    for mask in range(2 ** len(rest)):
        left = [levels[0]] + [v for i, v in enumerate(rest) if mask >> i & 1]
        if len(left) == len(levels):
            continue
        yield float(mask), frozenset(left)


def best_split(table: Table, rows: np.ndarray, minbucket: int = 1) -> tuple[SplitRule, float] | None:
    """Best SSE-reducing split over all variables and admissible cut points.

    Ties break toward the lowest variable index, then the lowest threshold
    (numeric) or the canonical subset order (categorical). Returns None when
    no admissible split reduces the parent SSE.
    """
    y = table.y[rows]
    parent_sse = _sse(y)
    if parent_sse <= PURITY_TOL_REL * max(float(np.dot(y, y)), 1e-300):
        return None
    tol = parent_sse * REDUCTION_TOL_REL
    best_key = None
    best_rule = None
    best_red = None
    for var in range(table.n_vars):
        col = table.x[rows, var]
        if table.kinds[var] == NUMERIC:
            # candidates come from the sorted distinct values; each cut is
            # evaluated on original-row-order subsets so that exact ties
            # resolve identically no matter how the data is arranged
            distinct = np.unique(col)
            for i in range(1, len(distinct)):
                threshold = (distinct[i - 1] + distinct[i]) / 2.0
                mask = col < threshold
                n_left = int(mask.sum())
                if n_left < minbucket or len(rows) - n_left < minbucket:
                    continue
                reduction = parent_sse - _sse(y[mask]) - _sse(y[~mask])
                if reduction <= tol:
                    continue
                key = (-reduction, var, threshold)
                if best_key is None or key < best_key:
                    best_key = key
                    best_rule = SplitRule(var=var, threshold=threshold)
                    best_red = reduction
        else:
            levels = sorted(set(col.tolist()))
            if len(levels) < 2:
                continue
            for subset_key, left_levels in _categorical_partitions(levels):
                mask = np.isin(col, list(left_levels))
                n_left = int(mask.sum())
                if n_left < minbucket or len(rows) - n_left < minbucket:
                    continue
                reduction = parent_sse - _sse(y[mask]) - _sse(y[~mask])
                if reduction <= tol:
                    continue
                key = (-reduction, var, subset_key)
                if best_key is None or key < best_key:
                    best_key = key
                    best_rule = SplitRule(var=var, left_levels=left_levels)
                    best_red = reduction
    if best_rule is None:
        return None
    return best_rule, best_red


def default_minsplit(n: int) -> int:
    return max(5, math.ceil(0.1 * n))


def grow(table: Table, minsplit: int | None = None, minbucket: int | None = None) -> RegressionTree:
    """Recursive partitioning until no admissible SSE-reducing split remains."""
    if table.n == 0:
        raise ValueError("cannot grow a tree on an empty table")
    if minsplit is None:
        minsplit = default_minsplit(table.n)
    if minbucket is None:
        minbucket = max(1, minsplit // 3)
    if minsplit < 2 * minbucket:
        raise ValueError(f"minsplit ({minsplit}) must be at least twice minbucket ({minbucket})")

    def build(rows: np.ndarray) -> TreeNode:
        y = table.y[rows]
        node = TreeNode(rows=rows, count=len(rows), mean=float(y.mean()), sse=_sse(y))
        if len(rows) < minsplit:
            return node
        found = best_split(table, rows, minbucket)
        if found is None:
            return node
        rule, reduction = found
        mask = np.array([rule.goes_left(v) for v in table.x[rows, rule.var]])
        node.rule = rule
        node.improvement = reduction
        node.left = build(rows[mask])
        node.right = build(rows[~mask])
        return node

    root = build(np.arange(table.n))
    return RegressionTree(root=root, table=table, minsplit=minsplit, minbucket=minbucket)


def prune_sequence(tree: RegressionTree) -> list[tuple[float, RegressionTree]]:
    """Weakest-link cost-complexity pruning.

    Returns the nested sequence [(alpha_0=0, T_0), ..., (alpha_K, root-only)]
    where T_0 already drops any zero-gain splits, each T_{k+1} collapses the
    weakest links of T_k, and alphas increase strictly.
    """
    work = tree.clone()

    def link_strength(node: TreeNode) -> float:
        subtree_sse = sum(leaf.sse for leaf in _subtree_leaves(node))
        n_leaves = sum(1 for _ in _subtree_leaves(node))
        return (node.sse - subtree_sse) / (n_leaves - 1)

    def collapse_at_or_below(threshold: float) -> None:
        # bottom-up so that strengths are evaluated on the already-collapsed tree
        changed = True
        while changed:
            changed = False
            for node in _postorder(work.root):
                if not node.is_leaf and link_strength(node) <= threshold:
                    node.collapse()
                    changed = True

    sequence: list[tuple[float, RegressionTree]] = []
    collapse_at_or_below(0.0)
    sequence.append((0.0, work.clone()))
    while not work.root.is_leaf:
        alpha = min(link_strength(n) for n in _internal(work.root))
        collapse_at_or_below(alpha)
        if alpha <= sequence[-1][0]:
            sequence[-1] = (sequence[-1][0], work.clone())
        else:
            sequence.append((alpha, work.clone()))
    return sequence


def _subtree_leaves(node: TreeNode):
    if node.is_leaf:
        yield node
    else:
        yield from _subtree_leaves(node.left)
        yield from _subtree_leaves(node.right)


def _internal(node: TreeNode):
    if not node.is_leaf:
        yield node
        yield from _internal(node.left)
        yield from _internal(node.right)


def _postorder(node: TreeNode):
    if not node.is_leaf:
        yield from _postorder(node.left)
        yield from _postorder(node.right)
    yield node


@dataclass
class CrossValidation:
    alpha: float
    tree: RegressionTree
    table: list[tuple[float, int, float, float]]  # (alpha, n_leaves, cv_error, cv_se)
    seed: int
    folds: int


def cross_validate(
    table: Table,
    minsplit: int | None = None,
    minbucket: int | None = None,
    folds: int = 10,
    seed: int = 0,
) -> CrossValidation:
    """Select the pruning level by k-fold cross-validation with the one-SE
    preference for smaller trees."""
    if not 2 <= folds <= table.n:
        raise ValueError(f"folds must be in 2..{table.n}, got {folds}")
    full = grow(table, minsplit, minbucket)
    sequence = prune_sequence(full)
    alphas = [a for a, _ in sequence]
    # evaluate between breakpoints: geometric midpoints, the last alpha as-is
    eval_alphas = [
        math.sqrt(a * alphas[i + 1]) if i + 1 < len(alphas) else a
        for i, a in enumerate(alphas)
    ]

    rng = np.random.default_rng(seed)
    assignment = np.empty(table.n, dtype=int)
    assignment[rng.permutation(table.n)] = np.arange(table.n) % folds

    sq_errors = np.zeros((len(eval_alphas), table.n))
    for fold in range(folds):
        holdout = np.flatnonzero(assignment == fold)
        keep = np.flatnonzero(assignment != fold)
        sub = table.subset(keep)
        fold_tree = grow(sub, minsplit, minbucket)
        fold_seq = prune_sequence(fold_tree)
        for i, alpha in enumerate(eval_alphas):
            pruned = _tree_at_alpha(fold_seq, alpha)
            preds = pruned.predict(table.x[holdout])
            sq_errors[i, holdout] = (table.y[holdout] - preds) ** 2

    cv_mean = sq_errors.mean(axis=1)
    cv_se = sq_errors.std(axis=1, ddof=1) / math.sqrt(table.n)
    best_i = int(np.argmin(cv_mean))
    cutoff = cv_mean[best_i] + cv_se[best_i]
    chosen = best_i
    for i in range(len(eval_alphas)):
        if cv_mean[i] <= cutoff:
            chosen = max(chosen, i)
    alpha = alphas[chosen]
    optimal = sequence[chosen][1].clone()
    optimal.complexity = [
        (alphas[i], sequence[i][1].n_leaves(), float(cv_mean[i]))
        for i in range(len(sequence))
    ]
    return CrossValidation(
        alpha=alpha,
        tree=optimal,
        table=[
            (alphas[i], sequence[i][1].n_leaves(), float(cv_mean[i]), float(cv_se[i]))
            for i in range(len(sequence))
        ],
        seed=seed,
        folds=folds,
    )


def _tree_at_alpha(sequence: list[tuple[float, RegressionTree]], alpha: float) -> RegressionTree:
    chosen = sequence[0][1]
    for a, tree in sequence:
        if a <= alpha:
            chosen = tree
        else:
            break
    return chosen


def variable_importance(tree: RegressionTree) -> dict[str, float]:
    """Importance percentages from primary-split SSE reductions plus
    agreement-weighted surrogate credits, normalised to sum to 100."""
    table = tree.table
    scores = np.zeros(table.n_vars)
    for node in tree.internal_nodes():
        rule = node.rule
        scores[rule.var] += node.improvement
        went_left = np.array([rule.goes_left(v) for v in table.x[node.rows, rule.var]])
        n_node = len(node.rows)
        majority = max(went_left.sum(), n_node - went_left.sum()) / n_node
        if majority >= 1.0:
            continue
        for var in range(table.n_vars):
            if var == rule.var:
                continue
            agree = _best_surrogate_agreement(table, node.rows, var, went_left)
            adjusted = (agree - majority) / (1.0 - majority)
            if adjusted > 0:
                scores[var] += node.improvement * adjusted
    total = scores.sum()
    if total <= 0:
        return {name: 0.0 for name in table.names}
    ranked = sorted(zip(table.names, scores), key=lambda item: (-item[1], item[0]))
    return {name: 100.0 * s / total for name, s in ranked}


def _best_surrogate_agreement(table: Table, rows: np.ndarray, var: int, went_left: np.ndarray) -> float:
    col = table.x[rows, var]
    n = len(rows)
    best = 0.0
    if table.kinds[var] == NUMERIC:
        values = np.unique(col)
        for i in range(1, len(values)):
            threshold = (values[i - 1] + values[i]) / 2.0
            mask = col < threshold
            agree = max((mask == went_left).sum(), (mask != went_left).sum()) / n
            best = max(best, agree)
    else:
        levels = sorted(set(col.tolist()))
        if len(levels) < 2:
            return 0.0
        for _, left_levels in _categorical_partitions(levels):
            mask = np.isin(col, list(left_levels))
            agree = max((mask == went_left).sum(), (mask != went_left).sum()) / n
            best = max(best, agree)
    return float(best)


def predict(tree: RegressionTree, record) -> float:
    """Route a single record to its leaf mean; missing values on routed
    variables are an error (no surrogate routing at prediction time)."""
    row = np.asarray(record, dtype=float)
    if row.ndim != 1 or len(row) != tree.table.n_vars:
        raise ValueError(f"record must have {tree.table.n_vars} values")
    return tree.predict_row(row)
