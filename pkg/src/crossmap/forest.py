"""Random forest regression with out-of-bag permutation importance.

Used to pick, for each standard, the specifications whose embeddings carry
independent predictive signal: a forest of CART regression trees is grown on
bootstrap samples, the out-of-bag error inflation from permuting each
predictor is averaged into an importance score, and the whole procedure is
repeated over independently seeded replications to stabilize the ranking.
The top ``top_k`` (three, by default) predictors feed the hierarchical
regression.

Everything is a pure function of the dataset and the configured seed: trees,
replications, and permutations each own a spawned child stream of the seeded
generator, so results do not depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from crossmap.similarity import RegressionDataset


@dataclass(frozen=True)
class ForestConfig:
    """Forest-selection knobs; defaults mirror the study configuration."""

    seed: int
    n_trees: int = 500
    mtry: int = 6
    n_replications: int = 25
    min_leaf: int = 5
    top_k: int = 3

    def __post_init__(self) -> None:
        for name in ("n_trees", "mtry", "n_replications", "min_leaf", "top_k"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


class RegressionTree:
    """CART regression tree stored as flat node arrays.

    Internal nodes hold (feature, threshold, left, right); leaves have
    feature == -1 and carry the training-sample mean in ``value``.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def used_features(self) -> np.ndarray:
        """Sorted indices of predictors appearing in any internal node."""
        return np.unique(self.feature[self.feature >= 0])

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Predict rows of ``x`` by routing them down the tree in lockstep."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        cur = np.zeros(x.shape[0], dtype=np.int64)
        while True:
            feats = self.feature[cur]
            active = np.flatnonzero(feats >= 0)
            if active.size == 0:
                break
            nodes = cur[active]
            go_left = x[active, self.feature[nodes]] <= self.threshold[nodes]
            cur[active] = np.where(go_left, self.left[nodes], self.right[nodes])
        return self.value[cur]


def _best_split(x, y, idx, feats, min_leaf):
    """Best (feature, threshold, sse) over candidate features, or None.

    Split points are the midpoints between sorted distinct values; the
    winner minimizes the summed child squared error, with ties resolved
    toward the earlier candidate feature and then the smaller split point.
    """
    s = idx.size
    sub = x[np.ix_(idx, feats)]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = y[idx][order]

    c1 = np.cumsum(ys, axis=0)
    c2 = np.cumsum(ys * ys, axis=0)
    tot1 = c1[-1]
    tot2 = c2[-1]
    left_n = np.arange(1, s, dtype=np.float64)[:, None]
    right_n = s - left_n
    sse = (c2[:-1] - c1[:-1] ** 2 / left_n) + (
        (tot2 - c2[:-1]) - (tot1 - c1[:-1]) ** 2 / right_n
    )

    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        valid[: min_leaf - 1] = False
        valid[s - min_leaf :] = False
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)

    flat = int(np.argmin(sse.T))  # feature-major scan fixes the tie order
    fi, pos = divmod(flat, s - 1)
    if not np.isfinite(sse[pos, fi]):
        return None
    threshold = 0.5 * (xs[pos, fi] + xs[pos + 1, fi])
    if threshold >= xs[pos + 1, fi]:  # adjacent floats can make the midpoint collapse
        threshold = xs[pos, fi]
    return int(feats[fi]), float(threshold), float(sse[pos, fi])


def fit_tree(dataset, bootstrap_sample, rng, *, mtry: int, min_leaf: int) -> RegressionTree:
    """Grow one CART regression tree on the given bootstrap sample.

    At each node ``mtry`` candidate predictors are drawn without replacement
    from ``rng``; the node becomes a leaf when it holds fewer than
    2 * min_leaf cases, its responses have zero variance, or no candidate
    offers a split with both children >= min_leaf.
    """
    x = np.asarray(dataset.predictors, dtype=np.float64)
    y = np.asarray(dataset.response, dtype=np.float64)
    idx_root = np.asarray(bootstrap_sample, dtype=np.int64)
    if idx_root.size == 0:
        raise ValueError("bootstrap sample is empty")
    m = x.shape[1]
    k = min(mtry, m)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack: list[tuple[int, np.ndarray]] = [(root, idx_root)]
    while stack:
        node, idx = stack.pop()
        ys = y[idx]
        value[node] = float(ys.mean())
        if idx.size < 2 * min_leaf or ys.var() == 0.0:
            continue
        feats = rng.choice(m, size=k, replace=False)
        split = _best_split(x, y, idx, feats, min_leaf)
        if split is None:
            continue
        f, thr, _ = split
        mask = x[idx, f] <= thr
        if mask.all() or not mask.any():
            continue
        feature[node] = f
        threshold[node] = thr
        lid = new_node()
        rid = new_node()
        left[node] = lid
        right[node] = rid
        stack.append((rid, idx[~mask]))
        stack.append((lid, idx[mask]))
    return RegressionTree(feature, threshold, left, right, value)


@dataclass(frozen=True)
class Forest:
    """Fitted trees with their bootstrap samples (needed for OOB scoring)."""

    trees: tuple[RegressionTree, ...]
    bootstrap: tuple[np.ndarray, ...]
    n_cases: int


def build_forest(dataset, rng, *, n_trees: int, mtry: int, min_leaf: int) -> Forest:
    """Fit ``n_trees`` bootstrap trees, one spawned rng stream per tree."""
    n = dataset.n
    trees = []
    boots = []
    for trng in rng.spawn(n_trees):
        boot = trng.integers(0, n, size=n)
        trees.append(fit_tree(dataset, boot, trng, mtry=mtry, min_leaf=min_leaf))
        boots.append(boot)
    return Forest(trees=tuple(trees), bootstrap=tuple(boots), n_cases=n)


def permutation_importance(forest: Forest, dataset, rng) -> np.ndarray:
    """Mean out-of-bag error inflation per predictor, aligned with
    ``dataset.predictor_refs``.

    For each tree, each predictor used by that tree has its out-of-bag
    column permuted (one fresh permutation from the tree's spawned stream)
    and the OOB MSE delta recorded; predictors a tree never uses contribute
    a delta of zero.  Deltas are averaged over all trees with a nonempty
    out-of-bag set.
    """
    x = np.asarray(dataset.predictors, dtype=np.float64)
    y = np.asarray(dataset.response, dtype=np.float64)
    m = x.shape[1]
    importance = np.zeros(m)
    n_scored = 0
    for tree, boot, trng in zip(forest.trees, forest.bootstrap, rng.spawn(len(forest.trees))):
        oob = np.flatnonzero(np.bincount(boot, minlength=forest.n_cases) == 0)
        if oob.size == 0:
            continue
        n_scored += 1
        xo = x[oob]
        yo = y[oob]
        base = float(np.mean((tree.predict(xo) - yo) ** 2))
        used = tree.used_features()
        if used.size == 0:
            continue
        batch = np.broadcast_to(xo, (used.size, *xo.shape)).copy()
        for b, f in enumerate(used):
            batch[b, :, f] = xo[trng.permutation(oob.size), f]
        preds = tree.predict(batch.reshape(-1, m)).reshape(used.size, oob.size)
        importance[used] += np.mean((preds - yo) ** 2, axis=1) - base
    if n_scored:
        importance /= n_scored
    return importance


@dataclass(frozen=True)
class ImportanceRanking:
    """Replication-averaged importance of every predictor for one standard."""

    target_ref: int
    scores: tuple[tuple[int, float, float], ...]  # (spec_ref, mean, sd), descending mean
    selected: tuple[int, ...]

    def __post_init__(self) -> None:
        refs = [s[0] for s in self.scores]
        if len(refs) != len(set(refs)):
            raise ValueError("duplicate refs in importance scores")
        if tuple(refs[: len(self.selected)]) != self.selected:
            raise ValueError("selected must be the leading refs of scores")

    def to_json(self) -> dict:
        return {
            "target_ref": self.target_ref,
            "selected": list(self.selected),
            "scores": [
                {"spec_ref": r, "mean_importance": mu, "importance_sd": sd}
                for r, mu, sd in self.scores
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ImportanceRanking":
        return cls(
            target_ref=int(payload["target_ref"]),
            scores=tuple(
                (int(s["spec_ref"]), float(s["mean_importance"]), float(s["importance_sd"]))
                for s in payload["scores"]
            ),
            selected=tuple(int(r) for r in payload["selected"]),
        )


def select_top_k(dataset, cfg: ForestConfig) -> ImportanceRanking:
    """Rank all predictors by replication-averaged permutation importance.

    Deterministic in (dataset, cfg): replication r uses the r-th child of
    the config seed.  Predictors are canonicalized into ascending-ref order
    before any random draw, so reordering the input columns permutes nothing
    but the labels.  Ties in mean importance resolve toward the lower ref.
    """
    m = dataset.m
    if cfg.mtry > m:
        raise ValueError(f"mtry={cfg.mtry} exceeds predictor count {m}")
    if cfg.top_k > m:
        raise ValueError(f"top_k={cfg.top_k} exceeds predictor count {m}")

    refs = np.asarray(dataset.predictor_refs, dtype=np.int64)
    canon = np.argsort(refs, kind="stable")
    ds = RegressionDataset(
        response=np.asarray(dataset.response, dtype=np.float64),
        predictors=np.asarray(dataset.predictors, dtype=np.float64)[:, canon],
        target_ref=dataset.target_ref,
        predictor_refs=tuple(int(r) for r in refs[canon]),
    )

    rep_scores = np.zeros((cfg.n_replications, m))
    for r, seq in enumerate(np.random.SeedSequence(cfg.seed).spawn(cfg.n_replications)):
        build_rng, imp_rng = np.random.default_rng(seq).spawn(2)
        forest = build_forest(ds, build_rng, n_trees=cfg.n_trees, mtry=cfg.mtry, min_leaf=cfg.min_leaf)
        rep_scores[r] = permutation_importance(forest, ds, imp_rng)

    mean = rep_scores.mean(axis=0)
    sd = rep_scores.std(axis=0, ddof=1) if cfg.n_replications > 1 else np.zeros(m)
    order = np.lexsort((ds.predictor_refs, -mean))
    scores = tuple(
        (int(ds.predictor_refs[j]), float(mean[j]), float(sd[j])) for j in order
    )
    return ImportanceRanking(
        target_ref=dataset.target_ref,
        scores=scores,
        selected=tuple(s[0] for s in scores[: cfg.top_k]),
    )
