"""LambdaMART learning to rank: deltaNDCG-scaled pairwise lambda gradients,
Newton-step regression trees, gradient boosting, and LETOR file IO.

Training is fully deterministic: no row or feature subsampling, stable sort
orders everywhere, split ties broken by lowest feature index then lowest
threshold.
"""

from dataclasses import dataclass, field

import numpy as np

LEAF_RIDGE = 1e-9
MIN_SPLIT_GAIN = 1e-12


@dataclass(frozen=True)
class RankingInstance:
    query_id: str
    doc_id: str
    features: tuple[float, ...]
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1, 2):
            raise ValueError(f"label must be in {{0,1,2}}, got {self.label}")


@dataclass(frozen=True)
class TrainConfig:
    trees: int = 50
    leaves: int = 4
    learning_rate: float = 0.2
    min_leaf_instances: int = 30
    ndcg_truncation: int = 10

    def __post_init__(self) -> None:
        if min(self.trees, self.leaves, self.min_leaf_instances,
               self.ndcg_truncation) < 1 or self.learning_rate <= 0:
            raise ValueError("all training parameters must be positive")


class RegressionTree:
    """Binary regression tree over feature vectors.

    Nodes are stored in parallel arrays; `feature[i] == -1` marks a leaf.
    Routing rule: x[feature] <= threshold goes left.
    """

    def __init__(self) -> None:
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _add_leaf(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.feature) - 1

    def _make_split(self, node: int, feat: int, thr: float,
                    left: int, right: int) -> None:
        self.feature[node] = feat
        self.threshold[node] = thr
        self.left[node] = left
        self.right[node] = right
        self.value[node] = 0.0

    @property
    def leaf_count(self) -> int:
        return sum(1 for f in self.feature if f == -1)

    def predict(self, x) -> float:
        node = 0
        while self.feature[node] != -1:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return self.value[node]

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.float64)
        for i in range(X.shape[0]):
            out[i] = self.predict(X[i])
        return out

    def to_lines(self) -> list[str]:
        """Preorder serialization: "S <feat> <thr>" / "L <value>"."""
        lines: list[str] = []

        def walk(node: int) -> None:
            if self.feature[node] == -1:
                lines.append(f"L {self.value[node]!r}")
            else:
                lines.append(f"S {self.feature[node]} {self.threshold[node]!r}")
                walk(self.left[node])
                walk(self.right[node])

        walk(0)
        return lines

    @classmethod
    def from_lines(cls, lines: list[str]) -> "RegressionTree":
        tree = cls()
        pos = 0

        def build() -> int:
            nonlocal pos
            if pos >= len(lines):
                raise ValueError("truncated tree serialization")
            parts = lines[pos].split()
            pos += 1
            if parts[0] == "L":
                return tree._add_leaf(float(parts[1]))
            if parts[0] == "S":
                node = tree._add_leaf(0.0)
                left = build()
                right = build()
                tree._make_split(node, int(parts[1]), float(parts[2]), left, right)
                return node
            raise ValueError(f"bad tree node line: {lines[pos - 1]!r}")

        root = build()
        if root != 0 or pos != len(lines):
            raise ValueError("malformed tree serialization")
        return tree


@dataclass
class LambdaMARTModel:
    trees: list[RegressionTree]
    shrinkage: float
    feature_count: int
    config: TrainConfig
    seed: int
    training_ndcg: list[float] = field(default_factory=list)

    def predict(self, features) -> float:
        if len(features) != self.feature_count:
            raise ValueError(
                f"expected {self.feature_count} features, got {len(features)}")
        return sum(self.shrinkage * tree.predict(features) for tree in self.trees)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.feature_count:
            raise ValueError(
                f"expected {self.feature_count} features, got {X.shape[1]}")
        out = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            out += self.shrinkage * tree.predict_matrix(X)
        return out

    def save(self, path) -> None:
        cfg = self.config
        with open(path, "w", encoding="utf-8") as f:
            f.write("cqarank-lambdamart-v1\n")
            f.write(f"feature_count {self.feature_count}\n")
            f.write(f"shrinkage {self.shrinkage!r}\n")
            f.write(f"config {cfg.trees} {cfg.leaves} {cfg.learning_rate!r} "
                    f"{cfg.min_leaf_instances} {cfg.ndcg_truncation}\n")
            f.write(f"seed {self.seed}\n")
            f.write(f"num_trees {len(self.trees)}\n")
            for i, tree in enumerate(self.trees):
                lines = tree.to_lines()
                f.write(f"tree {i} {len(lines)}\n")
                for line in lines:
                    f.write(line + "\n")

    @classmethod
    def load(cls, path) -> "LambdaMARTModel":
        with open(path, encoding="utf-8") as f:
            if f.readline().strip() != "cqarank-lambdamart-v1":
                raise ValueError(f"{path}: not a cqarank LambdaMART model")
            feature_count = int(f.readline().split()[1])
            shrinkage = float(f.readline().split()[1])
            cfg_parts = f.readline().split()[1:]
            config = TrainConfig(
                trees=int(cfg_parts[0]), leaves=int(cfg_parts[1]),
                learning_rate=float(cfg_parts[2]),
                min_leaf_instances=int(cfg_parts[3]),
                ndcg_truncation=int(cfg_parts[4]))
            seed = int(f.readline().split()[1])
            num_trees = int(f.readline().split()[1])
            trees = []
            for _ in range(num_trees):
                header = f.readline().split()
                n_lines = int(header[2])
                lines = [f.readline().rstrip("\n") for _ in range(n_lines)]
                trees.append(RegressionTree.from_lines(lines))
        return cls(trees=trees, shrinkage=shrinkage, feature_count=feature_count,
                   config=config, seed=seed)


def _ranked_positions(scores: np.ndarray) -> np.ndarray:
    """1-based rank of each doc under the current scores; ties keep input order."""
    order = np.argsort(-scores, kind="stable")
    pos = np.empty(len(scores), dtype=np.int64)
    pos[order] = np.arange(1, len(scores) + 1)
    return pos


def _ideal_dcg(labels: np.ndarray, k: int) -> float:
    top = np.sort(labels)[::-1][:k]
    gains = (2.0 ** top) - 1.0
    discounts = 1.0 / np.log2(1.0 + np.arange(1, len(top) + 1))
    return float((gains * discounts).sum())


def ndcg_of_scores(scores, labels, k: int) -> float:
    """NDCG@k of ranking `labels` by descending `scores` (graded gains)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    idcg = _ideal_dcg(labels, k)
    if idcg == 0.0:
        return 0.0
    pos = _ranked_positions(scores)
    mask = pos <= k
    gains = (2.0 ** labels[mask]) - 1.0
    dcg = float((gains / np.log2(1.0 + pos[mask])).sum())
    return dcg / idcg


def compute_lambdas(scores, labels, truncation: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise lambda gradients and hessians for one query.

    For every pair with label_i > label_j:
      rho = 1/(1 + exp(score_i - score_j))
      lambda_i += |deltaNDCG@k(i,j)| * rho,  lambda_j -= the same
      hessian  += |deltaNDCG@k(i,j)| * rho * (1 - rho)  on both docs
    deltaNDCG comes from swapping i and j in the current score-sorted order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1 or len(scores) < 1:
        raise ValueError("scores and labels must be equal-length 1-d arrays")
    n = len(scores)
    lam = np.zeros(n, dtype=np.float64)
    hess = np.zeros(n, dtype=np.float64)
    idcg = _ideal_dcg(labels, truncation)
    if idcg == 0.0:
        return lam, hess

    pos = _ranked_positions(scores)
    disc = np.where(pos <= truncation, 1.0 / np.log2(1.0 + pos), 0.0)
    gains = (2.0 ** labels) - 1.0

    values = np.unique(labels)[::-1]
    for ai, a in enumerate(values):
        idx_a = np.flatnonzero(labels == a)
        for b in values[ai + 1:]:
            idx_b = np.flatnonzero(labels == b)
            d = scores[idx_a][:, None] - scores[idx_b][None, :]
            e = np.exp(-np.abs(d))
            rho = np.where(d >= 0, e / (1.0 + e), 1.0 / (1.0 + e))
            delta = np.abs((gains[idx_a][:, None] - gains[idx_b][None, :])
                           * (disc[idx_a][:, None] - disc[idx_b][None, :])) / idcg
            step = delta * rho
            curve = step * (1.0 - rho)
            lam[idx_a] += step.sum(axis=1)
            lam[idx_b] -= step.sum(axis=0)
            hess[idx_a] += curve.sum(axis=1)
            hess[idx_b] += curve.sum(axis=0)
    return lam, hess


def _best_split(X: np.ndarray, g: np.ndarray, idx: np.ndarray, min_leaf: int):
    """Best (gain, feature, threshold, left_idx, right_idx) for one node;
    None when no split satisfies the min-leaf constraint with positive gain."""
    n = len(idx)
    if n < 2 * min_leaf:
        return None
    g_node = g[idx]
    total = g_node.sum()
    parent = total * total / n
    best = None
    for feat in range(X.shape[1]):
        vals = X[idx, feat]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sg = g_node[order]
        csum = np.cumsum(sg)
        n_left = np.arange(1, n)
        boundary = sv[:-1] < sv[1:]
        valid = boundary & (n_left >= min_leaf) & ((n - n_left) >= min_leaf)
        if not valid.any():
            continue
        left_sum = csum[:-1]
        right_sum = total - left_sum
        gain = np.where(
            valid,
            left_sum ** 2 / n_left + right_sum ** 2 / (n - n_left) - parent,
            -np.inf)
        i = int(np.argmax(gain))  # first max: lowest threshold on ties
        if gain[i] <= MIN_SPLIT_GAIN:
            continue
        if best is None or gain[i] > best[0]:
            thr = float((sv[i] + sv[i + 1]) / 2.0)
            if thr >= sv[i + 1]:  # midpoint of adjacent floats can round up
                thr = float(sv[i])
            best = (float(gain[i]), feat, thr,
                    idx[order[:i + 1]], idx[order[i + 1:]])
    return best


def fit_tree(X, lambdas, hessians, max_leaves: int, min_leaf: int) -> RegressionTree:
    """Greedy best-first variance-reduction tree on the lambda targets.

    Leaf values are Newton steps: sum(lambda) / (sum(hessian) + ridge).
    """
    X = np.asarray(X, dtype=np.float64)
    g = np.asarray(lambdas, dtype=np.float64)
    h = np.asarray(hessians, dtype=np.float64)
    tree = RegressionTree()

    def leaf_value(idx) -> float:
        return float(g[idx].sum() / (h[idx].sum() + LEAF_RIDGE))

    root_idx = np.arange(X.shape[0])
    root = tree._add_leaf(leaf_value(root_idx))
    if X.shape[0] < min_leaf:
        return tree

    # candidates: (gain, creation_seq, node_id, split); best gain expands first,
    # creation order breaks exact gain ties deterministically
    candidates = []
    seq = 0
    split = _best_split(X, g, root_idx, min_leaf)
    if split is not None:
        candidates.append((split[0], seq, root, split))
    leaves = 1
    while candidates and leaves < max_leaves:
        candidates.sort(key=lambda c: (-c[0], c[1]))
        _, _, node, (gain, feat, thr, left_idx, right_idx) = candidates.pop(0)
        left = tree._add_leaf(leaf_value(left_idx))
        right = tree._add_leaf(leaf_value(right_idx))
        tree._make_split(node, feat, thr, left, right)
        leaves += 1
        for child, child_idx in ((left, left_idx), (right, right_idx)):
            child_split = _best_split(X, g, child_idx, min_leaf)
            if child_split is not None:
                seq += 1
                candidates.append((child_split[0], seq, child, child_split))
    return tree


def train(dataset, config: TrainConfig = TrainConfig(), seed: int = 0) -> LambdaMARTModel:
    """Boost `config.trees` rounds of lambda-gradient trees over the pooled
    per-query rows. Deterministic given the dataset order."""
    dataset = list(dataset)
    if not dataset:
        raise ValueError("empty dataset")
    n_features = len(dataset[0].features)
    for inst in dataset:
        if len(inst.features) != n_features:
            raise ValueError("inconsistent feature lengths in dataset")
    labels = np.array([inst.label for inst in dataset], dtype=np.int64)
    if np.all(labels == labels[0]):
        raise ValueError("no preference signal")

    X = np.array([inst.features for inst in dataset], dtype=np.float64)
    groups: dict[str, list[int]] = {}
    for i, inst in enumerate(dataset):
        groups.setdefault(inst.query_id, []).append(i)
    group_idx = [np.array(rows, dtype=np.int64) for rows in groups.values()]

    scores = np.zeros(len(dataset), dtype=np.float64)
    trees: list[RegressionTree] = []
    training_ndcg: list[float] = []
    k = config.ndcg_truncation
    for _ in range(config.trees):
        lam = np.zeros_like(scores)
        hess = np.zeros_like(scores)
        for rows in group_idx:
            l_q, h_q = compute_lambdas(scores[rows], labels[rows], k)
            lam[rows] = l_q
            hess[rows] = h_q
        tree = fit_tree(X, lam, hess, config.leaves, config.min_leaf_instances)
        trees.append(tree)
        scores += config.learning_rate * tree.predict_matrix(X)
        round_ndcg = float(np.mean(
            [ndcg_of_scores(scores[rows], labels[rows], k) for rows in group_idx]))
        training_ndcg.append(round_ndcg)

    return LambdaMARTModel(trees=trees, shrinkage=config.learning_rate,
                           feature_count=n_features, config=config, seed=seed,
                           training_ndcg=training_ndcg)


def predict(model: LambdaMARTModel, features) -> float:
    return model.predict(features)


def write_letor(dataset, path) -> None:
    """One instance per line: `<label> qid:<qid> <i>:<float> ... #<docid>`."""
    with open(path, "w", encoding="utf-8") as f:
        for inst in dataset:
            feats = " ".join(f"{i + 1}:{v!r}" for i, v in enumerate(inst.features))
            f.write(f"{inst.label} qid:{inst.query_id} {feats} #{inst.doc_id}\n")


def read_letor(path) -> list[RankingInstance]:
    dataset: list[RankingInstance] = []
    n_features = None
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if "#" not in line:
                raise ValueError(f"line {line_no}: missing #<docid> comment")
            body, doc_id = line.split("#", 1)
            doc_id = doc_id.strip()
            if not doc_id:
                raise ValueError(f"line {line_no}: empty doc id")
            parts = body.split()
            if len(parts) < 2 or not parts[1].startswith("qid:"):
                raise ValueError(f"line {line_no}: expected '<label> qid:<qid> ...'")
            try:
                label = int(parts[0])
            except ValueError as exc:
                raise ValueError(f"line {line_no}: bad label {parts[0]!r}") from exc
            qid = parts[1][len("qid:"):]
            features = []
            for rank, item in enumerate(parts[2:], start=1):
                if ":" not in item:
                    raise ValueError(f"line {line_no}: bad feature token {item!r}")
                idx_s, val_s = item.split(":", 1)
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError as exc:
                    raise ValueError(f"line {line_no}: bad feature token {item!r}") from exc
                if idx != rank:
                    raise ValueError(
                        f"line {line_no}: feature indices must be 1-based and "
                        f"strictly ascending (saw {idx}, expected {rank})")
                features.append(val)
            if not features:
                raise ValueError(f"line {line_no}: no features")
            if n_features is None:
                n_features = len(features)
            elif len(features) != n_features:
                raise ValueError(f"line {line_no}: expected {n_features} features, "
                                 f"got {len(features)}")
            try:
                inst = RankingInstance(query_id=qid, doc_id=doc_id,
                                       features=tuple(features), label=label)
            except ValueError as exc:
                raise ValueError(f"line {line_no}: {exc}") from exc
            dataset.append(inst)
    return dataset
