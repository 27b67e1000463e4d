"""From-scratch classifiers and evaluation metrics.

Everything downstream pipelines score with lives here: L2-regularized
logistic regression (full-batch gradient descent with backtracking),
CART decision trees (Gini, exhaustive midpoint scan), bagged random
forests, a soft-margin SVM trained by SMO-style pair updates (on a
precomputed Gram matrix or on feature vectors through a kernel), a
one-hidden-layer MLP trained with Adam, rank-statistic ROC-AUC, and
Gaussian KDE.

AUC is computed by the Mann-Whitney rank statistic with half credit for
ties; the ROC curve is derived output whose trapezoidal area equals the
rank statistic exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .sage import adam_step, init_adam


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    ids: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels disagree in length")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be binary 0/1")


def _require_both_classes(labels):
    if len(np.unique(labels)) < 2:
        raise ValueError("training needs both classes present")


@dataclass
class _Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "_Scaler":
        std = features.std(axis=0)
        return cls(mean=features.mean(axis=0), std=np.where(std > 0, std, 1.0))

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.std


# -- logistic regression -----------------------------------------------------


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    scaler: _Scaler
    epoch_losses: np.ndarray | None = None

    def predict_proba(self, features) -> np.ndarray:
        x = self.scaler.transform(np.asarray(features, dtype=float))
        return _sigmoid(x @ self.weights + self.bias)


def logreg_loss_and_grads(x, y, weights, bias, l2):
    """Mean log-loss with L2 penalty on weights (not bias), plus grads."""
    p = _sigmoid(x @ weights + bias)
    eps = 1e-12
    loss = float(np.mean(-y * np.log(p + eps) - (1 - y) * np.log(1 - p + eps)))
    loss += 0.5 * l2 * float(weights @ weights)
    residual = (p - y) / len(y)
    return loss, x.T @ residual + l2 * weights, float(residual.sum())


def train_logreg(data: Dataset, l2: float = 1e-4, epochs: int = 300,
                 lr: float = 0.1, seed: int = 0) -> LogisticModel:
    """Gradient descent on standardized features; loss is monotone
    (backtracking halves any step that would increase it). Deterministic
    regardless of seed; the argument is kept for interface symmetry."""
    _require_both_classes(data.labels)
    scaler = _Scaler.fit(data.features)
    x = scaler.transform(data.features)
    y = data.labels.astype(float)
    w = np.zeros(x.shape[1])
    b = 0.0
    losses = np.zeros(epochs)
    loss, gw, gb = logreg_loss_and_grads(x, y, w, b, l2)
    for epoch in range(epochs):
        step = lr
        for _ in range(40):
            w_new, b_new = w - step * gw, b - step * gb
            new_loss, gw_new, gb_new = logreg_loss_and_grads(x, y, w_new, b_new, l2)
            if new_loss <= loss:
                w, b, loss, gw, gb = w_new, b_new, new_loss, gw_new, gb_new
                break
            step /= 2.0
        losses[epoch] = loss
    return LogisticModel(weights=w, bias=b, scaler=scaler, epoch_losses=losses)


# -- decision tree and forest ------------------------------------------------


@dataclass
class _TreeNode:
    prob: float
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(x, y, feature_ids):
    """Lowest weighted Gini over midpoint thresholds.

    Ties resolve to the lowest feature index, then lowest threshold,
    because candidates are scanned in that order and only strict
    improvements are accepted.
    """
    n = len(y)
    best = None  # (gini, feature, threshold)
    for feat in feature_ids:
        order = np.argsort(x[:, feat], kind="mergesort")
        xs, ys = x[order, feat], y[order]
        cum_pos = np.cumsum(ys)
        total_pos = cum_pos[-1]
        boundaries = np.nonzero(xs[1:] > xs[:-1])[0] + 1
        for i in boundaries:
            left_pos, right_pos = cum_pos[i - 1], total_pos - cum_pos[i - 1]
            n_l, n_r = i, n - i
            p_l, p_r = left_pos / n_l, right_pos / n_r
            gini = (n_l * (1 - p_l**2 - (1 - p_l) ** 2)
                    + n_r * (1 - p_r**2 - (1 - p_r) ** 2)) / n
            if best is None or gini < best[0]:
                best = (gini, feat, (xs[i - 1] + xs[i]) / 2.0)
    return best


def _grow_tree(x, y, depth, max_depth, rng, max_features):
    prob = float(y.mean())
    if depth >= max_depth or prob in (0.0, 1.0) or len(y) < 2:
        return _TreeNode(prob=prob)
    d = x.shape[1]
    if max_features is not None and max_features < d:
        feature_ids = sorted(int(f) for f in
                             rng.choice(d, size=max_features, replace=False))
    else:
        feature_ids = range(d)
    best = _best_split(x, y, feature_ids)
    if best is None:
        return _TreeNode(prob=prob)
    _, feat, thr = best
    mask = x[:, feat] <= thr
    return _TreeNode(
        prob=prob, feature=feat, threshold=thr,
        left=_grow_tree(x[mask], y[mask], depth + 1, max_depth, rng, max_features),
        right=_grow_tree(x[~mask], y[~mask], depth + 1, max_depth, rng, max_features),
    )


@dataclass
class TreeModel:
    root: _TreeNode

    def predict_proba(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        out = np.zeros(len(x))

        def walk(node, idx):
            if node.is_leaf:
                out[idx] = node.prob
                return
            mask = x[idx, node.feature] <= node.threshold
            walk(node.left, idx[mask])
            walk(node.right, idx[~mask])

        walk(self.root, np.arange(len(x)))
        return out


def train_tree(data: Dataset, max_depth: int) -> TreeModel:
    """CART with Gini impurity and exhaustive threshold scan."""
    if max_depth < 0:
        raise ConfigError("max_depth must be nonnegative")
    y = data.labels.astype(float)
    root = _grow_tree(data.features, y, 0, max_depth, rng=None, max_features=None)
    return TreeModel(root=root)


@dataclass
class ForestModel:
    trees: list[TreeModel]

    def predict_proba(self, features) -> np.ndarray:
        return np.mean([t.predict_proba(features) for t in self.trees], axis=0)


def train_forest(data: Dataset, n_estimators: int = 50, max_depth: int = 8,
                 seed: int = 0, bootstrap: bool = True,
                 feature_subsample: bool = True) -> ForestModel:
    """Bagging plus sqrt(d) feature subsampling per split.

    Each tree owns the RNG stream (seed, tree index), so a parallel
    fan-out over trees would reproduce the serial forest exactly.
    """
    if n_estimators <= 0:
        raise ConfigError("n_estimators must be positive")
    y = data.labels.astype(float)
    n, d = data.features.shape
    max_features = max(1, int(np.sqrt(d))) if feature_subsample else None
    trees = []
    for t in range(n_estimators):
        rng = np.random.default_rng((seed, t))
        if bootstrap:
            idx = rng.integers(0, n, size=n)
            x_t, y_t = data.features[idx], y[idx]
        else:
            x_t, y_t = data.features, y
        trees.append(TreeModel(_grow_tree(x_t, y_t, 0, max_depth, rng, max_features)))
    return ForestModel(trees=trees)


# -- support vector machine -----------------------------------------------------


@dataclass
class SvmModel:
    dual_coef: np.ndarray       # alpha_i * y_i over training points
    bias: float
    support: np.ndarray         # indices with alpha > 0

    def decision_from_kernel(self, kernel_rows: np.ndarray) -> np.ndarray:
        """Scores for new points given K(new, train) rows."""
        return np.asarray(kernel_rows) @ self.dual_coef + self.bias


class _SmoSolver:
    """Deterministic SMO with the classic second-choice heuristic.

    Pairs are updated until no example violates its KKT condition by
    more than ``tol``; the second index is chosen by maximal error gap,
    falling back to scans over non-bound then all examples.
    """

    def __init__(self, kernel, y_signed, C, tol):
        self.k = kernel
        self.y = y_signed
        self.C = C
        self.tol = tol
        n = len(y_signed)
        self.alpha = np.zeros(n)
        self.b = 0.0
        self.f = np.zeros(n)  # decision values, kept in sync

    def _take_step(self, i, j) -> bool:
        if i == j:
            return False
        y, alpha, k = self.y, self.alpha, self.k
        e_i, e_j = self.f[i] - y[i], self.f[j] - y[j]
        a_i, a_j = alpha[i], alpha[j]
        if y[i] == y[j]:
            lo, hi = max(0.0, a_i + a_j - self.C), min(self.C, a_i + a_j)
        else:
            lo, hi = max(0.0, a_j - a_i), min(self.C, self.C + a_j - a_i)
        if lo >= hi:
            return False
        eta = 2 * k[i, j] - k[i, i] - k[j, j]
        if eta >= 0:  # duplicated feature vectors; pair cannot improve
            return False
        a_j_new = float(np.clip(a_j - y[j] * (e_i - e_j) / eta, lo, hi))
        if abs(a_j_new - a_j) < 1e-10 * (a_j_new + a_j + 1e-10):
            return False
        a_i_new = a_i + y[i] * y[j] * (a_j - a_j_new)
        d_i, d_j = a_i_new - a_i, a_j_new - a_j
        b1 = self.b - e_i - y[i] * d_i * k[i, i] - y[j] * d_j * k[i, j]
        b2 = self.b - e_j - y[i] * d_i * k[i, j] - y[j] * d_j * k[j, j]
        if 0 < a_i_new < self.C:
            b_new = b1
        elif 0 < a_j_new < self.C:
            b_new = b2
        else:
            b_new = (b1 + b2) / 2.0
        self.f += (y[i] * d_i * k[:, i] + y[j] * d_j * k[:, j]
                   + (b_new - self.b))
        alpha[i], alpha[j], self.b = a_i_new, a_j_new, b_new
        return True

    def _examine(self, j) -> bool:
        y, alpha = self.y, self.alpha
        e_j = self.f[j] - y[j]
        r = e_j * y[j]
        if not ((r < -self.tol and alpha[j] < self.C)
                or (r > self.tol and alpha[j] > 0)):
            return False
        errors = self.f - y
        non_bound = np.nonzero((alpha > 0) & (alpha < self.C))[0]
        if non_bound.size > 1:
            i = int(non_bound[np.argmax(np.abs(errors[non_bound] - e_j))])
            if self._take_step(i, j):
                return True
        for i in non_bound:
            if self._take_step(int(i), j):
                return True
        for i in range(len(alpha)):
            if self._take_step(i, j):
                return True
        return False

    def solve(self, max_passes: int):
        examine_all = True
        for _ in range(max_passes):
            changed = 0
            if examine_all:
                targets = range(len(self.alpha))
            else:
                targets = np.nonzero((self.alpha > 0) & (self.alpha < self.C))[0]
            for j in targets:
                changed += int(self._examine(int(j)))
            if examine_all:
                if changed == 0:
                    break  # a full pass found no KKT violators
                examine_all = False
            elif changed == 0:
                examine_all = True
        return self.alpha, self.b


def _smo(kernel: np.ndarray, y_signed: np.ndarray, C: float, tol: float,
         max_passes: int) -> tuple[np.ndarray, float]:
    return _SmoSolver(kernel, y_signed, C, tol).solve(max_passes)


def train_svm_precomputed(gram, labels, C: float = 1.0, tol: float = 1e-3,
                          max_passes: int = 10_000) -> SvmModel:
    """Soft-margin dual on a precomputed symmetric PSD Gram matrix."""
    from .kernels import psd_check  # local import; kernels does not import learn

    kernel = np.asarray(getattr(gram, "values", gram), dtype=float)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ValueError("gram must be square (train x train)")
    ok, min_eig = psd_check(kernel, tol=1e-8)
    if not ok:
        raise ValueError(
            f"gram matrix is not PSD (min eigenvalue {min_eig:.3e}); "
            "normalize the kernel or check its construction"
        )
    labels = np.asarray(labels)
    _require_both_classes(labels)
    y_signed = np.where(labels > 0, 1.0, -1.0)
    alpha, b = _smo(kernel, y_signed, C, tol, max_passes)
    return SvmModel(dual_coef=alpha * y_signed, bias=b,
                    support=np.nonzero(alpha > 1e-10)[0])


@dataclass
class SvmFeatureModel:
    """SVM over feature vectors through a named kernel."""

    svm: SvmModel
    x_train: np.ndarray
    scaler: _Scaler
    kernel: str
    gamma: float

    def _kernel_rows(self, x: np.ndarray) -> np.ndarray:
        if self.kernel == "linear":
            return x @ self.x_train.T
        sq = (np.sum(x**2, axis=1)[:, None] + np.sum(self.x_train**2, axis=1)[None, :]
              - 2.0 * x @ self.x_train.T)
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def decision(self, features) -> np.ndarray:
        x = self.scaler.transform(np.asarray(features, dtype=float))
        return self.svm.decision_from_kernel(self._kernel_rows(x))

    predict_proba = decision  # monotone score; AUC only needs ranking


def train_svm(data: Dataset, C: float = 1.0, kernel: str = "rbf",
              gamma: float | str = "scale", tol: float = 1e-3,
              max_passes: int = 10_000) -> SvmFeatureModel:
    """Standard vector-input SVM: standardize, form the Gram, run SMO."""
    if kernel not in ("linear", "rbf"):
        raise ConfigError(f"unknown SVM kernel {kernel!r}")
    _require_both_classes(data.labels)
    scaler = _Scaler.fit(data.features)
    x = scaler.transform(data.features)
    if gamma == "scale":
        var = float(x.var())
        gamma_value = 1.0 / (x.shape[1] * var) if var > 0 else 1.0
    else:
        gamma_value = float(gamma)
    if kernel == "linear":
        k = x @ x.T
    else:
        sq = (np.sum(x**2, axis=1)[:, None] + np.sum(x**2, axis=1)[None, :]
              - 2.0 * x @ x.T)
        k = np.exp(-gamma_value * np.maximum(sq, 0.0))
    y_signed = np.where(data.labels > 0, 1.0, -1.0)
    alpha, b = _smo(k, y_signed, C, tol, max_passes)
    svm = SvmModel(dual_coef=alpha * y_signed, bias=b,
                   support=np.nonzero(alpha > 1e-10)[0])
    return SvmFeatureModel(svm=svm, x_train=x, scaler=scaler, kernel=kernel,
                           gamma=gamma_value)


# -- multilayer perceptron ------------------------------------------------------


@dataclass
class MlpModel:
    params: dict[str, np.ndarray]
    scaler: _Scaler
    hidden_dim: int
    epoch_losses: np.ndarray | None = None

    def predict_proba(self, features) -> np.ndarray:
        x = self.scaler.transform(np.asarray(features, dtype=float))
        return _mlp_forward(self.params, x, self.hidden_dim)[0]


def _mlp_forward(params, x, hidden_dim):
    if hidden_dim == 0:
        logits = x @ params["W2"] + params["b2"][0]
        return _sigmoid(logits), x
    hidden = np.maximum(x @ params["W1"] + params["b1"], 0.0)
    logits = hidden @ params["W2"] + params["b2"][0]
    return _sigmoid(logits), hidden


def mlp_loss_and_grads(params, x, y, hidden_dim):
    p, hidden = _mlp_forward(params, x, hidden_dim)
    eps = 1e-12
    loss = float(np.mean(-y * np.log(p + eps) - (1 - y) * np.log(1 - p + eps)))
    d_logit = (p - y) / len(y)
    grads = {"W2": hidden.T @ d_logit, "b2": np.asarray([d_logit.sum()])}
    if hidden_dim > 0:
        d_hidden = np.outer(d_logit, params["W2"]) * (hidden > 0)
        grads["W1"] = x.T @ d_hidden
        grads["b1"] = d_hidden.sum(axis=0)
    return loss, grads


def train_mlp(data: Dataset, hidden_dim: int = 16, epochs: int = 200,
              lr: float = 0.01, seed: int = 0) -> MlpModel:
    """One hidden ReLU layer, sigmoid output, full-batch Adam.

    ``hidden_dim=0`` collapses the architecture to logistic regression.
    """
    if hidden_dim < 0:
        raise ConfigError("hidden_dim must be nonnegative")
    _require_both_classes(data.labels)
    scaler = _Scaler.fit(data.features)
    x = scaler.transform(data.features)
    y = data.labels.astype(float)
    rng = np.random.default_rng(seed)
    d = x.shape[1]
    if hidden_dim == 0:
        params = {"W2": rng.normal(scale=0.1, size=d), "b2": np.zeros(1)}
    else:
        params = {
            "W1": rng.normal(scale=np.sqrt(2.0 / d), size=(d, hidden_dim)),
            "b1": np.zeros(hidden_dim),
            "W2": rng.normal(scale=np.sqrt(1.0 / max(hidden_dim, 1)),
                             size=hidden_dim),
            "b2": np.zeros(1),
        }
    state = init_adam(params, alpha=lr)
    losses = np.zeros(epochs)
    for epoch in range(epochs):
        loss, grads = mlp_loss_and_grads(params, x, y, hidden_dim)
        params, state = adam_step(params, grads, state)
        losses[epoch] = loss
    return MlpModel(params=params, scaler=scaler, hidden_dim=hidden_dim,
                    epoch_losses=losses)


# -- metrics ---------------------------------------------------------------------


@dataclass
class RocSummary:
    points: list[tuple[float, float]]
    thresholds: list[float]
    auc: float

    def save(self, path: str) -> None:
        """TSV of (threshold, fpr, tpr) with the AUC as footer."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("threshold\tfpr\ttpr\n")
            for thr, (fpr, tpr) in zip(self.thresholds, self.points):
                fh.write(f"{'inf' if np.isinf(thr) else repr(thr)}\t"
                         f"{repr(fpr)}\t{repr(tpr)}\n")
            fh.write(f"# auc={self.auc!r}\n")


def roc_auc(scores, labels) -> RocSummary:
    """Rank-statistic AUC (ties get half credit) plus the ROC curve."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")

    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank
        i = j + 1
    rank_sum = float(ranks[labels == 1].sum())
    auc = (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    # threshold sweep, ties grouped, descending
    desc = np.argsort(-scores, kind="mergesort")
    points = [(0.0, 0.0)]
    thresholds = [float("inf")]
    tp = fp = 0
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[desc[j + 1]] == scores[desc[i]]:
            j += 1
        group = desc[i:j + 1]
        tp += int((labels[group] == 1).sum())
        fp += int((labels[group] == 0).sum())
        points.append((fp / n_neg, tp / n_pos))
        thresholds.append(float(scores[desc[i]]))
        i = j + 1
    return RocSummary(points=points, thresholds=thresholds, auc=float(auc))


def kde(samples, bandwidth: float | None = None, grid=None) -> np.ndarray:
    """Gaussian kernel density estimate on the grid.

    Default bandwidth is Silverman's rule of thumb,
    0.9 * min(sd, IQR/1.34) * n^(-1/5), falling back to 1.0 when the
    spread is zero.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("KDE needs at least one sample")
    if grid is None:
        raise ValueError("an evaluation grid is required")
    grid = np.asarray(grid, dtype=float)
    if bandwidth is None:
        if samples.size > 1:
            sd = float(samples.std(ddof=1))
            iqr = float(np.percentile(samples, 75) - np.percentile(samples, 25))
            spread = min(sd, iqr / 1.34) if iqr > 0 else sd
        else:
            spread = 0.0
        bandwidth = 0.9 * spread * samples.size ** (-0.2) if spread > 0 else 1.0
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    z = (grid[:, None] - samples[None, :]) / bandwidth
    return np.exp(-0.5 * z**2).mean(axis=1) / (bandwidth * np.sqrt(2 * np.pi))
