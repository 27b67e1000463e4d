import math

import numpy as np
import pytest

from hetlink import learn
from hetlink.learn import (
    Dataset,
    kde,
    roc_auc,
    train_forest,
    train_logreg,
    train_mlp,
    train_svm,
    train_svm_precomputed,
    train_tree,
)

from helpers import pair_counting_auc

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0])


def separable_1d(n=40, seed=0):
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.normal(-3, 0.5, n // 2), rng.normal(3, 0.5, n // 2)])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    return Dataset(features=x[:, None], labels=y)


class TestLogisticRegression:
    def test_separable_training_auc_is_one(self):
        data = separable_1d()
        model = train_logreg(data, epochs=100)
        summary = roc_auc(model.predict_proba(data.features), data.labels)
        assert summary.auc == 1.0

    def test_huge_l2_shrinks_to_prior(self):
        data = separable_1d()
        model = train_logreg(data, l2=1e6, epochs=200)
        assert np.all(np.abs(model.weights) < 1e-3)
        prior = data.labels.mean()
        assert np.all(np.abs(model.predict_proba(data.features) - prior) < 0.01)

    def test_single_class_rejected(self):
        data = Dataset(features=np.ones((5, 2)), labels=np.ones(5, dtype=int))
        with pytest.raises(ValueError):
            train_logreg(data)

    def test_loss_monotone(self):
        data = separable_1d(seed=3)
        model = train_logreg(data, epochs=50)
        assert np.all(np.diff(model.epoch_losses) <= 1e-15)

    def test_gradient_matches_finite_differences(self):
        # tolerance is relative to the gradient norm; per-component
        # denominators drown in FD roundoff when a component is tiny
        rng = np.random.default_rng(5)
        x = rng.normal(size=(12, 3))
        y = (rng.random(12) < 0.5).astype(float)
        w = rng.normal(size=3)
        b = 0.3
        l2 = 0.01
        _, gw, gb = learn.logreg_loss_and_grads(x, y, w, b, l2)
        h = 1e-6
        num = np.zeros(4)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            up, _, _ = learn.logreg_loss_and_grads(x, y, w + e, b, l2)
            dn, _, _ = learn.logreg_loss_and_grads(x, y, w - e, b, l2)
            num[i] = (up - dn) / (2 * h)
        up, _, _ = learn.logreg_loss_and_grads(x, y, w, b + h, l2)
        dn, _, _ = learn.logreg_loss_and_grads(x, y, w, b - h, l2)
        num[3] = (up - dn) / (2 * h)
        analytic = np.concatenate([gw, [gb]])
        scale = max(float(np.linalg.norm(num)), 1e-8)
        assert np.max(np.abs(num - analytic)) / scale < 1e-6


class TestDecisionTree:
    def test_pure_labels_single_leaf(self):
        data = Dataset(features=np.arange(6, dtype=float)[:, None],
                       labels=np.ones(6, dtype=int))
        model = train_tree(data, max_depth=4)
        assert model.root.is_leaf and model.root.prob == 1.0

    def test_xor_fit_at_depth_two(self):
        model = train_tree(Dataset(features=XOR_X, labels=XOR_Y), max_depth=2)
        preds = (model.predict_proba(XOR_X) >= 0.5).astype(int)
        assert np.array_equal(preds, XOR_Y)

    def test_depth_zero_predicts_prior(self):
        data = Dataset(features=XOR_X, labels=np.array([0, 1, 1, 1]))
        model = train_tree(data, max_depth=0)
        assert model.root.is_leaf
        assert np.allclose(model.predict_proba(XOR_X), 0.75)

    def test_tie_break_prefers_lowest_feature_and_threshold(self):
        # identical splits available on both features; expect feature 0
        x = np.array([[0.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1])
        model = train_tree(Dataset(features=x, labels=y), max_depth=1)
        assert model.root.feature == 0
        assert model.root.threshold == 0.5


class TestRandomForest:
    def test_degenerate_forest_equals_tree(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(40, 4))
        y = (x[:, 0] + x[:, 1] > 0).astype(int)
        data = Dataset(features=x, labels=y)
        forest = train_forest(data, n_estimators=1, max_depth=4, seed=0,
                              bootstrap=False, feature_subsample=False)
        tree = train_tree(data, max_depth=4)
        assert np.array_equal(forest.predict_proba(x), tree.predict_proba(x))

    def test_same_seed_identical(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(30, 3))
        y = (x[:, 0] > 0).astype(int)
        data = Dataset(features=x, labels=y)
        a = train_forest(data, n_estimators=5, max_depth=3, seed=4)
        b = train_forest(data, n_estimators=5, max_depth=3, seed=4)
        assert np.array_equal(a.predict_proba(x), b.predict_proba(x))

    def test_beats_logistic_on_nonlinear_data(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, size=(400, 2))
        y = ((x[:, 0] > 0) ^ (x[:, 1] > 0)).astype(int)  # XOR-like
        train = Dataset(features=x[:300], labels=y[:300])
        test_x, test_y = x[300:], y[300:]
        forest = train_forest(train, n_estimators=30, max_depth=6, seed=1)
        logistic = train_logreg(train, epochs=150)
        auc_forest = roc_auc(forest.predict_proba(test_x), test_y).auc
        auc_logistic = roc_auc(logistic.predict_proba(test_x), test_y).auc
        assert auc_forest > auc_logistic


class TestSvm:
    def test_two_point_identity_gram(self):
        model = train_svm_precomputed(np.eye(2), [1, 0], C=10.0)
        decisions = model.decision_from_kernel(np.eye(2))
        assert np.allclose(decisions, [1.0, -1.0], atol=1e-9)

    def test_duplicated_nonsupport_point_leaves_decision_unchanged(self):
        # the dual is degenerate under duplication of a point with
        # alpha < C; a non-support point (alpha = 0) makes this exact
        rng = np.random.default_rng(11)
        x = rng.normal(size=(20, 2)) + np.array([[2, 0]]) * rng.integers(
            0, 2, size=(20, 1))
        y = (x[:, 0] > 1).astype(int)
        if len(np.unique(y)) < 2:
            y[0] = 1 - y[0]
        gram = x @ x.T
        base = train_svm_precomputed(gram, y, C=1.0)
        non_support = [i for i in range(20) if i not in base.support]
        assert non_support, "test setup needs a non-support point"
        pick = non_support[0]
        x_dup = np.vstack([x, x[pick:pick + 1]])
        y_dup = np.concatenate([y, y[pick:pick + 1]])
        dup = train_svm_precomputed(x_dup @ x_dup.T, y_dup, C=1.0)
        scores_base = base.decision_from_kernel(gram)
        scores_dup = dup.decision_from_kernel(x @ x_dup.T)
        assert np.max(np.abs(scores_base - scores_dup)) < 5e-3

    def test_c_to_zero_collapses_to_constant(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(16, 2))
        y = (x[:, 0] > 0).astype(int)
        if len(np.unique(y)) < 2:
            y[0] = 1 - y[0]
        model = train_svm_precomputed(x @ x.T, y, C=1e-9)
        scores = model.decision_from_kernel(x @ x.T)
        assert np.max(np.abs(scores - scores.mean())) < 1e-6

    def test_non_psd_gram_rejected(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(ValueError, match="PSD"):
            train_svm_precomputed(bad, [1, 0], C=1.0)

    def test_kkt_conditions_hold(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(30, 3))
        y = (x @ np.array([1.0, -0.5, 0.2]) > 0).astype(int)
        if len(np.unique(y)) < 2:
            y[0] = 1 - y[0]
        gram = x @ x.T
        C, tol = 1.0, 1e-3
        model = train_svm_precomputed(gram, y, C=C, tol=tol)
        y_signed = np.where(np.asarray(y) > 0, 1.0, -1.0)
        alpha = model.dual_coef * y_signed  # recover alpha >= 0
        assert np.all(alpha >= -1e-12) and np.all(alpha <= C + 1e-12)
        f = model.decision_from_kernel(gram)
        margins = y_signed * f
        for a, m in zip(alpha, margins):
            if a < 1e-8:
                assert m >= 1 - 2 * tol
            elif a > C - 1e-8:
                assert m <= 1 + 2 * tol
            else:
                assert abs(m - 1) <= 2 * tol

    def test_feature_svm_separates(self):
        data = separable_1d()
        model = train_svm(data, C=1.0, kernel="rbf")
        assert roc_auc(model.decision(data.features), data.labels).auc == 1.0


class TestMlp:
    def test_hidden_zero_behaves_like_logistic(self):
        data = separable_1d(seed=21)
        mlp = train_mlp(data, hidden_dim=0, epochs=300, lr=0.05, seed=0)
        assert np.all(np.diff(mlp.epoch_losses[:50]) <= 1e-6)
        assert roc_auc(mlp.predict_proba(data.features), data.labels).auc == 1.0

    def test_xor_solved_by_at_least_one_seed(self):
        data = Dataset(features=XOR_X, labels=XOR_Y)
        solved = 0
        for seed in range(5):
            model = train_mlp(data, hidden_dim=4, epochs=2000, lr=0.05, seed=seed)
            preds = (model.predict_proba(XOR_X) >= 0.5).astype(int)
            solved += int(np.array_equal(preds, XOR_Y))
        assert solved >= 1

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(23)
        x = rng.normal(size=(10, 3))
        y = (rng.random(10) < 0.5).astype(float)
        params = {
            "W1": rng.normal(size=(3, 4)), "b1": rng.normal(size=4),
            "W2": rng.normal(size=4), "b2": np.array([0.1]),
        }
        _, grads = learn.mlp_loss_and_grads(params, x, y, hidden_dim=4)
        h = 1e-6
        for key in params:
            flat = params[key].reshape(-1)
            grad_flat = np.asarray(grads[key]).reshape(-1)
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                up, _ = learn.mlp_loss_and_grads(params, x, y, 4)
                flat[idx] = orig - h
                dn, _ = learn.mlp_loss_and_grads(params, x, y, 4)
                flat[idx] = orig
                num = (up - dn) / (2 * h)
                assert abs(num - grad_flat[idx]) / max(abs(num), 1e-7) < 1e-4

    def test_single_class_rejected(self):
        data = Dataset(features=np.ones((4, 2)), labels=np.zeros(4, dtype=int))
        with pytest.raises(ValueError):
            train_mlp(data, hidden_dim=2, epochs=5)


class TestRocAuc:
    def test_perfect_ranking(self):
        assert roc_auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]).auc == 1.0

    def test_three_of_four_concordant(self):
        assert roc_auc([0.9, 0.2, 0.8, 0.3], [1, 0, 0, 1]).auc == 0.75

    def test_all_ties_half_credit(self):
        assert roc_auc([0.5] * 6, [1, 0, 1, 0, 1, 0]).auc == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            roc_auc([0.1, 0.9], [1, 1])

    def test_matches_pair_counting_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(300):
            n = int(rng.integers(4, 40))
            scores = rng.choice([0.1, 0.25, 0.5, 0.75, 0.9], size=n)  # force ties
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert roc_auc(scores, labels).auc == pytest.approx(
                pair_counting_auc(scores, labels), abs=1e-12
            )

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(33)
        scores = rng.normal(size=50)
        labels = rng.integers(0, 2, size=50)
        labels[0], labels[1] = 0, 1
        base = roc_auc(scores, labels).auc
        assert roc_auc(np.exp(scores), labels).auc == pytest.approx(base, abs=1e-12)
        assert roc_auc(3 * scores - 7, labels).auc == pytest.approx(base, abs=1e-12)

    def test_curve_shape_and_trapezoid_identity(self):
        rng = np.random.default_rng(35)
        for _ in range(40):
            n = int(rng.integers(4, 30))
            scores = rng.choice([0.2, 0.4, 0.6, 0.8], size=n)
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            summary = roc_auc(scores, labels)
            points = np.asarray(summary.points)
            assert tuple(points[0]) == (0.0, 0.0)
            assert tuple(points[-1]) == (1.0, 1.0)
            assert np.all(np.diff(points[:, 0]) >= 0)
            assert np.all(np.diff(points[:, 1]) >= 0)
            trapezoid = float(np.trapezoid(points[:, 1], points[:, 0]))
            assert abs(trapezoid - summary.auc) < 1e-12

    def test_roc_tsv_dump(self, tmp_path):
        summary = roc_auc([0.9, 0.1], [1, 0])
        path = tmp_path / "roc.tsv"
        summary.save(path)
        text = path.read_text()
        assert text.startswith("threshold\tfpr\ttpr\n")
        assert "# auc=1.0" in text


class TestKde:
    def test_gaussian_peak_single_sample(self):
        density = kde([0.0], bandwidth=1.0, grid=[0.0])
        assert math.isclose(density[0], 1 / math.sqrt(2 * math.pi), rel_tol=1e-12)

    def test_symmetric_about_sample(self):
        density = kde([0.0], bandwidth=1.0, grid=[-1.5, 1.5])
        assert density[0] == density[1]

    def test_integrates_to_one(self):
        rng = np.random.default_rng(41)
        samples = rng.normal(size=60)
        grid = np.linspace(-10, 10, 4001)
        density = kde(samples, grid=grid)
        integral = float(np.trapezoid(density, grid))
        assert abs(integral - 1.0) < 1e-3

    def test_empty_samples_rejected(self):
        with pytest.raises(ValueError):
            kde([], grid=[0.0])
