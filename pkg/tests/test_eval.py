import numpy as np
import pytest

from coresel.datagen import BenchmarkSpec, gen_benchmark
from coresel.dataset import EmbeddingSet
from coresel.evaluate import (
    METRIC_NAMES,
    CentroidModel,
    accuracy,
    evaluate_selection,
    fit_centroids,
    macro_auc_ovr,
    macro_f1,
    predict_scores,
    run_experiment,
)
from coresel.linalg import derive_stream
from coresel.selection import SelectionConfig


def auc_pair_oracle(y_true, scores, num_classes):
    # O(n^2) pair counting, ties worth half a pair
    aucs = []
    for c in range(num_classes):
        pos = scores[y_true == c, c]
        neg = scores[y_true != c, c]
        if len(pos) == 0 or len(neg) == 0:
            continue
        total = 0.0
        for p in pos:
            for q in neg:
                total += 1.0 if p > q else (0.5 if p == q else 0.0)
        aucs.append(total / (len(pos) * len(neg)))
    return float(np.mean(aucs))


# ------------------------------------------------------------ centroids


def test_fit_centroids_single_items_are_centroids():
    X = np.array([[1.0, 2.0], [5.0, 6.0]])
    model = fit_centroids(X, [0, 1], 2)
    assert np.allclose(model.centroids, X)


def test_fit_centroids_mean_worked_example():
    X = np.array([[0.0, 0.0], [2.0, 2.0]])
    model = fit_centroids(X, [0, 0], 1)
    assert np.allclose(model.centroids, [[1.0, 1.0]])


def test_fit_centroids_permutation_invariant():
    rng = derive_stream(70, 0)
    X = rng.standard_normal((12, 3))
    labels = np.array([0, 1, 2] * 4)
    perm = rng.permutation(12)
    a = fit_centroids(X, labels, 3)
    b = fit_centroids(X[perm], labels[perm], 3)
    assert np.allclose(a.centroids, b.centroids, atol=1e-12)


def test_fit_centroids_names_empty_class():
    X = np.ones((2, 2))
    with pytest.raises(ValueError, match="class 1"):
        fit_centroids(X, [0, 2], 3)


def test_fit_centroids_validation():
    X = np.ones((2, 2))
    with pytest.raises(ValueError):
        fit_centroids(X, [0, 1], 2, temperature=0.0)
    with pytest.raises(ValueError):
        fit_centroids(X, [0, 5], 2)
    with pytest.raises(ValueError):
        fit_centroids(np.empty((0, 2)), [], 1)


# -------------------------------------------------------------- scoring


def test_predict_scores_rows_sum_to_one():
    rng = derive_stream(71, 0)
    model = fit_centroids(rng.standard_normal((4, 5)), [0, 1, 2, 3], 4)
    p = predict_scores(model, rng.standard_normal((20, 5)))
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)
    assert (p >= 0).all()


def test_predict_scores_peaks_at_own_centroid():
    c0 = np.zeros(4)
    c1 = np.full(4, 30.0)
    model = CentroidModel(centroids=np.stack([c0, c1]))
    p = predict_scores(model, c0[None, :])
    assert p[0, 0] > 0.99


def test_predict_scores_equidistant_is_uniform():
    # three centroids forming an equilateral triangle, query at the center
    ang = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    cents = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    model = CentroidModel(centroids=cents)
    p = predict_scores(model, np.zeros((1, 2)))
    assert np.allclose(p[0], 1.0 / 3.0, atol=1e-12)


def test_temperature_preserves_argmax():
    rng = derive_stream(72, 0)
    cents = rng.standard_normal((5, 6))
    X = rng.standard_normal((30, 6))
    a = np.argmax(predict_scores(CentroidModel(centroids=cents, temperature=1.0), X), axis=1)
    b = np.argmax(predict_scores(CentroidModel(centroids=cents, temperature=2.0), X), axis=1)
    assert np.array_equal(a, b)


def test_prediction_tie_takes_lowest_class():
    cents = np.array([[1.0, 0.0], [-1.0, 0.0]])
    model = CentroidModel(centroids=cents)
    p = predict_scores(model, np.zeros((1, 2)))
    assert int(np.argmax(p[0])) == 0


# -------------------------------------------------------------- metrics


def test_accuracy_and_f1_worked_example():
    y_true = [0, 0, 1, 1]
    y_pred = [0, 1, 1, 1]
    assert accuracy(y_true, y_pred) == pytest.approx(0.75, abs=1e-12)
    # F1_0 = 2/3 (prec 1, rec 0.5), F1_1 = 0.8 (prec 2/3, rec 1)
    assert macro_f1(y_true, y_pred, 2) == pytest.approx(
        (2.0 / 3.0 + 0.8) / 2.0, abs=1e-12
    )


def test_perfect_and_all_wrong():
    y = [0, 1, 2, 0, 1, 2]
    assert accuracy(y, y) == 1.0
    assert macro_f1(y, y, 3) == 1.0
    flipped = [1, 0, 1, 1, 0, 1]
    assert accuracy([0, 1, 0, 0, 1, 0], flipped) == 0.0
    assert macro_f1([0, 1, 0, 0, 1, 0], flipped, 2) == 0.0


def test_majority_predictor_accuracy_is_exact_fraction():
    y_true = np.array([0] * 7 + [1] * 3)
    y_pred = np.zeros(10, dtype=np.int64)
    assert accuracy(y_true, y_pred) == 0.7


def test_absent_universe_class_drags_f1_down():
    # classes {0,1} perfectly predicted but universe has 3 classes
    y = [0, 1, 0, 1]
    assert macro_f1(y, y, 3) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_metric_validation():
    with pytest.raises(ValueError):
        accuracy([0, 1], [0])
    with pytest.raises(ValueError):
        macro_f1([], [], 2)


# ------------------------------------------------------------------ auc


def test_auc_perfect_ordering():
    y = np.array([0, 0, 1, 1])
    s1 = np.array([0.1, 0.2, 0.8, 0.9])
    scores = np.stack([1 - s1, s1], axis=1)
    assert macro_auc_ovr(y, scores, 2) == pytest.approx(1.0, abs=1e-12)


def test_auc_constant_scores_half():
    y = np.array([0, 1, 0, 1, 2])
    scores = np.full((5, 3), 1.0 / 3.0)
    assert macro_auc_ovr(y, scores, 3) == pytest.approx(0.5, abs=1e-12)


def test_auc_single_inversion_worked_case():
    y = np.array([0, 0, 0, 1, 1, 1])
    s1 = np.array([0.1, 0.2, 0.6, 0.5, 0.7, 0.9])
    scores = np.stack([1 - s1, s1], axis=1)
    got = macro_auc_ovr(y, scores, 2)
    assert got == pytest.approx(8.0 / 9.0, abs=1e-12)
    assert got == pytest.approx(auc_pair_oracle(y, scores, 2), abs=1e-12)


@pytest.mark.filterwarnings("ignore:class .* skipped in AUC")
def test_auc_matches_pair_oracle_with_ties():
    rng = derive_stream(73, 0)
    for trial in range(20):
        n = int(rng.integers(4, 25))
        C = int(rng.integers(2, 5))
        y = rng.integers(0, C, n)
        # quantized scores force plenty of ties
        scores = np.round(rng.random((n, C)) * 4) / 4
        try:
            want = auc_pair_oracle(y, scores, C)
        except Exception:
            continue
        if not np.isfinite(want):
            continue
        assert macro_auc_ovr(y, scores, C) == pytest.approx(want, abs=1e-12)


def test_auc_monotone_transform_invariant():
    rng = derive_stream(74, 0)
    y = rng.integers(0, 3, 30)
    scores = rng.random((30, 3))
    base = macro_auc_ovr(y, scores, 3)
    warped = scores.copy()
    warped[:, 1] = np.exp(3.0 * warped[:, 1])  # strictly monotone on one column
    assert macro_auc_ovr(y, warped, 3) == pytest.approx(base, abs=1e-12)


def test_auc_skips_unrankable_class_with_warning():
    y = np.array([0, 0, 1, 1])  # class 2 never appears
    s = np.full((4, 3), 1.0 / 3.0)
    with pytest.warns(UserWarning, match="class 2"):
        got = macro_auc_ovr(y, s, 3)
    assert got == pytest.approx(0.5, abs=1e-12)


def test_auc_raises_when_nothing_rankable():
    y = np.zeros(4, dtype=np.int64)
    s = np.full((4, 1), 1.0)
    with pytest.warns(UserWarning):
        with pytest.raises(ValueError):
            macro_auc_ovr(y, s, 1)


# ----------------------------------------------------------- experiment


def _bench(seed=0):
    spec = BenchmarkSpec(
        num_classes=3, per_class=20, dim=8, modes_per_class=2,
        test_per_class=10, seed=seed,
    )
    return gen_benchmark(spec)


def test_evaluate_selection_returns_all_metrics():
    train, test = _bench()
    vals = evaluate_selection(train, test, np.arange(train.n))
    assert set(vals) == set(METRIC_NAMES)
    for v in vals.values():
        assert 0.0 <= v <= 1.0


def test_run_experiment_r1_has_zero_std():
    train, test = _bench()
    cfg = SelectionConfig(method="random", vpc=2, master_seed=5)
    res = run_experiment(train, test, cfg, runs=1)
    for m in METRIC_NAMES:
        mean, std = res.mean_std(m)
        assert std == 0.0
        assert 0.0 <= mean <= 1.0


def test_run_experiment_deterministic_method_zero_std():
    train, test = _bench()
    scores = np.linspace(0.0, 1.0, train.n)
    cfg = SelectionConfig(method="top_score", vpc=3, master_seed=0)
    res = run_experiment(train, test, cfg, scores=scores, runs=4)
    for m in METRIC_NAMES:
        _, std = res.mean_std(m)
        assert std == 0.0


def test_run_experiment_shifts_seed_per_run():
    train, test = _bench()
    cfg = SelectionConfig(method="random", vpc=2, master_seed=9)
    res = run_experiment(train, test, cfg, runs=3)
    sels = [tuple(s.indices.tolist()) for s in res.selections]
    assert len(set(sels)) > 1
    # run r must equal a fresh run at master_seed + r
    lone = run_experiment(train, test,
                          SelectionConfig(method="random", vpc=2, master_seed=10),
                          runs=1)
    assert res.selections[1].indices.tolist() == lone.selections[0].indices.tolist()


def test_run_experiment_reference_full_pool():
    train, test = _bench()
    cfg = SelectionConfig(method="random", vpc=2)
    res = run_experiment(train, test, cfg, runs=1)
    want = evaluate_selection(train, test, np.arange(train.n))
    assert res.reference == want


def test_run_experiment_ignores_test_labels_for_selection():
    train, test = _bench()
    poisoned = EmbeddingSet(
        X=test.X,
        labels=(test.labels + 1) % test.num_classes,
        num_classes=test.num_classes,
    )
    cfg = SelectionConfig(method="tacdt", vpc=2, master_seed=3)
    a = run_experiment(train, test, cfg, runs=2)
    b = run_experiment(train, poisoned, cfg, runs=2)
    for sa, sb in zip(a.selections, b.selections):
        assert sa.indices.tolist() == sb.indices.tolist()


def test_run_experiment_timings_opt_in():
    train, test = _bench()
    cfg = SelectionConfig(method="random", vpc=2)
    res = run_experiment(train, test, cfg, runs=2, collect_timings=True)
    assert res.run_times is not None and len(res.run_times) == 2
    assert all(t >= 0 for t in res.run_times)
    res2 = run_experiment(train, test, cfg, runs=2)
    assert res2.run_times is None


def test_run_experiment_validates_runs():
    train, test = _bench()
    cfg = SelectionConfig(method="random", vpc=2)
    with pytest.raises(ValueError):
        run_experiment(train, test, cfg, runs=0)
