import numpy as np
import pytest

from coresel.datagen import BenchmarkSpec, class_mixture_mean, gen_benchmark
from coresel.evaluate import evaluate_selection


def test_regeneration_is_bit_identical():
    spec = BenchmarkSpec(num_classes=4, per_class=30, dim=16, seed=11)
    a_train, a_test = gen_benchmark(spec)
    b_train, b_test = gen_benchmark(spec)
    assert a_train.X.tobytes() == b_train.X.tobytes()
    assert a_test.X.tobytes() == b_test.X.tobytes()
    assert a_train.labels.tolist() == b_train.labels.tolist()
    assert a_test.labels.tolist() == b_test.labels.tolist()


def test_test_seed_resamples_only_the_test_split():
    base = BenchmarkSpec(num_classes=3, per_class=20, dim=8, seed=2)
    alt = BenchmarkSpec(num_classes=3, per_class=20, dim=8, seed=2, test_seed=99)
    train0, test0 = gen_benchmark(base)
    train1, test1 = gen_benchmark(alt)
    assert train0.X.tobytes() == train1.X.tobytes()
    assert test0.X.tobytes() != test1.X.tobytes()


def test_test_seed_none_means_main_seed():
    a = gen_benchmark(BenchmarkSpec(num_classes=2, per_class=5, dim=4, seed=7))
    b = gen_benchmark(BenchmarkSpec(num_classes=2, per_class=5, dim=4, seed=7, test_seed=7))
    assert a[1].X.tobytes() == b[1].X.tobytes()


def test_shapes_labels_and_dtype():
    spec = BenchmarkSpec(num_classes=3, per_class=12, dim=6, test_per_class=4, seed=0)
    train, test = gen_benchmark(spec)
    assert train.X.shape == (36, 6) and train.X.dtype == np.float32
    assert test.X.shape == (12, 6) and test.X.dtype == np.float32
    assert train.num_classes == 3
    for c in range(3):
        assert int((train.labels == c).sum()) == 12
        assert int((test.labels == c).sum()) == 4


def test_class_means_sit_on_the_separation_sphere():
    # kill both noise sources so every item IS its class mean
    spec = BenchmarkSpec(
        num_classes=5, per_class=3, dim=24, modes_per_class=1,
        mode_spread=0.0, noise_sigma=0.0, seed=4,
    )
    train, _ = gen_benchmark(spec)
    for c in range(5):
        block = train.X[train.labels == c]
        assert np.allclose(block, block[0])
        assert np.linalg.norm(block[0]) == pytest.approx(6.0, rel=1e-5)


def test_degenerate_spec_collapses_each_class_to_a_point():
    spec = BenchmarkSpec(
        num_classes=2, per_class=8, dim=5, modes_per_class=1,
        noise_sigma=0.0, seed=1,
    )
    train, test = gen_benchmark(spec)
    for ds in (train, test):
        for c in range(2):
            block = ds.X[ds.labels == c]
            assert np.allclose(block, block[0])


def test_sample_mean_converges_to_mixture_mean():
    spec = BenchmarkSpec(
        num_classes=3, per_class=200, dim=16, modes_per_class=4, seed=8,
    )
    train, _ = gen_benchmark(spec)
    # noise mean over N items has norm around sigma*sqrt(D/N); 4x is generous
    bound = 4.0 * spec.noise_sigma * np.sqrt(spec.dim / spec.per_class)
    for c in range(3):
        sample = train.X[train.labels == c].mean(axis=0)
        want = class_mixture_mean(spec, c, spec.per_class)
        assert np.linalg.norm(sample - want) <= bound


def test_mixture_mean_matches_round_robin_weighting():
    spec = BenchmarkSpec(
        num_classes=1, per_class=5, dim=4, modes_per_class=2,
        noise_sigma=0.0, seed=3,
    )
    train, _ = gen_benchmark(spec)
    # 5 items over 2 modes: mode 0 appears 3 times, mode 1 twice
    want = class_mixture_mean(spec, 0, 5)
    assert np.allclose(train.X.mean(axis=0), want, atol=1e-6)


def test_full_pool_is_learnable():
    spec = BenchmarkSpec(num_classes=5, per_class=50, dim=32, seed=0, test_seed=1)
    train, test = gen_benchmark(spec)
    vals = evaluate_selection(train, test, np.arange(train.n))
    assert vals["acc"] >= 0.9


def test_spec_validation():
    with pytest.raises(ValueError):
        BenchmarkSpec(num_classes=0)
    with pytest.raises(ValueError):
        BenchmarkSpec(per_class=0)
    with pytest.raises(ValueError):
        BenchmarkSpec(dim=0)
    with pytest.raises(ValueError):
        BenchmarkSpec(modes_per_class=0)
    with pytest.raises(ValueError):
        BenchmarkSpec(per_class=3, modes_per_class=4)
    with pytest.raises(ValueError):
        BenchmarkSpec(noise_sigma=-1.0)
    with pytest.raises(ValueError):
        BenchmarkSpec(seed=-1)
    with pytest.raises(ValueError):
        BenchmarkSpec(test_seed=-5)
    with pytest.raises(ValueError):
        BenchmarkSpec(test_per_class=0)
