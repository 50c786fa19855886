import numpy as np
import pytest

from anomex.data import fit_threshold
from anomex.detectors import (
    IsolationForest,
    Loda,
    average_precision,
    expected_path_length,
    load_model,
    save_model,
)
from anomex.errors import ModelError

from conftest import make_dataset


@pytest.fixture(scope="module")
def gaussian_data():
    rng = np.random.default_rng(3)
    return make_dataset(rng.normal(size=(600, 4)))


# -- isolation forest ----------------------------------------------------------


def test_if_deterministic_given_seed(gaussian_data):
    a = IsolationForest.fit(gaussian_data, trees=20, subsample=64, seed=9)
    b = IsolationForest.fit(gaussian_data, trees=20, subsample=64, seed=9)
    sa = a.score(gaussian_data.rows)
    sb = b.score(gaussian_data.rows)
    assert sa.tobytes() == sb.tobytes()


def test_if_parameter_echo():
    rng = np.random.default_rng(0)
    data = make_dataset(rng.normal(size=(10000, 3)))
    model = IsolationForest.fit(data, trees=100, subsample=256, seed=0)
    assert model.n_trees == 100
    assert len(model.trees) == 100
    assert model.subsample == 256
    assert all(t["size"][0] == 256 for t in model.trees)


def test_if_outlier_outscores_every_inlier():
    # brute-force comparison over all points
    values = np.concatenate([np.linspace(0.0, 1.0, 60), [10.0]])
    data = make_dataset(values)
    model = IsolationForest.fit(data, trees=150, subsample=61, seed=4)
    scores = model.score(data.rows)
    assert scores[-1] > scores[:-1].max()


def test_if_distant_point_beats_duplicated_cluster():
    rows = np.concatenate([np.zeros((40, 2)), [[6.0, 6.0]]])
    model = IsolationForest.fit(make_dataset(rows), trees=100, subsample=41, seed=1)
    scores = model.score(rows)
    assert scores[-1] > scores[:-1].max()


def test_if_score_normalization_identities():
    # depth equal to the normalizer gives exactly 0.5; depth 0 gives 1
    assert 2.0 ** (-expected_path_length(256) / expected_path_length(256)) == 0.5
    assert 2.0 ** (-0.0 / expected_path_length(256)) == 1.0
    assert expected_path_length(2) == pytest.approx(1.0)
    assert expected_path_length(1) == 0.0
    assert all(expected_path_length(m) > 0 for m in range(2, 50))


def test_if_scores_bounded(gaussian_data):
    model = IsolationForest.fit(gaussian_data, trees=25, subsample=64, seed=0)
    scores = model.score(gaussian_data.rows)
    assert ((scores > 0) & (scores < 1)).all()


def test_if_depth_capped(gaussian_data):
    model = IsolationForest.fit(gaussian_data, trees=10, subsample=64, seed=2)
    limit = int(np.ceil(np.log2(64)))
    assert all(max(t["depth"]) <= limit for t in model.trees)


def test_if_degenerate_identical_rows_still_builds():
    data = make_dataset(np.ones((30, 2)))
    model = IsolationForest.fit(data, trees=5, subsample=16, seed=0)
    scores = model.score(data.rows)
    assert np.isfinite(scores).all()


def test_if_rejects_tiny_input():
    with pytest.raises(ValueError):
        IsolationForest.fit(make_dataset([[1.0]]), trees=5, subsample=4, seed=0)


def test_if_dimension_mismatch(gaussian_data):
    model = IsolationForest.fit(gaussian_data, trees=5, subsample=32, seed=0)
    with pytest.raises(ModelError):
        model.score(np.zeros((3, 7)))


# -- loda -----------------------------------------------------------------------


def test_loda_deterministic_given_seed(gaussian_data):
    a = Loda.fit(gaussian_data, projections=20, bins=30, seed=5)
    b = Loda.fit(gaussian_data, projections=20, bins=30, seed=5)
    assert np.array_equal(a.projections, b.projections)
    assert a.score(gaussian_data.rows).tobytes() == b.score(gaussian_data.rows).tobytes()


def test_loda_sparsity_rule():
    rng = np.random.default_rng(0)
    data = make_dataset(rng.normal(size=(50, 4)))
    model = Loda.fit(data, projections=40, bins=10, seed=1)
    nonzeros = (model.projections != 0).sum(axis=1)
    assert (nonzeros == 2).all()  # ceil(sqrt(4)) = 2


def test_loda_uniform_data_near_uniform_bins():
    # multinomial concentration: each bin within 3 sigma of 1/10 for n=10000
    rng = np.random.default_rng(7)
    n, bins = 10000, 10
    data = make_dataset(rng.uniform(0.0, 1.0, size=n))
    model = Loda.fit(data, projections=5, bins=bins, seed=7)
    sigma = np.sqrt(0.1 * 0.9 / n)
    for probs in model.bin_probs:
        assert probs.size == bins
        assert np.abs(probs - 1.0 / bins).max() <= 3 * sigma


def test_loda_histograms_sum_to_one(gaussian_data):
    model = Loda.fit(gaussian_data, projections=30, bins=25, seed=2)
    for probs in model.bin_probs:
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_loda_constant_scorer_on_single_bin():
    # zero-variance data: single-bin histogram with probability one
    data = make_dataset(np.full(100, 2.5))
    model = Loda.fit(data, projections=1, bins=10, seed=0)
    assert model.bin_probs[0].size == 1
    assert model.bin_probs[0][0] == 1.0
    scores = model.score(np.array([[2.5], [2.5], [99.0]]))
    assert scores[0] == scores[1] == scores[2] == 0.0  # -log(1)


def test_loda_far_point_scores_at_least_in_range_max(gaussian_data):
    model = Loda.fit(gaussian_data, projections=50, bins=20, seed=3)
    train_scores = model.score(gaussian_data.rows)
    far = np.full((1, 4), 1e6)
    assert model.score(far)[0] >= train_scores.max()


def test_loda_scores_nonnegative_and_deterministic(gaussian_data):
    model = Loda.fit(gaussian_data, projections=25, bins=15, seed=11)
    scores = model.score(gaussian_data.rows)
    assert (scores >= 0).all()
    x = gaussian_data.rows[5]
    pair = model.score(np.stack([x, x]))
    assert pair[0] == pair[1]


def test_loda_rejects_bad_params(gaussian_data):
    with pytest.raises(ValueError):
        Loda.fit(gaussian_data, projections=0, bins=10, seed=0)
    with pytest.raises(ValueError):
        Loda.fit(gaussian_data, projections=10, bins=0, seed=0)


# -- orientation on labeled synthetic data --------------------------------------


def test_both_detectors_orient_higher_is_anomalous():
    from anomex.synth import SynthSpec, generate

    data = generate(SynthSpec(2000, 50, 6, 2, 5.0, seed=1))
    normal = data.labels == 0
    for model in (
        IsolationForest.fit(data, trees=100, subsample=256, seed=0),
        Loda.fit(data, projections=100, bins=50, seed=0),
    ):
        scores = model.score(data.rows)
        assert scores[~normal].mean() > scores[normal].mean()


# -- persistence -----------------------------------------------------------------


@pytest.mark.parametrize("kind", ["iforest", "loda"])
def test_save_load_round_trip(tmp_path, gaussian_data, kind):
    if kind == "iforest":
        model = IsolationForest.fit(gaussian_data, trees=15, subsample=64, seed=6)
    else:
        model = Loda.fit(gaussian_data, projections=15, bins=20, seed=6)
    scores = model.score(gaussian_data.rows)
    tau = fit_threshold(scores, 0.1)
    path = tmp_path / "model.json"
    save_model(model, tau, 0.1, path)
    loaded, tau2, contamination = load_model(path)
    assert tau2 == tau
    assert contamination == 0.1
    assert loaded.feature_names == model.feature_names
    assert loaded.score(gaussian_data.rows).tobytes() == scores.tobytes()


def test_load_model_rejects_garbage(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{}")
    with pytest.raises(ModelError):
        load_model(p)
    p.write_text("not json")
    with pytest.raises(ModelError):
        load_model(p)
    with pytest.raises(ModelError):
        load_model(tmp_path / "absent.json")


def test_load_model_rejects_unknown_version(tmp_path):
    p = tmp_path / "v99.json"
    p.write_text('{"format_version": 99, "model_type": "iforest"}')
    with pytest.raises(ModelError, match="version"):
        load_model(p)


# -- average precision -------------------------------------------------------------


def brute_average_precision(labels, scores):
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits = 0
    total = 0.0
    for rank, i in enumerate(order, start=1):
        if labels[i] == 1:
            hits += 1
            total += hits / rank
    return total / sum(labels)


def test_average_precision_against_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(5, 60))
        labels = rng.integers(0, 2, n)
        if labels.sum() == 0:
            labels[0] = 1
        scores = rng.normal(size=n)
        assert average_precision(labels, scores) == pytest.approx(
            brute_average_precision(list(labels), list(scores))
        )


def test_average_precision_perfect_ranking():
    labels = np.array([0, 0, 1, 1])
    scores = np.array([0.1, 0.2, 0.9, 0.8])
    assert average_precision(labels, scores) == 1.0
