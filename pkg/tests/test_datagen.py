import random

import pytest

from ppdrive import datagen, domain
from ppdrive.datagen import AttributeSpec, GenConfig, generate, plant_tree, write_dataset
from ppdrive.domain import ClassLabel, binarize, classify_plaintext, extract_aggressive_paths
from ppdrive.training import train_plaintext_oracle

EXPECTED_NAMES = [
    "trips", "mileage", "acceleration_events", "average_acceleration", "braking_events",
    "average_braking", "average_turning", "hard_braking_events", "high_risk_hours",
]


def test_default_schema_order_and_example_thresholds():
    schema = datagen.default_schema()
    assert schema.names == EXPECTED_NAMES
    assert [schema.thresholds[schema.index(k)] for k in
            ("acceleration_events", "braking_events", "average_braking", "high_risk_hours")] == [110, 150, 4.9, 80]


def test_sizes_and_ranges():
    data = generate(GenConfig(7500, 2500, seed=1))
    assert len(data.train) == 7500 and len(data.test) == 2500
    assert all(r.label is not None for r in data.train)
    assert all(r.label is None for r in data.test)
    for spec, col in zip(datagen.DEFAULT_ATTRIBUTES, zip(*(r.values for r in data.train))):
        assert spec.low <= min(col) and max(col) <= spec.high
        if spec.integer:
            assert all(x == int(x) for x in col)


def test_labels_follow_planted_tree():
    data = generate(GenConfig(300, 100, seed=4))
    for r in data.train:
        assert r.label is classify_plaintext(data.planted, binarize(data.schema, r))
    assert data.test_truth == [classify_plaintext(data.planted, binarize(data.schema, r)) for r in data.test]
    assert extract_aggressive_paths(data.planted, data.schema)


def test_count_rule_and_noise():
    data = generate(GenConfig(200, seed=2, label_rule="count", count_threshold=5))
    for r in data.train:
        assert (r.label is ClassLabel.AGGRESSIVE) == (sum(binarize(data.schema, r)) >= 5)
    noisy = generate(GenConfig(2000, seed=3, noise=0.2))
    flips = sum(r.label is not classify_plaintext(noisy.planted, binarize(noisy.schema, r)) for r in noisy.train) / 2000
    assert 0.15 < flips < 0.25


def test_rerun_is_byte_identical(tmp_path):
    for sub in ("a", "b"):
        write_dataset(tmp_path / sub, generate(GenConfig(50, 20, seed=9)))
    for name in ("schema.csv", "train.csv", "test.csv", "planted_tree.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "train.csv").read_bytes() != _other_seed(tmp_path)


def _other_seed(tmp_path):
    write_dataset(tmp_path / "c", generate(GenConfig(50, 20, seed=10)))
    return (tmp_path / "c" / "train.csv").read_bytes()


def test_csv_roundtrip_is_lossless(tmp_path):
    data = generate(GenConfig(100, 30, seed=5))
    write_dataset(tmp_path, data)
    schema = domain.schema_from_csv((tmp_path / "schema.csv").read_text())
    assert schema == data.schema
    assert domain.dataset_from_csv(schema, (tmp_path / "train.csv").read_text()) == data.train
    assert domain.dataset_from_csv(schema, (tmp_path / "test.csv").read_text()) == data.test
    tree, _ = domain.tree_from_json((tmp_path / "planted_tree.json").read_text())
    assert tree == data.planted


@pytest.mark.parametrize("seed", range(10))
def test_planted_root_is_recovered(seed):
    data = generate(GenConfig(500, seed=seed))
    assert train_plaintext_oracle(data.train, data.schema).root.attribute == data.planted.root.attribute


@pytest.mark.parametrize("k", [1, 4, 10, 17])
def test_exact_aggressive_path_count(k):
    tree = plant_tree(9, random.Random(k), n_aggressive=k)
    assert len(extract_aggressive_paths(tree, datagen.default_schema())) == k


def test_infeasible_path_count():
    with pytest.raises(ValueError):
        plant_tree(3, random.Random(0), n_aggressive=9)


def test_conditioned_sampling_respects_threshold():
    rng = random.Random(0)
    for spec in datagen.DEFAULT_ATTRIBUTES:
        for _ in range(200):
            assert spec.sample(rng, 1) >= spec.threshold
            assert spec.sample(rng, 0) < spec.threshold


def test_p_above_matches_sampling():
    rng = random.Random(1)
    for spec in datagen.DEFAULT_ATTRIBUTES:
        hits = sum(spec.sample(rng) >= spec.threshold for _ in range(20000)) / 20000
        assert hits == pytest.approx(spec.p_above(), abs=0.015)


def test_invalid_configs():
    with pytest.raises(ValueError):
        AttributeSpec("x", 5, 5, 5)
    with pytest.raises(ValueError):
        AttributeSpec("x", 0, 10, 11)
    with pytest.raises(ValueError):
        GenConfig(-1)
    with pytest.raises(ValueError):
        GenConfig(10, label_rule="vibes")
    with pytest.raises(ValueError):
        GenConfig(10, noise=0.7)
    with pytest.raises(ValueError):
        GenConfig(10, planted_depth=10)
