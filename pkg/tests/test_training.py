import itertools
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppdrive import datagen
from ppdrive.domain import Attribute, AttributeSchema, ClassLabel, DecisionTree, Leaf, classify_plaintext
from ppdrive.simnet import INSURER, Tag
from ppdrive.training import (
    ClassCounts,
    NodeContext,
    StopConfig,
    best_attribute,
    class_entropy,
    driver_shares,
    entropy,
    majority,
    train,
    train_plaintext_oracle,
)

from conftest import record_from_bits, run_parties

A, D = ClassLabel.AGGRESSIVE, ClassLabel.DEFENSIVE

# (a0, a2, a3, a5) patterns in product order; attributes 1 and 4 are always below threshold
WORKED_MULTIPLICITIES = [1, 3, 3, 3, 2, 3, 3, 1, 2, 3, 2, 1, 2, 3, 1, 1]


def worked_dataset(schema, tree):
    records = []
    for (a0, a2, a3, a5), k in zip(itertools.product((0, 1), repeat=4), WORKED_MULTIPLICITIES):
        v = (a0, 0, a2, a3, 0, a5)
        records += [record_from_bits(schema, v, classify_plaintext(tree, v))] * k
    return records


def secure_train(keys, records, schema, stop=StopConfig(), seed=0, **kw):
    t, tree, _, _ = run_parties(keys, records, lambda net, i, ds: train(net, i, ds, schema, stop, **kw), seed=seed)
    return t, tree


def test_entropy_examples():
    assert entropy(ClassCounts(2, 0, 0, 2)) == 0.0
    assert entropy(ClassCounts(1, 1, 0, 0)) == 1.0
    # 3A/1D below and 0A/4D above; value computed independently at 50 digits
    assert entropy(ClassCounts(3, 1, 0, 4)) == pytest.approx(0.40563906222956643, abs=1e-12)


def test_entropy_rejects_empty_node():
    with pytest.raises(ValueError):
        entropy(ClassCounts(0, 0, 0, 0))


@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
def test_entropy_symmetries(a, b, c, d):
    if a + b + c + d == 0:
        return
    h = entropy(ClassCounts(a, b, c, d))
    assert h == entropy(ClassCounts(b, a, d, c))  # swap class labels
    assert h == entropy(ClassCounts(c, d, a, b))  # swap branches
    assert 0.0 <= h <= 1.0 + 1e-12


def test_class_entropy_is_binary_entropy():
    assert class_entropy(1, 3) == pytest.approx(-(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75)))
    assert class_entropy(0, 5) == 0.0


def test_majority_tie_defaults_defensive():
    assert majority(2, 2) is D
    assert majority(2, 2, A) is A
    assert majority(3, 2) is A


def test_best_attribute_prefers_lowest_index_on_tie():
    counts = {3: ClassCounts(1, 1, 1, 1), 1: ClassCounts(1, 1, 1, 1), 2: ClassCounts(2, 0, 0, 2)}
    assert best_attribute(counts) == 2
    del counts[2]
    assert best_attribute(counts) == 1


def test_driver_shares_layout(demo_schema):
    rec = record_from_bits(demo_schema, (1, 0, 0, 0, 0, 1), A)
    root = NodeContext.root(6)
    shares = driver_shares(rec, root, demo_schema)
    assert len(shares) == 24 and sum(shares) == 6
    assert shares[0:4] == [0, 0, 1, 0]  # attribute 0: above, aggressive
    assert shares[4:8] == [1, 0, 0, 0]  # attribute 1: below, aggressive
    outside = root.child(0, 0)
    assert driver_shares(rec, outside, demo_schema) == [0] * 20


def test_node_context_roundtrip():
    ctx = NodeContext.root(5).child(3, 1).child(0, 0)
    assert ctx.remaining == (1, 2, 4)
    assert NodeContext.from_bytes(ctx.to_bytes(), 5) == ctx


def test_worked_dataset_recovers_example_tree(test_keys, demo_schema, demo_tree):
    records = worked_dataset(demo_schema, demo_tree)
    # the root minimum must be unique for the example to pin down the tree
    rows = [(tuple(1 if x >= t else 0 for x, t in zip(r.values, demo_schema.thresholds)), r.label) for r in records]
    scores = []
    for j in range(6):
        cells = [0] * 4
        for v, label in rows:
            cells[2 * v[j] + (label is D)] += 1
        scores.append(entropy(ClassCounts(*cells)))
    assert sorted(range(6), key=scores.__getitem__)[0] == 0 and scores.count(min(scores)) == 1
    assert train_plaintext_oracle(records, demo_schema) == demo_tree
    _, tree = secure_train(test_keys, records, demo_schema)
    assert tree == demo_tree


def test_all_aggressive_gives_single_leaf(test_keys, demo_schema):
    records = [record_from_bits(demo_schema, (i % 2, 0, 1, 0, 1, 0), A) for i in range(5)]
    t, tree = secure_train(test_keys, records, demo_schema)
    assert tree == DecisionTree(Leaf(A))
    # a single round of sums at the root
    assert t.ciphertext_count(recipient=INSURER) == 24


def test_single_record(test_keys, demo_schema):
    rec = record_from_bits(demo_schema, (1, 1, 0, 0, 1, 0), D)
    assert secure_train(test_keys, [rec], demo_schema)[1] == DecisionTree(Leaf(D))


def test_exhausted_attributes_tie_goes_defensive(test_keys):
    schema = AttributeSchema((Attribute("x", 1.0),))
    records = [record_from_bits(schema, (1,), A), record_from_bits(schema, (1,), D)]
    _, tree = secure_train(test_keys, records, schema)
    assert tree == train_plaintext_oracle(records, schema)
    assert classify_plaintext(tree, (1,)) is D
    # the empty below branch inherits the parent's majority
    assert classify_plaintext(tree, (0,)) is D
    _, tree = secure_train(test_keys, records, schema, StopConfig(tie_label=A))
    assert classify_plaintext(tree, (1,)) is A


def test_max_depth(test_keys, demo_schema, demo_tree):
    records = worked_dataset(demo_schema, demo_tree)
    stop = StopConfig(max_depth=1)
    _, tree = secure_train(test_keys, records, demo_schema, stop)
    assert tree.depth == 1
    assert tree == train_plaintext_oracle(records, demo_schema, stop)


@pytest.mark.parametrize("seed", range(20))
def test_random_datasets_match_oracle(test_keys, seed):
    rng = random.Random(seed)
    n = rng.choice((4, 6))
    attrs = datagen.DEFAULT_ATTRIBUTES[:n]
    cfg = datagen.GenConfig(rng.randint(5, 40), seed=seed, attributes=attrs, noise=0.1, planted_depth=min(3, n))
    data = datagen.generate(cfg)
    _, tree = secure_train(test_keys, data.train, data.schema, seed=seed)
    assert tree == train_plaintext_oracle(data.train, data.schema)


def test_concurrent_training_matches(test_keys, demo_schema, demo_tree):
    records = worked_dataset(demo_schema, demo_tree)
    t1, tree1 = secure_train(test_keys, records, demo_schema)
    t2, tree2 = secure_train(test_keys, records, demo_schema, concurrent=True)
    assert tree1 == tree2
    assert dict(t1.sent_bytes) == dict(t2.sent_bytes)


def test_disclosure(test_keys, demo_schema, demo_tree):
    records = worked_dataset(demo_schema, demo_tree)
    t, tree = secure_train(test_keys, records, demo_schema)
    insurer_tags = {m.tag for m in t.received(INSURER)}
    assert insurer_tags == {Tag.SUM_FINAL}
    driver_tags = {m.tag for m in t.messages if m.recipient != INSURER}
    assert driver_tags == {Tag.PUBLIC_KEY, Tag.NODE_CONTEXT, Tag.SUM_HOP}
    # each expanded node is broadcast once to every driver
    contexts = [m for m in t.messages if m.tag is Tag.NODE_CONTEXT]
    assert len(contexts) == len(records) * tree.n_internal()


def test_depth_two_shares_sum_to_partition_counts():
    rng = random.Random(21)
    schema = AttributeSchema(tuple(Attribute(f"a{j}", 1.0) for j in range(6)))
    records = [record_from_bits(schema, [rng.randint(0, 1) for _ in range(6)], rng.choice((A, D))) for _ in range(50)]
    ctx = NodeContext.root(6).child(4, 1).child(1, 0)
    totals = [sum(col) for col in zip(*(driver_shares(r, ctx, schema) for r in records))]
    vectors = [(tuple(int(x >= 1.0) for x in r.values), r.label) for r in records]
    for i, attr in enumerate(ctx.remaining):
        for b in (0, 1):
            for c, label in enumerate((A, D)):
                expected = sum(1 for v, lab in vectors if v[4] == 1 and v[1] == 0 and v[attr] == b and lab is label)
                assert totals[4 * i + 2 * b + c] == expected
