"""Synthetic telematics records labeled by a planted decision tree.

Nine attributes over a six-month window, drawn uniformly from the ranges
in ``DEFAULT_ATTRIBUTES``. Four thresholds (acceleration events 110,
braking events 150, average braking 4.9 m/s^2, high-risk hours 80) follow
the worked example tree; the others sit at the range midpoint.
"""

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .domain import (
    Attribute,
    AttributeSchema,
    ClassLabel,
    DecisionTree,
    Leaf,
    Split,
    TravelRecord,
    binarize,
    classify_plaintext,
    dataset_to_csv,
    schema_to_csv,
    tree_to_json,
)


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    low: float
    high: float
    threshold: float
    unit: str = ""
    integer: bool = False

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"{self.name}: degenerate range [{self.low}, {self.high}]")
        if not self.low < self.threshold <= self.high:
            raise ValueError(f"{self.name}: threshold {self.threshold} outside ({self.low}, {self.high}]")

    @property
    def attribute(self):
        return Attribute(self.name, float(self.threshold), self.unit)

    def p_above(self):
        """Probability that a uniform draw is at or above the threshold."""
        if self.integer:
            lo, hi = int(self.low), int(self.high)
            return (hi - math.ceil(self.threshold) + 1) / (hi - lo + 1)
        return (self.high - self.threshold) / (self.high - self.low)

    def sample(self, rng, bit=None):
        """Uniform value, optionally conditioned on its threshold bit."""
        lo, hi = self.low, self.high
        if self.integer:
            t = math.ceil(self.threshold)
            if bit == 1:
                lo = t
            elif bit == 0:
                hi = t - 1
            return float(rng.randint(int(lo), int(hi)))
        if bit == 1:
            lo = self.threshold
        elif bit == 0:
            hi = self.threshold
        value = round(rng.uniform(lo, hi), 2)
        if bit == 0 and value >= self.threshold:
            value = round(self.threshold - 0.01, 2)
        elif bit == 1 and value < self.threshold:
            value = self.threshold
        return value


DEFAULT_ATTRIBUTES = (
    AttributeSpec("trips", 50, 600, 325, "count", integer=True),
    AttributeSpec("mileage", 500, 10000, 5250, "mi"),
    AttributeSpec("acceleration_events", 20, 300, 110, "count", integer=True),
    AttributeSpec("average_acceleration", 1.0, 5.0, 3.0, "m/s^2"),
    AttributeSpec("braking_events", 20, 300, 150, "count", integer=True),
    AttributeSpec("average_braking", 2.0, 8.0, 4.9, "m/s^2"),
    AttributeSpec("average_turning", 10, 90, 50, "degrees"),
    AttributeSpec("hard_braking_events", 0, 60, 30, "count", integer=True),
    AttributeSpec("high_risk_hours", 0, 150, 80, "h"),
)


def default_schema():
    return AttributeSchema(tuple(a.attribute for a in DEFAULT_ATTRIBUTES))


@dataclass(frozen=True)
class GenConfig:
    n_labeled: int
    n_unlabeled: int = 0
    seed: int = 0
    attributes: tuple = DEFAULT_ATTRIBUTES
    label_rule: str = "planted"  # or "count"
    planted_depth: int = 3
    planted_seed: Optional[int] = None  # defaults to ``seed``
    noise: float = 0.0
    count_threshold: int = 5  # "count" rule: aggressive when this many bits are set

    def __post_init__(self):
        if self.n_labeled < 0 or self.n_unlabeled < 0:
            raise ValueError("record counts must be non-negative")
        if self.label_rule not in ("planted", "count"):
            raise ValueError(f"unknown labeling rule {self.label_rule!r}")
        if not 0.0 <= self.noise <= 0.5:
            raise ValueError("label noise must lie in [0, 0.5]")
        if not 1 <= self.planted_depth <= len(self.attributes):
            raise ValueError("planted depth must be between 1 and the number of attributes")


@dataclass
class GeneratedData:
    schema: AttributeSchema
    train: list
    test: list
    planted: Optional[DecisionTree] = None
    test_truth: list = field(default_factory=list)


# -- planted trees ----------------------------------------------------------


def _full_tree(n, depth, rng, labels):
    """Full binary tree with distinct attributes along each path; leaves take ``labels`` in order."""
    it = iter(labels)

    def grow(level, used):
        if level == depth:
            return Leaf(next(it))
        attr = rng.choice([a for a in range(n) if a not in used])
        return Split(attr, grow(level + 1, used | {attr}), grow(level + 1, used | {attr}))

    return DecisionTree(grow(0, frozenset()))


def population_split_entropies(tree, p_above):
    """Split entropy of every attribute under independent threshold bits with P(bit=1)=p_above[j]."""
    n = len(p_above)
    used = sorted({a for conds, _ in tree.leaves() for a, _ in conds})
    # joint[(j, bit, label)] probability mass
    joint = {}
    for mask in range(2 ** len(used)):
        v = [0] * n
        w = 1.0
        for k, a in enumerate(used):
            bit = (mask >> k) & 1
            v[a] = bit
            w *= p_above[a] if bit else 1 - p_above[a]
        label = classify_plaintext(tree, v)
        for j in range(n):
            for bit in (0, 1):
                pb = (p_above[j] if bit else 1 - p_above[j]) if j not in used else float(v[j] == bit)
                key = (j, bit, label)
                joint[key] = joint.get(key, 0.0) + w * pb
    out = []
    for j in range(n):
        h = 0.0
        for bit in (0, 1):
            a = joint.get((j, bit, ClassLabel.AGGRESSIVE), 0.0)
            d = joint.get((j, bit, ClassLabel.DEFENSIVE), 0.0)
            if a + d > 0:
                h += (a + d) * _h(a / (a + d))
        out.append(h)
    return out


def _h(p):
    return -sum(x * math.log2(x) for x in (p, 1 - p) if x > 0)


def plant_tree(n, rng, depth=3, *, n_aggressive=None, p_above=None, root_margin=0.05, max_tries=2000):
    """Random ground-truth tree.

    With ``n_aggressive`` the tree has exactly that many aggressive leaves
    (depth grows as needed). Otherwise leaves below the root's threshold
    lean defensive and leaves above lean aggressive, and when ``p_above``
    is given the tree is redrawn until its root beats every other
    attribute's population split entropy by ``root_margin`` bits.
    """
    if n_aggressive is not None:
        if not 1 <= n_aggressive <= 2 ** n:
            raise ValueError(f"cannot plant {n_aggressive} aggressive paths over {n} attributes")
        depth = min(n, max(depth, math.ceil(math.log2(n_aggressive + 1))))
        leaves = 2 ** depth
        chosen = set(rng.sample(range(leaves), n_aggressive))
        labels = [ClassLabel.AGGRESSIVE if i in chosen else ClassLabel.DEFENSIVE for i in range(leaves)]
        return _full_tree(n, depth, rng, labels)
    if not 1 <= depth <= n:
        raise ValueError("depth must be between 1 and n")
    half = 2 ** (depth - 1)
    for _ in range(max_tries):
        labels = [
            ClassLabel.AGGRESSIVE if rng.random() < (0.25 if i < half else 0.75) else ClassLabel.DEFENSIVE
            for i in range(2 * half)
        ]
        if len(set(labels)) < 2:
            continue
        tree = _full_tree(n, depth, rng, labels)
        if p_above is None:
            return tree
        h = population_split_entropies(tree, p_above)
        root = tree.root.attribute
        if all(h[root] + root_margin <= h[j] for j in range(n) if j != root):
            return tree
    raise RuntimeError("could not plant a tree with an informative root")


# -- records ----------------------------------------------------------------


def record_for_vector(attributes, v, rng, label=None):
    return TravelRecord(tuple(a.sample(rng, bit) for a, bit in zip(attributes, v)), label)


def _sample_record(attributes, rng):
    return TravelRecord(tuple(a.sample(rng) for a in attributes))


def generate(cfg):
    """Labeled training records and unlabeled recognition records (deterministic per seed)."""
    attrs = cfg.attributes
    schema = AttributeSchema(tuple(a.attribute for a in attrs))
    n = len(attrs)
    planted = None
    if cfg.label_rule == "planted":
        tree_rng = random.Random(f"planted/{cfg.seed if cfg.planted_seed is None else cfg.planted_seed}")
        planted = plant_tree(n, tree_rng, cfg.planted_depth, p_above=[a.p_above() for a in attrs])

    def truth(v):
        if planted is not None:
            return classify_plaintext(planted, v)
        return ClassLabel.AGGRESSIVE if sum(v) >= cfg.count_threshold else ClassLabel.DEFENSIVE

    rng = random.Random(f"records/{cfg.seed}")
    train = []
    for _ in range(cfg.n_labeled):
        rec = _sample_record(attrs, rng)
        label = truth(binarize(schema, rec))
        if cfg.noise and rng.random() < cfg.noise:
            label = ClassLabel.DEFENSIVE if label is ClassLabel.AGGRESSIVE else ClassLabel.AGGRESSIVE
        train.append(TravelRecord(rec.values, label))
    test = [_sample_record(attrs, rng) for _ in range(cfg.n_unlabeled)]
    return GeneratedData(schema, train, test, planted, [truth(binarize(schema, r)) for r in test])


def write_dataset(out_dir, data):
    """Write ``schema.csv``, ``train.csv``, ``test.csv`` and ``planted_tree.json``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "schema.csv").write_text(schema_to_csv(data.schema))
    (out_dir / "train.csv").write_text(dataset_to_csv(data.schema, data.train))
    (out_dir / "test.csv").write_text(dataset_to_csv(data.schema, data.test))
    if data.planted is not None:
        (out_dir / "planted_tree.json").write_text(tree_to_json(data.planted, data.schema))

