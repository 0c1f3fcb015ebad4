"""Attribute schema, travel records, decision trees and aggressive paths.

Every attribute has a public threshold. A record binarizes to a travel
vector with bit ``j`` set iff ``value_j >= threshold_j``. Decision trees are
binary: each internal node tests one attribute and has a ``below`` child
(value under the threshold) and an ``above`` child (value at or above it).

Aggressive paths come in two encodings:

``paper``
    n digits, 1 where the path takes the ``above`` branch. Matching
    ``c . v == c . c`` ignores ``below`` edges, so a vector can match a
    path it never traverses.
``augmented``
    2n digits, ``(above_j, below_j)`` pairs. A path sets the digit of the
    branch it takes at each tested attribute; a vector sets exactly one
    digit of each pair. ``c' . v' == c' . c'`` holds iff the vector
    traverses the path.
"""

import csv
import enum
import io
import json
from dataclasses import dataclass
from typing import Optional, Union

ENCODINGS = ("paper", "augmented")


class ClassLabel(str, enum.Enum):
    AGGRESSIVE = "Aggressive"
    DEFENSIVE = "Defensive"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, text):
        key = text.strip().lower()
        for label in cls:
            if label.value.lower() == key or label.value[0].lower() == key:
                return label
        raise ValueError(f"unknown class label {text!r}")


@dataclass(frozen=True)
class Attribute:
    name: str
    threshold: float
    unit: str = ""


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if not self.attributes:
            raise ValueError("schema needs at least one attribute")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        if "label" in names:
            raise ValueError("'label' is reserved for the class column")

    def __len__(self):
        return len(self.attributes)

    @property
    def names(self):
        return [a.name for a in self.attributes]

    @property
    def thresholds(self):
        return [a.threshold for a in self.attributes]

    def index(self, name):
        return self.names.index(name)


@dataclass(frozen=True)
class TravelRecord:
    values: tuple
    label: Optional[ClassLabel] = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


TravelVector = tuple  # of 0/1 ints, one per schema attribute


def binarize(schema, record):
    values = record.values if isinstance(record, TravelRecord) else tuple(record)
    if len(values) != len(schema):
        raise ValueError(f"record has {len(values)} values, schema has {len(schema)}")
    return tuple(int(v >= a.threshold) for v, a in zip(values, schema.attributes))


# -- trees ----------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    label: ClassLabel


@dataclass(frozen=True)
class Split:
    attribute: int
    below: "TreeNode"
    above: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode

    def validate(self, schema):
        def walk(node, seen):
            if isinstance(node, Leaf):
                if not isinstance(node.label, ClassLabel):
                    raise ValueError("leaf label must be a ClassLabel")
                return
            if not 0 <= node.attribute < len(schema):
                raise ValueError(f"attribute index {node.attribute} outside schema")
            if node.attribute in seen:
                raise ValueError(f"attribute {node.attribute} repeats along a path")
            walk(node.below, seen | {node.attribute})
            walk(node.above, seen | {node.attribute})

        walk(self.root, frozenset())
        return self

    def leaves(self):
        """Yield ``(conditions, label)``; conditions are ``(attribute, bit)`` pairs."""
        stack = [(self.root, ())]
        while stack:
            node, conds = stack.pop()
            if isinstance(node, Leaf):
                yield conds, node.label
            else:
                # above pushed first so below-first order comes out of the stack
                stack.append((node.above, conds + ((node.attribute, 1),)))
                stack.append((node.below, conds + ((node.attribute, 0),)))

    @property
    def depth(self):
        return max((len(c) for c, _ in self.leaves()), default=0)

    def n_internal(self):
        return sum(1 for _ in _internal_nodes(self.root))


def _internal_nodes(node):
    if isinstance(node, Split):
        yield node
        yield from _internal_nodes(node.below)
        yield from _internal_nodes(node.above)


def classify_plaintext(tree, v):
    node = tree.root
    while isinstance(node, Split):
        node = node.above if v[node.attribute] else node.below
    return node.label


# -- aggressive paths -----------------------------------------------------


@dataclass(frozen=True)
class AggressivePath:
    ones_vector: tuple
    mask_vector: tuple

    def __post_init__(self):
        if len(self.ones_vector) != len(self.mask_vector):
            raise ValueError("ones and mask vectors differ in length")
        if any(o and not m for o, m in zip(self.ones_vector, self.mask_vector)):
            raise ValueError("ones_vector must be covered by mask_vector")

    @property
    def self_product(self):
        return sum(self.ones_vector)

    def digits(self, encoding):
        if encoding == "paper":
            return self.ones_vector
        if encoding == "augmented":
            return augment(self)
        raise ValueError(f"unknown encoding {encoding!r}")

    def target(self, encoding):
        """The dot product a traversing vector reaches under ``encoding``."""
        return sum(self.digits(encoding))


def extract_aggressive_paths(tree, schema):
    n = len(schema)
    paths = []
    for conds, label in tree.leaves():
        if label is not ClassLabel.AGGRESSIVE:
            continue
        ones, mask = [0] * n, [0] * n
        for attribute, bit in conds:
            mask[attribute] = 1
            ones[attribute] = bit
        paths.append(AggressivePath(tuple(ones), tuple(mask)))
    return paths


def path_to_conditions(path):
    return tuple((j, o) for j, (o, m) in enumerate(zip(path.ones_vector, path.mask_vector)) if m)


def augment(path):
    out = []
    for o, m in zip(path.ones_vector, path.mask_vector):
        out.extend((o, int(m and not o)))
    return tuple(out)


def augment_vector(v):
    out = []
    for bit in v:
        out.extend((bit, 1 - bit))
    return tuple(out)


def encode_vector(v, encoding):
    if encoding == "paper":
        return tuple(v)
    if encoding == "augmented":
        return augment_vector(v)
    raise ValueError(f"unknown encoding {encoding!r}")


def dot(a, b):
    if len(a) != len(b):
        raise ValueError("vectors differ in length")
    return sum(x * y for x, y in zip(a, b))


def path_matches(path, v, encoding):
    """Plaintext form of the encrypted match test."""
    digits = path.digits(encoding)
    return dot(digits, encode_vector(v, encoding)) == sum(digits)


# -- serialization ----------------------------------------------------------


def node_to_dict(node, schema=None):
    if isinstance(node, Leaf):
        return {"kind": "leaf", "label": node.label.value}
    doc = {"kind": "split", "attribute": node.attribute}
    if schema is not None:
        attr = schema.attributes[node.attribute]
        doc["name"] = attr.name
        doc["threshold"] = attr.threshold
    doc["below"] = node_to_dict(node.below, schema)
    doc["above"] = node_to_dict(node.above, schema)
    return doc


def node_from_dict(doc):
    kind = doc.get("kind")
    if kind == "leaf":
        return Leaf(ClassLabel(doc["label"]))
    if kind == "split":
        return Split(int(doc["attribute"]), node_from_dict(doc["below"]), node_from_dict(doc["above"]))
    raise ValueError(f"unknown node kind {kind!r}")


def tree_to_json(tree, schema):
    doc = {
        "schema": [{"name": a.name, "threshold": a.threshold, "unit": a.unit} for a in schema.attributes],
        "root": node_to_dict(tree.root, schema),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def tree_from_json(text):
    """Parse a tree document; returns ``(tree, schema)``."""
    doc = json.loads(text)
    try:
        schema = AttributeSchema(
            tuple(Attribute(a["name"], float(a["threshold"]), a.get("unit", "")) for a in doc["schema"])
        )
        tree = DecisionTree(node_from_dict(doc["root"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed tree document: {exc}") from exc
    return tree.validate(schema), schema


def schema_to_csv(schema):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "threshold", "unit"])
    for a in schema.attributes:
        w.writerow([a.name, repr(a.threshold), a.unit])
    return buf.getvalue()


def schema_from_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or "name" not in rows[0] or "threshold" not in rows[0]:
        raise ValueError("schema CSV needs 'name' and 'threshold' columns")
    try:
        return AttributeSchema(
            tuple(Attribute(r["name"], float(r["threshold"]), r.get("unit") or "") for r in rows)
        )
    except ValueError as exc:
        raise ValueError(f"malformed schema CSV: {exc}") from exc


def _fmt(v):
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def dataset_to_csv(schema, records):
    labeled = any(r.label is not None for r in records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(schema.names + (["label"] if labeled else []))
    for r in records:
        row = [_fmt(v) for v in r.values]
        if labeled:
            row.append(r.label.value if r.label else "")
        w.writerow(row)
    return buf.getvalue()


def dataset_from_csv(schema, text):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("dataset CSV is empty") from None
    labeled = header[-1:] == ["label"]
    names = header[:-1] if labeled else header
    if names != schema.names:
        raise ValueError(f"dataset columns {names} do not match schema {schema.names}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            values = tuple(float(x) for x in row[: len(names)])
            label = ClassLabel.parse(row[-1]) if labeled and row[-1] else None
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
        records.append(TravelRecord(values, label))
    return records


# -- a small worked example -----------------------------------------------


def demo_schema():
    """Six-attribute schema of the small example tree."""
    return AttributeSchema((
        Attribute("acceleration_events", 110.0, "count"),
        Attribute("average_acceleration", 3.0, "m/s^2"),
        Attribute("braking_events", 150.0, "count"),
        Attribute("average_braking", 4.9, "m/s^2"),
        Attribute("average_turning", 50.0, "degrees"),
        Attribute("high_risk_hours", 80.0, "h"),
    ))


def demo_tree():
    """Acceleration events at the root; two aggressive leaves.

    ``< 110 -> braking events >= 150 -> average braking >= 4.9`` and
    ``>= 110 -> high-risk hours >= 80`` lead to Aggressive.
    """
    A, D = Leaf(ClassLabel.AGGRESSIVE), Leaf(ClassLabel.DEFENSIVE)
    return DecisionTree(
        Split(0, below=Split(2, below=D, above=Split(3, below=D, above=A)), above=Split(5, below=D, above=A))
    )


def all_vectors(n):
    """Every n-bit travel vector, in counting order."""
    return [tuple((i >> (n - 1 - j)) & 1 for j in range(n)) for i in range(2 ** n)]
