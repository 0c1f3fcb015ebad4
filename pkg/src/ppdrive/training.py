"""Distributed ID3 over secure sums, plus a plaintext ID3 oracle.

At every node the insurer broadcasts the node's ancestor conditions. Each
driver answers with four 0/1 indicators per remaining attribute, one for
each (branch, class) cell, all zero when its record does not reach the
node. Secure sums turn these into class counts, and the insurer picks the
attribute with the smallest post-split entropy, breaking ties by lowest
index.

Stop rules shared by ``train`` and ``train_plaintext_oracle``:

* no records reach the node: leaf with the parent's majority class;
* all records share one class: leaf with that class;
* no attributes remain or ``max_depth`` is reached: majority leaf, with an
  exact tie resolved to ``StopConfig.tie_label``.

Child class counts come from the parent's split counts, so only nodes
that will actually be split cost a round of secure sums.
"""

import math
import struct
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .domain import ClassLabel, DecisionTree, Leaf, Split, binarize
from .parties import distribute_public_key
from .secure_sum import secure_sum_batch
from .simnet import Tag

BELOW, ABOVE = 0, 1


@dataclass(frozen=True)
class ClassCounts:
    below_aggressive: int
    below_defensive: int
    above_aggressive: int
    above_defensive: int

    def __post_init__(self):
        if min(self.cells()) < 0:
            raise ValueError("class counts must be non-negative")

    def cells(self):
        return (self.below_aggressive, self.below_defensive, self.above_aggressive, self.above_defensive)

    def branch(self, b):
        """``(aggressive, defensive)`` counts of one branch."""
        if b == BELOW:
            return self.below_aggressive, self.below_defensive
        return self.above_aggressive, self.above_defensive

    @property
    def total(self):
        return sum(self.cells())

    @property
    def aggressive(self):
        return self.below_aggressive + self.above_aggressive

    @property
    def defensive(self):
        return self.below_defensive + self.above_defensive


@dataclass(frozen=True)
class StopConfig:
    max_depth: Optional[int] = None  # None: number of attributes
    tie_label: ClassLabel = ClassLabel.DEFENSIVE


@dataclass(frozen=True)
class NodeContext:
    conditions: tuple  # ((attribute, branch), ...) from the root
    remaining: tuple

    @classmethod
    def root(cls, n):
        return cls((), tuple(range(n)))

    def child(self, attribute, branch):
        return NodeContext(
            self.conditions + ((attribute, branch),),
            tuple(a for a in self.remaining if a != attribute),
        )

    def admits(self, v):
        return all(v[a] == b for a, b in self.conditions)

    def to_bytes(self):
        out = struct.pack(">H", len(self.conditions))
        for a, b in self.conditions:
            out += struct.pack(">HB", a, b)
        return out

    @classmethod
    def from_bytes(cls, data, n):
        (count,) = struct.unpack_from(">H", data)
        conds = tuple(struct.unpack_from(">HB", data, 2 + 3 * i) for i in range(count))
        used = {a for a, _ in conds}
        return cls(conds, tuple(a for a in range(n) if a not in used))


def class_entropy(aggressive, defensive):
    n = aggressive + defensive
    h = 0.0
    for c in sorted((aggressive, defensive)):
        if c:
            p = c / n
            h -= p * math.log2(p)
    return h


def entropy(counts):
    """Weighted entropy (bits) of the two branches of a split."""
    n = counts.total
    if n == 0:
        raise ValueError("entropy of an empty node")
    return sum((a + d) / n * class_entropy(a, d) for a, d in (counts.branch(BELOW), counts.branch(ABOVE)))


def majority(aggressive, defensive, tie_label=ClassLabel.DEFENSIVE):
    if aggressive > defensive:
        return ClassLabel.AGGRESSIVE
    if defensive > aggressive:
        return ClassLabel.DEFENSIVE
    return tie_label


def best_attribute(counts_by_attribute):
    """Smallest split entropy; ties go to the lowest attribute index."""
    return min(sorted(counts_by_attribute), key=lambda a: entropy(counts_by_attribute[a]))


def driver_shares(record, ctx, schema):
    """Four indicators per remaining attribute, ordered (below, A), (below, D), (above, A), (above, D)."""
    if record.label is None:
        raise ValueError("training records need a label")
    v = binarize(schema, record)
    shares = [0] * (4 * len(ctx.remaining))
    if ctx.admits(v):
        cls = 0 if record.label is ClassLabel.AGGRESSIVE else 1
        for i, a in enumerate(ctx.remaining):
            shares[4 * i + 2 * v[a] + cls] = 1
    return shares


def counts_from_totals(ctx, totals):
    return {a: ClassCounts(*totals[4 * i: 4 * i + 4]) for i, a in enumerate(ctx.remaining)}


def _assemble(nodes, node_id):
    node = nodes[node_id]
    if isinstance(node, Leaf):
        return node
    attribute, below, above = node
    return Split(attribute, _assemble(nodes, below), _assemble(nodes, above))


def train(net, insurer, drivers, schema, stop=StopConfig(), *, concurrent=False):
    """Insurer-side decision tree from the drivers' labeled records.

    Nodes are expanded breadth-first. Drivers learn the public key and the
    conditions of every expanded node, nothing else.
    """
    if not drivers:
        raise ValueError("training needs at least one driver")
    n = len(schema)
    max_depth = n if stop.max_depth is None else stop.max_depth
    distribute_public_key(net, insurer, drivers)

    def expand(ctx):
        payload = ctx.to_bytes()
        table = []
        for d in drivers:
            net.send(insurer.id, d.id, Tag.NODE_CONTEXT, payload)
            seen = NodeContext.from_bytes(net.recv(d.id, Tag.NODE_CONTEXT).payload, n)
            table.append(driver_shares(d.record, seen, schema))
        totals = secure_sum_batch(net, insurer, drivers, table, send_key=False, concurrent=concurrent)
        return counts_from_totals(ctx, totals)

    nodes = {}
    # (node id, context, known (A, D) counts or None, parent majority)
    queue = deque([(0, NodeContext.root(n), None, stop.tie_label)])
    next_id = 1
    while queue:
        node_id, ctx, known, parent_majority = queue.popleft()
        counts = None
        if known is None:
            counts = expand(ctx)
            first = counts[ctx.remaining[0]]
            known = (first.aggressive, first.defensive)
        a, d = known
        depth = len(ctx.conditions)
        if a + d == 0:
            nodes[node_id] = Leaf(parent_majority)
            continue
        if a == 0 or d == 0:
            nodes[node_id] = Leaf(ClassLabel.AGGRESSIVE if d == 0 else ClassLabel.DEFENSIVE)
            continue
        here = majority(a, d, stop.tie_label)
        if not ctx.remaining or depth >= max_depth:
            nodes[node_id] = Leaf(here)
            continue
        if counts is None:
            counts = expand(ctx)
        best = best_attribute(counts)
        below_id, above_id = next_id, next_id + 1
        next_id += 2
        nodes[node_id] = (best, below_id, above_id)
        for child_id, b in ((below_id, BELOW), (above_id, ABOVE)):
            queue.append((child_id, ctx.child(best, b), counts[best].branch(b), here))
    return DecisionTree(_assemble(nodes, 0))


def train_plaintext_oracle(records, schema, stop=StopConfig()):
    """Plain ID3 on binarized records with the same entropy and stop rules."""
    if not records:
        raise ValueError("no training records")
    n = len(schema)
    max_depth = n if stop.max_depth is None else stop.max_depth
    rows = [(binarize(schema, r), r.label) for r in records]
    if any(label is None for _, label in rows):
        raise ValueError("training records need a label")

    def build(rows, remaining, depth, parent_majority):
        if not rows:
            return Leaf(parent_majority)
        a = sum(1 for _, label in rows if label is ClassLabel.AGGRESSIVE)
        d = len(rows) - a
        if d == 0:
            return Leaf(ClassLabel.AGGRESSIVE)
        if a == 0:
            return Leaf(ClassLabel.DEFENSIVE)
        here = majority(a, d, stop.tie_label)
        if not remaining or depth >= max_depth:
            return Leaf(here)
        scored = {}
        for attr in remaining:
            cells = [0, 0, 0, 0]
            for v, label in rows:
                cells[2 * v[attr] + (label is ClassLabel.DEFENSIVE)] += 1
            scored[attr] = ClassCounts(*cells)
        best = best_attribute(scored)
        rest = [x for x in remaining if x != best]
        return Split(
            best,
            build([r for r in rows if r[0][best] == 0], rest, depth + 1, here),
            build([r for r in rows if r[0][best] == 1], rest, depth + 1, here),
        )

    return DecisionTree(build(rows, list(range(n)), 0, stop.tie_label))
