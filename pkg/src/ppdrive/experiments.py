"""Benchmark sweeps over simulated protocol runs.

A sweep over ``m`` trains on ``m`` drivers; a sweep over ``T`` recognizes
one driver against a planted tree with exactly ``T`` aggressive paths; a
sweep over ``key_bits`` trains at a fixed ``m``. Every repetition derives
its own seeds, so a sweep is reproducible from ``ExperimentSpec.seed``.
"""

import random
import statistics
from dataclasses import dataclass
from functools import lru_cache

from . import datagen, paillier
from .domain import AttributeSchema, extract_aggressive_paths
from .parties import make_parties
from .recognition import recognize
from .simnet import run_protocol, summary_row, transcript_report
from .training import train

SWEEP_VARIABLES = ("m", "T", "key_bits")

TEST_KEY_BITS = 64


@dataclass(frozen=True)
class ExperimentSpec:
    sweep: str
    values: tuple
    reps: int = 1
    encoding: str = "augmented"
    key_bits: int = TEST_KEY_BITS
    m: int = 100  # drivers for key_bits sweeps
    seed: int = 0
    detail: bool = False  # per-phase, per-party rows instead of one summary row
    planted_depth: int = 3

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.sweep not in SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if not self.values:
            raise ValueError("empty sweep")
        if any(v <= 0 for v in self.values) or any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be positive and strictly increasing")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")


@lru_cache(maxsize=16)
def cached_keys(key_bits, seed):
    return paillier.keygen(key_bits, rng_seed=f"key/{seed}/{key_bits}")


def run_training(m, key_bits, seed, planted_depth=3, planted_seed=0):
    """One secure training run; returns ``(transcript, tree, data)``."""
    data = datagen.generate(datagen.GenConfig(m, seed=seed, planted_seed=planted_seed, planted_depth=planted_depth))
    keys = cached_keys(key_bits, seed)
    insurer, drivers = make_parties(keys, data.train, seed=seed)
    transcript, tree = run_protocol(
        [insurer.id] + [d.id for d in drivers],
        lambda net: train(net, insurer, drivers, data.schema),
    )
    return transcript, tree, data


def run_recognition(n_paths, key_bits, seed, encoding="augmented", *, schema_attrs=datagen.DEFAULT_ATTRIBUTES):
    """One recognition against a planted tree with ``n_paths`` aggressive paths."""
    schema = AttributeSchema(tuple(a.attribute for a in schema_attrs))
    rng = random.Random(f"recognition/{seed}/{n_paths}")
    tree = datagen.plant_tree(len(schema), rng, n_aggressive=n_paths)
    record = datagen.record_for_vector(schema_attrs, [rng.randint(0, 1) for _ in schema_attrs], rng)
    keys = cached_keys(key_bits, seed)
    insurer, (driver,) = make_parties(keys, [record], seed=seed)
    transcript, label = run_protocol(
        [insurer.id, driver.id],
        lambda net: recognize(net, insurer, driver, tree, schema, encoding),
    )
    return transcript, label, tree, driver


def run_experiment(spec, progress=None):
    """Metric rows (dicts keyed by ``simnet.METRIC_COLUMNS``)."""
    rows = []
    for value in spec.values:
        for rep in range(spec.reps):
            run_seed = spec.seed * 1_000_003 + rep
            if spec.sweep == "T":
                key_bits = spec.key_bits
                t, _, tree, _ = run_recognition(value, key_bits, run_seed, spec.encoding)
                protocol, m, n_paths, n = "recognize", 1, value, len(datagen.DEFAULT_ATTRIBUTES)
            else:
                m = value if spec.sweep == "m" else spec.m
                key_bits = value if spec.sweep == "key_bits" else spec.key_bits
                t, tree, data = run_training(m, key_bits, run_seed, spec.planted_depth, planted_seed=spec.seed)
                protocol, n = "train", len(data.schema)
                n_paths = len(extract_aggressive_paths(tree, data.schema))
            base = {
                "run_id": f"{spec.sweep}={value}/rep{rep}",
                "protocol": protocol,
                "key_bits": key_bits,
                "m": m,
                "T": n_paths,
                "n": n,
            }
            report = transcript_report(t) if spec.detail else [summary_row(t)]
            for r in report:
                rows.append({**base, "phase": r.phase, "party": r.party, "messages": r.messages, "bytes": r.bytes, "millis": r.millis})
            if progress is not None:
                progress(base["run_id"], rows[-1])
    return rows


def parse_sweep(text):
    """``"m=100..500:100"``, ``"T=1..10"`` or ``"key_bits=256,512"`` -> ``(variable, values)``."""
    try:
        var, _, spec = text.partition("=")
        var = var.strip()
        if var == "|T|":
            var = "T"
        if ".." in spec:
            bounds, _, step = spec.partition(":")
            lo, hi = (int(x) for x in bounds.split(".."))
            values = tuple(range(lo, hi + 1, int(step) if step else 1))
        else:
            values = tuple(int(x) for x in spec.split(",") if x.strip())
    except ValueError:
        raise ValueError(f"malformed sweep {text!r}") from None
    if var not in SWEEP_VARIABLES:
        raise ValueError(f"unknown sweep variable {var!r}")
    return var, values


def linear_fit_r2(xs, ys):
    """Coefficient of determination of the least-squares line through ``(xs, ys)``."""
    if len(set(ys)) == 1:
        return 1.0
    return statistics.correlation(xs, ys) ** 2


def key_bits_arg(text: str) -> int:
    if text == "test":
        return TEST_KEY_BITS
    bits = int(text)
    if bits < 64 or bits % 2:
        raise ValueError("key bits must be 'test' or an even integer >= 64")
    return bits

