"""Command-line entry point: ``ppdrive {gen,train,recognize,bench-train,bench-recognize}``.

Exit status is 0 on success, 1 on a usage error and 2 on a runtime error
(malformed input files, protocol failures).
"""

import argparse
import logging
import sys
from pathlib import Path

from . import datagen, kernels, paillier
from .domain import (
    TravelRecord,
    binarize,
    classify_plaintext,
    dataset_from_csv,
    schema_from_csv,
    tree_from_json,
    tree_to_json,
)
from .experiments import ExperimentSpec, key_bits_arg, parse_sweep, run_experiment
from .parties import make_parties
from .recognition import recognize
from .simnet import metrics_to_csv, run_protocol
from .training import StopConfig, train

log = logging.getLogger("ppdrive")

FULL_SCALE_SWEEP = "m=1000..5000:1000"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _key_bits(text):
    try:
        return key_bits_arg(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _keys(bits, seed):
    return paillier.keygen(bits, rng_seed=None if seed is None else f"key/{seed}")


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from None


def cmd_gen(args):
    cfg = datagen.GenConfig(
        n_labeled=args.drivers,
        n_unlabeled=args.unlabeled,
        seed=args.seed,
        label_rule=args.label_rule,
        planted_depth=args.depth,
        noise=args.noise,
    )
    data = datagen.generate(cfg)
    out = Path(args.out)
    datagen.write_dataset(out, data)
    print(f"wrote {len(data.train)} labeled and {len(data.test)} unlabeled records to {out}")


def cmd_train(args):
    data_path = Path(args.data)
    schema = schema_from_csv(_read(args.schema or data_path.with_name("schema.csv")))
    records = dataset_from_csv(schema, _read(data_path))
    if not records:
        raise ValueError("training set is empty")
    if any(r.label is None for r in records):
        raise ValueError("training records need a 'label' column")
    keys = _keys(args.key_bits, args.seed)
    insurer, drivers = make_parties(keys, records, seed=args.seed)
    stop = StopConfig(max_depth=args.max_depth)
    t, tree = run_protocol(
        [insurer.id] + [d.id for d in drivers],
        lambda net: train(net, insurer, drivers, schema, stop, concurrent=args.concurrent),
    )
    text = tree_to_json(tree, schema)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    log.info("trained on %d drivers: %d messages, %d bytes, %.1f ms", len(drivers), len(t.messages), t.total_bytes(), t.wall_seconds * 1e3)


def _record(args, schema):
    if args.values is not None:
        try:
            values = [float(x) for x in args.values.split(",")]
        except ValueError:
            raise ValueError(f"malformed --values {args.values!r}") from None
        if len(values) != len(schema):
            raise ValueError(f"--values needs {len(schema)} numbers, got {len(values)}")
        return TravelRecord(values)
    if args.record is None:
        raise UsageError("one of --record or --values is required")
    records = dataset_from_csv(schema, _read(args.record))
    if not 0 <= args.row < len(records):
        raise ValueError(f"row {args.row} outside the {len(records)} records of {args.record}")
    return TravelRecord(records[args.row].values)


def cmd_recognize(args):
    tree, schema = tree_from_json(_read(args.tree))
    record = _record(args, schema)
    keys = _keys(args.key_bits, args.seed)
    insurer, (driver,) = make_parties(keys, [record], seed=args.seed)
    t, label = run_protocol(
        [insurer.id, driver.id],
        lambda net: recognize(net, insurer, driver, tree, schema, args.encoding),
    )
    print(label.value)
    uplink = t.ciphertext_count(sender=driver.id)
    log.info(
        "downlink %d ciphertexts, uplink %d ciphertexts, %d bytes total; plaintext traversal says %s",
        t.ciphertext_count(sender=insurer.id), uplink, t.total_bytes(),
        classify_plaintext(tree, binarize(schema, record)).value,
    )


def _bench(args, default_sweep, expected_var):
    try:
        var, values = parse_sweep(args.sweep or default_sweep)
        if var not in expected_var:
            raise ValueError(f"--sweep variable must be one of {sorted(expected_var)}")
        spec = ExperimentSpec(
            sweep=var,
            values=values,
            reps=args.reps,
            encoding=getattr(args, "encoding", "augmented"),
            key_bits=args.key_bits or (512 if getattr(args, "full_scale", False) else key_bits_arg("test")),
            m=getattr(args, "drivers", 100),
            seed=args.seed,
            detail=args.detail,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = run_experiment(spec, progress=lambda run_id, row: log.info("%s: %s bytes, %.1f ms", run_id, row["bytes"], row["millis"]))
    text = metrics_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_bench_train(args):
    default = "m=100..500:100"
    if args.full_scale:
        default = FULL_SCALE_SWEEP
    _bench(args, default, {"m", "key_bits"})


def cmd_bench_recognize(args):
    _bench(args, "T=1..10", {"T"})


def build_parser():
    p = _Parser(prog="ppdrive", description="Privacy-preserving driving style recognition.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate synthetic telematics datasets")
    g.add_argument("--drivers", type=int, default=7500, help="labeled training records")
    g.add_argument("--unlabeled", type=int, default=2500, help="unlabeled recognition records")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--depth", type=int, default=3, help="depth of the planted labeling tree")
    g.add_argument("--noise", type=float, default=0.0, help="label flip probability")
    g.add_argument("--label-rule", choices=("planted", "count"), default="planted")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    common_key = dict(type=_key_bits, default="test", help="512, 1024, or 'test' (64-bit)")

    t = sub.add_parser("train", help="train a tree over secure sums")
    t.add_argument("--data", required=True, help="labeled dataset CSV")
    t.add_argument("--schema", help="schema CSV (default: schema.csv beside --data)")
    t.add_argument("--key-bits", **common_key)
    t.add_argument("--seed", type=int, default=None, help="seed all randomness (default: OS entropy)")
    t.add_argument("--max-depth", type=int, default=None)
    t.add_argument("--concurrent", action="store_true", help="run ring passes of a node in threads")
    t.add_argument("--out", help="tree JSON path (default: stdout)")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("recognize", help="classify one record against a tree")
    r.add_argument("--tree", required=True)
    r.add_argument("--record", help="dataset CSV holding the record")
    r.add_argument("--row", type=int, default=0, help="row of --record to use")
    r.add_argument("--values", help="comma-separated attribute values instead of --record")
    r.add_argument("--encoding", choices=("paper", "augmented"), default="augmented")
    r.add_argument("--key-bits", **common_key)
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=cmd_recognize)

    for name, func, help_ in (
        ("bench-train", cmd_bench_train, "sweep training cost over m or key size"),
        ("bench-recognize", cmd_bench_recognize, "sweep recognition cost over |T|"),
    ):
        b = sub.add_parser(name, help=help_)
        b.add_argument("--sweep", help="e.g. m=100..500:100, T=1..10, key_bits=512,1024")
        b.add_argument("--key-bits", type=_key_bits, default=None,
                       help="512, 1024, or 'test' (64-bit; the default, 512 with --full-scale)")
        b.add_argument("--reps", type=int, default=1)
        b.add_argument("--seed", type=int, default=0)
        b.add_argument("--detail", action="store_true", help="per-phase, per-party rows")
        b.add_argument("--out", help="metrics CSV path (default: stdout)")
        if name == "bench-train":
            b.add_argument("--drivers", type=int, default=100, help="drivers for key_bits sweeps")
            b.add_argument("--full-scale", action="store_true",
                           help="default sweep m=1000..5000:1000 with 512-bit keys")
        else:
            b.add_argument("--encoding", choices=("paper", "augmented"), default="augmented")
        b.set_defaults(func=func)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    log.debug("kernel backend: %s", kernels.BACKEND)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"ppdrive: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"ppdrive: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
