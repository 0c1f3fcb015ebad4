"""Compare the GMP extension against the pure-Python kernels.

Kernel level: both backends are imported side by side and timed on the
same operands. Protocol level: a training run and a recognition sweep are
timed in two subprocesses, one with ``PPDRIVE_PURE_PYTHON=1``.

    python benchmarks/bench_kernels.py [--bits 512 1024 2048] [--count 200] [--skip-protocol]
"""

import argparse
import json
import os
import random
import subprocess
import sys
import time

from ppdrive.kernels import available_backends

PROTOCOL_SNIPPET = """
import json, time
from ppdrive import kernels
from ppdrive.experiments import ExperimentSpec, run_experiment
out = {"backend": kernels.BACKEND}
for name, spec in (("train m=100", ExperimentSpec("m", [100], key_bits=512)),
                   ("recognize T=1..10", ExperimentSpec("T", range(1, 11), key_bits=512))):
    t0 = time.perf_counter()
    run_experiment(spec)
    out[name] = time.perf_counter() - t0
print(json.dumps(out))
"""


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_table(bits_list, count):
    backends = available_backends()
    if "gmp" not in backends:
        print("GMP extension not built; only the Python backend is available.")
    rng = random.Random(0)
    print(f"{'kernel':<14}{'bits':>6}  " + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for bits in bits_list:
        mod = rng.getrandbits(2 * bits) | 1 | (1 << (2 * bits - 1))  # modulus the size of n^2
        bases = [rng.randrange(2, mod) for _ in range(count)]
        exps = [rng.getrandbits(bits) for _ in range(count)]
        cases = {
            "powmod": lambda k: [k.powmod(b, e, mod) for b, e in zip(bases, exps)],
            "powmod_many": lambda k: k.powmod_many(bases, exps[0], mod),  # shared exponent, as for r^n
            "prod_mod": lambda k: k.prod_mod(bases * 20, mod),
        }
        for name, case in cases.items():
            times = {b: best_of(lambda: case(mod_)) for b, mod_ in backends.items()}
            row = f"{name:<14}{bits:>6}  " + "".join(f"{t * 1e3:>10.1f}ms" for t in times.values())
            if "gmp" in times:
                row += f"{times['python'] / times['gmp']:>9.1f}x"
            print(row)


def protocol_table():
    results = []
    for pure in ("0", "1"):
        env = dict(os.environ, PPDRIVE_PURE_PYTHON=pure)
        proc = subprocess.run([sys.executable, "-c", PROTOCOL_SNIPPET], env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(proc.stdout))
    names = [k for k in results[0] if k != "backend"]
    print(f"\n{'protocol (512-bit key)':<24}" + "".join(f"{r['backend']:>12}" for r in results))
    for name in names:
        print(f"{name:<24}" + "".join(f"{r[name]:>11.2f}s" for r in results))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--bits", type=int, nargs="+", default=[512, 1024, 2048], help="Paillier key sizes (moduli are n^2)")
    p.add_argument("--count", type=int, default=200, help="operations per kernel call")
    p.add_argument("--skip-protocol", action="store_true")
    args = p.parse_args()
    kernel_table(args.bits, args.count)
    if not args.skip_protocol:
        protocol_table()


if __name__ == "__main__":
    main()
