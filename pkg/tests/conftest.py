import random

import pytest

from ppdrive import domain, paillier
from ppdrive.parties import make_parties
from ppdrive.simnet import run_protocol


@pytest.fixture(scope="session")
def test_keys():
    return paillier.keygen(64, rng_seed="tests/64")


@pytest.fixture(scope="session")
def keys512():
    return paillier.keygen(512, rng_seed="tests/512")


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def demo_schema():
    return domain.demo_schema()


@pytest.fixture
def demo_tree():
    return domain.demo_tree()


def record_from_bits(schema, bits, label=None):
    """A record sitting exactly on (bit 1) or just under (bit 0) each threshold."""
    return domain.TravelRecord(
        [t if b else t - 1 for b, t in zip(bits, schema.thresholds)], label
    )


def run_parties(keys, records, script, seed=0):
    insurer, drivers = make_parties(keys, records, seed=seed)
    transcript, out = run_protocol(
        [insurer.id] + [d.id for d in drivers], lambda net: script(net, insurer, drivers)
    )
    return transcript, out, insurer, drivers


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
