"""Insurer and driver actors.

Each actor owns its private input and its own randomness source. The
insurer holds the key pair; a driver only ever holds the public key it
parsed from its ``PUBLIC_KEY`` message.
"""

import random

from . import paillier
from .paillier import PublicKey
from .simnet import INSURER, Tag, driver_id


def party_rng(seed, party_id):
    """Per-party generator derived from a run seed (OS entropy without one)."""
    if seed is None:
        return random.SystemRandom()
    return random.Random(f"{seed}/{party_id}")


class Insurer:
    def __init__(self, keys, rng):
        self.id = INSURER
        self.keys = keys
        self.rng = rng

    @property
    def public_key(self):
        return self.keys.public

    @property
    def secret_key(self):
        return self.keys.secret


class Driver:
    def __init__(self, index, record=None, rng=None):
        self.id = driver_id(index)
        self.record = record
        self.rng = rng if rng is not None else random.SystemRandom()
        self.public_key = None
        self.stream = None
        self.verdict = None

    def receive_public_key(self, net):
        msg = net.recv(self.id, Tag.PUBLIC_KEY)
        self.public_key = PublicKey.from_bytes(msg.payload)
        return self.public_key

    def encrypt(self, transcript, plaintexts):
        if self.public_key is None:
            raise RuntimeError(f"{self.id} has not received a public key")
        with transcript.phase("encrypt", self.id):
            return paillier.encrypt_many(self.public_key, plaintexts, self.rng)


def distribute_public_key(net, insurer, drivers):
    payload = insurer.public_key.to_bytes()
    for d in drivers:
        net.send(insurer.id, d.id, Tag.PUBLIC_KEY, payload)
        d.receive_public_key(net)


def make_parties(keys, records, seed=None):
    """An insurer plus one driver per record, with per-party seeded RNGs."""
    insurer = Insurer(keys, party_rng(seed, INSURER))
    drivers = [
        Driver(i, rec, party_rng(seed, driver_id(i)))
        for i, rec in enumerate(records, start=1)
    ]
    return insurer, drivers
