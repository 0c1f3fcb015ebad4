"""Ring secure sum over Paillier ciphertexts.

The insurer opens each pass with a fresh ``E(0)``; every driver in turn
multiplies in a fresh encryption of its own share and passes the running
ciphertext on, and the last driver hands it back to the insurer, who
decrypts only the total. A pass is m hops plus the final message.

A driver sees the public key and one incoming ciphertext per sum; the
insurer sees one ciphertext per sum. Two colluding ring neighbours can
isolate the share of the driver between them; that is outside the
semi-honest, non-colluding model used here.
"""

import struct
from concurrent.futures import ThreadPoolExecutor

from . import paillier
from .paillier import Ciphertext
from .parties import distribute_public_key
from .simnet import INSURER, Tag

_INDEX = struct.Struct(">I")


class ShareBoundError(ValueError):
    pass


def _pack(index, ct):
    return _INDEX.pack(index) + ct.to_bytes()


def _unpack(pk, payload):
    (index,) = _INDEX.unpack_from(payload)
    return index, Ciphertext.from_bytes(pk, payload[_INDEX.size:])


def share_bound(pk, m):
    """Exclusive upper bound on a single share so m of them cannot overflow."""
    return pk.modulus // (2 * m)


def shuffled_ring(drivers, rng):
    order = list(drivers)
    rng.shuffle(order)
    return order


def secure_sum(net, insurer, drivers, shares, *, send_key=True, ring_order=None):
    """Insurer learns ``sum(shares)``; ``shares[i]`` belongs to ``drivers[i]``."""
    return secure_sum_batch(
        net, insurer, drivers, [[s] for s in shares], send_key=send_key, ring_order=ring_order
    )[0]


def secure_sum_batch(net, insurer, drivers, share_table, *, send_key=True, ring_order=None, concurrent=False):
    """Element-wise totals of per-driver share lists, one ring pass per index.

    ``share_table[i]`` is the list of shares of ``drivers[i]``. With
    ``concurrent=True`` the ring passes for different indices run in worker
    threads; totals and per-party byte counts equal the sequential run.
    """
    m = len(drivers)
    if m == 0:
        raise ValueError("secure sum needs at least one driver")
    if len(share_table) != m:
        raise ValueError("share table needs one row per driver")
    k = len(share_table[0])
    if any(len(row) != k for row in share_table):
        raise ValueError("ragged share table: every driver must supply the same number of shares")
    pk = insurer.public_key
    bound = share_bound(pk, m)
    for row in share_table:
        for s in row:
            if not 0 <= s < bound:
                raise ShareBoundError(f"share {s} outside [0, {bound})")
    if send_key:
        distribute_public_key(net, insurer, drivers)
    for d in drivers:
        if d.public_key is None or d.public_key.fingerprint != pk.fingerprint:
            raise paillier.KeyMismatchError(f"{d.id} holds a different public key")
    if k == 0:
        return []

    shares_of = {d.id: row for d, row in zip(drivers, share_table)}
    order = list(drivers) if ring_order is None else list(ring_order)
    if sorted(d.id for d in order) != sorted(shares_of):
        raise ValueError("ring order must be a permutation of the drivers")

    t = net.transcript
    with t.phase("encrypt", INSURER):
        openings = paillier.encrypt_many(pk, [0] * k, insurer.rng)
    own = {d.id: d.encrypt(t, shares_of[d.id]) for d in order}

    def ring_pass(s):
        net.send(INSURER, order[0].id, Tag.SUM_HOP, _pack(s, openings[s]), ciphertexts=1, channel=s)
        for pos, d in enumerate(order):
            msg = net.recv(d.id, Tag.SUM_HOP, channel=s)
            index, incoming = _unpack(d.public_key, msg.payload)
            if index != s:
                raise RuntimeError("sum index out of step")
            with t.phase("homomorphic", d.id):
                ct = paillier.hom_add(incoming, own[d.id][s])
            last = pos == m - 1
            net.send(
                d.id, INSURER if last else order[pos + 1].id,
                Tag.SUM_FINAL if last else Tag.SUM_HOP,
                _pack(s, ct), ciphertexts=1, channel=s,
            )
        msg = net.recv(INSURER, Tag.SUM_FINAL, channel=s)
        return _unpack(pk, msg.payload)[1]

    if concurrent and k > 1:
        with ThreadPoolExecutor() as pool:
            finals = list(pool.map(ring_pass, range(k)))
    else:
        finals = [ring_pass(s) for s in range(k)]

    with t.phase("decrypt", INSURER):
        return paillier.decrypt_many(insurer.secret_key, finals)
