"""Encrypted aggressive-path matching between the insurer and one driver.

The insurer encrypts every digit of every aggressive path together with
the path's self-product. The driver multiplies together the digit
ciphertexts at the one-positions of its (encoded) travel vector, giving
``E(c . v)``, divides by ``E(c . c)``, re-randomizes, and sends the
differences to the insurer one at a time in a random order. The insurer
decrypts each on arrival and stops at the first zero.

What leaks: the driver learns the path count and digit count. The insurer
learns how many differences it consumed and the values of the non-zero
differences it decrypted.
"""

import struct
from dataclasses import dataclass

from . import paillier
from .domain import ClassLabel, binarize, encode_vector, extract_aggressive_paths
from .paillier import Ciphertext, ciphertext_byte_len
from .simnet import Tag

_HEADER = struct.Struct(">IIB")
_ENCODING_CODES = {"paper": 0, "augmented": 1}

PENDING, AGGRESSIVE, DEFENSIVE = 0, 1, 2
_VERDICT_LABELS = {AGGRESSIVE: ClassLabel.AGGRESSIVE, DEFENSIVE: ClassLabel.DEFENSIVE}
_LABEL_CODES = {v: k for k, v in _VERDICT_LABELS.items()}


@dataclass(frozen=True)
class EncryptedPath:
    digits: tuple
    self_product: Ciphertext


@dataclass(frozen=True)
class EncryptedPathSet:
    public_key: paillier.PublicKey
    encoding: str
    digit_count: int
    paths: tuple

    def __post_init__(self):
        if self.encoding not in _ENCODING_CODES:
            raise ValueError(f"unknown encoding {self.encoding!r}")
        fp = self.public_key.fingerprint
        for p in self.paths:
            if len(p.digits) != self.digit_count:
                raise ValueError("digit count differs between paths")
            if any(c.key_fingerprint != fp for c in (*p.digits, p.self_product)):
                raise paillier.KeyMismatchError("path ciphertext under a different key")

    def __len__(self):
        return len(self.paths)

    def header_bytes(self):
        return _HEADER.pack(len(self.paths), self.digit_count, _ENCODING_CODES[self.encoding])

    def path_payloads(self):
        for p in self.paths:
            yield b"".join(c.to_bytes() for c in (*p.digits, p.self_product))


def parse_path_set(pk, header, payloads):
    count, digits, code = _HEADER.unpack(header)
    encoding = {v: k for k, v in _ENCODING_CODES.items()}[code]
    width = ciphertext_byte_len(pk)
    paths = []
    for payload in payloads:
        if len(payload) != width * (digits + 1):
            raise ValueError("path payload has the wrong length")
        cts = [Ciphertext.from_bytes(pk, payload[i * width:(i + 1) * width]) for i in range(digits + 1)]
        paths.append(EncryptedPath(tuple(cts[:-1]), cts[-1]))
    if len(paths) != count:
        raise ValueError(f"header announced {count} paths, received {len(paths)}")
    return EncryptedPathSet(pk, encoding, digits, tuple(paths))


@dataclass(frozen=True)
class MatchResultStream:
    differences: tuple
    permutation: tuple  # permutation[k]: original path index sent k-th; private to the driver

    def __len__(self):
        return len(self.differences)


def insurer_prepare(tree, schema, pk, rng, encoding="augmented"):
    paths = extract_aggressive_paths(tree, schema)
    digit_count = len(schema) * (2 if encoding == "augmented" else 1)
    encrypted = []
    for path in paths:
        digits = path.digits(encoding)
        cts = paillier.encrypt_many(pk, [*digits, sum(digits)], rng)
        encrypted.append(EncryptedPath(tuple(cts[:-1]), cts[-1]))
    return EncryptedPathSet(pk, encoding, digit_count, tuple(encrypted))


def encrypted_dot(path, digits, pk, *, general=False):
    """``E(c . v)`` for a 0/1 vector ``digits``.

    The default multiplies the ciphertexts at the one-positions;
    ``general=True`` evaluates ``prod E(c_j) ** v_j`` literally.
    """
    if general:
        return paillier.hom_sum([paillier.hom_scale(c, bit) for c, bit in zip(path.digits, digits)], pk)
    return paillier.hom_sum([c for c, bit in zip(path.digits, digits) if bit], pk)


def driver_match(eps, v, rng, *, general=False):
    digits = encode_vector(v, eps.encoding)
    if len(digits) != eps.digit_count:
        raise ValueError(f"vector encodes to {len(digits)} digits, paths have {eps.digit_count}")
    pk = eps.public_key
    diffs = []
    for path in eps.paths:
        diff = paillier.hom_sub(encrypted_dot(path, digits, pk, general=general), path.self_product)
        # without fresh randomness the insurer could recover v from the product of its own ciphertexts
        diffs.append(paillier.rerandomize(diff, rng))
    order = list(range(len(diffs)))
    rng.shuffle(order)
    return MatchResultStream(tuple(diffs[i] for i in order), tuple(order))


def insurer_verdict(stream, sk):
    """``(label, consumed)``: decrypt in arrival order, stop at the first zero."""
    for k, ct in enumerate(stream.differences, start=1):
        if paillier.decrypt(sk, ct) == 0:
            return ClassLabel.AGGRESSIVE, k
    return ClassLabel.DEFENSIVE, len(stream.differences)


def recognize(net, insurer, driver, tree, schema, encoding="augmented", *, streaming=True):
    """Classify ``driver.record`` against the insurer's tree; both end with the verdict.

    ``streaming=False`` sends all differences in one message (benchmarking).
    """
    t = net.transcript
    with t.phase("encrypt", insurer.id):
        eps = insurer_prepare(tree, schema, insurer.public_key, insurer.rng, encoding)
    if len(eps) == 0:
        net.send(insurer.id, driver.id, Tag.VERDICT, bytes([DEFENSIVE]))
        driver.verdict = _VERDICT_LABELS[net.recv(driver.id, Tag.VERDICT).payload[0]]
        driver.stream = MatchResultStream((), ())
        return ClassLabel.DEFENSIVE

    net.send(insurer.id, driver.id, Tag.PUBLIC_KEY, insurer.public_key.to_bytes())
    net.send(insurer.id, driver.id, Tag.PATH_HEADER, eps.header_bytes())
    for payload in eps.path_payloads():
        net.send(insurer.id, driver.id, Tag.PATH, payload, ciphertexts=eps.digit_count + 1)

    pk = driver.receive_public_key(net)
    header = net.recv(driver.id, Tag.PATH_HEADER).payload
    count = _HEADER.unpack(header)[0]
    received = parse_path_set(pk, header, [net.recv(driver.id, Tag.PATH).payload for _ in range(count)])
    v = binarize(schema, driver.record)
    with t.phase("homomorphic", driver.id):
        stream = driver_match(received, v, driver.rng)
    driver.stream = stream

    sk = insurer.secret_key
    verdict = None
    if streaming:
        for k, ct in enumerate(stream.differences, start=1):
            net.send(driver.id, insurer.id, Tag.MATCH_DIFF, ct.to_bytes(), ciphertexts=1)
            incoming = Ciphertext.from_bytes(insurer.public_key, net.recv(insurer.id, Tag.MATCH_DIFF).payload)
            with t.phase("decrypt", insurer.id):
                hit = paillier.decrypt(sk, incoming) == 0
            code = AGGRESSIVE if hit else (DEFENSIVE if k == len(eps) else PENDING)
            net.send(insurer.id, driver.id, Tag.VERDICT, bytes([code]))
            reply = net.recv(driver.id, Tag.VERDICT).payload[0]
            if reply != PENDING:
                verdict = _VERDICT_LABELS[reply]
                break
    else:
        net.send(
            driver.id, insurer.id, Tag.MATCH_BATCH,
            b"".join(ct.to_bytes() for ct in stream.differences), ciphertexts=len(stream),
        )
        payload = net.recv(insurer.id, Tag.MATCH_BATCH).payload
        width = ciphertext_byte_len(insurer.public_key)
        batch = MatchResultStream(
            tuple(Ciphertext.from_bytes(insurer.public_key, payload[i:i + width]) for i in range(0, len(payload), width)),
            (),
        )
        with t.phase("decrypt", insurer.id):
            label, _ = insurer_verdict(batch, sk)
        net.send(insurer.id, driver.id, Tag.VERDICT, bytes([_LABEL_CODES[label]]))
        verdict = _VERDICT_LABELS[net.recv(driver.id, Tag.VERDICT).payload[0]]
    driver.verdict = verdict
    return verdict
