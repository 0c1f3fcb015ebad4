"""Paillier cryptosystem with signed plaintexts.

The generator is fixed to ``g = n + 1`` so that ``g**m mod n**2`` collapses
to ``1 + m*n``. Plaintexts are signed: ``m < 0`` is stored as the residue
``n + m`` and decoded back when the residue exceeds ``(n - 1) // 2``.

All randomness is drawn from a caller-supplied ``random.Random``-like
object. Pass ``random.SystemRandom()`` (the default when no seed is given)
for OS entropy, or a seeded ``random.Random`` for reproducible transcripts.
"""

import hashlib
import math
import random
from dataclasses import dataclass, field

from . import kernels

MILLER_RABIN_ROUNDS = 40

_SMALL_PRIMES = (
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149,
)


class KeyMismatchError(ValueError):
    """Ciphertexts or keys from different key pairs were combined."""


@dataclass(frozen=True)
class PublicKey:
    modulus: int
    modulus_squared: int = field(init=False, repr=False)
    generator: int = field(init=False, repr=False)
    fingerprint: str = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.modulus < 3 or self.modulus % 2 == 0:
            raise ValueError("modulus must be an odd integer >= 3")
        object.__setattr__(self, "modulus_squared", self.modulus * self.modulus)
        object.__setattr__(self, "generator", self.modulus + 1)
        digest = hashlib.sha256(self.to_bytes()).hexdigest()[:16]
        object.__setattr__(self, "fingerprint", digest)

    @property
    def key_bits(self):
        return self.modulus.bit_length()

    @property
    def max_plaintext(self):
        """Largest magnitude that survives signed encoding."""
        return (self.modulus - 1) // 2

    def to_bytes(self):
        return self.modulus.to_bytes((self.key_bits + 7) // 8, "big")

    @classmethod
    def from_bytes(cls, data):
        return cls(int.from_bytes(data, "big"))


@dataclass(frozen=True)
class SecretKey:
    public: PublicKey
    p: int = field(repr=False)
    q: int = field(repr=False)
    lambda_: int = field(init=False, repr=False)
    mu: int = field(init=False, repr=False)

    def __post_init__(self):
        if self.p * self.q != self.public.modulus:
            raise ValueError("p * q does not match the public modulus")
        lam = math.lcm(self.p - 1, self.q - 1)
        object.__setattr__(self, "lambda_", lam)
        object.__setattr__(self, "mu", pow(lam, -1, self.public.modulus))


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    secret: SecretKey


@dataclass(frozen=True)
class Ciphertext:
    value: int
    public_key: PublicKey = field(repr=False)

    @property
    def key_fingerprint(self):
        return self.public_key.fingerprint

    def to_bytes(self):
        return self.value.to_bytes(ciphertext_byte_len(self.public_key), "big")

    @classmethod
    def from_bytes(cls, pk, data):
        if len(data) != ciphertext_byte_len(pk):
            raise ValueError(
                f"ciphertext must be {ciphertext_byte_len(pk)} bytes, got {len(data)}"
            )
        value = int.from_bytes(data, "big")
        if not 0 < value < pk.modulus_squared or math.gcd(value, pk.modulus) != 1:
            raise ValueError("ciphertext value is not a unit modulo n**2")
        return cls(value, pk)


def ciphertext_byte_len(pk):
    """Fixed serialized width of a ciphertext under ``pk``."""
    return (2 * pk.key_bits + 7) // 8


def make_rng(seed=None):
    """Seeded ``random.Random`` or, without a seed, OS entropy."""
    return random.SystemRandom() if seed is None else random.Random(seed)


# -- key generation -------------------------------------------------------


def is_probable_prime(n, rng, rounds=MILLER_RABIN_ROUNDS):
    if n < 2:
        return False
    if n in (2, 3):
        return True
    if n % 2 == 0:
        return False
    for sp in _SMALL_PRIMES:
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = kernels.powmod(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(bits, rng):
    """Random prime with the two top bits set, so two of them multiply to 2*bits bits."""
    while True:
        candidate = rng.getrandbits(bits) | (0b11 << (bits - 2)) | 1
        if is_probable_prime(candidate, rng):
            return candidate


def keypair_from_primes(p, q):
    """Build a key pair from known primes (test and known-answer hook)."""
    if p == q:
        raise ValueError("p and q must be distinct")
    n = p * q
    if math.gcd(n, (p - 1) * (q - 1)) != 1:
        raise ValueError("gcd(n, phi(n)) != 1 for these primes")
    pk = PublicKey(n)
    return KeyPair(pk, SecretKey(pk, p, q))


def keygen(key_bits, rng_seed=None):
    """Generate a key pair whose modulus has exactly ``key_bits`` bits.

    Deterministic when ``rng_seed`` is given.
    """
    if key_bits < 64 or key_bits % 2:
        raise ValueError("key_bits must be an even integer >= 64")
    rng = make_rng(rng_seed)
    half = key_bits // 2
    while True:
        p = random_prime(half, rng)
        q = random_prime(half, rng)
        if p != q and math.gcd(p * q, (p - 1) * (q - 1)) == 1:
            break
    kp = keypair_from_primes(p, q)
    assert kp.public.key_bits == key_bits
    return kp


def export_public(pk):
    return {"n": str(pk.modulus)}


def export_secret(sk):
    return {"n": str(sk.public.modulus), "p": str(sk.p), "q": str(sk.q)}


def import_secret(doc):
    return keypair_from_primes(int(doc["p"]), int(doc["q"]))


# -- encryption -----------------------------------------------------------


def encode(pk, m):
    if not -pk.max_plaintext <= m <= pk.max_plaintext:
        raise ValueError(f"plaintext {m} outside the signed range of the key")
    return m % pk.modulus


def decode(pk, residue):
    return residue - pk.modulus if residue > pk.max_plaintext else residue


def _nonce(pk, rng):
    n = pk.modulus
    while True:
        r = rng.randrange(1, n)
        if math.gcd(r, n) == 1:
            return r


def encrypt(pk, m, rng):
    return encrypt_many(pk, [m], rng)[0]


def encrypt_many(pk, plaintexts, rng):
    """Encrypt each plaintext with its own fresh nonce."""
    n, n2 = pk.modulus, pk.modulus_squared
    encoded = [encode(pk, m) for m in plaintexts]
    masks = kernels.powmod_many([_nonce(pk, rng) for _ in encoded], n, n2)
    return [
        Ciphertext((1 + m_hat * n) % n2 * mask % n2, pk)
        for m_hat, mask in zip(encoded, masks)
    ]


def _check_key(sk, c):
    if c.key_fingerprint != sk.public.fingerprint:
        raise KeyMismatchError("ciphertext was not produced under this key")


def decrypt(sk, c):
    _check_key(sk, c)
    pk = sk.public
    u = kernels.powmod(c.value, sk.lambda_, pk.modulus_squared)
    return decode(pk, (u - 1) // pk.modulus * sk.mu % pk.modulus)


def decrypt_many(sk, ciphertexts):
    for c in ciphertexts:
        _check_key(sk, c)
    pk = sk.public
    n = pk.modulus
    us = kernels.powmod_many([c.value for c in ciphertexts], sk.lambda_, pk.modulus_squared)
    return [decode(pk, (u - 1) // n * sk.mu % n) for u in us]


# -- homomorphic operations -----------------------------------------------


def _same_key(a, b):
    if a.key_fingerprint != b.key_fingerprint:
        raise KeyMismatchError("ciphertexts are under different keys")


def hom_add(a, b):
    _same_key(a, b)
    return Ciphertext(a.value * b.value % a.public_key.modulus_squared, a.public_key)


def hom_sum(ciphertexts, pk):
    """Homomorphic sum of many ciphertexts (the trivial E(0) = 1 when empty)."""
    values = []
    for c in ciphertexts:
        if c.key_fingerprint != pk.fingerprint:
            raise KeyMismatchError("ciphertexts are under different keys")
        values.append(c.value)
    return Ciphertext(kernels.prod_mod(values, pk.modulus_squared), pk)


def hom_scale(a, k):
    if k < 0:
        raise ValueError("scale factor must be non-negative")
    pk = a.public_key
    return Ciphertext(kernels.powmod(a.value, k, pk.modulus_squared), pk)


def hom_neg(a):
    """Ciphertext of ``-m``: the inverse of ``a`` modulo n**2."""
    pk = a.public_key
    return Ciphertext(pow(a.value, -1, pk.modulus_squared), pk)


def hom_sub(a, b):
    return hom_add(a, hom_neg(b))


def rerandomize(a, rng):
    """Multiply in a fresh encryption of zero."""
    return hom_add(a, encrypt(a.public_key, 0, rng))
