"""Pure-Python big-integer kernels (fallback for the GMP extension)."""


def _check(modulus):
    if modulus <= 0:
        raise ValueError("modulus must be positive")


def powmod(base, exponent, modulus):
    _check(modulus)
    if base < 0 or exponent < 0:
        raise ValueError("kernel operands must be non-negative")
    return pow(base, exponent, modulus)


def powmod_many(bases, exponent, modulus):
    _check(modulus)
    if exponent < 0:
        raise ValueError("kernel operands must be non-negative")
    out = []
    for base in bases:
        if base < 0:
            raise ValueError("kernel operands must be non-negative")
        out.append(pow(base, exponent, modulus))
    return out


def prod_mod(values, modulus):
    _check(modulus)
    acc = 1 % modulus
    for value in values:
        if value < 0:
            raise ValueError("kernel operands must be non-negative")
        acc = acc * value % modulus
    return acc
