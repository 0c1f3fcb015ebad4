# cython: language_level=3, boundscheck=False, wraparound=False
"""GMP-backed big-integer kernels.

Python ints cross the boundary as little-endian byte strings and are
imported into ``mpz_t`` values; the modular exponentiations run with the
GIL released.
"""

cdef extern from "gmp.h":
    ctypedef struct __mpz_struct:
        pass
    ctypedef __mpz_struct mpz_t[1]
    ctypedef __mpz_struct *mpz_ptr
    ctypedef const __mpz_struct *mpz_srcptr

    void mpz_init(mpz_ptr)
    void mpz_clear(mpz_ptr)
    void mpz_set_ui(mpz_ptr, unsigned long)
    void mpz_powm(mpz_ptr, mpz_srcptr, mpz_srcptr, mpz_srcptr) nogil
    void mpz_mul(mpz_ptr, mpz_srcptr, mpz_srcptr) nogil
    void mpz_mod(mpz_ptr, mpz_srcptr, mpz_srcptr) nogil
    void mpz_import(mpz_ptr, size_t, int, size_t, int, size_t, const void *)
    void *mpz_export(void *, size_t *, int, size_t, int, size_t, mpz_srcptr)
    size_t mpz_sizeinbase(mpz_srcptr, int)


cdef int _load(mpz_ptr rop, object x) except -1:
    if x < 0:
        raise ValueError("kernel operands must be non-negative")
    cdef Py_ssize_t nbytes = (x.bit_length() + 7) // 8
    cdef bytes buf
    if nbytes == 0:
        mpz_set_ui(rop, 0)
        return 0
    buf = x.to_bytes(nbytes, "little")
    mpz_import(rop, nbytes, -1, 1, 0, 0, <const char *>buf)
    return 0


cdef object _dump(mpz_srcptr op):
    cdef size_t count = 0
    cdef size_t nbytes = (mpz_sizeinbase(op, 2) + 7) // 8
    cdef bytearray out = bytearray(nbytes)
    cdef char *p = out
    mpz_export(p, &count, -1, 1, 0, 0, op)
    return int.from_bytes(out[:count], "little")


def powmod(base, exponent, modulus):
    """Return ``base ** exponent % modulus`` for non-negative operands."""
    if modulus <= 0:
        raise ValueError("modulus must be positive")
    cdef mpz_t b, e, m, r
    mpz_init(b); mpz_init(e); mpz_init(m); mpz_init(r)
    try:
        _load(b, base)
        _load(e, exponent)
        _load(m, modulus)
        with nogil:
            mpz_powm(r, b, e, m)
        return _dump(r)
    finally:
        mpz_clear(b); mpz_clear(e); mpz_clear(m); mpz_clear(r)


def powmod_many(bases, exponent, modulus):
    """Raise every base to one shared exponent modulo ``modulus``."""
    if modulus <= 0:
        raise ValueError("modulus must be positive")
    cdef mpz_t b, e, m, r
    out = []
    mpz_init(b); mpz_init(e); mpz_init(m); mpz_init(r)
    try:
        _load(e, exponent)
        _load(m, modulus)
        for base in bases:
            _load(b, base)
            with nogil:
                mpz_powm(r, b, e, m)
            out.append(_dump(r))
        return out
    finally:
        mpz_clear(b); mpz_clear(e); mpz_clear(m); mpz_clear(r)


def prod_mod(values, modulus):
    """Product of ``values`` reduced modulo ``modulus`` (1 for no values)."""
    if modulus <= 0:
        raise ValueError("modulus must be positive")
    cdef mpz_t acc, v, m
    mpz_init(acc); mpz_init(v); mpz_init(m)
    try:
        _load(m, modulus)
        mpz_set_ui(acc, 1)
        mpz_mod(acc, acc, m)
        for value in values:
            _load(v, value)
            mpz_mul(acc, acc, v)
            mpz_mod(acc, acc, m)
        return _dump(acc)
    finally:
        mpz_clear(acc); mpz_clear(v); mpz_clear(m)
