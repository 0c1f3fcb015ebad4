import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppdrive import kernels

BACKENDS = kernels.available_backends()

moduli = st.integers(min_value=1, max_value=2 ** 2100)
operands = st.integers(min_value=0, max_value=2 ** 2100)


def test_extension_is_built_and_selected():
    # the build links libgmp; a missing extension would silently halve the suite's speed
    assert "gmp" in BACKENDS
    assert kernels.BACKEND == "gmp"


@pytest.mark.parametrize("name", sorted(BACKENDS))
@settings(max_examples=200, deadline=None)
@given(base=operands, exponent=st.integers(min_value=0, max_value=2 ** 600), modulus=moduli)
def test_powmod_matches_builtin(name, base, exponent, modulus):
    assert BACKENDS[name].powmod(base, exponent, modulus) == pow(base, exponent, modulus)


@pytest.mark.parametrize("name", sorted(BACKENDS))
@settings(max_examples=100, deadline=None)
@given(bases=st.lists(operands, max_size=8), exponent=st.integers(min_value=0, max_value=2 ** 300), modulus=moduli)
def test_powmod_many_matches_builtin(name, bases, exponent, modulus):
    assert BACKENDS[name].powmod_many(bases, exponent, modulus) == [pow(b, exponent, modulus) for b in bases]


@pytest.mark.parametrize("name", sorted(BACKENDS))
@settings(max_examples=100, deadline=None)
@given(values=st.lists(operands, max_size=12), modulus=moduli)
def test_prod_mod_matches_fold(name, values, modulus):
    expected = 1 % modulus
    for v in values:
        expected = expected * v % modulus
    assert BACKENDS[name].prod_mod(values, modulus) == expected


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_edge_operands(name):
    k = BACKENDS[name]
    assert k.powmod(0, 0, 7) == 1
    assert k.powmod(5, 3, 1) == 0
    assert k.prod_mod([], 1) == 0
    assert k.prod_mod([], 9) == 1
    with pytest.raises(ValueError):
        k.powmod(2, 3, 0)
    with pytest.raises(ValueError):
        k.powmod(-2, 3, 7)
    with pytest.raises(ValueError):
        k.prod_mod([3, -1], 7)


def test_env_var_forces_pure_python():
    env = dict(os.environ, PPDRIVE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import ppdrive.kernels as k; print(k.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
