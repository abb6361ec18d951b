import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfrkit.params import NEWHOPE512, NEWHOPE1024, ParameterError, SchemeParams
from dfrkit.ring import (
    NegacyclicNTT,
    centered,
    ciphertext_bits,
    compress,
    compressed_bits,
    cyclic_shift_product,
    decompress,
    get_ntt,
    ntt_supported,
    poly_mul,
    poly_mul_batch,
)

from .conftest import SMALL


def _negacyclic_oracle(a, b, q=None):
    # direct definition: x^i * x^j = (-1)^{floor((i+j)/n)} x^{(i+j) mod n}
    n = len(a)
    out = [0] * n
    for i in range(n):
        for j in range(n):
            sgn = -1 if i + j >= n else 1
            out[(i + j) % n] += sgn * int(a[i]) * int(b[j])
    return [x % q for x in out] if q else out


def test_centered_range():
    x = np.arange(-40, 40)
    c = centered(x, 17)
    assert c.min() == -8 and c.max() == 8
    assert np.all((c - x) % 17 == 0)


def test_cyclic_shift_product_matches_definition(rng):
    e = rng.integers(-3, 4, size=8)
    s = rng.integers(-3, 4, size=8)
    assert cyclic_shift_product(e, s).tolist() == _negacyclic_oracle(e, s)


def test_cyclic_shift_product_big_values_use_exact_ints():
    e = np.full(4, 2**40, dtype=np.int64)
    s = np.full(4, 2**40, dtype=np.int64)
    assert list(cyclic_shift_product(e, s)) == _negacyclic_oracle(e, s)


def test_poly_mul_mod_q(rng):
    a = rng.integers(0, SMALL.q, size=SMALL.n)
    b = rng.integers(0, SMALL.q, size=SMALL.n)
    assert poly_mul(a, b, SMALL).tolist() == _negacyclic_oracle(a, b, SMALL.q)


def test_x_to_the_n_is_minus_one():
    x = np.zeros(SMALL.n, dtype=np.int64)
    x[1] = 1
    acc = np.zeros(SMALL.n, dtype=np.int64)
    acc[0] = 1
    for _ in range(SMALL.n):
        acc = poly_mul(acc, x, SMALL)
    assert acc[0] == SMALL.q - 1 and not acc[1:].any()


def test_shape_mismatch():
    with pytest.raises(ParameterError):
        poly_mul(np.zeros(4), np.zeros(5), SMALL)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ntt_bit_identical_to_schoolbook(seed):
    rng = np.random.default_rng(seed)
    for p in (SMALL, SchemeParams(n=64, q=12289, k=1, r=8, L=16)):
        a = rng.integers(0, p.q, size=(3, p.n))
        b = rng.integers(0, p.q, size=(3, p.n))
        fast = poly_mul_batch(a, b, p)
        for i in range(3):
            assert np.array_equal(fast[i], poly_mul(a[i], b[i], p))


def test_ntt_full_size_roundtrip(rng):
    ntt = get_ntt(1024, 12289)
    a = rng.integers(0, 12289, size=(2, 1024))
    assert np.array_equal(ntt.inverse(ntt.forward(a)), a)
    b = rng.integers(0, 12289, size=1024)
    c = rng.integers(-8, 9, size=1024)
    assert np.array_equal(ntt.multiply(b, c), poly_mul(b, c, NEWHOPE1024))


def test_ntt_handles_residues_near_q():
    # exercises the conditional add/subtract reductions at both ends
    p = SMALL
    a = np.full((1, p.n), p.q - 1)
    b = np.full((1, p.n), p.q - 1)
    assert np.array_equal(poly_mul_batch(a, b, p)[0], poly_mul(a[0], b[0], p))


def test_ntt_support_gate():
    assert ntt_supported(1024, 12289) and ntt_supported(8, 17)
    assert not ntt_supported(16, 17)
    assert get_ntt(16, 17) is None
    with pytest.raises(ParameterError):
        NegacyclicNTT(16, 17)
    p = SchemeParams(n=16, q=17, k=1, r=4, L=4)
    rng = np.random.default_rng(3)
    a, b = rng.integers(0, 17, (2, 2, 16))
    out = poly_mul_batch(a, b, p)
    assert np.array_equal(out[1], poly_mul(a[1], b[1], p))


def _round_half_up(num, den):
    return (2 * num + den) // (2 * den)


def test_compress_definition():
    p = NEWHOPE1024
    v = np.arange(p.q)
    expected = np.array([_round_half_up(int(x) * p.r, p.q) % p.r for x in v])
    assert np.array_equal(compress(v, p), expected)
    h = np.arange(p.r)
    assert decompress(h, p).tolist() == [_round_half_up(int(x) * p.q, p.r) for x in h]


def test_compression_error_magnitude():
    for p in (NEWHOPE1024, NEWHOPE1024.with_(r=4)):
        v = np.arange(p.q)
        err = centered(decompress(compress(v, p), p) - v, p.q)
        assert np.abs(err).max() == p.q // (2 * p.r)


def test_lossless_mode():
    p = NEWHOPE1024.with_(r=NEWHOPE1024.q)
    v = np.arange(p.q)
    assert np.array_equal(decompress(compress(v, p), p), v)


def test_decompress_rejects_bad_symbols():
    with pytest.raises(ParameterError):
        decompress(np.array([8]), NEWHOPE1024)


def test_ciphertext_sizes():
    assert compressed_bits(NEWHOPE1024) == 3
    assert ciphertext_bits(NEWHOPE1024) == 1024 * 17
    for p in (NEWHOPE1024, NEWHOPE512):
        full, small = ciphertext_bits(p), ciphertext_bits(p.with_(r=4))
        assert round(100 * (full - small) / full, 1) == 5.9
