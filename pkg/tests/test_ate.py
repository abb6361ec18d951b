import itertools

import numpy as np
import pytest

from dfrkit.ate import ate_decode, ate_encode, decode_sums
from dfrkit.params import NEWHOPE512, NEWHOPE1024, TOY, ParameterError


@pytest.mark.parametrize("p", [NEWHOPE1024, NEWHOPE512, TOY])
def test_noiseless_roundtrip(p, rng):
    mu = rng.integers(0, 2, size=(5, p.L))
    bits, trace = ate_decode(ate_encode(mu, p), p)
    assert np.array_equal(bits, mu)
    assert trace.threshold == p.threshold


def test_encoding_layout():
    mu = np.array([1, 0])
    v = ate_encode(mu, TOY)
    assert v.tolist() == [8, 0] * 4


def test_tie_decodes_to_zero():
    p = TOY
    # distances of 4 on every repetition sum to exactly T_m = 16
    v = np.full(p.n, p.half_q - 4)
    bits, trace = ate_decode(v, p)
    assert trace.sums.tolist() == [16, 16]
    assert bits.tolist() == [0, 0]
    v[0] += 1  # sum 15 on bit 0
    assert ate_decode(v, p)[0].tolist() == [1, 0]


def test_decoder_exhaustive_small():
    # every received word on the m positions of one bit, checked against the rule
    p = TOY
    for word in itertools.product(range(0, p.q, 3), repeat=p.m):
        v = np.zeros(p.n, dtype=np.int64)
        v[0 :: p.L] = word
        s = sum(abs(w - p.half_q) for w in word)
        assert decode_sums(v, p)[0] == s
        assert ate_decode(v, p)[0][0] == (1 if s < p.threshold else 0)


def test_rejects_bad_messages():
    with pytest.raises(ParameterError):
        ate_encode(np.array([0, 2]), TOY)
    with pytest.raises(ParameterError):
        ate_encode(np.array([0, 1, 1]), TOY)
    with pytest.raises(ParameterError):
        decode_sums(np.zeros(7), TOY)
