"""CPA public-key encryption core at coefficient level.

Randomness comes from counter-based Philox streams keyed by ``RngSpec``;
the uniform and centered-binomial distributions are sampled exactly.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field

import numpy as np

from .ate import DecodeTrace, ate_decode, ate_encode
from .params import IntegrityError, ParameterError, SchemeParams
from .ring import (
    centered,
    compress,
    cyclic_shift_product,
    decompress,
    get_ntt,
    poly_mul,
    poly_mul_batch,
)


@dataclass(frozen=True)
class RngSpec:
    """A 256-bit seed plus a stream id; each (seed, stream, trial) is an independent stream."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**256:
            raise ParameterError("seed must be a 256-bit non-negative integer")
        if self.stream < 0:
            raise ParameterError("stream id must be non-negative")

    @classmethod
    def fresh(cls, stream: int = 0) -> "RngSpec":
        return cls(secrets.randbits(256), stream)

    def generator(self, trial: int | None = None) -> np.random.Generator:
        key = (self.stream,) if trial is None else (self.stream, trial)
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))

    def as_dict(self) -> dict:
        return {"seed": hex(self.seed), "stream": self.stream}


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngSpec):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ParameterError(f"expected RngSpec or numpy Generator, got {type(rng).__name__}")


def _popcount_bits(raw: np.ndarray, k: int) -> np.ndarray:
    # raw has shape (..., words); only the low k bits overall are used
    words = raw.shape[-1]
    top = k - 64 * (words - 1)
    mask = np.uint64((1 << top) - 1) if top < 64 else np.uint64(2**64 - 1)
    raw = raw.copy()
    raw[..., -1] &= mask
    return np.bitwise_count(raw).sum(axis=-1).astype(np.int64)


def sample_cbd(params: SchemeParams | int, rng, size=None):
    """Draw from psi_k as sum_{i<k} (b_i - b'_i) over fair bits."""
    k = params if isinstance(params, int) else params.k
    if k < 1:
        raise ParameterError("k must be >= 1")
    gen = _as_generator(rng)
    shape = () if size is None else (size,) if isinstance(size, int) else tuple(size)
    words = -(-k // 64)
    count = int(np.prod(shape, dtype=np.int64))
    raw = gen.bit_generator.random_raw(count * 2 * words).reshape(count, 2, words)
    out = _popcount_bits(raw[:, 0], k) - _popcount_bits(raw[:, 1], k)
    if size is None:
        return int(out[0])
    return out.reshape(shape)


@dataclass(frozen=True)
class KeyPair:
    a: np.ndarray
    b: np.ndarray
    s: np.ndarray
    e: np.ndarray | None = None

    @property
    def public(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a, self.b


@dataclass(frozen=True)
class Ciphertext:
    u: np.ndarray
    h: np.ndarray


@dataclass
class TrialTrace:
    """Everything one protocol run touched. Secrets are retained on purpose."""

    s_p: np.ndarray
    e_p: np.ndarray
    e_pp: np.ndarray
    mu: np.ndarray
    v: np.ndarray
    v_p: np.ndarray
    n_c: np.ndarray
    s: np.ndarray | None = None
    e: np.ndarray | None = None
    v_pp: np.ndarray | None = None
    n_t: np.ndarray | None = field(default=None)

    @property
    def complete(self) -> bool:
        return self.s is not None and self.e is not None and self.v_pp is not None


def _noise(params, gen, zero_noise):
    if zero_noise:
        return np.zeros(params.n, dtype=np.int64)
    return sample_cbd(params, gen, params.n)


def keygen(params: SchemeParams, rng, zero_noise: bool = False) -> KeyPair:
    gen = _as_generator(rng)
    a = gen.integers(0, params.q, size=params.n, dtype=np.int64)
    s = _noise(params, gen, zero_noise)
    e = _noise(params, gen, zero_noise)
    b = np.mod(poly_mul(a, s, params) + e, params.q)
    return KeyPair(a=a, b=b, s=s, e=e)


def encrypt(pk, mu, params: SchemeParams, rng, zero_noise: bool = False) -> tuple[Ciphertext, TrialTrace]:
    a, b = pk
    gen = _as_generator(rng)
    s_p = _noise(params, gen, zero_noise)
    e_p = _noise(params, gen, zero_noise)
    e_pp = _noise(params, gen, zero_noise)
    v = ate_encode(mu, params)
    u = np.mod(poly_mul(a, s_p, params) + e_p, params.q)
    v_p = np.mod(poly_mul(b, s_p, params) + e_pp + v, params.q)
    h = compress(v_p, params)
    n_c = centered(decompress(h, params) - v_p, params.q)
    trace = TrialTrace(s_p=s_p, e_p=e_p, e_pp=e_pp, mu=np.asarray(mu, dtype=np.int64), v=v, v_p=v_p, n_c=n_c)
    return Ciphertext(u=u, h=h), trace


def decryption_statistic(s, ct: Ciphertext, params: SchemeParams) -> np.ndarray:
    """v'' = decompress(h) - u*s (mod q)."""
    return np.mod(decompress(ct.h, params) - poly_mul(ct.u, np.mod(s, params.q), params), params.q)


def decrypt(s, ct: Ciphertext, params: SchemeParams) -> tuple[np.ndarray, DecodeTrace]:
    return ate_decode(decryption_statistic(s, ct, params), params)


def run_trial(params: SchemeParams, rng, mu=None, zero_noise: bool = False):
    """keygen, encrypt and decrypt on one stream; returns (mu', DecodeTrace, TrialTrace)."""
    gen = _as_generator(rng)
    kp = keygen(params, gen, zero_noise)
    if mu is None:
        mu = gen.integers(0, 2, size=params.L, dtype=np.int64)
    ct, trace = encrypt(kp.public, mu, params, gen, zero_noise)
    v_pp = decryption_statistic(kp.s, ct, params)
    trace.s, trace.e, trace.v_pp = kp.s, kp.e, v_pp
    trace.n_t = centered(v_pp - trace.v, params.q)
    bits, dtrace = ate_decode(v_pp, params)
    return bits, dtrace, trace


def integer_noise(trace: TrialTrace) -> np.ndarray:
    """n*_t = e(.)s' - e'(.)s + e'' + n_c over Z, before any wraparound."""
    if trace.s is None or trace.e is None:
        raise IntegrityError("trace lacks the key-side secrets")
    return cyclic_shift_product(trace.e, trace.s_p) - cyclic_shift_product(trace.e_p, trace.s) + trace.e_pp + trace.n_c


def extract_noise(trace: TrialTrace, params: SchemeParams) -> np.ndarray:
    """Centered total noise v'' - v, cross-checked against its decomposition."""
    if not trace.complete:
        raise IntegrityError("trace is incomplete")
    n_t = centered(trace.v_pp - trace.v, params.q)
    expected = centered(integer_noise(trace), params.q)
    if not np.array_equal(n_t, expected):
        bad = int(np.flatnonzero(n_t != expected)[0])
        raise IntegrityError(f"noise decomposition fails at coefficient {bad}")
    return n_t


# --- batched protocol -----------------------------------------------------


@dataclass
class BatchResult:
    mu: np.ndarray
    mu_hat: np.ndarray
    sums: np.ndarray
    n_t: np.ndarray
    n_star: np.ndarray | None = None


def run_batch(params: SchemeParams, gens, zero_noise: bool = False, with_integer_noise: bool = False) -> BatchResult:
    """Vectorized ``run_trial`` over one generator per trial.

    Each generator is consumed in the same order as ``run_trial`` does, so
    a trial's outcome does not depend on which batch it lands in.
    """
    n, q, L = params.n, params.q, params.L
    t = len(gens)
    a = np.empty((t, n), dtype=np.int64)
    noise = np.zeros((5, t, n), dtype=np.int64)  # s, e, s', e', e''
    mu = np.empty((t, L), dtype=np.int64)
    for i, gen in enumerate(gens):
        a[i] = gen.integers(0, q, size=n, dtype=np.int64)
        if not zero_noise:
            noise[0, i] = sample_cbd(params, gen, n)
            noise[1, i] = sample_cbd(params, gen, n)
        mu[i] = gen.integers(0, 2, size=L, dtype=np.int64)
        if not zero_noise:
            noise[2:, i] = sample_cbd(params, gen, (3, n))
    s, e, s_p, e_p, e_pp = noise
    s_q, s_p_q = np.mod(s, q), np.mod(s_p, q)
    ntt = get_ntt(n, q)
    if ntt is not None:
        a_hat, s_hat, s_p_hat = ntt.forward(a), ntt.forward(s_q), ntt.forward(s_p_q)
        b = np.mod(ntt.inverse(a_hat * s_hat % q) + e, q)
        u = np.mod(ntt.inverse(a_hat * s_p_hat % q) + e_p, q)
        bs_p = ntt.inverse(ntt.forward(b) * s_p_hat % q)
        us = ntt.inverse(ntt.forward(u) * s_hat % q)
    else:
        b = np.mod(poly_mul_batch(a, s_q, params) + e, q)
        u = np.mod(poly_mul_batch(a, s_p_q, params) + e_p, q)
        bs_p = poly_mul_batch(b, s_p_q, params)
        us = poly_mul_batch(u, s_q, params)
    v = ate_encode(mu, params)
    v_p = np.mod(bs_p + e_pp + v, q)
    h = compress(v_p, params)
    d = decompress(h, params)
    v_pp = np.mod(d - us, q)
    mu_hat, dtrace = ate_decode(v_pp, params)
    res = BatchResult(mu=mu, mu_hat=mu_hat, sums=dtrace.sums, n_t=centered(v_pp - v, q))
    if with_integer_noise:
        n_c = centered(d - v_p, q)
        res.n_star = np.stack(
            [cyclic_shift_product(e[i], s_p[i]) - cyclic_shift_product(e_p[i], s[i]) for i in range(t)]
        ) + e_pp + n_c
    return res
