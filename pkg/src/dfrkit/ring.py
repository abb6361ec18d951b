"""Arithmetic in Z_q[x]/(x^n + 1) and coefficient compression.

Ring elements are plain ``numpy`` int64 arrays of length ``n``: a *poly* has
coefficients reduced to ``[0, q)``, a *signed vector* holds arbitrary
integers. Every function here is pure.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

from .params import ParameterError, SchemeParams

_INT64_SAFE = 2**62


def centered(x, q: int) -> np.ndarray:
    """Representative of ``x mod q`` in ``[-(q//2), q//2]``."""
    y = np.mod(np.asarray(x, dtype=np.int64), q)
    return np.where(y > q // 2, y - q, y)


def as_poly(a, params: SchemeParams) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    if a.shape[-1:] != (params.n,):
        raise ParameterError(f"expected {params.n} coefficients, got shape {a.shape}")
    return np.mod(a, params.q)


def _check_pair(a, b, n=None):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or a.shape != b.shape:
        raise ParameterError(f"operand shapes differ or are not vectors: {a.shape} vs {b.shape}")
    if n is not None and a.shape[0] != n:
        raise ParameterError(f"expected length {n}, got {a.shape[0]}")
    return a, b


def _negacyclic_fold(full: np.ndarray, n: int) -> np.ndarray:
    out = full[:n].copy()
    out[: n - 1] -= full[n:]
    return out


def cyclic_shift_product(e, s) -> np.ndarray:
    """Integer-domain negacyclic product: sum_j sign(i-j) e_j s_{(i-j) mod n}.

    No modular reduction is applied. Falls back to Python integers when the
    int64 accumulator could overflow.
    """
    e, s = _check_pair(e, s)
    n = e.shape[0]
    bound = int(np.max(np.abs(e), initial=0)) * int(np.max(np.abs(s), initial=0)) * n
    if bound < _INT64_SAFE:
        full = np.convolve(e.astype(np.int64), s.astype(np.int64))
        return _negacyclic_fold(full, n)
    full = np.convolve(e.astype(object), s.astype(object))
    return _negacyclic_fold(full, n)


def poly_mul_schoolbook(a, b, params: SchemeParams) -> np.ndarray:
    a, b = _check_pair(a, b, params.n)
    a = np.mod(a.astype(np.int64), params.q)
    b = np.mod(b.astype(np.int64), params.q)
    return np.mod(cyclic_shift_product(a, b), params.q).astype(np.int64)


def poly_mul(a, b, params: SchemeParams) -> np.ndarray:
    """Product of two ring elements, reduced mod (x^n + 1, q)."""
    return poly_mul_schoolbook(a, b, params)


# --- NTT fast path --------------------------------------------------------


def _primitive_root(q: int) -> int:
    phi = q - 1
    factors = []
    x, d = phi, 2
    while d * d <= x:
        if x % d == 0:
            factors.append(d)
            while x % d == 0:
                x //= d
        d += 1
    if x > 1:
        factors.append(x)
    for g in range(2, q):
        if all(pow(g, phi // f, q) != 1 for f in factors):
            return g
    raise ParameterError(f"no primitive root mod {q}")  # pragma: no cover


def ntt_supported(n: int, q: int) -> bool:
    return n >= 2 and n & (n - 1) == 0 and (q - 1) % (2 * n) == 0


@njit(cache=True, nogil=True)
def _cyclic_ntt(x, perm, tw, q):
    batch, n = x.shape
    for b in range(batch):
        row = x[b]
        tmp = row[perm].copy()
        length = 2
        off = 0
        while length <= n:
            half = length // 2
            for start in range(0, n, length):
                for j in range(half):
                    u = tmp[start + j]
                    v = tmp[start + j + half] * tw[off + j] % q
                    w = u + v
                    tmp[start + j] = w - q if w >= q else w
                    w = u - v
                    tmp[start + j + half] = w + q if w < 0 else w
            off += half
            length *= 2
        x[b] = tmp


class NegacyclicNTT:
    """Exact number-theoretic transform for Z_q[x]/(x^n + 1), 2n | q - 1."""

    def __init__(self, n: int, q: int):
        if not ntt_supported(n, q):
            raise ParameterError(f"NTT needs n a power of two and 2n | q-1 (n={n}, q={q})")
        self.n, self.q = n, q
        g = _primitive_root(q)
        psi = pow(g, (q - 1) // (2 * n), q)
        omega = psi * psi % q
        bits = n.bit_length() - 1
        self.perm = np.array([int(f"{i:0{bits}b}"[::-1], 2) if bits else 0 for i in range(n)])
        self.psi_pow = np.array([pow(psi, i, q) for i in range(n)], dtype=np.int64)
        psi_inv = pow(psi, q - 2, q)
        n_inv = pow(n, q - 2, q)
        self.untwist = np.array([n_inv * pow(psi_inv, i, q) % q for i in range(n)], dtype=np.int64)
        self.tw_fwd = self._twiddles(omega)
        self.tw_inv = self._twiddles(pow(omega, q - 2, q))

    def _twiddles(self, w):
        out = []
        length = 2
        while length <= self.n:
            wl = pow(w, self.n // length, self.q)
            out.extend(pow(wl, j, self.q) for j in range(length // 2))
            length *= 2
        return np.array(out, dtype=np.int64)

    def forward(self, a: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.mod(a, self.q).astype(np.int64)) * self.psi_pow % self.q
        x = np.ascontiguousarray(x)
        _cyclic_ntt(x, self.perm, self.tw_fwd, self.q)
        return x.reshape(np.shape(a))

    def inverse(self, a_hat: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(np.atleast_2d(a_hat).astype(np.int64))
        _cyclic_ntt(x, self.perm, self.tw_inv, self.q)
        return (x * self.untwist % self.q).reshape(np.shape(a_hat))

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.inverse(self.forward(a) * self.forward(b) % self.q)


@lru_cache(maxsize=16)
def get_ntt(n: int, q: int) -> NegacyclicNTT | None:
    return NegacyclicNTT(n, q) if ntt_supported(n, q) else None


def poly_mul_batch(a: np.ndarray, b: np.ndarray, params: SchemeParams) -> np.ndarray:
    """Row-wise ring products of two ``(batch, n)`` arrays.

    Uses the NTT when the (n, q) pair supports it, schoolbook otherwise; both
    routes give identical results.
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape != b.shape or a.shape[-1] != params.n:
        raise ParameterError(f"batch shapes differ: {a.shape} vs {b.shape}")
    ntt = get_ntt(params.n, params.q)
    if ntt is not None:
        return ntt.multiply(a, b)
    return np.stack([poly_mul_schoolbook(x, y, params) for x, y in zip(a, b)])


# --- compression ----------------------------------------------------------


def compress(v, params: SchemeParams) -> np.ndarray:
    """h_i = round(v_i * r / q) mod r with round(x) = floor(x + 1/2)."""
    v = np.mod(np.asarray(v, dtype=np.int64), params.q)
    q, r = params.q, params.r
    return np.mod((2 * v * r + q) // (2 * q), r)


def decompress(h, params: SchemeParams) -> np.ndarray:
    """v_i = round(h_i * q / r)."""
    h = np.asarray(h, dtype=np.int64)
    q, r = params.q, params.r
    if h.size and (h.min() < 0 or h.max() >= r):
        raise ParameterError(f"compressed symbols must lie in [0, {r})")
    return (2 * h * q + r) // (2 * r)


def compressed_bits(params: SchemeParams) -> int:
    """Bits per compressed coefficient, ceil(log2 r)."""
    return max(1, (params.r - 1).bit_length())


def ciphertext_bits(params: SchemeParams) -> int:
    """Size of (u, h): n coefficients at ceil(log2 q) bits plus n at ceil(log2 r)."""
    return params.n * ((params.q - 1).bit_length() + compressed_bits(params))
