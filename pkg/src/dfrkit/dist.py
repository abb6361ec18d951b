"""Finite integer distributions with an explicit bound on lost mass.

Masses live in IEEE double precision in the linear domain. The smallest
quantities the bounds need (around 2^-910) are comfortably above the subnormal
floor; anything that underflows is charged to ``err`` at the worst-case rate
of one subnormal quantum per multiply-add, so ``value + err`` remains a valid
upper bound on any window probability.

Convolutions are direct (no FFT): FFT round-off sits near 1e-16 of the peak
mass, which would swamp tails at 1e-170.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from .params import NumericalError, ParameterError, SchemeParams
from .ring import centered, compress, decompress

SUBNORMAL_QUANTUM = 2.0**-1074


@dataclass(frozen=True)
class PrecisionPolicy:
    prune: float = 0.0
    mass_tol: float = 1e-9
    max_support: int = 20_000_000

    def __post_init__(self):
        if self.prune < 0:
            raise ParameterError("prune threshold must be non-negative")


DEFAULT_POLICY = PrecisionPolicy()


@dataclass(frozen=True, eq=False)
class Dist:
    """Distribution on the integers ``offset .. offset + len(masses) - 1``."""

    offset: int
    masses: np.ndarray
    err: float = 0.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        m = np.ascontiguousarray(self.masses, dtype=np.float64)
        if m.ndim != 1 or m.size == 0:
            raise ParameterError("masses must be a non-empty 1-d array")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ParameterError("masses must be finite and non-negative")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "err", float(self.err))

    # -- basic views --

    @property
    def lo(self) -> int:
        return self.offset

    @property
    def hi(self) -> int:
        return self.offset + self.masses.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def __len__(self):
        return self.masses.size

    def total(self) -> float:
        return math.fsum(self.masses)

    def mean(self) -> float:
        return float(np.dot(self.support.astype(np.float64), self.masses) / self.total())

    def var(self) -> float:
        x = self.support.astype(np.float64)
        mu = self.mean()
        return float(np.dot((x - mu) ** 2, self.masses) / self.total())

    def pmf(self, x: int) -> float:
        i = x - self.offset
        return float(self.masses[i]) if 0 <= i < self.masses.size else 0.0

    def as_dict(self) -> dict[int, float]:
        return {int(x): float(p) for x, p in zip(self.support, self.masses) if p > 0}

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        if self.lo != -self.hi:
            return False
        m = self.masses
        return bool(np.all(np.abs(m - m[::-1]) <= rtol * np.maximum(m, m[::-1])))

    def check_normalized(self, tol: float = DEFAULT_POLICY.mass_tol) -> "Dist":
        s = self.total()
        if not (1 - tol <= s + self.err and s <= 1 + tol):
            raise NumericalError(f"mass {s!r} + err {self.err!r} is not within {tol} of 1")
        return self

    def window(self, lo: float, hi: float) -> tuple[float, float]:
        return window_prob(self, lo, hi)

    def tail(self, threshold: int) -> tuple[float, float]:
        """Pr(|X| > threshold) with its error bound."""
        up, err = window_prob(self, threshold + 1, math.inf)
        down, _ = window_prob(self, -math.inf, -threshold - 1)
        return up + down, err

    def trimmed(self) -> "Dist":
        nz = np.flatnonzero(self.masses)
        if nz.size == 0:
            raise NumericalError("distribution lost all of its mass")
        a, b = nz[0], nz[-1]
        if a == 0 and b == self.masses.size - 1:
            return self
        return Dist(self.offset + a, self.masses[a : b + 1], self.err, self.name)

    def renamed(self, name: str) -> "Dist":
        return Dist(self.offset, self.masses, self.err, name)

    # -- I/O --

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# err={self.err:.17e}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "prob"])
        for x, p in zip(self.support, self.masses):
            w.writerow([int(x), f"{p:.17e}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "Dist":
        return cls.from_csv_text(Path(path).read_text())

    @classmethod
    def from_csv_text(cls, text: str) -> "Dist":
        err = 0.0
        rows = []
        for line in text.splitlines():
            if line.startswith("# err="):
                err = float(line[len("# err=") :])
            elif line and not line.startswith("#"):
                rows.append(line)
        pts = {int(r["value"]): float(r["prob"]) for r in csv.DictReader(rows)}
        return from_mapping(pts, err=err)

    @classmethod
    def from_samples(cls, values, name: str = "empirical") -> "Dist":
        values = np.asarray(values, dtype=np.int64).ravel()
        if values.size == 0:
            raise ParameterError("no samples")
        lo = int(values.min())
        counts = np.bincount(values - lo)
        return cls(lo, counts / values.size, 0.0, name)


def from_mapping(pts: dict[int, float], err: float = 0.0, name: str = "") -> Dist:
    lo, hi = min(pts), max(pts)
    arr = np.zeros(hi - lo + 1)
    for x, p in pts.items():
        arr[x - lo] += p
    return Dist(lo, arr, err, name)


def point_mass(x: int = 0) -> Dist:
    return Dist(x, np.array([1.0]), 0.0, f"delta_{x}")


def window_prob(d: Dist, lo: float, hi: float) -> tuple[float, float]:
    """Mass on the integer window [lo, hi] and the one-sided uncertainty ``d.err``.

    Upper-bound callers must use ``value + err``.
    """
    if lo > hi:
        raise ParameterError(f"empty window: lo={lo} > hi={hi}")
    a = max(math.ceil(lo), d.lo) if lo != -math.inf else d.lo
    b = min(math.floor(hi), d.hi) if hi != math.inf else d.hi
    if a > b:
        return 0.0, d.err
    return math.fsum(d.masses[a - d.offset : b - d.offset + 1]), d.err


# --- algebra ----------------------------------------------------------------


def _prune(masses: np.ndarray, policy: PrecisionPolicy) -> tuple[np.ndarray, float]:
    if policy.prune <= 0:
        return masses, 0.0
    small = masses < policy.prune
    dropped = math.fsum(masses[small])
    if dropped == 0.0:
        return masses, 0.0
    masses = masses.copy()
    masses[small] = 0.0
    return masses, dropped


def _finish(offset, masses, err, policy, name="", underflow_ops=0) -> Dist:
    masses, dropped = _prune(masses, policy)
    err = err + dropped + underflow_ops * SUBNORMAL_QUANTUM
    nz = np.flatnonzero(masses)
    if nz.size == 0:
        raise NumericalError("all mass pruned or underflowed")
    masses = masses[nz[0] : nz[-1] + 1]
    return Dist(offset + int(nz[0]), masses, err, name)


def convolve(a: Dist, b: Dist, policy: PrecisionPolicy = DEFAULT_POLICY) -> Dist:
    """Distribution of X + Y for independent X ~ a, Y ~ b (direct kernel)."""
    size = len(a) + len(b) - 1
    if size > policy.max_support:
        raise NumericalError(f"support {size} exceeds the configured limit {policy.max_support}")
    out = np.convolve(a.masses, b.masses)
    return _finish(a.offset + b.offset, out, a.err + b.err, policy, underflow_ops=len(a) * len(b))


def convolve_many(dists, policy: PrecisionPolicy = DEFAULT_POLICY) -> Dist:
    dists = sorted(dists, key=len)
    acc = dists[0]
    for d in dists[1:]:
        acc = convolve(acc, d, policy)
    return acc


def self_convolve(d: Dist, count: int, policy: PrecisionPolicy = DEFAULT_POLICY) -> Dist:
    """Sum of ``count`` i.i.d. copies by square-and-multiply, low bits first."""
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise ParameterError(f"count must be a positive integer, got {count!r}")
    acc = None
    power = d
    c = int(count)
    while c:
        if c & 1:
            acc = power if acc is None else convolve(acc, power, policy)
        c >>= 1
        if c:
            power = convolve(power, power, policy)
    return acc


def scale_support(d: Dist, c: int) -> Dist:
    """Distribution of c * X."""
    c = int(c)
    if c == 0:
        return Dist(0, np.array([d.total()]), d.err)
    if c < 0:
        mirrored = Dist(-d.hi, d.masses[::-1], d.err, d.name)
        return scale_support(mirrored, -c)
    out = np.zeros((len(d) - 1) * c + 1)
    out[::c] = d.masses
    return Dist(d.offset * c, out, d.err, d.name)


def _conv_scaled_dense(masses: np.ndarray, p: np.ndarray, c: int) -> np.ndarray:
    """masses (*) scale_support(p, c) without materializing the zeros.

    Each residue class mod c is an ordinary convolution with p.
    """
    width = masses.size
    rows = -(-width // c)
    grid = np.zeros(rows * c)
    grid[:width] = masses
    out = convolve2d(grid.reshape(rows, c), p[:, None])
    return out.ravel()[: width + (p.size - 1) * c]


# --- named distributions ----------------------------------------------------


@lru_cache(maxsize=64)
def cbd_pmf(k: int) -> Dist:
    """psi_k: P(x) = C(2k, x + k) / 4^k on [-k, k]."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    denom = 4**k
    masses = np.array([comb(2 * k, i) / denom for i in range(2 * k + 1)])
    return Dist(-k, masses, 0.0, f"cbd_{k}")


@lru_cache(maxsize=64)
def product_cbd_pmf(k: int) -> Dist:
    """Law of X * Y for X, Y i.i.d. psi_k, built from exact integer weights."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    w = [comb(2 * k, i) for i in range(2 * k + 1)]
    counts = [0] * (2 * k * k + 1)
    for i in range(2 * k + 1):
        for j in range(2 * k + 1):
            counts[(i - k) * (j - k) + k * k] += w[i] * w[j]
    denom = 16**k
    return Dist(-k * k, np.array([c / denom for c in counts]), 0.0, f"cbd_product_{k}").trimmed()


@lru_cache(maxsize=64)
def _compression_noise(q: int, r: int) -> Dist:
    x = np.arange(q, dtype=np.int64)
    p = SchemeParams(n=1, q=q, k=1, r=r, L=1)
    noise = centered(decompress(compress(x, p), p) - x, q)
    lo = int(noise.min())
    counts = np.bincount(noise - lo)
    return Dist(lo, counts / q, 0.0, f"compression_q{q}_r{r}")


def compression_noise_pmf(params: SchemeParams) -> Dist:
    """Exact law of centered(decompress(compress(X)) - X) for X uniform on [0, q)."""
    return _compression_noise(params.q, params.r)


def sign_patterns(m: int) -> np.ndarray:
    """sigma[l, j] = +1 if j < m - l else -1 (l trailing minus signs in row l)."""
    j = np.arange(m)
    return np.where(j[None, :] < (m - np.arange(m))[:, None], 1, -1)


@lru_cache(maxsize=32)
def _w_pmf(k: int, m: int, policy: PrecisionPolicy) -> Dist:
    base = cbd_pmf(k)
    p = base.masses
    vals = np.arange(-k, k + 1)
    grids = np.meshgrid(*([vals] * m), indexing="ij")
    s = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.ones(s.shape[0])
    for col in range(m):
        weights = weights * p[s[:, col] + k]
    c = np.sort(np.abs(s @ sign_patterns(m).T), axis=1)
    keys, inverse = np.unique(c, axis=0, return_inverse=True)
    group_w = np.bincount(inverse.ravel(), weights=weights, minlength=keys.shape[0])

    half = m * k * m * k
    total = np.zeros(2 * half + 1)
    for key, w in zip(keys, group_w):
        scales = [int(x) for x in key[::-1] if x != 0]
        if not scales:
            total[half] += w
            continue
        cur = scale_support(base, scales[0]).masses
        lo = -k * scales[0]
        for sc in scales[1:]:
            cur = _conv_scaled_dense(cur, p, sc)
            lo -= k * sc
        total[lo + half : lo + half + cur.size] += w * cur
    ops = int(keys.shape[0]) * (2 * half + 1) * (2 * k + 1)
    return _finish(-half, total, 0.0, policy, f"W_k{k}_m{m}", underflow_ops=ops)


def w_pmf(params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY, allow_nonstandard_m: bool = False) -> Dist:
    """Law of W = sum_l e_l * (sum_j sigma[l, j] s_j), all entries i.i.d. psi_k.

    Secrets s are enumerated in groups sharing the same multiset of |column
    sums|; conditional on s, W is a sum of independent scaled psi_k terms.
    """
    params.check_standard_m(allow_nonstandard_m)
    return _w_pmf(params.k, params.m, policy)


@lru_cache(maxsize=32)
def _product_sum(k: int, count: int, policy: PrecisionPolicy) -> Dist:
    return self_convolve(product_cbd_pmf(k), count, policy)


def difference_noise_pmf(params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY) -> Dist:
    """Marginal of n_d = (e s' - e' s + e'')_i: 2n CBD products plus one psi_k."""
    d = convolve(_product_sum(params.k, 2 * params.n, policy), cbd_pmf(params.k), policy)
    return d.renamed("difference_noise")


@lru_cache(maxsize=32)
def _nstar(params: SchemeParams, policy: PrecisionPolicy) -> Dist:
    d = convolve(difference_noise_pmf(params, policy), compression_noise_pmf(params), policy)
    return d.renamed("nstar").check_normalized(policy.mass_tol)


def nstar_pmf(params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY) -> Dist:
    """Marginal law of one integer-domain total-noise coefficient n*_t."""
    return _nstar(params, policy)


def total_noise_pmf(params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY) -> Dist:
    return nstar_pmf(params, policy).renamed("total_noise")


@lru_cache(maxsize=32)
def _sum_nstar(params: SchemeParams, policy: PrecisionPolicy, allow_nonstandard_m: bool) -> Dist:
    w = w_pmf(params, policy, allow_nonstandard_m)
    parts = [
        self_convolve(w, 2 * params.L, policy),
        self_convolve(cbd_pmf(params.k), params.m, policy),
        self_convolve(compression_noise_pmf(params), params.m, policy),
    ]
    return convolve_many(parts, policy).renamed("sum_nstar").check_normalized(policy.mass_tol)


def sum_nstar_pmf(
    params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY, allow_nonstandard_m: bool = False
) -> Dist:
    """Law of the dependent sum over l of n*_t[i + L*l].

    Decomposes into 2L i.i.d. copies of W (L per cross term) plus m
    independent psi_k and m independent compression-noise terms.
    """
    return _sum_nstar(params, policy, allow_nonstandard_m)


def fold_mod_centered(d: Dist, q: int) -> Dist:
    """Law of centered(X mod q)."""
    h = q // 2
    out = np.zeros(2 * h + 1)
    idx = centered(d.support, q) + h
    np.add.at(out, idx, d.masses)
    return Dist(-h, out, d.err, d.name).trimmed()


def abs_dist(d: Dist) -> Dist:
    """Law of |X|."""
    hi = max(abs(d.lo), abs(d.hi))
    out = np.zeros(hi + 1)
    np.add.at(out, np.abs(d.support), d.masses)
    return Dist(0, out, d.err, d.name).trimmed()
