"""Decryption-failure-rate bounds: dependency-aware, Chernoff-Cramer, and independence baseline."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .dist import (
    DEFAULT_POLICY,
    Dist,
    PrecisionPolicy,
    abs_dist,
    cbd_pmf,
    compression_noise_pmf,
    fold_mod_centered,
    nstar_pmf,
    self_convolve,
    sign_patterns,
    sum_nstar_pmf,
)
from .params import NumericalError, SchemeParams

LN2 = math.log(2.0)
METHODS = ("proposed", "cc", "indep")


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else -math.inf


def _json_num(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return float(x)


@dataclass
class BoundReport:
    params: SchemeParams
    method: str
    log2_dfr: float
    p1_log2: float | None = None
    p2_log2: float | None = None
    t_opt: float | None = None
    err_log2: float | None = None
    wall_time_s: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def dfr(self) -> float:
        return 2.0**self.log2_dfr

    @property
    def log10_dfr(self) -> float:
        return self.log2_dfr * math.log10(2.0)

    def to_dict(self) -> dict:
        p = self.params
        return {
            "method": self.method,
            "n": p.n,
            "q": p.q,
            "k": p.k,
            "r": p.r,
            "m": p.m,
            "log2_dfr": _json_num(self.log2_dfr),
            "p1_log2": _json_num(self.p1_log2),
            "p2_log2": _json_num(self.p2_log2),
            "t_opt": _json_num(self.t_opt),
            "err_log2": _json_num(self.err_log2),
            "wall_time_s": float(self.wall_time_s),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def case_count(m: int) -> int:
    """Number of sign vectors of length m; equals m**2 for m in {2, 4}."""
    return 2**m


# --- dependency-aware bound -------------------------------------------------


def proposed_components(params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY, allow_nonstandard_m=False):
    """(P1, P2, err1, err2): tail of one coefficient and window of the dependent sum."""
    p1, err1 = nstar_pmf(params, policy).tail(params.half_q)
    s = sum_nstar_pmf(params, policy, allow_nonstandard_m)
    t = params.threshold
    p2, err2 = s.window(t, min(2 * t, max(s.hi, t)))
    return p1, p2, err1, err2


def proposed_dfr_bound(
    params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY, allow_nonstandard_m: bool = False
) -> BoundReport:
    """DFR <= L * 2^m * (m * P1 + P2), each probability inflated by its error bound."""
    start = time.perf_counter()
    p1, p2, err1, err2 = proposed_components(params, policy, allow_nonstandard_m)
    m, mult = params.m, params.L * case_count(params.m)
    p1u, p2u = p1 + err1, p2 + err2
    value = mult * (m * p1u + p2u)
    return BoundReport(
        params=params,
        method="proposed",
        log2_dfr=min(_log2(value), 0.0),
        p1_log2=_log2(p1u),
        p2_log2=_log2(p2u),
        err_log2=_log2(mult * (m * err1 + err2)),
        wall_time_s=time.perf_counter() - start,
        details={"p1": p1, "p2": p2, "err1": err1, "err2": err2},
    )


# --- independence baseline --------------------------------------------------


def _decode_distance_laws(params: SchemeParams, policy: PrecisionPolicy) -> tuple[Dist, Dist]:
    """Per-coefficient excess statistics for transmitted bits 1 and 0.

    With x the centered noise, a 1 is misread when sum |x| >= T_m; a 0 is
    misread when sum (|x| - [x < 0]) >= m floor(q/2) - T_m + 1 (q odd).
    """
    x = fold_mod_centered(nstar_pmf(params, policy), params.q)
    one = abs_dist(x)
    shifted = np.where(x.support < 0, -x.support - 1, x.support)
    out = np.zeros(params.half_q + 1)
    np.add.at(out, shifted, x.masses)
    zero = Dist(0, out, x.err).trimmed()
    return one, zero


def indep_ber(params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY, folded: bool = True) -> tuple[float, float]:
    """BER when the m coefficients of a bit are treated as independent.

    ``folded=False`` gives the single-pattern variant: the window [T_m, 2T_m]
    of the m-fold convolution of the raw marginal.
    """
    t = params.threshold
    if not folded:
        s = self_convolve(nstar_pmf(params, policy), params.m, policy)
        return s.window(t, 2 * t)
    one, zero = _decode_distance_laws(params, policy)
    s1 = self_convolve(one, params.m, policy)
    s0 = self_convolve(zero, params.m, policy)
    b1, e1 = s1.window(t, math.inf)
    b0, e0 = s0.window(params.m * params.half_q - t + 1, math.inf)
    return 0.5 * (b1 + b0), max(e1, e0)


def indep_dfr(params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY, folded: bool = True) -> BoundReport:
    """DFR = 1 - (1 - BER)^L under full independence (the "no error dependency" curve)."""
    start = time.perf_counter()
    ber, err = indep_ber(params, policy, folded)
    dfr = -math.expm1(params.L * math.log1p(-ber)) if ber < 1 else 1.0
    return BoundReport(
        params=params,
        method="indep",
        log2_dfr=_log2(dfr),
        p2_log2=_log2(ber),
        err_log2=_log2(params.L * err),
        wall_time_s=time.perf_counter() - start,
        details={"ber": ber, "folded": folded},
    )


# --- Chernoff-Cramer machinery ----------------------------------------------


def _lncosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - LN2


def mgf_cbd_product_log(k: int, t: float) -> float:
    """ln E[exp(t X Y)] for X, Y i.i.d. psi_k, via E_Y[cosh^{2k}(t Y / 2)]."""
    d = cbd_pmf(k)
    y = d.support.astype(np.float64)
    return float(logsumexp(2 * k * _lncosh(0.5 * t * y), b=d.masses))


@lru_cache(maxsize=32)
def column_square_law(k: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Law of Z = sum_l (sum_j sigma[l, j] s_j)^2 as (values, probabilities)."""
    p = cbd_pmf(k).masses
    vals = np.arange(-k, k + 1)
    grids = np.meshgrid(*([vals] * m), indexing="ij")
    s = np.stack([g.ravel() for g in grids], axis=1)
    w = np.ones(s.shape[0])
    for col in range(m):
        w = w * p[s[:, col] + k]
    z = ((s @ sign_patterns(m).T) ** 2).sum(axis=1)
    zs, inv = np.unique(z, return_inverse=True)
    return zs.astype(np.float64), np.bincount(inv.ravel(), weights=w)


def mgf_w_upper_log(params: SchemeParams, t: float) -> float:
    """Upper bound ln E_Z[exp(Z k t^2 / 4)] on ln E[exp(t W)].

    Uses cosh^{2k}(x) <= exp(k x^2) on each conditional factor.
    """
    z, w = column_square_law(params.k, params.m)
    return float(logsumexp(z * (params.k * t * t / 4.0), b=w))


def mgf_w_exact_log(params: SchemeParams, t: float) -> float:
    """ln E[exp(t W)] summed over the secrets, each factor cosh^{2k}(t c / 2)."""
    k, m = params.k, params.m
    p = cbd_pmf(k).masses
    vals = np.arange(-k, k + 1)
    grids = np.meshgrid(*([vals] * m), indexing="ij")
    s = np.stack([g.ravel() for g in grids], axis=1)
    logw = np.zeros(s.shape[0])
    for col in range(m):
        logw += np.log(p[s[:, col] + k])
    c = s @ sign_patterns(m).T
    return float(logsumexp(logw + 2 * k * _lncosh(0.5 * t * c).sum(axis=1)))


def chernoff_opt(theta: float, count: int, log_mgf, t_lo: float = 1e-9, t_hi: float = 1e2, grid: int = 481):
    """Minimize -theta t + count ln M(t) over t > 0; returns (t_opt, log2 bound).

    Any t yields a valid bound, so the result is sound even if the search
    stops short of the exact infimum. The bound is capped at 1.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if theta <= 0:
        return None, 0.0

    def g(t):
        v = -theta * t + count * log_mgf(t)
        if not math.isfinite(v):
            raise NumericalError(f"log-MGF is not finite at t={t}")
        return v

    ts = np.geomspace(t_lo, t_hi, grid)
    vals = [g(t) for t in ts]
    i = int(np.argmin(vals))
    a, b = ts[max(i - 1, 0)], ts[min(i + 1, grid - 1)]
    for _ in range(100):
        m1, m2 = a + (b - a) / 3, b - (b - a) / 3
        if g(m1) <= g(m2):
            b = m2
        else:
            a = m1
    t_best = 0.5 * (a + b)
    best = min(g(t_best), vals[i])
    if vals[i] < g(t_best):
        t_best = float(ts[i])
    return float(t_best), min(best / LN2, 0.0)


def _worst_additive(params: SchemeParams) -> float:
    nc = compression_noise_pmf(params)
    return params.k + max((params.q - 1) / (2 * params.r), max(abs(nc.lo), abs(nc.hi)))


def cc_components(params: SchemeParams):
    worst = _worst_additive(params)
    theta2 = params.threshold - params.m * worst
    t2, b2 = chernoff_opt(theta2, 2 * params.L, lambda t: mgf_w_upper_log(params, t))
    theta1 = params.half_q - worst
    t1, b1 = chernoff_opt(theta1, 2 * params.n, lambda t: mgf_cbd_product_log(params.k, t))
    b1 = min(b1 + 1.0, 0.0)  # two-sided tail
    return {"theta1": theta1, "theta2": theta2, "t1": t1, "t2": t2, "b1_log2": b1, "b2_log2": b2}


def cc_dfr_bound(params: SchemeParams) -> BoundReport:
    """DFR <= L * 2^m * (B2 + m * B1) with Chernoff-Cramer bounds B1, B2."""
    start = time.perf_counter()
    c = cc_components(params)
    mult = math.log2(params.L * case_count(params.m))
    inner = np.logaddexp2(c["b2_log2"], math.log2(params.m) + c["b1_log2"])
    return BoundReport(
        params=params,
        method="cc",
        log2_dfr=min(mult + float(inner), 0.0),
        p1_log2=c["b1_log2"],
        p2_log2=c["b2_log2"],
        t_opt=c["t2"],
        err_log2=None,
        wall_time_s=time.perf_counter() - start,
        details=c,
    )


def compute_bound(method: str, params: SchemeParams, policy: PrecisionPolicy = DEFAULT_POLICY, allow_nonstandard_m=False):
    if method == "proposed":
        return proposed_dfr_bound(params, policy, allow_nonstandard_m)
    if method == "cc":
        params.check_standard_m(allow_nonstandard_m)
        return cc_dfr_bound(params)
    if method == "indep":
        return indep_dfr(params, policy)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
