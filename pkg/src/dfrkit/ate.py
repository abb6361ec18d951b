"""Additive threshold encoding: m-fold repetition onto {0, floor(q/2)}."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ParameterError, SchemeParams


@dataclass(frozen=True)
class DecodeTrace:
    sums: np.ndarray
    threshold: int


def _check_bits(mu, params: SchemeParams) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.int64)
    if mu.shape[-1:] != (params.L,):
        raise ParameterError(f"message must have {params.L} bits, got shape {mu.shape}")
    if mu.size and (mu.min() < 0 or mu.max() > 1):
        raise ParameterError("message bits must be 0 or 1")
    return mu


def ate_encode(mu, params: SchemeParams) -> np.ndarray:
    """v[i + L*l] = mu[i] * floor(q/2). Accepts a batch on the leading axes."""
    mu = _check_bits(mu, params)
    return np.tile(mu, params.m) * params.half_q


def decode_sums(v2, params: SchemeParams) -> np.ndarray:
    v2 = np.mod(np.asarray(v2, dtype=np.int64), params.q)
    if v2.shape[-1:] != (params.n,):
        raise ParameterError(f"expected {params.n} coefficients, got shape {v2.shape}")
    dist = np.abs(v2 - params.half_q)
    return dist.reshape(*dist.shape[:-1], params.m, params.L).sum(axis=-2)


def ate_decode(v2, params: SchemeParams) -> tuple[np.ndarray, DecodeTrace]:
    """Threshold decoding of a received ring element.

    A bit decodes to 0 when its distance sum reaches the threshold (ties
    included) and to 1 below it.
    """
    sums = decode_sums(v2, params)
    bits = (sums < params.threshold).astype(np.int64)
    return bits, DecodeTrace(sums=sums, threshold=params.threshold)
