"""Monte-Carlo DFR/BER estimation and empirical noise histograms.

Trial ``i`` always draws from the stream ``RngSpec.generator(i)``, so the
outcome of a run depends only on (params, trials, seed), never on the batch
size or the number of worker threads.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta, chi2

from .dist import Dist
from .params import IntegrityError, ParameterError, SchemeParams
from .pke import RngSpec, run_batch
from .ring import centered

DEFAULT_BATCH = 2048
HISTOGRAM_KINDS = ("total", "sum_over_repetitions")


def default_threads() -> int:
    raw = os.environ.get("DFRKIT_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"DFRKIT_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ParameterError("DFRKIT_THREADS must be >= 1")
    return value


def clopper_pearson(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact two-sided binomial confidence interval."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ParameterError("need 0 <= successes <= trials and trials >= 1")
    alpha = 1.0 - level
    lo = 0.0 if successes == 0 else float(beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


@dataclass(frozen=True)
class Failure:
    trial: int
    bits: tuple[int, ...]
    sums: tuple[int, ...]

    def as_dict(self) -> dict:
        return {"trial": self.trial, "bits": list(self.bits), "sums": list(self.sums)}


@dataclass
class McReport:
    params: SchemeParams
    trials: int
    failures: int
    bit_errors: int
    seed: RngSpec
    zero_noise: bool = False
    wall_time_s: float = 0.0
    forensics: list[Failure] = field(default_factory=list)

    @property
    def dfr_hat(self) -> float:
        return self.failures / self.trials

    @property
    def ber_hat(self) -> float:
        return self.bit_errors / (self.trials * self.params.L)

    @property
    def ci95(self) -> tuple[float, float]:
        return clopper_pearson(self.failures, self.trials)

    def to_dict(self, include_forensics: bool = False) -> dict:
        out = {
            "params": self.params.as_dict(),
            "trials": self.trials,
            "failures": self.failures,
            "bit_errors": self.bit_errors,
            "dfr_hat": self.dfr_hat,
            "ber_hat": self.ber_hat,
            "ci95": list(self.ci95),
            "seed": self.seed.as_dict(),
            "zero_noise": self.zero_noise,
            "wall_time_s": self.wall_time_s,
        }
        if include_forensics:
            out["forensics"] = [f.as_dict() for f in self.forensics]
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(include_forensics=True), **kw)

    def forensics_csv(self) -> str:
        lines = ["trial,bit,sum"]
        for f in self.forensics:
            lines += [f"{f.trial},{b},{s}" for b, s in zip(f.bits, f.sums)]
        return "\n".join(lines) + "\n"


def _as_spec(seed) -> RngSpec:
    if isinstance(seed, RngSpec):
        return seed
    if isinstance(seed, (int, np.integer)):
        return RngSpec(int(seed))
    raise ParameterError(f"seed must be an int or RngSpec, got {type(seed).__name__}")


def _chunks(trials: int, batch: int):
    return [(lo, min(lo + batch, trials)) for lo in range(0, trials, batch)]


def _map_chunks(fn, chunks, threads: int):
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves input order, which keeps the reduction deterministic
        return list(pool.map(fn, chunks))


def run_trials(
    params: SchemeParams,
    trials: int,
    seed,
    threads: int | None = None,
    zero_noise: bool = False,
    batch: int = DEFAULT_BATCH,
) -> McReport:
    """Run ``trials`` independent keygen/encrypt/decrypt rounds with random messages."""
    if not isinstance(trials, (int, np.integer)) or trials < 1:
        raise ParameterError("trials must be a positive integer")
    if batch < 1:
        raise ParameterError("batch must be >= 1")
    spec = _as_spec(seed)
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ParameterError("threads must be >= 1")
    start = time.perf_counter()

    def work(bounds):
        lo, hi = bounds
        res = run_batch(params, [spec.generator(i) for i in range(lo, hi)], zero_noise)
        wrong = res.mu != res.mu_hat
        per_trial = wrong.sum(axis=1)
        failed = []
        for j in np.flatnonzero(per_trial):
            bits = np.flatnonzero(wrong[j])
            failed.append(Failure(lo + int(j), tuple(int(b) for b in bits), tuple(int(s) for s in res.sums[j, bits])))
        return int((per_trial > 0).sum()), int(per_trial.sum()), failed

    failures = bit_errors = 0
    forensics: list[Failure] = []
    for f, b, rows in _map_chunks(work, _chunks(int(trials), batch), threads):
        failures += f
        bit_errors += b
        forensics.extend(rows)
    return McReport(
        params=params,
        trials=int(trials),
        failures=failures,
        bit_errors=bit_errors,
        seed=spec,
        zero_noise=zero_noise,
        wall_time_s=time.perf_counter() - start,
        forensics=forensics,
    )


def noise_histogram(
    params: SchemeParams,
    trials: int,
    seed,
    which: str = "total",
    threads: int | None = None,
    batch: int = DEFAULT_BATCH,
) -> Dist:
    """Empirical law of the integer-domain total noise n*_t.

    Every trial checks that n*_t reduces to the observed v'' - v mod q.
    ``total`` pools every coefficient of every trial. ``sum_over_repetitions``
    takes one value per trial, the sum of n*_t over the m positions carrying
    bit 0, so that samples are independent across trials.
    """
    if which not in HISTOGRAM_KINDS:
        raise ParameterError(f"which must be one of {HISTOGRAM_KINDS}, got {which!r}")
    if not isinstance(trials, (int, np.integer)) or trials < 1:
        raise ParameterError("trials must be a positive integer")
    spec = _as_spec(seed)
    threads = default_threads() if threads is None else int(threads)
    L = params.L

    def work(bounds):
        lo, hi = bounds
        res = run_batch(params, [spec.generator(i) for i in range(lo, hi)], with_integer_noise=True)
        if not np.array_equal(centered(res.n_star, params.q), res.n_t):
            raise IntegrityError(f"noise decomposition fails in trials [{lo}, {hi})")
        if which == "total":
            return res.n_star.ravel()
        return res.n_star[:, ::L].sum(axis=1)

    parts = _map_chunks(work, _chunks(int(trials), batch), threads)
    return Dist.from_samples(np.concatenate(parts), name=f"empirical_{which}")


def chi_square_gof(observed: Dist, count: int, expected: Dist, min_expected: float = 5.0) -> tuple[float, float, int]:
    """Pearson chi-square test of ``count`` samples against a model pmf.

    Adjacent cells are merged left to right until each expects at least
    ``min_expected`` samples; any remainder joins the last cell. Returns (statistic, p-value, dof).
    """
    lo = min(observed.lo, expected.lo)
    hi = max(observed.hi, expected.hi)
    xs = np.arange(lo, hi + 1)
    obs = np.array([observed.pmf(int(x)) for x in xs]) * count
    exp = np.array([expected.pmf(int(x)) for x in xs]) * count
    cells_o, cells_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            cells_o.append(acc_o)
            cells_e.append(acc_e)
            acc_o = acc_e = 0.0
    if cells_e:
        cells_o[-1] += acc_o
        cells_e[-1] += acc_e
    cells_o, cells_e = np.array(cells_o), np.array(cells_e)
    if cells_e.size < 2:
        raise ParameterError("too few cells for a chi-square test")
    # rescale so expected counts sum to the sample size exactly
    cells_e *= cells_o.sum() / cells_e.sum()
    stat = float(((cells_o - cells_e) ** 2 / cells_e).sum())
    dof = cells_e.size - 1
    return stat, float(chi2.sf(stat, dof)), dof

