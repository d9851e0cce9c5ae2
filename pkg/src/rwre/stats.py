"""Monte Carlo summaries and replicate fan-out."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with its standard error and a 95% interval."""

    point: float
    stderr: float
    replicates: int
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def ci95(self) -> tuple[float, float]:
        return self.ci(0.95)

    def ci(self, level: float) -> tuple[float, float]:
        z = stats.norm.ppf(0.5 + level / 2.0)
        return self.point - z * self.stderr, self.point + z * self.stderr

    def excludes(self, value: float, level: float = 0.95) -> bool:
        lo, hi = self.ci(level)
        return not lo <= value <= hi

    @classmethod
    def from_samples(cls, samples: Sequence[float], seed: Optional[int] = None, **extra):
        x = np.asarray(samples, dtype=float)
        n = x.size
        if n == 0:
            raise ValueError("no samples")
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(point=float(x.mean()), stderr=se, replicates=n, seed=seed, extra=dict(extra))

    @classmethod
    def exact(cls, value: float, replicates: int, seed: Optional[int] = None, **extra):
        """A deterministic value reported in estimate form (zero error)."""
        return cls(point=float(value), stderr=0.0, replicates=replicates, seed=seed, extra=dict(extra))

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        d = {"point": self.point, "stderr": self.stderr, "ci95": [lo, hi],
             "replicates": self.replicates, "seed": self.seed}
        if self.extra:
            d["extra"] = self.extra
        return d

    @classmethod
    def from_dict(cls, d: dict):
        return cls(point=d["point"], stderr=d["stderr"], replicates=d["replicates"], seed=d.get("seed"),
                   extra=d.get("extra", {}))


def map_replicates(func: Callable, args: Iterable, workers: int = 1) -> list:
    """``[func(a) for a in args]``, optionally in worker processes.

    Results always come back in argument order, so outputs do not depend
    on the worker count.
    """
    args = list(args)
    if workers <= 1 or len(args) < 2:
        return [func(a) for a in args]
    chunk = max(1, len(args) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, args, chunksize=chunk))


def lag1_autocorr(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float) - np.mean(x)
    den = float(np.dot(x, x))
    if den == 0:
        return 0.0
    return float(np.dot(x[:-1], x[1:]) / den)


def permutation_pvalue_lag1(x: Sequence[float], rng: np.random.Generator, n_perm: int = 999) -> float:
    """Two-sided permutation p-value of the lag-1 autocorrelation."""
    x = np.asarray(x, dtype=float)
    obs = abs(lag1_autocorr(x))
    hits = 0
    for _ in range(n_perm):
        if abs(lag1_autocorr(rng.permutation(x))) >= obs:
            hits += 1
    return (hits + 1) / (n_perm + 1)


def hill_tail_index(samples: Sequence[float], k: int) -> tuple[float, float]:
    """Hill estimate of the tail index from the ``k`` largest samples, with its standard error."""
    x = np.sort(np.asarray(samples, dtype=float))
    top = x[-k:]
    thresh = x[-k - 1]
    h = float(np.mean(np.log(top / thresh)))
    alpha = 1.0 / h
    return alpha, alpha / math.sqrt(k)
