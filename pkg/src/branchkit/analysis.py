"""Statistical machinery for the law-identity and convergence checks.

Distributional claims are operationalized as two-sample Kolmogorov-Smirnov
distances between Monte Carlo ensembles, with pass thresholds chosen by the
calling experiment; moments come with normal-approximation confidence
intervals.  The N -> infinity convergence experiment compares fixed-time
marginals of the rescaled chain against the diffusion solver across a ladder
of N values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import diffusion, discrete
from .interaction import InteractionFunction

__all__ = [
    "SampleSet",
    "MomentReport",
    "ComparisonReport",
    "ConvergenceRow",
    "EmptySampleError",
    "ks_two_sample",
    "moment_report",
    "compare",
    "convergence_experiment",
]

_Z975 = 1.959963984540054


class EmptySampleError(ValueError):
    pass


@dataclass
class SampleSet:
    values: np.ndarray
    label: str = ""
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("samples must be 1-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("samples must be finite")

    @property
    def count(self) -> int:
        return int(self.values.size)


def _as_values(a) -> np.ndarray:
    v = a.values if isinstance(a, SampleSet) else np.asarray(a, dtype=float)
    if v.size == 0:
        raise EmptySampleError("empty sample")
    return v


def ks_two_sample(a, b) -> float:
    """Exact sup distance between the two empirical CDFs."""
    x = np.sort(_as_values(a))
    y = np.sort(_as_values(b))
    pooled = np.concatenate([x, y])
    fx = np.searchsorted(x, pooled, side="right") / x.size
    fy = np.searchsorted(y, pooled, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    standard_error: float
    ci_low: float
    ci_high: float
    count: int


def moment_report(a) -> MomentReport:
    """Mean, unbiased variance and a normal-approximation 95% CI."""
    v = _as_values(a)
    if v.size < 2:
        raise EmptySampleError("need at least 2 samples for a variance")
    mean = float(v.mean())
    var = float(v.var(ddof=1))
    se = float(np.sqrt(var / v.size))
    return MomentReport(mean, var, se, mean - _Z975 * se, mean + _Z975 * se, v.size)


@dataclass(frozen=True)
class ComparisonReport:
    """Two-ensemble comparison against a declared KS threshold."""
    ks_statistic: float
    n_a: int
    n_b: int
    mean_diff: float
    mean_diff_se: float
    threshold: float
    verdict: str  # "Pass" | "Fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "Pass"


def compare(a, b, ks_threshold: float, label_a: str = "a", label_b: str = "b"
            ) -> ComparisonReport:
    va, vb = _as_values(a), _as_values(b)
    ks = ks_two_sample(va, vb)
    md = float(va.mean() - vb.mean())
    se = float(np.sqrt(va.var(ddof=1) / va.size + vb.var(ddof=1) / vb.size))
    return ComparisonReport(ks, va.size, vb.size, md, se, ks_threshold,
                            "Pass" if ks < ks_threshold else "Fail")


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    mean: float
    variance: float
    ks_vs_limit: float


def convergence_experiment(f: InteractionFunction, x: float, t: float,
                           N_list: Sequence[int], dt: float, replicates: int,
                           seed: int) -> List[ConvergenceRow]:
    """Marginal convergence of the rescaled chain to the diffusion.

    For each N, draws Z^{N,x}_t from the exact chain and compares against a
    common diffusion ensemble Z^x_t at step dt; the KS column should shrink
    as N grows (tested on its endpoints by the acceptance run).
    """
    ns = list(N_list)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("N_list must be strictly increasing")
    limit = diffusion.feller_values_at(f, x, t, dt, replicates, seed,
                                       tag="convergence-limit")
    rows = []
    for N in ns:
        zn = discrete.renormalized_values_at(x, N, f, t, replicates, seed,
                                             tag=f"convergence-N{N}")
        rep = moment_report(zn)
        rows.append(ConvergenceRow(int(N), rep.mean, rep.variance,
                                   ks_two_sample(zn, limit)))
    return rows
