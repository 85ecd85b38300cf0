"""Exact simulation of the interacting birth-death chain and its rescalings.

The population process starts from m ancestors and, at size k >= 1, jumps

    k -> k+1  at rate  lam*k + sum_{l=1..k} (f(l) - f(l-1))^+
    k -> k-1  at rate  mu*k  + sum_{l=1..k} (f(l) - f(l-1))^-

with 0 absorbing.  The interaction sums telescope, so birth(k) - death(k) =
(lam - mu)*k + f(k) exactly.  The renormalized process carries mass 1/N per
individual, uses lam = mu = 2N and evaluates N*f(./N), and converges to the
generalized Feller diffusion as N grows.

All simulators are driven by per-replicate hashed seed streams and are
reproducible bit for bit.  Interaction increments enter the jitted kernels
through cumulative tables, rebuilt transparently (same seed, same path) when
a trajectory outgrows them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import _kernels as K
from .interaction import InteractionFunction
from .rngstream import derive_seed

__all__ = [
    "DiscreteParams",
    "StepPath",
    "MartingaleLedger",
    "RenormalizedSpec",
    "total_rates",
    "simulate_population",
    "simulate_increment",
    "renormalized_params",
    "simulate_renormalized",
    "simulate_coupled_pair",
    "population_values_at",
    "increment_values_at",
    "renormalized_values_at",
    "renormalized_brackets_at",
    "coupled_values_at",
]

DEFAULT_MAX_EVENTS = 10_000_000
_TABLE_HARD_CAP = 1 << 23


@dataclass(frozen=True)
class DiscreteParams:
    """Parameters of the unrenormalized chain (mass 1 per individual)."""
    lam: float
    mu: float
    f: InteractionFunction
    m: int
    t_max: float
    max_events: int = DEFAULT_MAX_EVENTS

    def __post_init__(self):
        if self.lam < 0 or self.mu < 0:
            raise ValueError("lam and mu must be >= 0")
        if self.m < 0:
            raise ValueError("m must be >= 0")
        if self.t_max <= 0:
            raise ValueError("t_max must be > 0")


@dataclass
class StepPath:
    """Cadlag piecewise-constant path with jumps of exactly +-1/denominator.

    ``counts`` holds the integer state after each jump; ``values`` divides by
    the denominator.  Once the path hits 0 it stays there.
    """
    initial_count: int
    jump_times: np.ndarray
    counts: np.ndarray
    denominator: int = 1
    t_end: float = 0.0
    truncated_by_cap: bool = False

    @property
    def initial_value(self) -> float:
        return self.initial_count / self.denominator

    @property
    def values(self) -> np.ndarray:
        return self.counts / self.denominator

    @property
    def n_events(self) -> int:
        return int(self.jump_times.size)

    def count_at(self, t: float) -> int:
        if t < 0:
            raise ValueError("t must be >= 0")
        idx = np.searchsorted(self.jump_times, t, side="right")
        return self.initial_count if idx == 0 else int(self.counts[idx - 1])

    def value_at(self, t: float) -> float:
        return self.count_at(t) / self.denominator

    def step_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """(times, counts) including the initial state, for kernel input."""
        t = np.concatenate([[0.0], self.jump_times])
        k = np.concatenate([[self.initial_count], self.counts]).astype(np.int64)
        return t, k

    def validate(self) -> None:
        t = self.jump_times
        if t.size and (np.any(np.diff(t) <= 0) or t[0] <= 0):
            raise ValueError("jump times must be strictly increasing and positive")
        k = np.concatenate([[self.initial_count], self.counts])
        dk = np.diff(k)
        if k.size > 1 and not np.all(np.abs(dk) == 1):
            raise ValueError("jumps must change the count by exactly 1")
        zero = np.nonzero(k == 0)[0]
        if zero.size and np.any(k[zero[0]:] != 0):
            raise ValueError("0 must be absorbing")

    def to_csv(self, path) -> None:
        arr = np.column_stack(self.step_arrays())
        arr[:, 1] /= self.denominator
        np.savetxt(path, arr, fmt="%.17g", delimiter=",",
                   header="time,value", comments="")


@dataclass
class MartingaleLedger:
    """Predictable and realized quadratic-variation brackets on a time grid."""
    times: np.ndarray
    predictable: np.ndarray
    realized: np.ndarray

    def to_csv(self, path) -> None:
        arr = np.column_stack([self.times, self.predictable, self.realized])
        np.savetxt(path, arr, fmt="%.17g", delimiter=",",
                   header="time,predictable,realized", comments="")


# ---------------------------------------------------------------------------
# rates and increment tables
# ---------------------------------------------------------------------------

def total_rates(f: InteractionFunction, lam: float, mu: float, k: int) -> Tuple[float, float]:
    """(birth, death) rate of the total population at size k >= 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = f(np.arange(k + 1, dtype=float))
    d = np.diff(vals)
    birth = lam * k + float(np.maximum(d, 0.0).sum())
    death = mu * k + float(np.maximum(-d, 0.0).sum())
    return birth, death


def _tables(f: InteractionFunction, N: int, k_cap: int):
    """Cumulative interaction-increment tables on the grid i/N, i = 0..k_cap.

    cpos[k] = sum_{i<=k} (f(i/N)-f((i-1)/N))^+, cneg the negative parts,
    cabs their sum (the total-variation norm used by the predictable bracket).
    """
    if f.kind == "custom" and k_cap / N > float(f.grid[-1]):
        k_cap = int(np.floor(float(f.grid[-1]) * N))
    vals = f(np.arange(k_cap + 1, dtype=float) / N)
    d = np.diff(vals)
    cpos = np.concatenate([[0.0], np.cumsum(np.maximum(d, 0.0))])
    cneg = np.concatenate([[0.0], np.cumsum(np.maximum(-d, 0.0))])
    return cpos, cneg, cpos + cneg


def _initial_cap(k0: int, N: int) -> int:
    return max(256, 4 * k0 + 64, 4 * N)


def _grow_cap(f: InteractionFunction, N: int, cap: int) -> int:
    new = cap * 2
    if f.kind == "custom" and cap >= int(np.floor(float(f.grid[-1]) * N)):
        raise ValueError(
            "population left the tabulated range of the custom interaction function")
    if new > _TABLE_HARD_CAP:
        raise MemoryError("interaction table exceeds hard cap; population exploded")
    return new


def _warn_cap(context: str) -> None:
    warnings.warn(f"{context}: event cap reached, path truncated", RuntimeWarning)


def _initial_record_size(guess: float, max_events: int) -> int:
    # recording kernels replay deterministically from the seed, so an
    # outgrown buffer just means rerunning with a bigger one
    return int(min(max(1024, 8 * guess), max_events))


# ---------------------------------------------------------------------------
# single-chain simulators
# ---------------------------------------------------------------------------

def simulate_population(params: DiscreteParams, seed: int) -> StepPath:
    """Exact realization of the interacting chain started from m ancestors."""
    kseed = derive_seed(seed, "population")
    cap = _initial_cap(params.m, 1)
    guess = (params.lam + params.mu + params.f.beta + 1.0) * (params.m + 1) * params.t_max
    size = _initial_record_size(guess, params.max_events)
    while True:
        cpos, cneg, _ = _tables(params.f, 1, cap)
        out_t = np.empty(size)
        out_k = np.empty(size, dtype=np.int64)
        n, t_reached, status = K.chain_path(
            kseed, params.m, params.lam, params.mu, 1.0, cpos, cneg,
            params.t_max, size, out_t, out_k)
        if status == K.STATUS_TABLE_OVERFLOW:
            cap = _grow_cap(params.f, 1, cap)
            continue
        if status == K.STATUS_EVENT_CAP and size < params.max_events:
            size = min(size * 8, params.max_events)
            continue
        break
    if status == K.STATUS_EVENT_CAP:
        _warn_cap("simulate_population")
    return StepPath(params.m, out_t[:n].copy(), out_k[:n].copy(), 1,
                    t_end=t_reached, truncated_by_cap=status == K.STATUS_EVENT_CAP)


def simulate_increment(params: DiscreteParams, base_path: StepPath,
                       n_minus_m: int, seed: int) -> StepPath:
    """Conditional increment V given the frozen base path.

    V starts from n_minus_m, is absorbed at 0, and while at v >= 1 jumps up at
    rate lam*v + sum_{l=1..v} (f(x(t)+l)-f(x(t)+l-1))^+ (down analogously),
    where x(t) is read from ``base_path``.  Rates are piecewise constant
    between base jumps and own jumps, so the jump-to-jump exponential method
    is exact.
    """
    if n_minus_m < 0:
        raise ValueError("n_minus_m must be >= 0")
    kseed = derive_seed(seed, "increment")
    N = base_path.denominator
    base_t, base_k = base_path.step_arrays()
    base_t = np.append(base_t, params.t_max + 1.0)
    k_needed = int(base_k.max()) + n_minus_m
    cap = max(_initial_cap(k_needed, N), 2 * k_needed + 64)
    guess = (params.lam + params.mu + params.f.beta + 1.0) * (n_minus_m + 1) * params.t_max
    size = _initial_record_size(guess, params.max_events)
    while True:
        cpos, cneg, _ = _tables(params.f, N, cap)
        out_t = np.empty(size)
        out_v = np.empty(size, dtype=np.int64)
        n, status = K.increment_path(
            kseed, n_minus_m, params.lam, params.mu, float(N), cpos, cneg,
            base_t, base_k, params.t_max, size, out_t, out_v)
        if status == K.STATUS_TABLE_OVERFLOW:
            cap = _grow_cap(params.f, N, cap)
            continue
        if status == K.STATUS_EVENT_CAP and size < params.max_events:
            size = min(size * 8, params.max_events)
            continue
        break
    if status == K.STATUS_EVENT_CAP:
        _warn_cap("simulate_increment")
    return StepPath(n_minus_m, out_t[:n].copy(), out_v[:n].copy(), N,
                    t_end=params.t_max, truncated_by_cap=status == K.STATUS_EVENT_CAP)


# ---------------------------------------------------------------------------
# renormalized model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RenormalizedSpec:
    """Jump specification of the mass-1/N rescaled chain.

    From count k (mass k/N) the process jumps to k+1 at rate
    2*N*k + N*sum_{i<=k} (f(i/N)-f((i-1)/N))^+ and to k-1 with the negative
    parts; it starts from floor(N*x) counts.
    """
    x: float
    N: int
    f: InteractionFunction

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.x < 0:
            raise ValueError("x must be >= 0")

    @property
    def initial_count(self) -> int:
        return int(np.floor(self.N * self.x))

    @property
    def initial_value(self) -> float:
        return self.initial_count / self.N

    @property
    def mass_per_individual(self) -> float:
        return 1.0 / self.N

    def birth_rate(self, k: int) -> float:
        b, _ = self.rates(k)
        return b

    def death_rate(self, k: int) -> float:
        _, d = self.rates(k)
        return d

    def rates(self, k: int) -> Tuple[float, float]:
        if k < 1:
            return 0.0, 0.0
        vals = self.f(np.arange(k + 1, dtype=float) / self.N)
        d = np.diff(vals)
        birth = 2.0 * self.N * k + self.N * float(np.maximum(d, 0.0).sum())
        death = 2.0 * self.N * k + self.N * float(np.maximum(-d, 0.0).sum())
        return birth, death


def renormalized_params(x: float, N: int, f: InteractionFunction) -> RenormalizedSpec:
    return RenormalizedSpec(x=float(x), N=int(N), f=f)


def simulate_renormalized(x: float, N: int, f: InteractionFunction, t_max: float,
                          seed: int, max_events: int = DEFAULT_MAX_EVENTS,
                          ledger_points: int = 201) -> Tuple[StepPath, MartingaleLedger]:
    """Path of the rescaled process plus its martingale brackets.

    The predictable bracket accumulates int_0^t {4 Z_r + ||f||_{N,0,Z_r}/N} dr
    (computed exactly from the recorded path); the realized bracket is the sum
    of squared jumps, i.e. (number of events up to t) / N**2.
    """
    spec = renormalized_params(x, N, f)
    kseed = derive_seed(seed, "renormalized")
    k0 = spec.initial_count
    cap = _initial_cap(k0, N)
    guess = (4.0 * N + f.beta + 1.0) * (k0 + N) * t_max
    size = _initial_record_size(guess, max_events)
    while True:
        cpos, cneg, cabs = _tables(f, N, cap)
        out_t = np.empty(size)
        out_k = np.empty(size, dtype=np.int64)
        n, t_reached, status = K.chain_path(
            kseed, k0, 2.0 * N, 2.0 * N, float(N), cpos, cneg,
            t_max, size, out_t, out_k)
        if status == K.STATUS_TABLE_OVERFLOW:
            cap = _grow_cap(f, N, cap)
            continue
        if status == K.STATUS_EVENT_CAP and size < max_events:
            size = min(size * 8, max_events)
            continue
        break
    if status == K.STATUS_EVENT_CAP:
        _warn_cap("simulate_renormalized")
    path = StepPath(k0, out_t[:n].copy(), out_k[:n].copy(), N,
                    t_end=t_reached, truncated_by_cap=status == K.STATUS_EVENT_CAP)

    grid = np.linspace(0.0, t_max, ledger_points)
    t_nodes, k_nodes = path.step_arrays()
    # piecewise-constant integrand 4*k/N + cabs[k]/N on [t_nodes[i], t_nodes[i+1])
    integrand = 4.0 * k_nodes / N + cabs[k_nodes] / N
    seg_end = np.append(t_nodes[1:], max(t_max, path.t_end))
    seg_int = integrand * (seg_end - t_nodes)
    cum = np.concatenate([[0.0], np.cumsum(seg_int)])
    idx = np.searchsorted(t_nodes, grid, side="right") - 1
    pred = cum[idx] + integrand[idx] * (grid - t_nodes[idx])
    realized = np.searchsorted(path.jump_times, grid, side="right") / N**2
    return path, MartingaleLedger(grid, pred, realized)


def simulate_coupled_pair(x: float, y: float, N: int, f: InteractionFunction,
                          t_max: float, seed: int,
                          max_events: int = DEFAULT_MAX_EVENTS) -> Tuple[StepPath, StepPath]:
    """Joint path of (Z^{N,x}, V^{N,x,y}) under the four-channel coupling.

    The components never jump simultaneously, V stays nonnegative, and
    Z^{N,x} + V^{N,x,y} is distributed as Z^{N,y}.
    """
    if y < x:
        raise ValueError("need x <= y")
    kseed = derive_seed(seed, "coupled")
    i0 = int(np.floor(N * x))
    j0 = int(np.floor(N * y)) - i0
    cap = _initial_cap(i0 + j0, N)
    guess = (4.0 * N + f.beta + 1.0) * (i0 + j0 + N) * t_max
    size = _initial_record_size(guess, max_events)
    while True:
        cpos, cneg, _ = _tables(f, N, cap)
        out_t = np.empty(size)
        out_i = np.empty(size, dtype=np.int64)
        out_j = np.empty(size, dtype=np.int64)
        n, status = K.coupled_path(
            kseed, i0, j0, 2.0 * N, 2.0 * N, float(N), cpos, cneg,
            t_max, size, out_t, out_i, out_j)
        if status == K.STATUS_TABLE_OVERFLOW:
            cap = _grow_cap(f, N, cap)
            continue
        if status == K.STATUS_EVENT_CAP and size < max_events:
            size = min(size * 8, max_events)
            continue
        break
    if status == K.STATUS_EVENT_CAP:
        _warn_cap("simulate_coupled_pair")
    trunc = status == K.STATUS_EVENT_CAP
    t = out_t[:n].copy()
    zi = out_i[:n].copy()
    vj = out_j[:n].copy()
    # split into the component paths (each jump moves exactly one component)
    zjump = np.nonzero(np.diff(np.concatenate([[i0], zi])) != 0)[0]
    vjump = np.nonzero(np.diff(np.concatenate([[j0], vj])) != 0)[0]
    z_path = StepPath(i0, t[zjump], zi[zjump], N, t_end=t_max, truncated_by_cap=trunc)
    v_path = StepPath(j0, t[vjump], vj[vjump], N, t_end=t_max, truncated_by_cap=trunc)
    return z_path, v_path


# ---------------------------------------------------------------------------
# ensemble samplers (fixed-time marginals, per-replicate seed streams)
# ---------------------------------------------------------------------------

def population_values_at(params: DiscreteParams, t: float, replicates: int,
                         seed: int, tag: str = "pop-ens") -> np.ndarray:
    """Counts of X^m_t over independent replicates."""
    cap = _initial_cap(params.m, 1)
    cpos, cneg, cabs = _tables(params.f, 1, cap)
    out = np.empty(replicates, dtype=np.int64)
    for r in range(replicates):
        s = derive_seed(seed, tag, r)
        while True:
            k, _, _, _, status = K.chain_value_at(
                s, params.m, params.lam, params.mu, 1.0, cpos, cneg, cabs,
                t, params.max_events)
            if status != K.STATUS_TABLE_OVERFLOW:
                break
            cap = _grow_cap(params.f, 1, cap)
            cpos, cneg, cabs = _tables(params.f, 1, cap)
        if status == K.STATUS_EVENT_CAP:
            _warn_cap("population_values_at")
        out[r] = k
    return out


def increment_values_at(params: DiscreteParams, n_total: int, t: float,
                        replicates: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per replicate: (X^m_t, V^{m,n}_t) with V simulated conditionally on X^m."""
    if n_total < params.m:
        raise ValueError("need n_total >= m")
    base_events = params.max_events
    xm = np.empty(replicates, dtype=np.int64)
    v = np.empty(replicates, dtype=np.int64)
    for r in range(replicates):
        base = simulate_population(
            DiscreteParams(params.lam, params.mu, params.f, params.m, t,
                           base_events), derive_seed(seed, "inc-base", r))
        base_t, base_k = base.step_arrays()
        base_t = np.append(base_t, t + 1.0)
        k_needed = int(base_k.max()) + (n_total - params.m)
        cap = max(_initial_cap(k_needed, 1), 2 * k_needed + 64)
        s = derive_seed(seed, "inc-v", r)
        while True:
            cpos, cneg, _ = _tables(params.f, 1, cap)
            vr, _, status = K.increment_value_at(
                s, n_total - params.m, params.lam, params.mu, 1.0, cpos, cneg,
                base_t, base_k, t, params.max_events)
            if status != K.STATUS_TABLE_OVERFLOW:
                break
            cap = _grow_cap(params.f, 1, cap)
        xm[r] = base.count_at(t)
        v[r] = vr
    return xm, v


def renormalized_values_at(x: float, N: int, f: InteractionFunction, t: float,
                           replicates: int, seed: int,
                           max_events: int = DEFAULT_MAX_EVENTS,
                           tag: str = "renorm-ens") -> np.ndarray:
    """Samples of Z^{N,x}_t (mass units) over independent replicates."""
    spec = renormalized_params(x, N, f)
    cap = _initial_cap(spec.initial_count, N)
    cpos, cneg, cabs = _tables(f, N, cap)
    out = np.empty(replicates)
    n_cap_hits = 0
    for r in range(replicates):
        s = derive_seed(seed, tag, r)
        while True:
            k, _, _, _, status = K.chain_value_at(
                s, spec.initial_count, 2.0 * N, 2.0 * N, float(N),
                cpos, cneg, cabs, t, max_events)
            if status != K.STATUS_TABLE_OVERFLOW:
                break
            cap = _grow_cap(f, N, cap)
            cpos, cneg, cabs = _tables(f, N, cap)
        n_cap_hits += status == K.STATUS_EVENT_CAP
        out[r] = k / N
    if n_cap_hits:
        _warn_cap(f"renormalized_values_at ({n_cap_hits} replicates)")
    return out


def renormalized_brackets_at(x: float, N: int, f: InteractionFunction, t: float,
                             replicates: int, seed: int,
                             max_events: int = DEFAULT_MAX_EVENTS
                             ) -> Tuple[np.ndarray, np.ndarray]:
    """(predictable, realized) brackets of the rescaled martingale at time t."""
    spec = renormalized_params(x, N, f)
    cap = _initial_cap(spec.initial_count, N)
    cpos, cneg, cabs = _tables(f, N, cap)
    pred = np.empty(replicates)
    realized = np.empty(replicates)
    for r in range(replicates):
        s = derive_seed(seed, "bracket", r)
        while True:
            _, n, int_k, int_cabs, status = K.chain_value_at(
                s, spec.initial_count, 2.0 * N, 2.0 * N, float(N),
                cpos, cneg, cabs, t, max_events)
            if status != K.STATUS_TABLE_OVERFLOW:
                break
            cap = _grow_cap(f, N, cap)
            cpos, cneg, cabs = _tables(f, N, cap)
        pred[r] = 4.0 * int_k / N + int_cabs / N
        realized[r] = n / N**2
    return pred, realized


def coupled_values_at(x: float, y: float, N: int, f: InteractionFunction, t: float,
                      replicates: int, seed: int,
                      max_events: int = DEFAULT_MAX_EVENTS
                      ) -> Tuple[np.ndarray, np.ndarray]:
    """Samples of (Z^{N,x}_t, V^{N,x,y}_t) in mass units."""
    if y < x:
        raise ValueError("need x <= y")
    i0 = int(np.floor(N * x))
    j0 = int(np.floor(N * y)) - i0
    cap = _initial_cap(i0 + j0, N)
    cpos, cneg, _ = _tables(f, N, cap)
    z = np.empty(replicates)
    v = np.empty(replicates)
    for r in range(replicates):
        s = derive_seed(seed, "coupled-ens", r)
        while True:
            i, j, _, status = K.coupled_value_at(
                s, i0, j0, 2.0 * N, 2.0 * N, float(N), cpos, cneg, t, max_events)
            if status != K.STATUS_TABLE_OVERFLOW:
                break
            cap = _grow_cap(f, N, cap)
            cpos, cneg, _ = _tables(f, N, cap)
        z[r] = i / N
        v[r] = j / N
    return z, v
