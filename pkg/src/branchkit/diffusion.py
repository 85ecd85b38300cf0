"""Euler schemes for the generalized Feller diffusion and its couplings.

The base equation is dZ = f(Z) dt + 2 sqrt(Z) dW with Z_0 = x >= 0.  All
solvers use full-truncation explicit Euler,

    Z_{k+1} = max(0, Z_k + f(Z_k) dt + 2 sqrt(Z_k) sqrt(dt) xi_k),

which keeps the state nonnegative; since f(0) = 0 the origin is absorbing
for the scheme exactly as for the SDE.  The coupled increment V over two
initial masses x < y follows the drift f(Z+V) - f(Z) with diffusion
2 sqrt(V) and noise independent of Z's (the two white-noise strips are
disjoint), and the environment variant shifts the drift by a frozen path.

Single-path solvers return a :class:`Trajectory`; ensemble samplers return
plain arrays of fixed-time marginals and are vectorized across replicates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .interaction import Classification, InteractionFunction, classify
from .rngstream import generator

__all__ = [
    "Trajectory",
    "FirstHitEstimate",
    "ExtinctionReport",
    "solve_feller",
    "solve_coupled",
    "solve_environment",
    "first_hit",
    "extinction_stats",
    "feller_values_at",
    "coupled_values_at",
    "environment_values_at",
]

_Z975 = 1.959963984540054


@dataclass
class Trajectory:
    """Continuous trajectory sampled on the uniform grid t = k*dt."""
    t: np.ndarray
    values: np.ndarray
    absorbed_at: Optional[float] = None

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def value_at(self, time: float) -> float:
        return float(np.interp(time, self.t, self.values))

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.t, self.values]), fmt="%.17g",
                   delimiter=",", header="t,value", comments="")


def _env_on_grid(env, t_grid: np.ndarray) -> np.ndarray:
    if env is None:
        return np.zeros_like(t_grid)
    if isinstance(env, Trajectory):
        return np.interp(t_grid, env.t, env.values)
    if callable(env):
        return np.asarray([float(env(t)) for t in t_grid])
    if np.isscalar(env):
        return np.full_like(t_grid, float(env))
    arr = np.asarray(env, dtype=float)
    if arr.shape != t_grid.shape:
        raise ValueError("environment grid incompatible with the time grid")
    return arr


def _steps(t_max: float, dt: float) -> int:
    if dt <= 0 or t_max <= 0:
        raise ValueError("dt and t_max must be > 0")
    return int(round(t_max / dt))


# ---------------------------------------------------------------------------
# single paths
# ---------------------------------------------------------------------------

def solve_feller(f: InteractionFunction, x: float, t_max: float, dt: float,
                 seed: int) -> Trajectory:
    """One path of dZ = f(Z) dt + 2 sqrt(Z) dW, full-truncation Euler."""
    if x < 0:
        raise ValueError("x must be >= 0")
    n = _steps(t_max, dt)
    xi = generator(seed, "feller").standard_normal(n)
    return _euler_with_noise(f, x, dt, xi)


def _euler_with_noise(f: InteractionFunction, x: float, dt: float,
                      xi: np.ndarray) -> Trajectory:
    """Euler path driven by the given standard-normal increments (shared-noise
    comparisons couple two drifts through one xi array)."""
    n = xi.size
    sq = np.sqrt(dt)
    vals = np.empty(n + 1)
    vals[0] = x
    z = x
    absorbed_at = 0.0 if z == 0.0 else None
    for k in range(n):
        z = max(0.0, z + f(z) * dt + 2.0 * np.sqrt(z) * sq * xi[k])
        vals[k + 1] = z
        if absorbed_at is None and z == 0.0:
            absorbed_at = (k + 1) * dt
    return Trajectory(np.arange(n + 1) * dt, vals, absorbed_at)


def solve_coupled(f: InteractionFunction, x: float, y: float, t_max: float,
                  dt: float, seed: int) -> Tuple[Trajectory, Trajectory]:
    """(Z^x, V^{x,y}) with independent driving noises; Z^y = Z^x + V."""
    if not 0 <= x <= y:
        raise ValueError("need 0 <= x <= y")
    n = _steps(t_max, dt)
    rng = generator(seed, "coupled-sde")
    xi_z = rng.standard_normal(n)
    xi_v = rng.standard_normal(n)
    sq = np.sqrt(dt)
    zs = np.empty(n + 1)
    vs = np.empty(n + 1)
    z, v = x, y - x
    zs[0], vs[0] = z, v
    z_abs = 0.0 if z == 0.0 else None
    v_abs = 0.0 if v == 0.0 else None
    for k in range(n):
        z_new = max(0.0, z + f(z) * dt + 2.0 * np.sqrt(z) * sq * xi_z[k])
        v_new = max(0.0, v + (f(z + v) - f(z)) * dt + 2.0 * np.sqrt(v) * sq * xi_v[k])
        z, v = z_new, v_new
        zs[k + 1], vs[k + 1] = z, v
        if z_abs is None and z == 0.0:
            z_abs = (k + 1) * dt
        if v_abs is None and v == 0.0:
            v_abs = (k + 1) * dt
    t = np.arange(n + 1) * dt
    return Trajectory(t, zs, z_abs), Trajectory(t, vs, v_abs)


def solve_environment(f: InteractionFunction, x: float, env, t_max: float,
                      dt: float, seed: int) -> Trajectory:
    """dZ = [f(Z + z(t)) - f(z(t))] dt + 2 sqrt(Z) dW against a frozen path z.

    With env identically 0 this reduces exactly to :func:`solve_feller` (same
    seed, same path).
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    n = _steps(t_max, dt)
    t_grid = np.arange(n + 1) * dt
    zt = _env_on_grid(env, t_grid)
    xi = generator(seed, "feller").standard_normal(n)
    sq = np.sqrt(dt)
    vals = np.empty(n + 1)
    vals[0] = x
    z = x
    absorbed_at = 0.0 if z == 0.0 else None
    for k in range(n):
        drift = f(z + zt[k]) - f(zt[k])
        z = max(0.0, z + drift * dt + 2.0 * np.sqrt(z) * sq * xi[k])
        vals[k + 1] = z
        if absorbed_at is None and z == 0.0:
            absorbed_at = (k + 1) * dt
    return Trajectory(t_grid, vals, absorbed_at)


# ---------------------------------------------------------------------------
# vectorized ensembles
# ---------------------------------------------------------------------------

def feller_values_at(f: InteractionFunction, x: float, t: float, dt: float,
                     replicates: int, seed: int, tag: str = "feller-ens") -> np.ndarray:
    """Samples of Z^x_t across independent replicates."""
    n = _steps(t, dt)
    rng = generator(seed, tag)
    sq = np.sqrt(dt)
    z = np.full(replicates, float(x))
    for _ in range(n):
        z = np.maximum(0.0, z + f(z) * dt + 2.0 * np.sqrt(z) * sq
                       * rng.standard_normal(replicates))
    return z


def feller_marginals_at(f: InteractionFunction, x: float, times: np.ndarray,
                        dt: float, replicates: int, seed: int,
                        tag: str = "feller-marg") -> np.ndarray:
    """Samples of Z^x at several times from one ensemble pass.

    Returns an array of shape (len(times), replicates); times are snapped to
    the Euler grid.
    """
    times = np.asarray(times, dtype=float)
    n = _steps(float(times.max()), dt)
    marks = np.minimum(np.round(times / dt).astype(int), n)
    rng = generator(seed, tag)
    sq = np.sqrt(dt)
    z = np.full(replicates, float(x))
    out = np.empty((times.size, replicates))
    for idx in np.nonzero(marks == 0)[0]:
        out[idx] = z
    for k in range(1, n + 1):
        z = np.maximum(0.0, z + f(z) * dt + 2.0 * np.sqrt(z) * sq
                       * rng.standard_normal(replicates))
        for idx in np.nonzero(marks == k)[0]:
            out[idx] = z
    return out


def coupled_values_at(f: InteractionFunction, x: float, y: float, t: float,
                      dt: float, replicates: int, seed: int
                      ) -> Tuple[np.ndarray, np.ndarray]:
    """Samples of (Z^x_t, V^{x,y}_t) under the independent-noise coupling."""
    if not 0 <= x <= y:
        raise ValueError("need 0 <= x <= y")
    n = _steps(t, dt)
    rng = generator(seed, "coupled-sde-ens")
    sq = np.sqrt(dt)
    z = np.full(replicates, float(x))
    v = np.full(replicates, float(y - x))
    for _ in range(n):
        xi_z = rng.standard_normal(replicates)
        xi_v = rng.standard_normal(replicates)
        z_new = np.maximum(0.0, z + f(z) * dt + 2.0 * np.sqrt(z) * sq * xi_z)
        v_new = np.maximum(0.0, v + (f(z + v) - f(z)) * dt + 2.0 * np.sqrt(v) * sq * xi_v)
        z, v = z_new, v_new
    return z, v


def environment_values_at(f: InteractionFunction, x: float, env, t: float,
                          dt: float, replicates: int, seed: int,
                          tag: str = "env-ens") -> np.ndarray:
    """Samples of Z^{x,z}_t against the frozen environment path."""
    n = _steps(t, dt)
    t_grid = np.arange(n + 1) * dt
    zt = _env_on_grid(env, t_grid)
    rng = generator(seed, tag)
    sq = np.sqrt(dt)
    z = np.full(replicates, float(x))
    for k in range(n):
        drift = f(z + zt[k]) - f(zt[k])
        z = np.maximum(0.0, z + drift * dt + 2.0 * np.sqrt(z) * sq
                       * rng.standard_normal(replicates))
    return z


# ---------------------------------------------------------------------------
# hitting and extinction statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FirstHitEstimate:
    """Monte Carlo estimate of P(hit a before b) with a binomial 95% CI."""
    p_hat: float
    ci_low: float
    ci_high: float
    standard_error: float
    n_hit_a: int
    n_hit_b: int
    n_censored: int

    @property
    def replicates(self) -> int:
        return self.n_hit_a + self.n_hit_b + self.n_censored


def first_hit(f: InteractionFunction, x: float, a: float, b: float, dt: float,
              replicates: int, seed: int, t_cap: float = 200.0) -> FirstHitEstimate:
    """Estimate P(T_a < T_b) by crossing detection on the Euler grid.

    Barrier crossing uses discrete overshoot (no bridge correction), so the
    estimate carries an O(sqrt(dt)) boundary bias on top of the binomial
    error.  Paths that reach neither barrier by t_cap are counted separately
    and excluded with a warning.
    """
    if not 0 <= a < x < b:
        raise ValueError("need 0 <= a < x < b")
    n = _steps(t_cap, dt)
    rng = generator(seed, "first-hit")
    sq = np.sqrt(dt)
    z = np.full(replicates, float(x))
    active = np.ones(replicates, dtype=bool)
    n_a = 0
    n_b = 0
    for _ in range(n):
        if not active.any():
            break
        za = z[active]
        za = np.maximum(0.0, za + f(za) * dt + 2.0 * np.sqrt(za) * sq
                        * rng.standard_normal(za.size))
        z[active] = za
        hit_a = za <= a
        hit_b = za >= b
        n_a += int(hit_a.sum())
        n_b += int((hit_b & ~hit_a).sum())
        still = ~(hit_a | hit_b)
        idx = np.nonzero(active)[0]
        active[idx[~still]] = False
    n_c = int(active.sum())
    if n_c:
        warnings.warn(f"first_hit: {n_c} paths hit neither barrier by t_cap={t_cap}; "
                      "excluded from the estimate", RuntimeWarning)
    n_used = n_a + n_b
    if n_used == 0:
        raise RuntimeError("first_hit: no path reached a barrier")
    p = n_a / n_used
    se = float(np.sqrt(max(p * (1.0 - p), 1e-12) / n_used))
    return FirstHitEstimate(p, max(0.0, p - _Z975 * se), min(1.0, p + _Z975 * se),
                            se, n_a, n_b, n_c)


@dataclass(frozen=True)
class ExtinctionReport:
    extinct_fraction: float
    ci_low: float
    ci_high: float
    n_extinct: int
    replicates: int
    mean_total_mass_extinct: float  # int_0^{T0} Z dt averaged over extinct paths


def extinction_stats(f: InteractionFunction, x: float, t_cap: float, dt: float,
                     replicates: int, seed: int) -> ExtinctionReport:
    """Fraction of paths extinct by t_cap and their mean accumulated mass.

    Meaningful extinction probabilities need a subcritical f; a warning is
    issued otherwise and the finite-horizon fraction is still returned.
    """
    report = classify(f)
    if report.classification is not Classification.SUBCRITICAL:
        warnings.warn(
            f"extinction_stats: f classifies as {report.classification.value}; "
            "the extinction fraction is horizon-limited", RuntimeWarning)
    n = _steps(t_cap, dt)
    rng = generator(seed, "extinction")
    sq = np.sqrt(dt)
    z = np.full(replicates, float(x))
    mass = np.zeros(replicates)
    for _ in range(n):
        z_new = np.maximum(0.0, z + f(z) * dt + 2.0 * np.sqrt(z) * sq
                           * rng.standard_normal(replicates))
        mass += 0.5 * (z + z_new) * dt  # trapezoid; stops growing once absorbed
        z = z_new
    extinct = z == 0.0
    n_ext = int(extinct.sum())
    frac = n_ext / replicates
    se = float(np.sqrt(max(frac * (1 - frac), 1e-12) / replicates))
    mean_mass = float(mass[extinct].mean()) if n_ext else float("nan")
    return ExtinctionReport(frac, max(0.0, frac - _Z975 * se),
                            min(1.0, frac + _Z975 * se), n_ext, replicates, mean_mass)
