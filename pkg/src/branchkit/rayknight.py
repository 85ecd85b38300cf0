"""Reflected Brownian motion whose drift reads its own local-time field.

The process H solves

    H_s = B_s + 1/2 int_0^s f'( z(H_r) + L_r(H_r) ) dr + 1/2 L_s(0)

(plus a matching reflection term at a ceiling K when one is present), where
L_s(t) is the occupation-density local time of H at level t and z an
optional frozen environment read at the current level.  For

    S_x = inf{ s : L_s(0) > x }

the field { L_{S_x}(t), t >= 0 } has the law of the generalized Feller
diffusion { Z^x_t } with drift f, so sampling H and harvesting local-time
profiles at the S_x gives an independent route to the laws produced by
:mod:`branchkit.diffusion`.  Runs without a ceiling require a subcritical f
(otherwise S_x may be infinite and the simulation is refused).

Numerics: mirror Euler steps of size ds with the boundary local time read
off the fold amounts; level occupation on a histogram of cell width dh.
The constant converting accumulated fold amounts into L_s(0) is exactly 2
for this reflection convention; :func:`calibrate_boundary_constant`
re-estimates it empirically from the driftless case as a cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from .diffusion import Trajectory
from .interaction import Classification, InteractionFunction, classify
from .rngstream import derive_seed

__all__ = [
    "RKParams",
    "LocalTimeField",
    "RKRun",
    "RKFieldEnsemble",
    "simulate_reflected",
    "simulate_reflected_recorded",
    "ray_knight_field",
    "total_mass_identity",
    "excursion_projection",
    "calibrate_boundary_constant",
]

#: fold-sum -> L(0) conversion for the mirror scheme (see module docstring)
BOUNDARY_LOCAL_TIME_CONSTANT = 2.0

DEFAULT_STEP_CAP_PER_TARGET = 10 ** 6


@dataclass(frozen=True)
class RKParams:
    """Configuration of one reflected-path experiment.

    x_targets must be strictly increasing; each one triggers a snapshot of
    the accumulated local-time field when L(0) first exceeds it.  K, when
    given, reflects the path inside [0, K]; without it f must classify as
    subcritical.  s_cap_steps bounds the total number of Euler steps
    (default 10**6 per target); replicates that exhaust it are flagged.
    """
    f: InteractionFunction
    x_targets: Tuple[float, ...]
    env: object = None
    K: Optional[float] = None
    ds: float = 1e-4
    dh: float = 0.02
    s_cap_steps: Optional[int] = None
    calibration: float = BOUNDARY_LOCAL_TIME_CONSTANT

    def __post_init__(self):
        targets = tuple(float(x) for x in self.x_targets)
        object.__setattr__(self, "x_targets", targets)
        if not targets or any(x <= 0 for x in targets):
            raise ValueError("x_targets must be positive")
        if any(b <= a for a, b in zip(targets, targets[1:])):
            raise ValueError("x_targets must be strictly increasing")
        if self.ds <= 0 or self.dh <= 0:
            raise ValueError("ds and dh must be > 0")
        if self.K is not None and self.K <= 0:
            raise ValueError("K must be > 0 when given")

    @property
    def step_cap(self) -> int:
        if self.s_cap_steps is not None:
            return int(self.s_cap_steps)
        return DEFAULT_STEP_CAP_PER_TARGET * len(self.x_targets)


@dataclass
class LocalTimeField:
    """Local-time profile on the level grid, plus the boundary local time."""
    levels: np.ndarray          # cell centers (j + 1/2) * dh
    density: np.ndarray         # occupation seconds per cell / dh
    dh: float
    zero_local_time: float

    def at_level(self, t) -> np.ndarray:
        """Linearly interpolated density at arbitrary levels (clamped ends)."""
        return np.interp(np.asarray(t, dtype=float), self.levels, self.density)

    def integral(self) -> float:
        return float(self.density.sum() * self.dh)


@dataclass
class RKRun:
    """One reflected path: a field snapshot per reached target."""
    params: RKParams
    snapshots: List[Optional[LocalTimeField]]
    s_values: np.ndarray
    reached: np.ndarray
    n_steps: int
    max_height: float
    ceiling_local_time: float


@dataclass
class RKFieldEnsemble:
    """Fixed-level field samples over replicates (nan where truncated)."""
    x_targets: Tuple[float, ...]
    query_levels: np.ndarray
    samples: np.ndarray        # [n_targets, n_queries, replicates]
    s_values: np.ndarray       # [n_targets, replicates]
    reached: np.ndarray        # bool [n_targets, replicates]
    calibration: float

    def exclusion_rate(self, target_index: int = -1) -> float:
        r = self.reached[target_index]
        return 1.0 - float(r.sum()) / r.size

    def values(self, target_index: int, query_index: int = 0) -> np.ndarray:
        """Completed-run samples at one (target, level)."""
        mask = self.reached[target_index]
        return self.samples[target_index, query_index, mask]


# ---------------------------------------------------------------------------
# kernel plumbing
# ---------------------------------------------------------------------------

_EMPTY = np.zeros(2)


def _drift_spec(f: InteractionFunction):
    """(kind, p1, p2, table, dv) consumed by the kernels."""
    if f.kind == "linear":
        if f.theta == 0.0:
            return 0, 0.0, 0.0, _EMPTY, 1.0
        return 1, f.theta, 0.0, _EMPTY, 1.0
    if f.kind == "logistic":
        if f.theta == 0.0 and f.gamma == 0.0:
            return 0, 0.0, 0.0, _EMPTY, 1.0
        if f.gamma == 0.0:
            return 1, f.theta, 0.0, _EMPTY, 1.0
        return 2, f.theta, f.gamma, _EMPTY, 1.0
    # custom: central-difference derivative tabulated on the function's grid
    table = np.asarray(f.derivative(f.grid), dtype=float)
    dv = float(f.grid[1] - f.grid[0])
    return 3, 0.0, 0.0, table, dv


def _env_spec(env, dh: float, n_levels: int):
    if env is None:
        return _EMPTY, 1.0, False
    levels = np.arange(n_levels) * dh
    if isinstance(env, Trajectory):
        vals = np.interp(levels, env.t, env.values)
    elif callable(env):
        vals = np.asarray([float(env(t)) for t in levels])
    elif np.isscalar(env):
        vals = np.full(n_levels, float(env))
    else:
        raise ValueError("env must be None, a scalar, a callable, or a Trajectory")
    if np.any(vals < 0):
        raise ValueError("environment values must be >= 0")
    return vals, dh, True


def _require_usable(params: RKParams) -> None:
    if params.K is None:
        report = classify(params.f)
        if report.classification is not Classification.SUBCRITICAL:
            raise ValueError(
                "runs without a ceiling K require a subcritical interaction "
                f"(classified {report.classification.value}); pass K explicitly")


def _initial_levels(params: RKParams) -> int:
    if params.K is not None:
        return int(math.ceil(params.K / params.dh)) + 2
    return max(int(math.ceil(64.0 / params.dh)), 256)


def _run_kernel(params: RKParams, seed: int, n_levels: int, pair_sum: bool):
    kind, p1, p2, tab, dv = _drift_spec(params.f)
    targets = np.asarray(params.x_targets, dtype=float)
    kval = -1.0 if params.K is None else float(params.K)
    while True:
        env_grid, env_dv, use_env = _env_spec(params.env, params.dh, n_levels)
        out_fields = np.zeros((targets.size, n_levels))
        out_s = np.zeros(targets.size)
        out_reached = np.zeros(targets.size, dtype=np.int64)
        out_zlt = np.zeros(targets.size)
        res = K.rk_path(seed, params.ds, params.dh, targets, kind, p1, p2,
                        tab, dv, env_grid, env_dv, use_env, kval,
                        params.calibration, params.step_cap, n_levels,
                        pair_sum, out_fields, out_s, out_reached, out_zlt)
        n_steps, zlt, klt, max_h, status = res
        if status != K.RK_LEVEL_OVERFLOW:
            return (out_fields, out_s, out_reached.astype(bool), out_zlt,
                    n_steps, zlt, klt, max_h, n_levels)
        n_levels *= 2


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def simulate_reflected(params: RKParams, seed: int) -> RKRun:
    """One path; field snapshots at each reached x-target."""
    _require_usable(params)
    kseed = derive_seed(seed, "rk-path")
    (fields, s_vals, reached, zlts, n_steps, _, klt, max_h,
     n_levels) = _run_kernel(params, kseed, _initial_levels(params), False)
    levels = (np.arange(n_levels) + 0.5) * params.dh
    snapshots: List[Optional[LocalTimeField]] = []
    for m in range(len(params.x_targets)):
        if reached[m]:
            snapshots.append(LocalTimeField(levels, fields[m] / params.dh,
                                            params.dh, float(zlts[m])))
        else:
            snapshots.append(None)
    if not reached.all():
        warnings.warn("simulate_reflected: step budget exhausted before the "
                      f"largest target ({int(reached.sum())}/{reached.size} reached)",
                      RuntimeWarning)
    return RKRun(params, snapshots, s_vals, reached, n_steps, max_h, klt)


def simulate_reflected_recorded(params: RKParams, seed: int,
                                record_cap: int = 2_000_000
                                ) -> Tuple[np.ndarray, float, bool]:
    """Single-target run recording H after every step (for path functionals).

    Returns (h_samples, s_x, reached); h_samples has one entry per step of
    size ds.
    """
    _require_usable(params)
    if len(params.x_targets) != 1:
        raise ValueError("recorded runs take exactly one x target")
    kind, p1, p2, tab, dv = _drift_spec(params.f)
    kseed = derive_seed(seed, "rk-record")
    kval = -1.0 if params.K is None else float(params.K)
    n_levels = _initial_levels(params)
    while True:
        env_grid, env_dv, use_env = _env_spec(params.env, params.dh, n_levels)
        out_h = np.empty(min(record_cap, params.step_cap))
        n, s_x, reached, status = K.rk_path_record(
            kseed, params.ds, params.dh, params.x_targets[0], kind, p1, p2,
            tab, dv, env_grid, env_dv, use_env, kval, params.calibration,
            params.step_cap, n_levels, out_h)
        if status != K.RK_LEVEL_OVERFLOW:
            break
        n_levels *= 2
    return out_h[:n].copy(), float(s_x), bool(reached)


def ray_knight_field(params: RKParams, replicates: int, seed: int,
                     query_levels: Sequence[float],
                     pair_sum: bool = False) -> RKFieldEnsemble:
    """Ensemble of local-time profiles sampled at fixed levels.

    These samples are the Ray-Knight side of the law comparisons against
    :mod:`branchkit.diffusion`; truncated replicates are nan and excluded by
    :meth:`RKFieldEnsemble.values`, with the exclusion rate reported.
    """
    _require_usable(params)
    queries = np.asarray(query_levels, dtype=float)
    n_t = len(params.x_targets)
    samples = np.full((n_t, queries.size, replicates), np.nan)
    s_values = np.full((n_t, replicates), np.nan)
    reached_all = np.zeros((n_t, replicates), dtype=bool)
    n_levels = _initial_levels(params)
    for r in range(replicates):
        kseed = derive_seed(seed, "rk-ens", r)
        (fields, s_vals, reached, _, _, _, _, _, n_levels) = _run_kernel(
            params, kseed, n_levels, pair_sum)
        centers = (np.arange(n_levels) + 0.5) * params.dh
        for m in range(n_t):
            if reached[m]:
                samples[m, :, r] = np.interp(queries, centers, fields[m] / params.dh)
                s_values[m, r] = s_vals[m]
                reached_all[m, r] = True
    excl = 1.0 - reached_all[-1].mean()
    if excl > 0:
        warnings.warn(f"ray_knight_field: {excl:.2%} of replicates truncated "
                      "at the step budget and excluded", RuntimeWarning)
    return RKFieldEnsemble(params.x_targets, queries, samples, s_values,
                           reached_all, params.calibration)


def total_mass_identity(profile: LocalTimeField, s_x: float) -> float:
    """Relative gap |S_x - int L(t) dt| / S_x; an identity up to roundoff.

    Every Euler step deposits exactly ds into one occupation cell, so the
    integral of the harvested field reproduces the elapsed time by
    construction; this is the numerical image of S_x being the total mass of
    the diffusion.
    """
    if s_x <= 0:
        raise ValueError("s_x must be > 0 (completed run required)")
    return abs(s_x - profile.integral()) / s_x


def excursion_projection(h_samples: np.ndarray, a: float, b: float) -> np.ndarray:
    """Erase the time the sampled path spends at or above level a.

    The remaining samples, concatenated in order, discretize the projected
    path: time below a is kept, excursions above are excised and the gaps
    closed.  With the path reflected at b, the projection has the law of a
    path reflected at a.
    """
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    h = np.asarray(h_samples, dtype=float)
    return h[h < a]


def calibrate_boundary_constant(ds: float = 1e-4, dh: float = 0.02,
                                replicates: int = 200, seed: int = 0,
                                s_cap_steps: int = 5_000_000) -> float:
    """Estimate the fold-sum -> L(0) constant from the driftless case.

    Runs the zero-drift scheme with the conversion constant set to 1 and
    x = 1, then reads the occupation density in the lowest cell at the
    stopping time: its mean estimates the true constant (2 in exact
    arithmetic for the mirror scheme).
    """
    params = RKParams(InteractionFunction.zero(), (1.0,), ds=ds, dh=dh,
                      s_cap_steps=s_cap_steps, calibration=1.0)
    ens = ray_knight_field(params, replicates, seed, [dh / 2.0])
    vals = ens.values(0, 0)
    if vals.size == 0:
        raise RuntimeError("calibration produced no completed runs")
    return float(vals.mean())
