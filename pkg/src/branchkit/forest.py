"""Planar genealogical forests, their contour exploration, and local times.

Individuals are ordered left to right; a daughter is inserted immediately to
the right of her mother, which keeps descendants of a left individual to the
left of descendants of a right individual.  Individual i feels only the
individuals to its left: with L_i(t) alive on its left it gains an extra
birth rate (f(L_i+1) - f(L_i))^+ and an extra death rate (f(L_i+1) - f(L_i))^-.
Summed over the population these rates telescope to the total-population
rates of :mod:`branchkit.discrete`, which is what makes the forest and the
plain chain two pictures of one process.

The exploration (contour) path traces the forest depth first at slope +-p.
Counting its crossings of a level t and dividing by p gives the exact local
time, and the discrete Ray-Knight identity

    population size at height t  ==  (p/2) * local time at level t

holds pathwise with no error, which `discrete_ray_knight_check` verifies.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .discrete import DiscreteParams, RenormalizedSpec, StepPath
from .interaction import InteractionFunction
from .rngstream import generator

__all__ = [
    "Individual",
    "PlanarForest",
    "PolyPath",
    "LocalTimeProfile",
    "MalformedForest",
    "RayKnightCheck",
    "individual_rates",
    "grow_forest",
    "grow_renormalized_forest",
    "explore",
    "local_time",
    "crossing_counts",
    "discrete_ray_knight_check",
]


class MalformedForest(ValueError):
    """Planar order or lifespan data is inconsistent."""


@dataclass
class Individual:
    id: int
    parent_id: Optional[int]
    birth_time: float
    death_time: float
    planar_key: Fraction
    truncated: bool = False  # still alive when the simulation horizon hit


@dataclass
class PlanarForest:
    """Finite planar forest; individuals listed in arrival order."""
    individuals: List[Individual]
    ancestor_count: int
    t_max: float
    truncated: bool = False

    def __post_init__(self):
        for ind in self.individuals:
            if not ind.birth_time < ind.death_time:
                raise MalformedForest(
                    f"individual {ind.id}: birth {ind.birth_time} !< death {ind.death_time}")

    def roots(self) -> List[Individual]:
        return sorted((i for i in self.individuals if i.parent_id is None),
                      key=lambda i: i.planar_key)

    def children_map(self) -> Dict[int, List[Individual]]:
        out: Dict[int, List[Individual]] = {i.id: [] for i in self.individuals}
        for ind in self.individuals:
            if ind.parent_id is not None:
                out[ind.parent_id].append(ind)
        return out

    def alive_count_at(self, t: float) -> int:
        # a truncated individual is alive through the horizon itself
        return sum(1 for i in self.individuals
                   if i.birth_time <= t and (t < i.death_time or
                                             (i.truncated and t <= i.death_time)))

    def total_branch_length(self) -> float:
        return sum(i.death_time - i.birth_time for i in self.individuals)

    def event_heights(self) -> np.ndarray:
        hs = [0.0]
        for i in self.individuals:
            hs.append(i.birth_time)
            hs.append(i.death_time)
        return np.unique(np.asarray(hs))

    def population_path(self) -> StepPath:
        """Alive-count step function (clipped individuals never die on-path)."""
        events = []
        for ind in self.individuals:
            if ind.parent_id is not None:
                events.append((ind.birth_time, 1))
            if not ind.truncated:
                events.append((ind.death_time, -1))
        events.sort()
        times = np.array([t for t, _ in events])
        counts = self.ancestor_count + np.cumsum([d for _, d in events]).astype(np.int64)
        return StepPath(self.ancestor_count, times, counts, 1, t_end=self.t_max,
                        truncated_by_cap=False)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("id,parent_id,birth_time,death_time,planar_key\n")
            for i in self.individuals:
                parent = "" if i.parent_id is None else str(i.parent_id)
                fh.write(f"{i.id},{parent},{i.birth_time:.17g},"
                         f"{i.death_time:.17g},{i.planar_key}\n")


def individual_rates(f: InteractionFunction, left_count: int,
                     lam: float, mu: float) -> Tuple[float, float]:
    """(birth, death) rate of one individual with ``left_count`` alive to its left."""
    inc = f(left_count + 1.0) - f(float(left_count))
    return lam + max(inc, 0.0), mu + max(-inc, 0.0)


# ---------------------------------------------------------------------------
# growth
# ---------------------------------------------------------------------------

def grow_forest(params: DiscreteParams, seed: int) -> PlanarForest:
    """Individual-based exact simulation of the interacting forest.

    Daughters are inserted immediately right of their mothers.  Individuals
    still alive at t_max get death_time = t_max and a truncated flag, so the
    returned forest is always finite and explorable.
    """
    delta = lambda i: params.f(float(i)) - params.f(float(i - 1))
    return _grow(params.lam, params.mu, delta, params.m, params.t_max,
                 params.max_events, seed)


def grow_renormalized_forest(spec: RenormalizedSpec, t_max: float, seed: int,
                             max_events: int = 10_000_000) -> PlanarForest:
    """Forest of the mass-1/N rescaled model (lam = mu = 2N, increments of N*f(./N))."""
    N = spec.N
    delta = lambda i: N * (spec.f(i / N) - spec.f((i - 1) / N))
    return _grow(2.0 * N, 2.0 * N, delta, spec.initial_count, t_max,
                 max_events, seed)


def _grow(lam, mu, delta, m, t_max, max_events, seed) -> PlanarForest:
    rng = generator(seed, "forest")
    individuals: List[Individual] = []
    alive: List[Individual] = []
    # keys of everyone ever born, kept sorted: a new daughter must sit left of
    # every existing key beyond her mother's, dead subtrees included, or the
    # planar drawing would cross branches
    all_keys: List[Fraction] = []
    for i in range(m):
        ind = Individual(i + 1, None, 0.0, t_max, Fraction(i + 1))
        individuals.append(ind)
        alive.append(ind)
        all_keys.append(ind.planar_key)

    # dp[i] = (delta(i))^+, dn[i] = (delta(i))^-; cp/cn cumulative, grown lazily
    dp = [0.0]
    dn = [0.0]
    cp = [0.0]
    cn = [0.0]

    def ensure(k: int) -> None:
        while len(dp) <= k:
            d = delta(len(dp))
            dp.append(max(d, 0.0))
            dn.append(max(-d, 0.0))
            cp.append(cp[-1] + dp[-1])
            cn.append(cn[-1] + dn[-1])

    t = 0.0
    next_id = m + 1
    n_events = 0
    truncated = False
    while alive:
        k = len(alive)
        ensure(k)
        birth_total = lam * k + cp[k]
        death_total = mu * k + cn[k]
        total = birth_total + death_total
        if total <= 0.0:
            truncated = True  # frozen population, horizon decides
            break
        t += rng.exponential(1.0 / total)
        if t >= t_max:
            truncated = True
            break
        if rng.random() * total < birth_total:
            # position r has weight lam + dp[r+1]
            u = rng.random() * birth_total
            acc = 0.0
            r = k - 1
            for pos in range(k):
                acc += lam + dp[pos + 1]
                if u < acc:
                    r = pos
                    break
            mother = alive[r]
            pos = bisect.bisect_right(all_keys, mother.planar_key)
            if pos < len(all_keys):
                key = (mother.planar_key + all_keys[pos]) / 2
            else:
                key = mother.planar_key + 1
            all_keys.insert(pos, key)
            child = Individual(next_id, mother.id, t, t_max, key)
            next_id += 1
            individuals.append(child)
            alive.insert(r + 1, child)
        else:
            u = rng.random() * death_total
            acc = 0.0
            r = k - 1
            for pos in range(k):
                acc += mu + dn[pos + 1]
                if u < acc:
                    r = pos
                    break
            victim = alive.pop(r)
            victim.death_time = t
        n_events += 1
        if n_events >= max_events:
            truncated = True
            break

    for ind in alive:
        ind.death_time = t_max
        ind.truncated = True
    return PlanarForest(individuals, m, t_max, truncated=truncated)


# ---------------------------------------------------------------------------
# exploration
# ---------------------------------------------------------------------------

@dataclass
class PolyPath:
    """Continuous piecewise-linear path with slopes exactly +-p."""
    s: np.ndarray
    h: np.ndarray
    p: float

    @property
    def duration(self) -> float:
        return float(self.s[-1]) if self.s.size else 0.0

    @property
    def max_height(self) -> float:
        return float(self.h.max()) if self.h.size else 0.0

    def n_local_maxima(self) -> int:
        h = self.h
        return int(np.sum((h[1:-1] > h[:-2]) & (h[1:-1] > h[2:]))) if h.size >= 3 else 0

    def validate(self) -> None:
        if self.h.size == 0:
            raise MalformedForest("empty path")
        if self.h[0] != 0.0 or self.h[-1] != 0.0:
            raise MalformedForest("exploration must start and end at height 0")
        if np.any(self.h < 0):
            raise MalformedForest("exploration height must stay >= 0")
        dh = np.diff(self.h)
        dsn = np.diff(self.s)
        if np.any(dh == 0):
            raise MalformedForest("degenerate (zero-length) exploration segment")
        if not np.allclose(np.abs(dh) / dsn, self.p, rtol=1e-12, atol=0.0):
            raise MalformedForest("slopes must be exactly +-p")
        sign = np.sign(dh)
        if np.any(sign[1:] == sign[:-1]):
            raise MalformedForest("slope sign must alternate at interior vertices")

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.s, self.h]), fmt="%.17g",
                   delimiter=",", header="s,h", comments="")


@dataclass
class LocalTimeProfile:
    """Exploration local time L(t) on a grid of levels.

    normalization "raw" stores crossings/p; "half_p" stores (p/2) * raw,
    which is the population-count scale of the Ray-Knight identity.
    """
    levels: np.ndarray
    values: np.ndarray
    normalization: str = "raw"

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.levels))


def explore(forest: PlanarForest, p: float = 2.0) -> PolyPath:
    """Depth-first left-to-right contour of the forest at slope +-p.

    Maxima sit at death heights (one per individual, in exploration order),
    minima at the birth heights of the next branch; the total duration is
    (2/p) * total branch length.
    """
    if p <= 0:
        raise ValueError("slope p must be > 0")
    heights = [0.0]
    children = forest.children_map()
    by_id = {ind.id: ind for ind in forest.individuals}
    for ind in forest.individuals:
        children[ind.id].sort(key=lambda c: c.birth_time, reverse=True)
        if ind.parent_id is not None:
            parent = by_id.get(ind.parent_id)
            if parent is None:
                raise MalformedForest(f"individual {ind.id} has unknown parent")
            if not (parent.birth_time <= ind.birth_time < parent.death_time):
                raise MalformedForest(
                    f"individual {ind.id} born outside its mother's lifespan")
    for root in forest.roots():
        heights.append(root.death_time)
        stack = [(root, iter(children[root.id]))]
        while stack:
            _, it = stack[-1]
            child = next(it, None)
            if child is None:
                stack.pop()
                continue
            heights.append(child.birth_time)
            heights.append(child.death_time)
            stack.append((child, iter(children[child.id])))
        heights.append(0.0)

    h = np.asarray(heights)
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(h)) / p)])
    return PolyPath(s, h, p)


def crossing_counts(path: PolyPath, s: float, levels: np.ndarray) -> np.ndarray:
    """Number of passages of the path through each level before time s.

    A level equal to a vertex height is touched, not crossed, and counts 0
    there; exact checks therefore sample levels strictly between vertex
    heights.
    """
    levels = np.asarray(levels, dtype=float)
    if s < 0 or s > path.duration + 1e-12:
        raise ValueError("s outside the path duration")
    j = int(np.searchsorted(path.s, s, side="right"))
    h0 = path.h[:max(j - 1, 0)]
    h1 = path.h[1:j]
    if j < path.s.size and s > path.s[j - 1]:
        # partial last segment, cut at the interpolated height
        frac = (s - path.s[j - 1]) / (path.s[j] - path.s[j - 1])
        hcut = path.h[j - 1] + frac * (path.h[j] - path.h[j - 1])
        h0 = np.append(h0, path.h[j - 1])
        h1 = np.append(h1, hcut)
    lo = np.minimum(h0, h1)
    hi = np.maximum(h0, h1)
    return np.sum((lo[None, :] < levels[:, None]) & (levels[:, None] < hi[None, :]),
                  axis=1).astype(np.int64)


def local_time(path: PolyPath, s: float, levels: np.ndarray,
               normalization: str = "raw") -> LocalTimeProfile:
    """Exact local time at each level: crossings divided by p."""
    counts = crossing_counts(path, s, levels)
    vals = counts / path.p
    if normalization == "half_p":
        vals = vals * (path.p / 2.0)
    elif normalization != "raw":
        raise ValueError("normalization must be 'raw' or 'half_p'")
    return LocalTimeProfile(np.asarray(levels, dtype=float), vals, normalization)


# ---------------------------------------------------------------------------
# Ray-Knight identity check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RayKnightCheck:
    max_discrepancy: float
    n_levels: int


def discrete_ray_knight_check(forest: PlanarForest, p: float = 2.0) -> RayKnightCheck:
    """Compare alive counts with (p/2) * exploration local time, level by level.

    Levels are the midpoints between consecutive distinct event heights, so
    no level coincides with a vertex.  The identity is exact: the returned
    maximum discrepancy is 0.0 on every well-formed forest.
    """
    if not forest.individuals:
        return RayKnightCheck(0.0, 0)
    heights = forest.event_heights()
    levels = 0.5 * (heights[:-1] + heights[1:])
    path = explore(forest, p)
    counts = crossing_counts(path, path.duration, levels)
    pop = np.array([forest.alive_count_at(lv) for lv in levels], dtype=np.int64)
    disc = np.abs(pop - counts / 2.0)
    return RayKnightCheck(float(disc.max()) if disc.size else 0.0, int(levels.size))
