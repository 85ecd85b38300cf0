import math
from fractions import Fraction

import numpy as np
import pytest

from branchkit.analysis import ks_two_sample
from branchkit.discrete import DiscreteParams, population_values_at, renormalized_params
from branchkit.forest import (
    Individual,
    MalformedForest,
    PlanarForest,
    crossing_counts,
    discrete_ray_knight_check,
    explore,
    grow_forest,
    grow_renormalized_forest,
    individual_rates,
    local_time,
)
from branchkit.interaction import InteractionFunction

F0 = InteractionFunction.zero()
LOG11 = InteractionFunction.logistic(1.0, 1.0)


def two_tree_forest():
    # root 1 dies at 3 with a daughter living on [1, 2]; root 2 lives on [0, 1.5]
    return PlanarForest([
        Individual(1, None, 0.0, 3.0, Fraction(1)),
        Individual(2, None, 0.0, 1.5, Fraction(2)),
        Individual(3, 1, 1.0, 2.0, Fraction(3, 2)),
    ], ancestor_count=2, t_max=10.0)


class TestGrow:
    def test_single_root_no_births(self):
        fr = grow_forest(DiscreteParams(0.0, 1.0, F0, 1, 100.0), seed=1)
        assert len(fr.individuals) == 1
        assert not fr.individuals[0].truncated
        assert fr.individuals[0].death_time < 100.0

    def test_leftmost_rates(self):
        f = InteractionFunction.logistic(2.0, 1.0)
        birth, death = individual_rates(f, 0, 1.0, 1.0)
        assert birth == 1.0 + 1.0  # lam + (f(1) - f(0))^+
        assert death == 1.0

    def test_individual_rates_sum_to_total_rates(self):
        from branchkit.discrete import total_rates
        f = LOG11
        lam, mu = 1.0, 1.0
        for k in (1, 3, 8):
            b = sum(individual_rates(f, r, lam, mu)[0] for r in range(k))
            d = sum(individual_rates(f, r, lam, mu)[1] for r in range(k))
            bt, dt = total_rates(f, lam, mu, k)
            assert b == pytest.approx(bt) and d == pytest.approx(dt)

    def test_truncation_clips_alive(self):
        fr = grow_forest(DiscreteParams(2.0, 0.1, F0, 2, 0.5), seed=3)
        assert fr.truncated
        clipped = [i for i in fr.individuals if i.truncated]
        assert clipped and all(i.death_time == 0.5 for i in clipped)

    def test_planar_keys_strictly_ordered(self):
        fr = grow_forest(DiscreteParams(1.0, 1.0, LOG11, 5, 5.0), seed=7)
        keys = sorted(i.planar_key for i in fr.individuals)
        assert all(a < b for a, b in zip(keys, keys[1:]))

    def test_matches_chain_law(self):
        params = DiscreteParams(1.0, 1.0, LOG11, 3, 1.0)
        a = np.array([grow_forest(params, seed=10_000 + r).alive_count_at(1.0)
                      for r in range(3000)], dtype=float)
        b = population_values_at(params, 1.0, 3000, seed=5).astype(float)
        assert ks_two_sample(a, b) < 0.05


class TestExplore:
    def test_single_triangle(self):
        fr = grow_forest(DiscreteParams(0.0, 1.0, F0, 1, 100.0), seed=11)
        d = fr.individuals[0].death_time
        path = explore(fr, p=2.0)
        path.validate()
        np.testing.assert_allclose(path.h, [0.0, d, 0.0])
        assert path.duration == pytest.approx(2 * d / 2.0)

    def test_two_tree_vertex_sequence(self):
        path = explore(two_tree_forest(), p=2.0)
        path.validate()
        np.testing.assert_allclose(path.h, [0.0, 3.0, 1.0, 2.0, 0.0, 1.5, 0.0])
        assert path.n_local_maxima() == 3

    def test_duration_identity_random_forests(self):
        for r in range(1000):
            m = 1 + r % 5
            fr = grow_forest(DiscreteParams(1.0, 1.0, LOG11, m, 5.0),
                             seed=20_000 + r)
            if not fr.individuals:
                continue
            path = explore(fr, p=2.0)
            want = 2.0 * fr.total_branch_length() / 2.0
            assert path.duration == pytest.approx(want, rel=1e-12)
            assert path.n_local_maxima() == len(fr.individuals)

    def test_empty_forest(self):
        fr = grow_forest(DiscreteParams(1.0, 1.0, F0, 0, 1.0), seed=1)
        path = explore(fr, p=2.0)
        assert path.duration == 0.0

    def test_child_outside_lifespan_rejected(self):
        bad = PlanarForest([
            Individual(1, None, 0.0, 1.0, Fraction(1)),
            Individual(2, 1, 1.5, 2.0, Fraction(3, 2)),
        ], ancestor_count=1, t_max=5.0)
        with pytest.raises(MalformedForest):
            explore(bad)

    def test_positive_slope_required(self):
        with pytest.raises(ValueError):
            explore(two_tree_forest(), p=0.0)


class TestLocalTime:
    def test_triangle_profile(self):
        fr = grow_forest(DiscreteParams(0.0, 1.0, F0, 1, 100.0), seed=13)
        d = fr.individuals[0].death_time
        path = explore(fr, p=2.0)
        prof = local_time(path, path.duration, np.array([d / 2, d + 1.0]))
        assert prof.values[0] == pytest.approx(2.0 / 2.0)  # two crossings / p
        assert prof.values[1] == 0.0

    def test_partial_time_cut(self):
        # climbing a triangle of height 2 at p = 2, stopped at s = 0.5 (height 1)
        fr = PlanarForest([Individual(1, None, 0.0, 2.0, Fraction(1))], 1, 5.0)
        path = explore(fr, p=2.0)
        counts = crossing_counts(path, 0.5, np.array([0.5, 1.5]))
        assert counts.tolist() == [1, 0]

    def test_half_p_normalization(self):
        path = explore(two_tree_forest(), p=2.0)
        raw = local_time(path, path.duration, np.array([0.5]))
        half = local_time(path, path.duration, np.array([0.5]), "half_p")
        assert half.values[0] == pytest.approx(raw.values[0] * 1.0)  # p/2 = 1

    def test_occupation_integral_equals_duration(self):
        # L is constant between vertex heights, so the gap sum is exact
        fr = grow_forest(DiscreteParams(1.0, 1.0, LOG11, 3, 4.0), seed=17)
        path = explore(fr, p=2.0)
        heights = np.unique(path.h)
        mids = 0.5 * (heights[:-1] + heights[1:])
        widths = np.diff(heights)
        prof = local_time(path, path.duration, mids)
        assert float(np.dot(prof.values, widths)) == pytest.approx(
            path.duration, rel=1e-9)

    def test_ancestor_count_at_ground_level(self):
        for m in (1, 2, 4):
            fr = grow_forest(DiscreteParams(1.0, 1.0, LOG11, m, 3.0),
                             seed=400 + m)
            path = explore(fr, p=2.0)
            eps = min(i.death_time for i in fr.individuals) / 2.0
            eps = min(eps, min((i.birth_time for i in fr.individuals
                                if i.birth_time > 0), default=eps) / 2.0)
            counts = crossing_counts(path, path.duration, np.array([eps]))
            assert counts[0] / 2.0 == m  # (p/2) L(0+) with p = 2


class TestRayKnightIdentity:
    def test_exact_on_random_forests(self):
        for r in range(200):
            fr = grow_forest(DiscreteParams(1.0, 1.0, LOG11, 1 + r % 5, 5.0),
                             seed=30_000 + r)
            assert discrete_ray_knight_check(fr, p=2.0).max_discrepancy == 0.0

    def test_empty_forest(self):
        fr = grow_forest(DiscreteParams(1.0, 1.0, F0, 0, 1.0), seed=1)
        chk = discrete_ray_knight_check(fr)
        assert chk.max_discrepancy == 0.0 and chk.n_levels == 0

    def test_renormalized_slope(self):
        # p = 2N: counts k match (p/2) L exactly, i.e. Z^{N,x} == L^N
        N = 7
        spec = renormalized_params(0.6, N, LOG11)
        for r in range(50):
            fr = grow_renormalized_forest(spec, 2.0, seed=40_000 + r)
            assert discrete_ray_knight_check(fr, p=2.0 * N).max_discrepancy == 0.0

    def test_population_path_consistency(self):
        fr = grow_forest(DiscreteParams(1.0, 1.0, LOG11, 4, 3.0), seed=19)
        path = fr.population_path()
        for t in np.linspace(0.0, 2.99, 23):
            assert path.count_at(t) == fr.alive_count_at(t)


class TestCSV:
    def test_forest_roundtrip_columns(self, tmp_path):
        fr = grow_forest(DiscreteParams(1.0, 1.0, LOG11, 3, 2.0), seed=23)
        out = tmp_path / "forest.csv"
        fr.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "id,parent_id,birth_time,death_time,planar_key"
        assert len(lines) == len(fr.individuals) + 1

    def test_exploration_csv(self, tmp_path):
        path = explore(two_tree_forest(), p=2.0)
        out = tmp_path / "expl.csv"
        path.to_csv(out)
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert data.shape == (7, 2)
