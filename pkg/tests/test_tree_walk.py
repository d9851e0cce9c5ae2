import math

import numpy as np
import pytest

from rwre.errors import InsufficientRegenerations, NotTransient
from rwre.gw_tree import MarkedTree
from rwre.law import ALaw, OffspringLaw
from rwre.rng import generator
from rwre.stats import permutation_pvalue_lag1
from rwre.tree_walk import (RegenerationRecord, beta_lower_bound, biased_tree_speed, detect_regenerations,
                            escape_depths, estimate_beta_mc, estimate_beta_recursion, estimate_exponent,
                            estimate_speed, exponent_table, regeneration_statistics, run_walk,
                            visited_per_generation)

LINE = OffspringLaw.line()
BIN = OffspringLaw.regular(2)
MIXED = OffspringLaw((0.3, 0.4, 0.3))
SYM = ALaw.two_point(0.5, 2.0, 0.5)


def test_biased_tree_speed_formula():
    assert biased_tree_speed(1, 2.0) == pytest.approx(1 / 3)
    assert biased_tree_speed(2, 4.0) == pytest.approx(7 / 9)
    assert biased_tree_speed(2, 0.25) == 0.0


def test_line_speed():
    est = estimate_speed(ALaw.constant(2.0), LINE, 20_000, 60, 1)
    assert abs(est.point - 1 / 3) < 4 * est.stderr + 1e-3


def test_binary_speed():
    est = estimate_speed(ALaw.constant(4.0), BIN, 20_000, 60, 2)
    assert abs(est.point - 7 / 9) < 4 * est.stderr + 1e-3


def test_recurrent_rejected():
    with pytest.raises(NotTransient):
        estimate_speed(ALaw.constant(0.5), LINE, 100, 2, 1)
    with pytest.raises(NotTransient):
        estimate_exponent(ALaw.constant(0.3), BIN, [10, 100], 2, 1)


def test_steps_are_nearest_neighbour():
    tree = MarkedTree(SYM, MIXED, 4)
    traj = run_walk(tree, 5000)
    g = traj.generations
    assert g[0] == 0 and g.min() >= -1
    assert np.all(np.abs(np.diff(g)) == 1)
    assert np.all((g - np.arange(g.size)) % 2 == 0)
    assert np.all(tree.depth[traj.positions] == g)
    # every step moves to a tree neighbour
    for a, b in zip(traj.positions[:-1], traj.positions[1:]):
        assert tree.parent[b] == a or tree.parent[a] == b


def test_walk_seed_determinism():
    a = run_walk(MarkedTree(SYM, MIXED, 9), 3000).generations
    b = run_walk(MarkedTree(SYM, MIXED, 9), 3000).generations
    c = run_walk(MarkedTree(SYM, MIXED, 10), 3000).generations
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_walk_rejects_zero_steps():
    with pytest.raises(ValueError):
        run_walk(MarkedTree(SYM, MIXED, 1), 0)


def test_tau_and_occupation():
    tree = MarkedTree(SYM, MIXED, 3)
    traj = run_walk(tree, 2000)
    tau = traj.tau
    assert tau[0] == 0 and np.all(np.diff(tau) > 0)
    assert np.all(traj.generations[tau] == np.arange(tau.size))
    occ = traj.level_occupation()
    assert sum(occ.values()) == 2001
    assert sum(traj.occupation().values()) == 2001


def test_escape_depths_schedule_checks():
    with pytest.raises(ValueError):
        escape_depths(SYM, BIN, [100, 10], 2, 1)
    d = escape_depths(SYM, BIN, [10, 100], 3, 1)
    assert d.shape == (3, 2) and np.all(d[:, 0] <= 10)


def test_exponent_table_zero_depth():
    rows = exponent_table(np.array([[0], [1], [10]]), [100])
    assert rows[0].median == 0.0
    assert rows[0].q75 == pytest.approx(0.25)


def test_no_regeneration_on_line():
    tree = MarkedTree(ALaw.constant(2.0), LINE, 1)
    traj = run_walk(tree, 2000)
    assert detect_regenerations(traj, tree, 50) == []
    with pytest.raises(InsufficientRegenerations):
        regeneration_statistics([])


def test_regeneration_statistics_example():
    recs = [RegenerationRecord(3, 2, False), RegenerationRecord(10, 5, False),
            RegenerationRecord(12, 6, False), RegenerationRecord(40, 9, True)]
    st = regeneration_statistics(recs, lam=0.5)
    assert st.n_gaps == 2
    assert st.mean_level_gap == 2.0
    assert st.mean_time_gap == 4.5
    assert st.power_sum == pytest.approx(math.sqrt(7) + math.sqrt(2))
    with pytest.raises(InsufficientRegenerations):
        regeneration_statistics(recs[:1] + recs[3:])


def _regen_run(seed, steps=60_000, horizon=1000, a=2.0):
    tree = MarkedTree(ALaw.constant(a), BIN, seed)
    traj = run_walk(tree, steps)
    return tree, traj, detect_regenerations(traj, tree, horizon)


def test_regeneration_records_are_valid():
    tree, traj, recs = _regen_run(5)
    assert len(recs) > 10
    g = traj.generations
    assert all(r1.time < r2.time and r1.level < r2.level for r1, r2 in zip(recs, recs[1:]))
    for r in recs:
        assert g[r.time] == r.level
        assert g[: r.time].max() < r.level
        if not r.censored:
            assert g[r.time:r.time + 1001].min() >= r.level
        assert tree.nu(int(traj.positions[r.time])) >= 2


@pytest.mark.parametrize("seed", [6, 7, 8])
def test_regeneration_gaps_uncorrelated(seed):
    _, _, recs = _regen_run(seed, steps=100_000, a=4.0)
    st = regeneration_statistics(recs)
    assert st.n_gaps > 50
    assert permutation_pvalue_lag1(st.time_gaps, generator(seed)) > 0.01
    assert permutation_pvalue_lag1(st.level_gaps, generator(seed)) > 0.01


def test_renewal_speed_matches_direct():
    lg, tg, v = [], [], []
    steps = 60_000
    for s in range(10):
        _, traj, recs = _regen_run(100 + s, steps=steps)
        st = regeneration_statistics(recs)
        lg.append(st.level_gaps)
        tg.append(st.time_gaps)
        v.append(traj.generations[-1] / steps)
    lg, tg, v = np.concatenate(lg).astype(float), np.concatenate(tg).astype(float), np.array(v)
    ratio = lg.mean() / tg.mean()
    # delta-method standard error of the ratio of means
    cov = np.cov(lg, tg) / lg.size
    g = np.array([1 / tg.mean(), -lg.mean() / tg.mean() ** 2])
    se_ratio = math.sqrt(g @ cov @ g)
    se_v = v.std(ddof=1) / math.sqrt(v.size)
    assert abs(v.mean() - ratio) < 2 * math.hypot(se_ratio, se_v)
    # constant mark 2 on the binary tree: speed 3/5
    assert ratio == pytest.approx(biased_tree_speed(2, 2.0), abs=0.03)


def test_beta_line_mc():
    tree = MarkedTree(ALaw.constant(2.0), LINE, 1)
    est = estimate_beta_mc(tree, (1,), 5000, 4000, seed=3)
    assert abs(est.point - 0.5) < 4 * est.stderr + 2e-3


def test_beta_recursion_line_exact():
    tree = MarkedTree(ALaw.constant(2.0), LINE, 1)
    lo, hi = estimate_beta_recursion(tree, (), 60)
    assert lo == pytest.approx(0.5, abs=1e-12)
    assert hi == pytest.approx(0.5, abs=1e-12)
    assert beta_lower_bound(ALaw.constant(2.0), LINE) == 0.5
    assert beta_lower_bound(ALaw.constant(0.4), BIN) == 0.0


@pytest.mark.parametrize("seed", range(50))
def test_beta_recursion_bracket(seed):
    law = ALaw.uniform(0.8, 2.0)
    tree = MarkedTree(law, MIXED, seed)
    lo, hi = estimate_beta_recursion(tree, (), 8)
    lo2, hi2 = estimate_beta_recursion(tree, (), 10)
    assert 0 <= lo <= lo2 + 1e-15 <= hi2 + 2e-15 <= hi + 3e-15 <= 1 + 3e-15


@pytest.mark.parametrize("seed", range(50))
def test_beta_mc_inside_bracket(seed):
    tree = MarkedTree(ALaw.uniform(0.8, 2.0), MIXED, 500 + seed)
    lo, hi = estimate_beta_recursion(tree, (), 12)
    est = estimate_beta_mc(tree, (), 2000, 400, seed=seed)
    assert lo - 3 * est.stderr <= est.point <= hi + 3 * est.stderr


def test_visited_trivial():
    assert visited_per_generation(SYM, BIN, 0, 5, 1).point == 1.0
    assert visited_per_generation(ALaw.constant(2.0), LINE, 15, 20, 1).point == 1.0


def test_visited_at_least_one():
    est = visited_per_generation(SYM, BIN, 10, 50, 2)
    assert est.point >= 1.0
