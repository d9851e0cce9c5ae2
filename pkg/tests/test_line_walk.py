import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwre.errors import NotAncestor
from rwre.gw_tree import MarkedTree
from rwre.harness.acceptance import random_domination_case
from rwre.law import ALaw, OffspringLaw
from rwre.line_walk import (LineEnvironment, birth_death_solve, domination_check, expected_exit_time,
                            hit_prob_before_minus1, hit_prob_from, log_expected_exit_time, m_estimate,
                            oracle_solve, p_estimate, project_to_path)
from rwre.rng import generator

# exact rationals for marks (2, 1/2, 3, 1), checked with mpmath at 30 digits
MARKS = [2.0, 0.5, 3.0, 1.0]
EXIT_MARKS = 5.1052631578947368421
HIT_MARKS = 0.31578947368421052632  # 6/19


def const(a, n):
    return LineEnvironment(np.full(n, float(a)))


def test_potential():
    env = LineEnvironment(MARKS)
    assert env.V == pytest.approx([0, -math.log(2), 0, -math.log(3), -math.log(3)], abs=1e-15)
    assert env.M == pytest.approx([0, 0, 0, 0, 0], abs=1e-15)
    assert env.H2(2) == pytest.approx([0, math.log(2), 0], abs=1e-15)


def test_rejects_nonpositive_marks():
    with pytest.raises(ValueError):
        LineEnvironment([1.0, 0.0])


@pytest.mark.parametrize("i", [0, 1, 5, 30])
def test_hit_symmetric(i):
    assert hit_prob_before_minus1(const(1, 40), i) == pytest.approx(1 / (i + 1), abs=1e-14)


def test_hit_examples():
    assert hit_prob_before_minus1(LineEnvironment([3.0]), 1) == pytest.approx(3 / 4, abs=1e-15)
    assert hit_prob_before_minus1(const(2, 20), 20) == pytest.approx(1 / (2 - 2.0**-20), abs=1e-14)
    assert hit_prob_from(LineEnvironment(MARKS), 0) == pytest.approx(HIT_MARKS, abs=1e-15)
    with pytest.raises(ValueError):
        hit_prob_before_minus1(const(1, 3), 4)


def test_hit_from_boundaries():
    env = LineEnvironment(MARKS)
    assert hit_prob_from(env, -1) == 0.0
    assert hit_prob_from(env, env.n) == pytest.approx(1.0, abs=1e-15)


def test_exit_examples():
    assert expected_exit_time(LineEnvironment([0.37])) == pytest.approx(1.0, abs=1e-15)
    for n in (1, 2, 7, 50):
        assert expected_exit_time(const(1, n)) == pytest.approx(n, rel=1e-13)
    assert expected_exit_time(LineEnvironment(MARKS)) == pytest.approx(EXIT_MARKS, rel=1e-14)
    with pytest.raises(ValueError):
        expected_exit_time(LineEnvironment(MARKS), 0)


def test_exit_log_space_matches():
    env = LineEnvironment(generator(3).uniform(0.3, 3.0, 200))
    assert log_expected_exit_time(env) == pytest.approx(math.log(expected_exit_time(env)), abs=1e-12)


def test_exit_extreme_potential():
    # a potential well of depth 1200 ln 2, far beyond double range
    env = LineEnvironment(np.concatenate([np.full(1200, 2.0), np.full(1200, 0.5)]))
    lt = log_expected_exit_time(env)
    assert np.isfinite(lt) and lt > 1200 * math.log(2)
    assert expected_exit_time(env) == math.inf


def test_oracle_examples():
    h, u = oracle_solve(const(1, 3))
    assert h[0] == pytest.approx(0.25, abs=1e-15)
    assert u == pytest.approx([3, 4, 3], abs=1e-13)
    h, _ = oracle_solve(const(2, 2))
    assert h[0] == pytest.approx(4 / 7, abs=1e-15)


def test_birth_death_solve_residual():
    rng = generator(5)
    p = rng.uniform(0.01, 0.99, 40)
    rhs = rng.uniform(0, 1, 40)
    x = birth_death_solve(p, rhs, right_value=0.7)
    ext = np.concatenate([[0.0], x, [0.7]])
    res = ext[1:-1] - (1 - p) * ext[:-2] - p * ext[2:]
    assert np.max(np.abs(res - rhs)) < 1e-12


envs = st.lists(st.floats(0.2, 5.0), min_size=1, max_size=60).map(LineEnvironment)


@settings(max_examples=100, deadline=None)
@given(envs)
def test_circuit_matches_oracle(env):
    h, u = oracle_solve(env)
    hc = np.array([hit_prob_from(env, i) for i in range(env.n)])
    assert np.max(np.abs(h - hc)) < 1e-12
    assert expected_exit_time(env) == pytest.approx(u[0], rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(envs, st.data())
def test_first_passage_matches_oracle(env, data):
    i = data.draw(st.integers(0, env.n))
    if i == 0:
        assert hit_prob_before_minus1(env, 0) == 1.0
        return
    h, _ = oracle_solve(env, i)
    assert hit_prob_before_minus1(env, i) == pytest.approx(h[0], rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(envs, st.data())
def test_hit_bracket(env, data):
    i = data.draw(st.integers(0, env.n))
    p = hit_prob_before_minus1(env, i)
    m = env.M[i]
    assert math.exp(-m) / (i + 1) * (1 - 1e-12) <= p <= math.exp(-m) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(envs)
def test_potential_invariants(env):
    v = env.V
    assert np.all(np.diff(v) == pytest.approx(-np.log(env.marks), abs=1e-13))
    assert np.all(np.diff(env.M) >= 0)
    assert np.all(env.H1 >= 0)
    assert np.all(env.H2() >= 0) and np.all(env.H2(env.n // 2) >= 0)


@settings(max_examples=50, deadline=None)
@given(envs)
def test_exit_monotone_in_n(env):
    t = [expected_exit_time(env, n) for n in range(1, env.n + 1)]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(t, t[1:]))


def test_m_trivial_cases():
    law = ALaw.loguniform(0.5, 2.0)
    assert m_estimate(law, 10, 0.0, 5, 1).point == 1.0
    assert m_estimate(law, 1, 0.6, 5, 1).point == 1.0
    with pytest.raises(ValueError):
        m_estimate(law, 10, 1.5, 5, 1)


def test_m_constant_law_is_exact():
    est = m_estimate(ALaw.constant(1.0), 12, 0.5, 20, 3)
    assert est.point == pytest.approx(math.sqrt(12), rel=1e-12)
    assert est.stderr < 1e-12


def test_p_trivial_cases():
    law = ALaw.loguniform(0.5, 2.0)
    assert p_estimate(law, 10, 0.5, 5, 1).point == 1.0
    assert p_estimate(law, 1, 3.0, 5, 1).point == 0.0


def _exact_tail(env, a):
    # P^0(T_{-1} ^ T_n > a) by powering the killed transition matrix
    n = env.n
    p = env.p_forward
    P = np.zeros((n, n))
    for i in range(n):
        if i + 1 < n:
            P[i, i + 1] = p[i]
        if i > 0:
            P[i, i - 1] = 1 - p[i]
    v = np.zeros(n)
    v[0] = 1.0
    for _ in range(a):
        v = v @ P
    return v.sum()


def test_p_constant_law_matches_exact():
    n, a = 6, 15
    est = p_estimate(ALaw.constant(1.5), n, a, 40_000, 11)
    exact = _exact_tail(const(1.5, n), a)
    assert abs(est.point - exact) < 4 * math.sqrt(exact * (1 - exact) / 40_000)


def test_projection_binary_symmetric():
    tree = MarkedTree(ALaw.constant(1.0), OffspringLaw.regular(2), 1)
    proj = project_to_path(tree, (1,), (1, 2, 1))
    assert proj.forward == pytest.approx([0.5, 0.5], abs=1e-15)
    assert len(proj.path) == 4  # parent(x), x, x1, y
    assert proj.hit_target_first(0) == pytest.approx(1 / 3, abs=1e-15)


def test_projection_requires_ancestor():
    tree = MarkedTree(ALaw.constant(1.0), OffspringLaw.regular(2), 1)
    with pytest.raises(NotAncestor):
        project_to_path(tree, (1,), (2, 1))
    with pytest.raises(NotAncestor):
        project_to_path(tree, (1, 1), (1,))


def test_projection_uses_marks():
    tree = MarkedTree(ALaw.loguniform(0.5, 2.0), OffspringLaw((0.3, 0.4, 0.3)), 8)
    proj = project_to_path(tree, (), (1,))
    rec = tree.expand(())
    assert proj.forward[0] == pytest.approx(rec.marks[0] / (1 + rec.marks[0]), abs=1e-15)
    deep = project_to_path(tree, (1,), (1, 1, 1, 1))
    assert np.allclose(deep.forward + deep.backward, 1.0, atol=1e-15)
    assert np.all((deep.forward > 0) & (deep.forward < 1))


@pytest.mark.parametrize("seed", range(20))
def test_projection_dominates_tree(seed):
    tree, x, y = random_domination_case(generator(seed))
    res = domination_check(tree, x, y)
    assert res.max_violation <= 1e-12
    assert np.all(res.tree_target + res.tree_parent <= 1 + 1e-12)


@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_growth_rate_settles(lam):
    # ln m(n, lam) / n between n = 40 and n = 60 for the symmetric two-point law
    from rwre.line_walk import m_growth_rates
    sym = ALaw.two_point(0.5, 2.0, 0.5)
    (_, _, _, r40), (_, _, _, r60) = m_growth_rates(sym, [40, 60], lam, 10_000, 397)
    assert abs(r40 - r60) < 0.02, (r40, r60)
