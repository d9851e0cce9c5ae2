import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from rwre.errors import InsufficientSamples
from rwre.lerrw import (UrnState, check_theorem_errw_hypothesis, speed_upper_bound, decode_prefix,
                        dirichlet_params, equivalence_test, errw_hypothesis_report, f0_cdf, f1_cdf, f1_pdf,
                        lerrw_speed, marginal_ks, run_urn, sample_beta_env, urn_step)
from rwre.rng import generator


def test_urn_first_steps():
    s = UrnState(2)
    assert [p for _, p in s.probabilities()] == [0.5, 0.5]
    assert urn_step(s, 0.1) == (1,)
    assert s.position == (1,)
    probs = dict(s.probabilities())
    assert probs[()] == pytest.approx(2 / 4)
    assert probs[(1, 1)] == pytest.approx(1 / 4) and probs[(1, 2)] == pytest.approx(1 / 4)
    assert urn_step(s, 0.0) == (1,)  # back over the reinforced edge
    assert s.position == () and s.weight((1,)) == 3.0


def test_urn_validation():
    with pytest.raises(ValueError):
        UrnState(1)
    with pytest.raises(ValueError):
        UrnState(2, delta=-1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.sampled_from([0.5, 1.0, 3.0]), st.integers(1, 400), st.integers(0, 2**32))
def test_urn_bookkeeping(b, delta, steps, seed):
    s = run_urn(b, delta, steps, seed)
    assert s.steps == steps
    assert s.excess() == pytest.approx(delta * steps)
    on_path = {s.position[:k] for k in range(1, len(s.position) + 1)}
    for e, w in s.weights.items():
        crossings = round((w - 1.0) / delta)
        # an edge is crossed an odd number of times iff it lies between the root and the walker
        assert (crossings % 2 == 1) == (e in on_path)
    for v in [s.position, ()]:
        assert sum(p for _, p in s.probabilities(v)) == pytest.approx(1.0)
        local = sum(round((s.weight(e) - 1.0) / delta) for e in s.incident(v))
        assert s.total_weight(v) == pytest.approx(len(s.incident(v)) + delta * local)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.sampled_from([0.5, 1.0, 2.0]), st.integers(0, 200), st.integers(0, 2**32),
       st.floats(0, 1, exclude_max=True))
def test_urn_reversal_consistency(b, delta, steps, seed, u):
    s = run_urn(b, delta, steps, seed)
    e = s.incident(s.position)
    w_before = {x: s.weight(x) for x in e}
    edge = urn_step(s, u)
    back = edge[:-1] if s.position == edge else edge
    probs = dict(s.probabilities())
    assert probs[back] == pytest.approx((w_before[edge] + delta) / s.total_weight(s.position))


def test_dirichlet_params():
    assert dirichlet_params(3) == (1.0, 0.5, 0.5)
    assert dirichlet_params(3, 2.0) == (0.75, 0.25, 0.25)


def test_beta_env_rows():
    x = sample_beta_env(3, generator(1), size=1000)
    assert x.shape == (1000, 4)
    assert np.allclose(x.sum(axis=1), 1.0)
    r = sample_beta_env(3, generator(1), size=10, root=True)
    assert np.all(r[:, 0] == 0) and np.allclose(r.sum(axis=1), 1.0)
    node = sample_beta_env(2, generator(2))
    assert node.omega_parent + sum(node.omega_children) == pytest.approx(1.0)


@pytest.mark.parametrize("b", [2, 3, 5, 10])
def test_marginal_cdfs_match_beta(b):
    x = np.linspace(0, 1, 201)
    assert np.max(np.abs(f0_cdf(x, b) - stats.beta.cdf(x, 1, b / 2))) < 1e-13
    assert np.max(np.abs(f1_cdf(x, b) - stats.beta.cdf(x, 0.5, (b + 1) / 2))) < 1e-12
    xi = x[1:-1]
    assert np.allclose(f1_pdf(xi, b), stats.beta.pdf(xi, 0.5, (b + 1) / 2), rtol=1e-10)


@pytest.mark.parametrize("b", [2, 3, 6])
def test_marginal_ks(b):
    p0, p1 = marginal_ks(b, 100_000, 5)
    assert p0 > 0.01 and p1 > 0.01


def test_decode_prefix():
    assert decode_prefix(0, 2, 3) == "ppp"
    assert decode_prefix(1 + 0 * 3 + 2 * 9, 2, 3) == "1p2"


def test_equivalence_single_step():
    res = equivalence_test(3, s=1, replicates=20_000, seed=1)
    assert res.dof == 2
    assert res.pvalue > 0.001


def test_equivalence_accepts_true_representation():
    assert equivalence_test(2, s=5, replicates=50_000, seed=2).pvalue > 0.001


def test_negative_control_rejected():
    res = equivalence_test(2, s=6, replicates=50_000, seed=3, child_param=1.0)
    assert res.pvalue < 1e-6


def test_equivalence_needs_samples():
    with pytest.raises(InsufficientSamples):
        equivalence_test(3, s=6, replicates=3, seed=1)
    with pytest.raises(ValueError):
        equivalence_test(3, s=11, replicates=100)


def test_equivalence_pvalues_uniform():
    ps = [equivalence_test(2, s=6, replicates=20_000, seed=100 + i).pvalue for i in range(50)]
    assert stats.kstest(ps, "uniform").pvalue > 0.01


def test_speed_below_bound():
    v = lerrw_speed(3, 1.0, 4000, 40, 1)
    assert 0 < v.point < speed_upper_bound(3)
    assert speed_upper_bound(2) == 0.5
    with pytest.raises(ValueError):
        lerrw_speed(1, 1.0, 10, 2, 1)


def test_speed_seed_determinism():
    assert lerrw_speed(2, 1.0, 500, 5, 9) == lerrw_speed(2, 1.0, 500, 5, 9)


def test_moment_hypothesis():
    # the tail index of omega_parent / (1 - omega_parent) is b/2
    assert check_theorem_errw_hypothesis(3)
    assert not check_theorem_errw_hypothesis(2)
    r2 = errw_hypothesis_report(2)
    assert r2.tail_index == pytest.approx(1.0, abs=4 * r2.tail_stderr)
    # Hill is biased low for larger indices at this k, so only check the ordering
    r3, r10 = errw_hypothesis_report(3), errw_hypothesis_report(10, samples=200_000)
    assert r10.holds and r10.tail_index > r3.tail_index > r2.tail_index
    with pytest.raises(ValueError):
        check_theorem_errw_hypothesis(1)
