import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwre.errors import BorderlineCriterion
from rwre.harness.acceptance import random_finite_law
from rwre.law import (ALaw, OffspringLaw, big_L, big_L_prime, big_L_prime_direct, is_transient, lambda_exponent,
                      legendre, moment_transform, solomon_kappa, transform_table)
from rwre.rng import generator

SYM = ALaw.two_point(0.5, 2.0, 0.5)

# independent high-precision values (mpmath, 30 digits)
LAMBDA_SYM_05 = 3.7999372539059833957
LAMBDA_SYM_095 = 0.93208613792771874343
KAPPA_THIRDS = 0.77124374916142226007
L1_SYM = 0.058891517828191727269
TBAR_THIRDS_05 = -0.63562187458071113003


def test_moment_transform_examples():
    assert moment_transform(ALaw.constant(1.0), 7.0) == pytest.approx(1.0, abs=1e-15)
    assert moment_transform(SYM, 1.0) == pytest.approx(1.25, abs=1e-14)
    assert moment_transform(SYM, 0.0) == 1.0


def test_moment_transform_density_matches_closed_form():
    law = ALaw.uniform(0.5, 2.0)
    t = 1.7
    exact = (2.0 ** (t + 1) - 0.5 ** (t + 1)) / ((t + 1) * 1.5)
    assert moment_transform(law, t) == pytest.approx(exact, rel=1e-10)


def test_is_transient_examples():
    assert is_transient(SYM, OffspringLaw.regular(2))
    assert not is_transient(ALaw.constant(1 / 3), OffspringLaw.regular(2))
    assert is_transient(ALaw.constant(1.0), OffspringLaw((0.5, 0.5)))


def test_is_transient_borderline():
    # inf over [0, 1] of E[A^t] for A = 1/2 is 1/2 = 1/m for the binary tree
    with pytest.raises(BorderlineCriterion):
        is_transient(ALaw.constant(0.5), OffspringLaw.regular(2))


def test_lambda_exponent_examples():
    assert lambda_exponent(SYM, 0.0) == math.inf
    assert lambda_exponent(SYM, 0.5) == pytest.approx(LAMBDA_SYM_05, abs=1e-9)
    assert lambda_exponent(SYM, 0.95) == pytest.approx(LAMBDA_SYM_095, abs=1e-9)
    assert lambda_exponent(ALaw.constant(2.0), 0.5) == math.inf
    assert lambda_exponent(ALaw.two_point(1.5, 3.0, 0.5), 0.5) == math.inf


def test_solomon_kappa_examples():
    assert solomon_kappa(ALaw.two_point(1 / 3, 3.0, 0.7)) == pytest.approx(KAPPA_THIRDS, abs=1e-9)
    assert solomon_kappa(SYM) is None
    law = ALaw.two_point(0.5, 2.0, 2 / 3)  # E[1/A] = (1/3)*2 + (2/3)*(1/2) = 1
    assert solomon_kappa(law) == pytest.approx(1.0, abs=1e-9)


def test_legendre_examples():
    assert legendre(transform_table(ALaw.constant(math.e)), 1.0) == pytest.approx(0.0, abs=1e-12)
    assert legendre(transform_table(ALaw.constant(math.e)), 0.5) == math.inf
    tab = transform_table(SYM)
    assert legendre(tab, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert legendre(tab, 2.0) == math.inf
    law = ALaw.finite([0.3, 1.4, 2.5], [0.2, 0.5, 0.3])
    assert legendre(transform_table(law), law.mean_log()) == pytest.approx(0.0, abs=1e-10)


def test_legendre_endpoint_is_minus_log_atom():
    tab = transform_table(SYM)
    assert legendre(tab, math.log(2.0)) == pytest.approx(math.log(2.0), abs=1e-8)


def test_big_L_examples():
    v, tb = big_L(transform_table(SYM), 1.0)
    assert v == pytest.approx(L1_SYM, abs=1e-10)
    assert tb == pytest.approx(-0.5, abs=1e-8)
    assert big_L(transform_table(ALaw.constant(2.0)), 1.0) == (0.0, 0.0)
    assert big_L(transform_table(SYM), 1e-6)[0] < 1e-12


def test_big_L_zero_branch():
    v, tb = big_L(transform_table(ALaw.two_point(1 / 3, 3.0, 0.7)), 0.5)
    assert v == 0.0
    assert tb == pytest.approx(TBAR_THIRDS_05, abs=1e-9)


def test_big_L_prime_examples():
    tab = transform_table(SYM)
    assert big_L_prime(tab, 0.0) == -math.inf
    assert big_L_prime(tab, 0.5) == pytest.approx(-LAMBDA_SYM_05, abs=1e-9)
    assert big_L_prime(tab, 0.95) == pytest.approx(-LAMBDA_SYM_095, abs=1e-9)
    assert big_L_prime_direct(tab, 0.95) == pytest.approx(-LAMBDA_SYM_095, abs=1e-5)


def test_lambda_for_density_law():
    # log-uniform on [1/2, 2]: E[A^t] = sinh(t ln 2) / (t ln 2); invert directly
    law = ALaw.loguniform(0.5, 2.0)
    c = math.log(2.0)
    from scipy.optimize import brentq
    t = brentq(lambda t: math.sinh(t * c) / (t * c) - 2.0, 0.1, 10.0)
    assert lambda_exponent(law, 0.5) == pytest.approx(2 * t, abs=1e-8)


# -- properties ---------------------------------------------------------------

laws = st.integers(0, 2**32 - 1).map(lambda s: random_finite_law(generator(s)))


@settings(max_examples=200, deadline=None)
@given(laws, st.floats(-8, 0), st.floats(0.05, 1.0), st.integers(5, 60))
def test_phi_zero_and_convex(law, start, h, k):
    assert law.phi(0.0) == 0.0
    grid = start + h * np.arange(k)
    ph = np.array([law.phi(t) for t in grid])
    assert np.all(ph[:-2] - 2 * ph[1:-1] + ph[2:] >= -1e-9)


@settings(max_examples=25, deadline=None)
@given(laws, st.floats(-5, 5))
def test_legendre_duality(law, t):
    tab = transform_table(law)
    x = tab.dphi(t)
    assert tab.I(x) == pytest.approx(t * x - tab.phi(t), abs=1e-7)


@settings(max_examples=25, deadline=None)
@given(laws, st.floats(-3, 3))
def test_rate_function_nonnegative(law, x):
    assert transform_table(law).I(x) >= -1e-12


@settings(max_examples=10, deadline=None)
@given(laws, st.sampled_from([0.1, 0.4, 0.8]))
def test_direct_L_prime_matches_minus_lambda(law, q1):
    tab = transform_table(law)
    assert big_L_prime_direct(tab, q1) == pytest.approx(-lambda_exponent(law, q1), abs=1e-5)


@pytest.mark.parametrize("q1", [0.3, 0.5, 0.7, 0.9, 0.95])
def test_sublevel_chord_duality(q1):
    tab = transform_table(SYM)
    lam_ = lambda_exponent(SYM, q1)
    for lam in np.linspace(0.02, 1.0, 50):
        if abs(lam - lam_) < 1e-3:
            continue
        assert (big_L(tab, lam)[0] < math.log(1 / q1)) == (lam < lam_)


def test_lambda_positive_when_transient():
    rng = generator(17)
    seen = 0
    for _ in range(50):
        law = random_finite_law(rng)
        off = OffspringLaw(tuple(rng.dirichlet(np.ones(3))))
        try:
            tr = is_transient(law, off)
        except BorderlineCriterion:
            continue
        if tr:
            seen += 1
            assert lambda_exponent(law, off.q1) > 0
    assert seen > 10


@pytest.mark.parametrize("lam", [0.25, 0.5])
def test_geometric_bound_below_lambda(lam):
    # for lam < Lambda the series sum m(n, lam) r^n converges with
    # r = exp(-(ln(1/q1) + L(lam)) / 2); check the empirical growth rate sits below -ln r
    from rwre.line_walk import m_growth_rates
    q1 = 0.5
    assert lam < lambda_exponent(SYM, q1)
    v, _ = big_L(transform_table(SYM), lam)
    assert v < math.log(1 / q1)
    threshold = (math.log(1 / q1) + v) / 2
    for n, m, se, rate in m_growth_rates(SYM, [20, 40, 60], lam, 4000, 51):
        assert math.log(m + 3 * se) / n < threshold


def test_offspring_validation():
    with pytest.raises(ValueError):
        OffspringLaw((0.5, 0.4))
    assert OffspringLaw((0.5, 0.5)).mean == 1.5


def test_alaw_validation():
    with pytest.raises(ValueError):
        ALaw.finite([0.5, 2.0], [0.5, 0.4])
    with pytest.raises(ValueError):
        ALaw.finite([0.1, 2.0], [0.5, 0.5], alpha=4.0)
