"""Self-contained cross-check suites.

``quick`` runs the exact identities and oracle equivalences (well under a
minute); ``full`` adds the Monte Carlo acceptance experiments.  A fault can
be injected into the circuit formulas to confirm the suite notices.
"""

from __future__ import annotations

import contextlib
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np
from scipy import stats

from .. import law as L
from .. import lerrw as LR
from .. import line_walk as LW
from .. import tree_walk as TW
from ..gw_tree import MarkedTree, count_descendants
from ..rng import generator
from . import acceptance
from .commands import oracle_max_diff


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0


FAULTS = ("circuit",)


@contextlib.contextmanager
def injected_fault(name: Optional[str]) -> Iterator[None]:
    """Temporarily corrupt a formula; ``None`` leaves everything intact."""
    if name is None:
        yield
        return
    if name != "circuit":
        raise ValueError(f"unknown fault {name!r}; choose from {FAULTS}")
    orig_hit, orig_exit = LW.hit_prob_from, LW.expected_exit_time
    LW.hit_prob_from = lambda env, start, n=None: orig_hit(env, start, n) * (1.0 + 1e-6)
    LW.expected_exit_time = lambda env, n=None: orig_exit(env, n) * (1.0 + 1e-6)
    try:
        yield
    finally:
        LW.hit_prob_from, LW.expected_exit_time = orig_hit, orig_exit


# ---------------------------------------------------------------------------
# quick checks; each returns (passed, detail)
# ---------------------------------------------------------------------------

SYM = L.ALaw.two_point(0.5, 2.0, 0.5)


def chk_moment_examples():
    vals = [L.moment_transform(L.ALaw.constant(1.0), 7.0), L.moment_transform(SYM, 1.0),
            L.moment_transform(SYM, 0.0)]
    ok = abs(vals[0] - 1) < 1e-15 and abs(vals[1] - 1.25) < 1e-14 and vals[2] == 1.0
    return ok, {"values": vals}


def chk_lambda_closed_form():
    lam = L.lambda_exponent(SYM, 0.5)
    ref = 2 * math.acosh(2.0) / math.log(2.0)
    lam95 = L.lambda_exponent(SYM, 0.95)
    ref95 = 2 * math.acosh(1 / 0.95) / math.log(2.0)
    err = max(abs(lam - ref), abs(lam95 - ref95))
    inf_ok = L.lambda_exponent(SYM, 0.0) == math.inf and L.lambda_exponent(L.ALaw.constant(2.0), 0.5) == math.inf
    return err < 1e-9 and inf_ok, {"abs_err": err}


def chk_kappa():
    k = L.solomon_kappa(L.ALaw.two_point(1 / 3, 3.0, 0.7))
    ref = math.log(7 / 3) / math.log(3)
    return abs(k - ref) < 1e-9 and L.solomon_kappa(SYM) is None, {"kappa": k, "ref": ref}


def chk_big_L():
    v, tb = L.big_L(L.transform_table(SYM), 1.0)
    ref = math.log(math.cosh(math.log(2) / 2))
    v2, tb2 = L.big_L(L.transform_table(L.ALaw.constant(2.0)), 1.0)
    ok = abs(v - ref) < 1e-9 and abs(tb + 0.5) < 1e-8 and v2 == 0 and tb2 == 0
    return ok, {"L1": v, "ref": ref, "t_bar": tb}


def chk_legendre_duality():
    law = L.ALaw.finite([0.3, 0.9, 2.5], [0.2, 0.5, 0.3])
    tab = L.transform_table(law)
    worst = 0.0
    for t in np.linspace(-5, 5, 41):
        x = tab.dphi(t)
        worst = max(worst, abs(tab.I(x) - (t * x - tab.phi(t))))
    return worst < 1e-7, {"max_err": worst}


def chk_phi_convex():
    rng = generator(101)
    worst = 0.0
    for _ in range(200):
        law = acceptance.random_finite_law(rng)
        grid = np.sort(rng.uniform(-6, 6, 30))
        grid = np.linspace(grid[0], grid[-1], 30)
        ph = np.array([law.phi(t) for t in grid])
        worst = min(worst, float(np.min(ph[:-2] - 2 * ph[1:-1] + ph[2:])))
    return worst >= -1e-9 and SYM.phi(0.0) == 0.0, {"min_second_difference": worst}


def chk_L_prime_direct():
    rng = generator(102)
    worst = 0.0
    for _ in range(4):
        tab = L.transform_table(acceptance.random_finite_law(rng))
        for q1 in (0.2, 0.8):
            worst = max(worst, abs(L.big_L_prime_direct(tab, q1) - L.big_L_prime(tab, q1)))
    return worst < 1e-5, {"max_abs_diff": worst}


def chk_sublevel_chord():
    tab = L.transform_table(SYM)
    bad = 0
    for q1 in (0.3, 0.5, 0.7, 0.9, 0.95):
        lam_ = L.lambda_exponent(SYM, q1)
        for lam in np.linspace(0.02, 1.0, 50):
            if abs(lam - lam_) < 1e-3:
                continue
            if (L.big_L(tab, lam)[0] < math.log(1 / q1)) != (lam < lam_):
                bad += 1
    return bad == 0, {"mismatches": bad}


def chk_lambda_positive():
    rng = generator(103)
    bad = 0
    for _ in range(50):
        law = acceptance.random_finite_law(rng)
        off = L.OffspringLaw(tuple(rng.dirichlet(np.ones(3))))
        try:
            if L.is_transient(law, off) and not L.lambda_exponent(law, off.q1) > 0:
                bad += 1
        except Exception:
            pass
    return bad == 0, {"violations": bad}


def chk_rows_sum():
    tree = MarkedTree(L.ALaw.loguniform(0.25, 4.0), L.OffspringLaw((0.3, 0.4, 0.3)), 104)
    ids = np.arange(1, 2)
    while tree.n_nodes < 10_000:
        ids = tree.level_ids_from(ids)
    worst = 0.0
    for x in range(1, 10_001):
        if tree.first_child[x] < 0:
            continue
        _, _, p = tree.transition_row(x)
        worst = max(worst, abs(sum(p) - 1.0))
    return worst < 1e-12, {"max_row_error": worst}


def chk_seed_determinism():
    law, off = L.ALaw.loguniform(0.25, 4.0), L.OffspringLaw((0.3, 0.4, 0.3))
    t1, t2 = MarkedTree(law, off, 105), MarkedTree(law, off, 105)
    addrs = [(), (1,), (1, 1), (2,), (1, 2), (2, 1)]
    addrs = [a for a in addrs if _exists(t1, a)]
    r1 = [t1.expand(a) for a in addrs]
    r2 = [t2.expand(a) for a in reversed(addrs)][::-1]
    return r1 == r2, {"vertices": len(addrs)}


def _exists(tree, a):
    try:
        tree.node_id(a)
        return True
    except KeyError:
        return False


def chk_regular_counts():
    t2 = MarkedTree(SYM, L.OffspringLaw.regular(2), 106)
    t3 = MarkedTree(SYM, L.OffspringLaw.regular(3), 106)
    tl = MarkedTree(SYM, L.OffspringLaw.line(), 106)
    vals = (count_descendants(t2, (), 3), count_descendants(t3, (), 2), count_descendants(tl, (), 10))
    return vals == (8, 9, 1), {"counts": vals}


def chk_circuit_oracle():
    d = oracle_max_diff(500, 50, 107)
    return d < 1e-10, {"max_abs_diff": d}


def chk_hit_bracket():
    rng = generator(108)
    bad = 0
    for _ in range(200):
        n = int(rng.integers(1, 60))
        env = LW.random_environment(L.ALaw.loguniform(1 / 3, 3.0), n, rng)
        M = env.M
        for i in range(n + 1):
            p = LW.hit_prob_before_minus1(env, i)
            up = math.exp(-M[i])
            if not (up / (n + 1) * (1 - 1e-12) <= p <= up * (1 + 1e-12)):
                bad += 1
    return bad == 0, {"violations": bad}


def chk_exit_examples():
    e1 = LW.expected_exit_time(LW.LineEnvironment(np.array([3.7])))
    e2 = LW.expected_exit_time(LW.LineEnvironment(np.ones(12)))
    h = LW.oracle_solve(LW.LineEnvironment(np.array([2.0, 2.0])))[0][0]
    ok = abs(e1 - 1) < 1e-12 and abs(e2 - 12) < 1e-10 and abs(h - 4 / 7) < 1e-14
    return ok, {"n1": e1, "flat12": e2, "ruin": h}


def chk_domination():
    rng = generator(109)
    worst = -math.inf
    for _ in range(100):
        tree, x, y = acceptance.random_domination_case(rng)
        worst = max(worst, LW.domination_check(tree, x, y).max_violation)
    return worst <= 1e-10, {"max_violation": worst}


def chk_beta_recursion():
    line = MarkedTree(L.ALaw.constant(2.0), L.OffspringLaw.line(), 110)
    lo, hi = TW.estimate_beta_recursion(line, (), 30)
    tree = MarkedTree(L.ALaw.constant(4.0), L.OffspringLaw.regular(2), 110)
    lo2, hi2 = TW.estimate_beta_recursion(tree, (), 20)
    ok = abs(hi - 0.5) < 1e-6 and hi2 - lo2 < 1e-4 and lo2 <= 7 / 8 <= hi2
    return ok, {"line_hi": hi, "binary": [lo2, hi2]}


def chk_urn_bookkeeping():
    rng = generator(111)
    bad = 0
    for trial in range(20):
        b = int(rng.integers(2, 5))
        delta = float(rng.uniform(0.1, 3.0))
        st = LR.UrnState(b, delta)
        for u in rng.random(200):
            before = st.position
            e = LR.urn_step(st, u)
            after = st.position
            # stepping straight back along e
            back = before
            probs = dict(st.probabilities())
            w_e = st.weight(e)
            if abs(probs[back] - w_e / st.total_weight(after)) > 1e-12:
                bad += 1
        if abs(st.excess() - 200 * delta) > 1e-9 * 200 * delta:
            bad += 1
    return bad == 0, {"violations": bad}


def chk_beta_marginals():
    x = np.array([0.01, 0.2, 0.5, 0.9, 0.999])
    worst = 0.0
    for b in (2, 3, 5):
        worst = max(worst, float(np.max(np.abs(LR.f1_cdf(x, b) - stats.beta(0.5, (b + 1) / 2).cdf(x)))))
        worst = max(worst, float(np.max(np.abs(LR.f0_cdf(x, b) - stats.beta(1.0, b / 2).cdf(x)))))
    return worst < 1e-9, {"max_cdf_err": worst}


def chk_equivalence_small():
    r = LR.equivalence_test(2, 1.0, 4, 20_000, 112)
    neg = LR.equivalence_test(2, 1.0, 4, 20_000, 112, child_param=1.0)
    return r.pvalue > 1e-3 and neg.pvalue < 1e-6, {"p": r.pvalue, "negative_p": neg.pvalue}


QUICK: list[tuple[str, Callable]] = [
    ("law.moment_transform_examples", chk_moment_examples),
    ("law.lambda_closed_form", chk_lambda_closed_form),
    ("law.kappa_closed_form", chk_kappa),
    ("law.big_L_symmetric", chk_big_L),
    ("law.legendre_duality", chk_legendre_duality),
    ("law.phi_convexity", chk_phi_convex),
    ("law.L_prime_direct_matches_minus_Lambda", chk_L_prime_direct),
    ("law.sublevel_chord_duality", chk_sublevel_chord),
    ("law.Lambda_positive_when_transient", chk_lambda_positive),
    ("gw_tree.transition_rows_sum_to_one", chk_rows_sum),
    ("gw_tree.seed_determinism", chk_seed_determinism),
    ("gw_tree.regular_counts", chk_regular_counts),
    ("line_walk.circuit_oracle_equivalence", chk_circuit_oracle),
    ("line_walk.hit_probability_bracket", chk_hit_bracket),
    ("line_walk.exit_time_examples", chk_exit_examples),
    ("line_walk.projection_domination", chk_domination),
    ("tree_walk.beta_recursion_brackets", chk_beta_recursion),
    ("lerrw.urn_bookkeeping_and_reversal", chk_urn_bookkeeping),
    ("lerrw.beta_marginal_cdfs", chk_beta_marginals),
    ("lerrw.equivalence_small", chk_equivalence_small),
]


def run_suite(level: str = "quick", fault: Optional[str] = None,
              report: Callable[[str], None] = print) -> list:
    """Run the checks of ``level``; returns :class:`CheckResult` objects in order."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    out = []
    with injected_fault(fault):
        for name, fn in QUICK:
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # a crashing check is a failed check
                ok, detail = False, {"error": repr(exc)}
            res = CheckResult(name, bool(ok), detail, time.perf_counter() - t0)
            report(f"{'PASS' if res.passed else 'FAIL'} {name} ({res.seconds:.2f}s)")
            out.append(res)
        if level == "full":
            for k, fn in sorted(acceptance.CRITERIA.items()):
                r = fn()
                report(r.line())
                out.append(CheckResult(f"acceptance.criterion_{k}", r.passed, r.detail, r.seconds))
    return out
