"""The twelve end-to-end acceptance experiments.

Each ``criterion_k`` runs one experiment at its stated size and tolerance
and returns a :class:`CriterionResult` carrying the measured values.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import law as L
from .. import lerrw as LR
from .. import line_walk as LW
from .. import tree_walk as TW
from ..gw_tree import MarkedTree
from ..rng import derive, generator, replicate_seed
from .commands import oracle_max_diff


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        parts = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.number} ({self.title}): {parts}; {self.seconds:.1f}s"


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(str(_short(x)) for x in v) + "]"
    return str(v)


def _timed(number: int, title: str, fn: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    dt = time.perf_counter() - t0
    if "time_limit" in detail:
        detail["within_time"] = dt < detail["time_limit"]
        passed = passed and detail["within_time"]
    return CriterionResult(number, title, bool(passed), detail, dt)


SYMMETRIC = L.ALaw.two_point(0.5, 2.0, 0.5)


def criterion_1(seed: int = 1) -> CriterionResult:
    def run():
        lam = L.lambda_exponent(SYMMETRIC, 0.5)
        # cosh(t ln 2) = 2 inverted directly
        ref = 2.0 * math.acosh(2.0) / math.log(2.0)
        err = abs(lam - ref)
        return err < 1e-9, {"Lambda": lam, "closed_form": ref, "abs_err": err, "time_limit": 1.0}
    return _timed(1, "Lambda closed form", run)


def random_finite_law(rng: np.random.Generator, alpha: float = 4.0) -> L.ALaw:
    """Finite law with support on both sides of 1 inside ``[1/alpha, alpha]``."""
    k = int(rng.integers(2, 6))
    la = math.log(alpha)
    lows = -rng.uniform(0.05, 1.0, 1) * la
    highs = rng.uniform(0.05, 1.0, 1) * la
    rest = rng.uniform(-la, la, k - 2)
    vals = np.exp(np.concatenate([lows, highs, rest]))
    probs = rng.dirichlet(np.ones(k))
    return L.ALaw.finite(vals, probs, alpha=alpha)


def criterion_2(seed: int = 2) -> CriterionResult:
    def run():
        rng = generator(seed)
        worst = 0.0
        q1s = (0.1, 0.3, 0.5, 0.7, 0.9)
        for _ in range(20):
            tab = L.transform_table(random_finite_law(rng))
            for q1 in q1s:
                a = L.big_L_prime_direct(tab, q1)
                b = L.big_L_prime(tab, q1)
                worst = max(worst, abs(a - b))
        return worst < 1e-5, {"laws": 20, "q1": list(q1s), "max_abs_diff": worst, "time_limit": 30.0}
    return _timed(2, "direct L' equals -Lambda", run)


def criterion_3(seed: int = 3) -> CriterionResult:
    def run():
        d = oracle_max_diff(500, 50, seed)
        return d < 1e-10, {"environments": 500, "max_n": 50, "max_abs_diff": d, "time_limit": 10.0}
    return _timed(3, "circuit formulas vs linear solve", run)


def criterion_4(seed: int = 4, steps: int = 10**6, replicates: int = 100) -> CriterionResult:
    def run():
        line = L.OffspringLaw.line()
        a = L.ALaw.two_point(1 / 3, 3.0, 0.7)
        kappa = L.solomon_kappa(a)
        d = TW.escape_depths(a, line, [steps], replicates, seed)
        speed_a = float(d[:, 0].mean() / steps)
        med = TW.exponent_table(d, [steps])[0].median
        ok_a = speed_a < 0.03 and abs(med - kappa) <= 0.15
        b = L.ALaw.constant(2.0)
        nb = 10**5
        db = TW.escape_depths(b, line, [nb], replicates, derive(seed, 1))
        speed_b = float(db[:, 0].mean() / nb)
        ok_b = abs(speed_b - 1 / 3) <= 0.02
        return ok_a and ok_b, {"kappa": kappa, "speed_a": speed_a, "median_exponent_a": med,
                               "speed_b": speed_b, "a_ok": ok_a, "b_ok": ok_b}
    return _timed(4, "line-tree regimes", run)


def criterion_5(seed: int = 5) -> CriterionResult:
    def run():
        est = TW.estimate_speed(SYMMETRIC, L.OffspringLaw.regular(2), 10**5, 200, seed)
        lo, hi = est.ci(0.99)
        return lo > 0, {"speed": est.point, "stderr": est.stderr, "ci99": [lo, hi], "time_limit": 300.0}
    return _timed(5, "positive speed on the binary tree", run)


def criterion_6(seed: int = 6, steps: int = 10**6, replicates: int = 100) -> CriterionResult:
    def run():
        off = L.OffspringLaw((0.95, 0.05))
        lam = L.lambda_exponent(SYMMETRIC, 0.95)
        d = TW.escape_depths(SYMMETRIC, off, [steps], replicates, seed)
        med = TW.exponent_table(d, [steps])[0].median
        speed = float(d[:, 0].mean() / steps)
        ok = 0.6 <= med <= 0.98 and speed < 0.02
        return ok, {"Lambda": lam, "median_exponent": med, "speed": speed}
    return _timed(6, "zero-speed regime", run)


def criterion_7(seed: int = 7, walks: int = 20, steps: int = 10**5, horizon: int = 1000,
                beta_trees: int = 20, beta_walks: int = 500) -> CriterionResult:
    def run():
        a, off = L.ALaw.constant(4.0), L.OffspringLaw.regular(2)
        gaps, recs_all = [], []
        for r in range(walks):
            s = replicate_seed(seed, r)
            tree = MarkedTree(a, off, s)
            traj = TW.run_walk(tree, steps)
            recs = TW.detect_regenerations(traj, tree, horizon)
            recs_all.extend(recs)
            gaps.append(TW.regeneration_statistics(recs).level_gaps)
        gap = float(np.concatenate(gaps).mean())
        cens = TW.censoring_rate(recs_all)
        betas = []
        for r in range(beta_trees):
            s = replicate_seed(derive(seed, 1), r)
            tree = MarkedTree(a, off, s)
            betas.append(TW.estimate_beta_mc(tree, (), horizon, beta_walks, seed=s).point)
        beta = float(np.mean(betas))
        prod = gap * beta
        ok = 0.9 <= prod <= 1.1 and cens < 0.05
        return ok, {"mean_level_gap": gap, "beta_mc": beta, "product": prod, "censoring_rate": cens}
    return _timed(7, "renewal identity", run)


def criterion_8(seed: int = 8, replicates: int = 10**4) -> CriterionResult:
    def run():
        a, off = L.ALaw.constant(4.0), L.OffspringLaw.regular(2)
        vals = [TW.visited_per_generation(a, off, n, replicates, derive(seed, n)).point for n in (5, 10, 20, 40)]
        ratio = max(vals) / min(vals)
        return ratio < 2, {"levels": [5, 10, 20, 40], "visited": vals, "ratio": ratio}
    return _timed(8, "visited vertices per generation", run)


def random_domination_case(rng: np.random.Generator):
    """A random marked tree with a path ``x <= y`` inside its first 8 generations."""
    a = random_finite_law(rng)
    off = L.OffspringLaw(tuple(rng.dirichlet(np.ones(3))))
    tree = MarkedTree(a, off, int(rng.integers(2**63)))
    x = ()
    for _ in range(int(rng.integers(0, 3))):
        x = x + (int(rng.integers(1, tree.expand(x).nu + 1)),)
    y = x
    for _ in range(int(rng.integers(1, 6))):
        y = y + (int(rng.integers(1, tree.expand(y).nu + 1)),)
    return tree, x, y


def criterion_9(seed: int = 9, trees: int = 100) -> CriterionResult:
    def run():
        rng = generator(seed)
        worst = -math.inf
        for _ in range(trees):
            tree, x, y = random_domination_case(rng)
            worst = max(worst, LW.domination_check(tree, x, y).max_violation)
        return worst <= 1e-10, {"trees": trees, "max_violation": worst}
    return _timed(9, "projection domination", run)


def criterion_10(seed: int = 10, replicates: int = 10**5) -> CriterionResult:
    def run():
        eq = LR.equivalence_test(2, 1.0, 6, replicates, derive(seed, 1))
        neg = LR.equivalence_test(2, 1.0, 6, replicates, derive(seed, 2), child_param=1.0)
        p0, p1 = LR.marginal_ks(2, 10**5, derive(seed, 3))
        ok = eq.pvalue > 0.01 and neg.pvalue < 1e-6 and p0 > 0.01 and p1 > 0.01
        return ok, {"equivalence_p": eq.pvalue, "negative_control_p": neg.pvalue, "ks_parent_p": p0,
                    "ks_child_p": p1, "time_limit": 300.0}
    return _timed(10, "reinforced walk representation", run)


def criterion_11(seed: int = 11, steps: int = 10**6, replicates: int = 100) -> CriterionResult:
    def run():
        detail, ok = {}, True
        for b in (2, 3, 5):
            e = LR.lerrw_speed(b, 1.0, steps, replicates, derive(seed, b))
            lo, _ = e.ci(0.99)
            good = e.point > 0 and lo > 0 and e.point <= LR.speed_upper_bound(b) + 0.05
            detail[f"v_b{b}"] = e.point
            detail[f"ci99_low_b{b}"] = lo
            ok = ok and good
        e6 = LR.lerrw_speed(2, 6.0, steps, replicates, derive(seed, 6))
        landmark = abs(e6.point) < 2 * e6.stderr
        detail["v_b2_delta6"] = e6.point
        detail["stderr_b2_delta6"] = e6.stderr
        detail["landmark_ok"] = landmark
        return ok and landmark, detail
    return _timed(11, "reinforced walk speed", run)


def criterion_12(seed: int = 12, replicates: int = 10**4, n: int = 60) -> CriterionResult:
    def run():
        L1 = L.big_L(L.transform_table(SYMMETRIC), 1.0)[0]
        est = LW.m_estimate(SYMMETRIC, n, 1.0, replicates, seed)
        rate = math.log(est.point) / n
        return abs(rate - L1) <= 0.02, {"L1": L1, "log_m_over_n": rate, "m_hat": est.point,
                                        "stderr": est.stderr, "time_limit": 120.0}
    return _timed(12, "growth rate of m(n,1)", run)


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 13)}


def run_all(numbers=None, report: Callable[[str], None] = print) -> list:
    out = []
    for k in numbers or sorted(CRITERIA):
        res = CRITERIA[k]()
        report(res.line())
        out.append(res)
    return out


if __name__ == "__main__":
    import sys

    results = run_all([int(a) for a in sys.argv[1:]] or None)
    sys.exit(0 if all(r.passed for r in results) else 1)
