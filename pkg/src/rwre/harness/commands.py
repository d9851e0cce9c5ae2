"""The experiment commands behind the CLI.

Each command takes a parsed configuration and returns a :class:`RunReport`;
per-replicate streams go into the report's tables.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .. import law as L
from .. import lerrw as LR
from .. import line_walk as LW
from .. import tree_walk as TW
from ..errors import BorderlineCriterion, ConfigError, NotTransient
from ..gw_tree import MarkedTree
from ..rng import derive, generator, replicate_seed
from ..stats import EstimateWithCI, map_replicates
from .config import ExperimentConfig
from .report import RunReport


def _new_report(command: str, cfg: ExperimentConfig) -> RunReport:
    return RunReport(command=command, config=dict(cfg.raw), config_hash=cfg.content_hash(), seed=cfg["seed"])


def _verdict(a_law, off) -> str:
    try:
        return "transient" if L.is_transient(a_law, off) else "recurrent"
    except BorderlineCriterion:
        return "borderline"


# ---------------------------------------------------------------------------
# lambda
# ---------------------------------------------------------------------------

def cmd_lambda(cfg: ExperimentConfig) -> RunReport:
    """Analytic exponents of the configured law."""
    a_law, off = cfg.a_law(), cfg.offspring()
    rep = _new_report("lambda", cfg)
    q1 = off.q1
    lam = L.lambda_exponent(a_law, q1) if q1 < 1 else math.nan
    kappa = L.solomon_kappa(a_law)
    rep.analytic["Lambda"] = lam
    rep.analytic["kappa"] = kappa
    rep.analytic["verdict"] = _verdict(a_law, off)
    rep.analytic["mean_offspring"] = off.mean
    rep.analytic["q1"] = q1
    tab = L.transform_table(a_law)
    if q1 < 1:
        rep.analytic["L_prime"] = L.big_L_prime(tab, q1)
        if cfg["analysis.direct_check"] and a_law.is_finite and 0 < q1:
            rep.analytic["L_prime_direct"] = L.big_L_prime_direct(tab, q1)
    rows = []
    for lam_ in cfg["analysis.lambdas"]:
        if not 0 < lam_ <= 1:
            raise ConfigError("lambda values must lie in (0, 1]", field="analysis.lambdas",
                              line=cfg.lines.get("analysis.lambdas"))
        v, tb = L.big_L(tab, lam_)
        rows.append({"lambda": lam_, "L": v, "t_bar": tb})
    rep.tables["big_L"] = rows
    return rep


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _schedule(cfg: ExperimentConfig) -> list:
    steps = cfg["walk.steps"]
    sched = cfg["walk.schedule"]
    if sched is None:
        sched = [10**k for k in range(1, 19) if 10**k < steps] + [steps]
    sched = sorted(set(int(n) for n in sched if 1 <= n <= steps) | {steps})
    return sched


def _simulate_one(args) -> dict:
    a_law, off, seed, steps, schedule, horizon, regen = args
    tree = MarkedTree(a_law, off, seed)
    traj = TW.run_walk(tree, steps, positions=regen)
    g = traj.generations
    top = int(g[-1])
    out = {
        "depths": [int(g[n]) for n in schedule],
        "gen": top,
        "tau": int(traj.tau[top]) if top >= 0 else -1,
        "max_gen": int(g.max()),
    }
    if regen:
        recs = TW.detect_regenerations(traj, tree, horizon)
        ok = [r for r in recs if not r.censored]
        out["regen_count"] = len(ok)
        out["censored_rate"] = TW.censoring_rate(recs)
        out["records"] = [(r.time, r.level) for r in ok]
    return out


def cmd_simulate(cfg: ExperimentConfig, workers: int = 1) -> RunReport:
    """Speed, exponent table and regeneration statistics of the tree walk."""
    a_law, off = cfg.a_law(), cfg.offspring()
    steps, reps, horizon = cfg["walk.steps"], cfg["walk.replicates"], cfg["walk.horizon"]
    cfg.require_positive("walk.steps", "walk.replicates", "walk.horizon")
    if off.is_line:
        transient = a_law.mean_log() > 0
    else:
        transient = L.is_transient(a_law, off)
    if not transient:
        raise NotTransient("the configured walk is recurrent")
    seed = cfg["seed"]
    sched = _schedule(cfg)
    regen = bool(cfg["analysis.regenerations"])
    args = [(a_law, off, replicate_seed(seed, r), steps, sched, horizon, regen) for r in range(reps)]
    res = map_replicates(_simulate_one, args, workers)
    rep = _new_report("simulate", cfg)
    depths = np.array([r["depths"] for r in res], dtype=np.int64)
    rep.estimates["speed"] = EstimateWithCI.from_samples(depths[:, -1] / steps, seed=seed, steps=steps)
    rep.tables["exponent"] = [
        {"n": row.n, "median": row.median, "iqr": row.iqr, "q25": row.q25, "q75": row.q75}
        for row in TW.exponent_table(depths, sched)
    ]
    stream = []
    for i, r in enumerate(res):
        line = {"replicate": i, "n": steps, "gen": r["gen"], "tau": r["tau"]}
        if regen:
            line["regen_count"] = r["regen_count"]
            line["censored_rate"] = r["censored_rate"]
        stream.append(line)
    rep.tables["replicates"] = stream
    if regen:
        lgaps, tgaps, rates = [], [], []
        for r in res:
            recs = r["records"]
            if len(recs) >= 2:
                t = np.array([x[0] for x in recs])
                lv = np.array([x[1] for x in recs])
                tgaps.append(np.diff(t))
                lgaps.append(np.diff(lv))
            rates.append(r["censored_rate"])
        rep.censoring["mean_censored_rate"] = float(np.mean(rates))
        if lgaps:
            lg, tg = np.concatenate(lgaps), np.concatenate(tgaps)
            rep.estimates["regen_level_gap"] = EstimateWithCI.from_samples(lg, seed=seed, horizon=horizon)
            rep.estimates["regen_time_gap"] = EstimateWithCI.from_samples(tg, seed=seed, horizon=horizon)
            rep.analytic["renewal_speed"] = float(lg.mean() / tg.mean())
    if not off.is_line and off.q1 < 1:
        rep.analytic["Lambda"] = L.lambda_exponent(a_law, off.q1)
    rep.analytic["kappa"] = L.solomon_kappa(a_law)
    return rep


# ---------------------------------------------------------------------------
# line
# ---------------------------------------------------------------------------

def oracle_max_diff(n_envs: int, max_n: int, seed: int, a_law: Optional[L.ALaw] = None) -> float:
    """Largest disagreement between the circuit formulas and the linear-solve oracle."""
    a_law = a_law if a_law is not None else L.ALaw.loguniform(0.5, 2.0)
    rng = generator(seed)
    worst = 0.0
    for _ in range(n_envs):
        n = int(rng.integers(1, max_n + 1))
        env = LW.random_environment(a_law, n, rng)
        h, u = LW.oracle_solve(env)
        hc = np.array([LW.hit_prob_from(env, i) for i in range(n)])
        worst = max(worst, float(np.max(np.abs(h - hc))), abs(float(u[0]) - LW.expected_exit_time(env)))
        for i in rng.integers(1, n + 1, size=3):
            # first-passage probabilities against an independent one-sided solve
            hi_, _ = LW.oracle_solve(env, int(i))
            worst = max(worst, abs(LW.hit_prob_before_minus1(env, int(i)) - float(hi_[0])))
    return worst


def cmd_line(cfg: ExperimentConfig, workers: int = 1) -> RunReport:
    """Exact 1-D quantities, m(n, lambda), p(n, a) and oracle agreement."""
    a_law = cfg.a_law()
    seed = cfg["seed"]
    rep = _new_report("line", cfg)
    tab = L.transform_table(a_law)
    reps = cfg["line.replicates"]
    cfg.require_positive("line.replicates")
    rows = []
    for i, n in enumerate(cfg["line.n"]):
        if n < 1:
            raise ConfigError("n must be >= 1", field="line.n", line=cfg.lines.get("line.n"))
        for j, lam in enumerate(cfg["line.lambdas"]):
            if not 0 <= lam <= 1:
                raise ConfigError("lambda must lie in [0, 1]", field="line.lambdas",
                                  line=cfg.lines.get("line.lambdas"))
            est = LW.m_estimate(a_law, n, lam, reps, derive(derive(seed, i), j))
            rows.append({"n": n, "lambda": lam, "m_hat": est.point, "stderr": est.stderr,
                         "log_m_over_n": math.log(est.point) / n,
                         "L": L.big_L(tab, lam)[0] if lam > 0 else 0.0})
    rep.tables["m"] = rows
    prow = []
    for i, n in enumerate(cfg["line.p_n"]):
        for j, a in enumerate(cfg["line.p_a"]):
            est = LW.p_estimate(a_law, n, a, cfg["line.p_replicates"], derive(derive(seed, 1000 + i), j))
            prow.append({"n": n, "a": a, "p_hat": est.point, "stderr": est.stderr})
    rep.tables["p"] = prow
    diff = oracle_max_diff(cfg["line.oracle_envs"], cfg["line.oracle_max_n"], derive(seed, 7))
    rep.analytic["oracle_max_abs_diff"] = diff
    rep.add_check("circuit formulas agree with the linear-solve oracle", diff < 1e-10, max_abs_diff=diff)
    rep.analytic["kappa"] = L.solomon_kappa(a_law)
    rep.analytic["L1"] = L.big_L(tab, 1.0)[0]
    return rep


# ---------------------------------------------------------------------------
# lerrw
# ---------------------------------------------------------------------------

def cmd_lerrw(cfg: ExperimentConfig, workers: int = 1) -> RunReport:
    """Reinforced-walk speed, representation test and marginal goodness of fit."""
    b, delta = cfg["lerrw.b"], cfg["lerrw.delta"]
    if b < 2:
        raise ConfigError("b must be >= 2", field="lerrw.b", line=cfg.lines.get("lerrw.b"))
    cfg.require_positive("lerrw.delta", "lerrw.steps", "lerrw.replicates", "lerrw.eq_replicates")
    s = cfg["lerrw.prefix"]
    if not 1 <= s <= 10:
        raise ConfigError("prefix length must be in 1..10", field="lerrw.prefix", line=cfg.lines.get("lerrw.prefix"))
    seed = cfg["seed"]
    rep = _new_report("lerrw", cfg)
    v = LR.lerrw_speed(b, delta, cfg["lerrw.steps"], cfg["lerrw.replicates"], derive(seed, 1), workers)
    rep.estimates["speed"] = v
    rep.analytic["speed_upper_bound"] = LR.speed_upper_bound(b)
    child = 1.0 if cfg["lerrw.negative_control"] else None
    eq = LR.equivalence_test(b, delta, s, cfg["lerrw.eq_replicates"], derive(seed, 2), child_param=child)
    rep.analytic["equivalence_pvalue"] = eq.pvalue
    rep.analytic["equivalence_dof"] = eq.dof
    rep.analytic["negative_control"] = bool(cfg["lerrw.negative_control"])
    rep.tables["equivalence_cells"] = [{"prefix": c[0] if c[0] is not None else "pooled", "urn": c[1], "env": c[2]}
                                       for c in eq.cells]
    p0, p1 = LR.marginal_ks(b, cfg["lerrw.ks_samples"], derive(seed, 3), delta)
    rep.analytic["ks_parent_pvalue"] = p0
    rep.analytic["ks_child_pvalue"] = p1
    hyp = LR.errw_hypothesis_report(b, seed=derive(seed, 4))
    rep.analytic["moment_hypothesis"] = hyp.holds
    rep.analytic["moment_tail_index"] = hyp.tail_index
    rep.tables["speed"] = [{"b": b, "delta": delta, "steps": cfg["lerrw.steps"], "v_hat": v.point,
                            "stderr": v.stderr}]
    return rep
