"""Offline comparators: the fluid LP bound, its rounding policy, a brute-force
clairvoyant for tiny instances, and an empirical certificate checker.

The LP treats reusability fluidly: a unit matched at time a(t) counts toward
the capacity row at a later time a(tau) with weight 1 - F(a(tau) - a(t)), the
expected fraction still in use. Its optimum upper-bounds every online policy
and the clairvoyant; asymptotically (large capacities) the two benchmarks
coincide, so vs-LP ratios carry empirical slack at desk scale.

The certificate checker evaluates a two-condition linear system whose
feasibility witnesses a competitive ratio: per-resource pseudo-rewards
theta_i + E[sum of lambda_t over arrivals the reference policy serves with i]
must cover alpha * OPT_i, while sum theta + sum lambda stays within
beta * ALG. It reports Monte-Carlo slack; it never proves a theorem.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import model, rng, simplex
from .distributions import Deterministic, NonReusable, TwoPointInf, ZeroOrInf
from .engine import simulate
from .policies import Policy, run_galg

OPTIMAL = simplex.OPTIMAL


class UnsupportedMode(ValueError):
    pass


class TooLarge(ValueError):
    pass


@dataclass
class LpModel:
    """max obj.y s.t. rows.y <= rhs, 0 <= y <= 1 (upper bounds are implied
    by the per-arrival demand rows, so they are not materialized)."""

    instance: model.Instance
    edges: list              # (arrival index, resource id, bid), defines y order
    obj: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray
    row_kinds: list          # ("cap", rid, tau) | ("demand", t)


@dataclass
class LpSolution:
    status: str
    objective: float
    y: dict                  # (arrival index, resource id) -> value
    pivots: int = 0


def build_lp(instance: model.Instance) -> LpModel:
    """Exact fluid LP; capacity rows are emitted once per (resource, arrival
    time bucket with a new edge) because later rows with no new edge have
    pointwise smaller coefficients and the same right-hand side."""
    if instance.mode not in (model.MATCHING, model.BUDGETED):
        raise UnsupportedMode("the LP bound covers matching and budgeted modes")
    edges = list(instance.edges())
    col = {(t, rid): e for e, (t, rid, _) in enumerate(edges)}
    times = np.array([a.time for a in instance.arrivals])
    rewards = {r.id: r.reward for r in instance.resources}

    # Last arrival index of each distinct-time group.
    group_end = {}
    for t, a in enumerate(instance.arrivals):
        group_end[a.time] = t

    n = len(edges)
    row_kinds = []
    data = []
    rhs = []
    for res in instance.resources:
        mine = [(t, bid) for (t, rid, bid) in edges if rid == res.id]
        if not mine:
            continue
        taus = sorted({group_end[times[t]] for t, _ in mine})
        for tau in taus:
            row = np.zeros(n)
            a_tau = times[tau]
            for t, bid in mine:
                if t <= tau:
                    row[col[(t, res.id)]] = bid * (1.0 - res.usage.cdf(a_tau - times[t]))
            data.append(row)
            rhs.append(float(res.capacity))
            row_kinds.append(("cap", res.id, tau))
    for t, a in enumerate(instance.arrivals):
        here = [col[(t, rid)] for (tt, rid, _) in edges if tt == t]
        if not here:
            continue
        row = np.zeros(n)
        row[here] = 1.0
        data.append(row)
        rhs.append(1.0)
        row_kinds.append(("demand", t))

    obj = np.array([bid * rewards[rid] for (_, rid, bid) in edges])
    rows = np.vstack(data) if data else np.zeros((0, n))
    return LpModel(instance=instance, edges=edges, obj=obj, rows=rows,
                   rhs=np.array(rhs), row_kinds=row_kinds)


def solve_lp(lp: LpModel) -> LpSolution:
    res = simplex.solve(lp.obj, lp.rows, lp.rhs)
    y = {(t, rid): float(res.x[e]) for e, (t, rid, _) in enumerate(lp.edges)}
    return LpSolution(status=res.status, objective=res.objective, y=y, pivots=res.pivots)


def lp_value(instance: model.Instance) -> float:
    sol = solve_lp(build_lp(instance))
    if sol.status != OPTIMAL:
        raise RuntimeError(f"LP solve ended with status {sol.status}")
    return sol.objective


class LpRoundingPolicy(Policy):
    """Offline rounding of an LP solution: sample i w.p. y_{it}/(1+2 delta)."""

    name = "lp_rounding"

    def __init__(self, instance: model.Instance, sol: LpSolution):
        super().__init__()
        self.mode = instance.mode
        c_min = min(r.capacity for r in instance.resources)
        self.delta = math.sqrt(math.log(c_min) / c_min) if c_min > 1 else 0.0
        scale = 1.0 / (1.0 + 2.0 * self.delta)
        self._intervals = []
        for t, arr in enumerate(instance.arrivals):
            cum = 0.0
            row = []
            for rid in sorted(arr.demand.bids()):
                w = sol.y.get((t, rid), 0.0) * scale
                if w > 0.0:
                    cum += w
                    row.append((cum, rid))
            self._intervals.append(row)

    def decide(self, t, arrival, state):
        u = rng.uniform(self.trial_seed, rng.TAG_POLICY, t)
        for cum, rid in self._intervals[t]:
            if u < cum:
                if state.available_count(rid) == 0:
                    return None
                if self.mode == model.MATCHING:
                    return rid
                take = min(arrival.demand.bids()[rid], state.available_count(rid))
                return rid, tuple(state.top_ranks(rid, take))
        return None


def lp_rounding_policy(instance: model.Instance, sol: LpSolution) -> LpRoundingPolicy:
    return LpRoundingPolicy(instance, sol)


# --- brute-force clairvoyant ----------------------------------------------------

_FINITE_SUPPORT = (Deterministic, TwoPointInf, ZeroOrInf, NonReusable)


def brute_force_clairvoyant(instance: model.Instance) -> float:
    """Exact expected reward of the optimal non-anticipating offline policy.

    Expectimax over observable states: per unit, either available or in-use
    with its match time and the CDF level already ruled out by observed
    non-return. Durations resolve lazily through conditional return
    probabilities at each next arrival, so decisions never peek at
    unrevealed randomness.
    """
    T = len(instance.arrivals)
    if T > 8:
        raise TooLarge("clairvoyant limited to 8 arrivals")
    if sum(r.capacity for r in instance.resources) > 6:
        raise TooLarge("clairvoyant limited to 6 total units")
    for r in instance.resources:
        if not isinstance(r.usage, _FINITE_SUPPORT):
            raise TooLarge(f"resource {r.id}: clairvoyant needs finite-support durations")
    rids = [r.id for r in instance.resources]
    res = {r.id: r for r in instance.resources}
    times = [a.time for a in instance.arrivals]
    memo = {}

    def advance(state, t_next):
        """Distribution over states after processing returns at arrival t_next."""
        per_unit = []
        for rid in rids:
            for st in state[rids.index(rid)]:
                if st == "A":
                    per_unit.append((rid, "A", 1.0, None))
                else:
                    tau, cred = st[1], st[2]
                    new_cdf = res[rid].usage.cdf(times[t_next] - tau)
                    p_ret = 0.0 if 1.0 - cred <= 0.0 else (new_cdf - cred) / (1.0 - cred)
                    per_unit.append((rid, st, p_ret, new_cdf))
        dist = [((), 1.0)]
        for rid, st, p_ret, new_cdf in per_unit:
            grown = []
            for (prefix, prob) in dist:
                if st == "A":
                    grown.append((prefix + ((rid, "A"),), prob))
                    continue
                if p_ret > 0.0:
                    grown.append((prefix + ((rid, "A"),), prob * p_ret))
                if p_ret < 1.0:
                    grown.append((prefix + ((rid, (st[0], st[1], new_cdf)),), prob * (1.0 - p_ret)))
            dist = grown
        out = []
        for prefix, prob in dist:
            buckets = {rid: [] for rid in rids}
            for rid, st in prefix:
                buckets[rid].append(st)
            out.append((tuple(tuple(sorted(buckets[rid], key=_status_key)) for rid in rids), prob))
        return out

    def avail_count(state, rid):
        return sum(1 for st in state[rids.index(rid)] if st == "A")

    def allocate(state, rid, count, now):
        idx = rids.index(rid)
        row = list(state[idx])
        done = 0
        for i, st in enumerate(row):
            if st == "A" and done < count:
                row[i] = ("U", now, 0.0)
                done += 1
        out = list(state)
        out[idx] = tuple(sorted(row, key=_status_key))
        return tuple(out)

    def value(t, state):
        if t == T:
            return 0.0
        key = (t, state)
        if key in memo:
            return memo[key]
        arrival = instance.arrivals[t]
        now = times[t]

        def go(next_state):
            if t + 1 == T:
                return value(t + 1, next_state)
            acc = 0.0
            for st2, prob in advance(next_state, t + 1):
                acc += prob * value(t + 1, st2)
            return acc

        best = go(state)  # decline
        bids = arrival.demand.bids()
        if instance.mode in (model.MATCHING, model.BUDGETED):
            for rid, bid in bids.items():
                take = min(bid, avail_count(state, rid))
                if take == 0:
                    continue
                cand = res[rid].reward * take + go(allocate(state, rid, take, now))
                best = max(best, cand)
        else:
            cm = instance.choice_models[arrival.demand.choice_model]
            offerable = [rid for rid in sorted(bids) if avail_count(state, rid) >= 1]
            for k in range(1, len(offerable) + 1):
                for combo in itertools.combinations(offerable, k):
                    S = frozenset(combo)
                    if not arrival.demand.feasible.allows(S):
                        continue
                    total = 0.0
                    p_none = 1.0
                    for rid in combo:
                        p = cm.prob(S, rid)
                        p_none -= p
                        if p == 0.0:
                            continue
                        take = min(bids[rid], avail_count(state, rid))
                        total += p * (res[rid].reward * take + go(allocate(state, rid, take, now)))
                    total += max(p_none, 0.0) * go(state)
                    best = max(best, total)
        memo[key] = best
        return best

    start = tuple(tuple(["A"] * res[rid].capacity) for rid in rids)
    return value(0, start)


def _status_key(st):
    return (0, 0.0, 0.0) if st == "A" else (1, st[1], st[2])


# --- LP-free certificate check ----------------------------------------------------

@dataclass
class CertificateRow:
    resource: int
    theta: float
    opt_lambda_sum: float
    opt_i: float
    lhs: float
    rhs: float
    se: float
    passed: bool


@dataclass
class CertificateReport:
    rows: list
    cond1_lhs: float
    cond1_rhs: float
    cond1_se: float
    cond1_passed: bool
    alg_value: float
    alpha: float
    beta: float

    @property
    def cond3_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def passed(self) -> bool:
        return self.cond1_passed and self.cond3_passed


def _galg_candidate(instance, swapped: bool):
    guide = run_galg(instance)
    rewards = {r.id: r.reward for r in instance.resources}
    caps = {r.id: r.capacity for r in instance.resources}
    lam = np.zeros(len(instance.arrivals))
    theta = {r.id: 0.0 for r in instance.resources}
    for t, allocs in enumerate(guide.allocs):
        for rid, rank, amt in allocs:
            g = math.exp(-rank / caps[rid])
            lo, hi = (1.0 - g, g) if not swapped else (g, 1.0 - g)
            lam[t] += rewards[rid] * amt * lo
            theta[rid] += caps[rid] * math.expm1(1.0 / caps[rid]) * rewards[rid] * amt * hi
    return lam, theta, guide.fluid_reward, 0.0


def _rba_candidate(instance, trials, master_seed):
    from .policies import RbaPolicy

    rewards = {r.id: r.reward for r in instance.resources}
    caps = {r.id: r.capacity for r in instance.resources}
    lam = np.zeros(len(instance.arrivals))
    theta = {r.id: 0.0 for r in instance.resources}
    totals = np.zeros(trials)
    pol = RbaPolicy()
    for k in range(trials):
        tr = simulate(instance, pol, master_seed, k)
        totals[k] = tr.total_reward
        for rec in tr.records:
            if rec.resource is None:
                continue
            rid = rec.resource
            g = math.exp(-rec.units[0] / caps[rid])
            lam[rec.arrival] += rewards[rid] * (1.0 - g)
            theta[rid] += rewards[rid] * g
    lam /= trials
    for rid in theta:
        theta[rid] /= trials
    se = float(totals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return lam, theta, float(totals.mean()), se


def certificate_check(instance: model.Instance, alg: str, opt_policy, trials: int,
                      alpha: float, beta: float, master_seed: int = 0) -> CertificateReport:
    """Empirical feasibility of the two-condition certificate for `alg`.

    alg is "galg" (deterministic fluid candidate), "rba" (trace-estimated
    candidate), or "galg_swapped" (negative control with the lambda and theta
    integrands exchanged). opt_policy supplies the reference sample paths.
    """
    if instance.mode != model.MATCHING:
        raise UnsupportedMode("certificate check runs on matching instances")
    if alg == "galg":
        lam, theta, alg_value, alg_se = _galg_candidate(instance, swapped=False)
    elif alg == "galg_swapped":
        lam, theta, alg_value, alg_se = _galg_candidate(instance, swapped=True)
    elif alg == "rba":
        lam, theta, alg_value, alg_se = _rba_candidate(instance, trials, rng.derive(master_seed, 1))
    else:
        raise ValueError(f"unknown candidate {alg!r}")

    rids = [r.id for r in instance.resources]
    rewards = {r.id: r.reward for r in instance.resources}
    lam_sums = {rid: np.zeros(trials) for rid in rids}
    units = {rid: np.zeros(trials) for rid in rids}
    opt_seed = rng.derive(master_seed, 2)
    for k in range(trials):
        tr = simulate(instance, opt_policy, opt_seed, k)
        for rec in tr.records:
            if rec.resource is None:
                continue
            lam_sums[rec.resource][k] += lam[rec.arrival]
            units[rec.resource][k] += len(rec.units)

    rows = []
    for rid in rids:
        diffs = lam_sums[rid] + theta[rid] - alpha * rewards[rid] * units[rid]
        se = float(diffs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        opt_i = float(rewards[rid] * units[rid].mean())
        lhs = theta[rid] + float(lam_sums[rid].mean())
        rows.append(CertificateRow(
            resource=rid, theta=theta[rid], opt_lambda_sum=float(lam_sums[rid].mean()),
            opt_i=opt_i, lhs=lhs, rhs=alpha * opt_i, se=se,
            passed=bool(float(diffs.mean()) >= -3.0 * se - 1e-12)))

    cond1_lhs = float(lam.sum() + sum(theta.values()))
    cond1_rhs = beta * alg_value
    cond1_se = beta * alg_se
    report = CertificateReport(
        rows=rows, cond1_lhs=cond1_lhs, cond1_rhs=cond1_rhs, cond1_se=cond1_se,
        cond1_passed=bool(cond1_lhs <= cond1_rhs + 3.0 * cond1_se + 1e-9),
        alg_value=alg_value, alpha=alpha, beta=beta)
    return report
