"""Single-unit availability process and its fluid counterpart.

One unit of a resource faces arrivals at strictly increasing times sigma_t.
If the unit is available at sigma_t it transitions to in-use with probability
p_t, earns a unit reward, and stays in use for a duration drawn from F. The
fluid counterpart consumes fractions instead: p_t times the available
fraction is consumed and flows back according to the CDF of F.

The fluid availability obeys an exact recursion (one step per arrival, O(T^2)
total), and the random process has the same per-arrival availability
probabilities, which is what makes the fluid version usable as an exact
evaluation device for the random one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .distributions import sample_array


@dataclass(frozen=True)
class ProcessSpec:
    dist: object            # usage distribution F
    sigma: tuple            # strictly increasing arrival times
    p: tuple                # transition probabilities, in [0, 1]

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        object.__setattr__(self, "p", tuple(float(q) for q in self.p))
        if len(self.sigma) != len(self.p):
            raise ValueError("sigma and p must have equal length")
        for a, b in zip(self.sigma, self.sigma[1:]):
            if not b > a:
                raise ValueError("arrival times must be strictly increasing")
        if any(not 0.0 <= q <= 1.0 for q in self.p):
            raise ValueError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class ProcessSummary:
    trials: int
    mean: float
    se: float
    ci95: tuple
    availability: np.ndarray   # per-arrival frequency of "unit available"


def fluid_process(spec: ProcessSpec):
    """Exact fluid availability fractions eta_t and total reward sum p_t eta_t.

    eta_1 = 1 and
      eta_t = eta_{t-1}(1 - p_{t-1})
              + sum_{tau < t} eta_tau p_tau [F(sigma_t - sigma_tau) - F(sigma_{t-1} - sigma_tau)],
    where the mass consumed at tau starts with zero credited return, so an
    atom of F at 0 is paid back at the next arrival rather than lost.
    """
    T = len(spec.sigma)
    if T == 0:
        return np.zeros(0), 0.0
    sigma = np.asarray(spec.sigma)
    p = np.asarray(spec.p)
    eta = np.zeros(T)
    consumed = np.zeros(T)      # eta_tau * p_tau
    credited = np.zeros(T)      # CDF level already paid back per tau
    eta[0] = 1.0
    consumed[0] = p[0]
    for t in range(1, T):
        new_cdf = np.asarray(spec.dist.cdf(sigma[t] - sigma[:t]))
        returned = consumed[:t] @ (new_cdf - credited[:t])
        credited[:t] = new_cdf
        eta[t] = eta[t - 1] - consumed[t - 1] + returned
        eta[t] = min(max(eta[t], 0.0), 1.0)  # guard fp residue only
        consumed[t] = eta[t] * p[t]
    return eta, float(p @ eta)


def simulate_process(spec: ProcessSpec, seed: int, trials: int) -> ProcessSummary:
    """Monte-Carlo over the random process, vectorized across trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    T = len(spec.sigma)
    ids = np.arange(trials)
    match_time = np.full(trials, -np.inf)
    duration = np.zeros(trials)            # duration of the current use
    rewards = np.zeros(trials)
    avail_freq = np.zeros(T)
    for t, s in enumerate(spec.sigma):
        # Available iff the current use (if any) has ended by s; comparing
        # durations against s - match_time keeps atom boundaries exact.
        avail = duration <= s - match_time
        avail_freq[t] = avail.mean()
        if spec.p[t] > 0.0:
            u = rng.uniform_array(seed, (rng.TAG_POLICY, t), ids)
            take = avail & (u < spec.p[t])
            if take.any():
                ud = rng.uniform_array(seed, (rng.TAG_DURATION, t), ids[take])
                match_time[take] = s
                duration[take] = sample_array(spec.dist, ud)
                rewards[take] += 1.0
    mean = float(rewards.mean())
    se = float(rewards.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return ProcessSummary(trials=trials, mean=mean, se=se,
                          ci95=(mean - 1.96 * se, mean + 1.96 * se),
                          availability=avail_freq)


def check_monotonicity(dist, sigma, p_low, p_high, tol: float = 1e-12) -> bool:
    """Raising transition probabilities never lowers the fluid reward."""
    if any(a > b for a, b in zip(p_low, p_high)):
        raise ValueError("p_low must be <= p_high pointwise")
    _, r_low = fluid_process(ProcessSpec(dist, sigma, p_low))
    _, r_high = fluid_process(ProcessSpec(dist, sigma, p_high))
    return r_low <= r_high + tol


def check_zero_point_augmentation(spec: ProcessSpec, tol: float = 1e-10) -> bool:
    """Forcing p_t = 1 at zero-availability arrivals must not change eta."""
    eta, _ = fluid_process(spec)
    p2 = tuple(1.0 if eta[t] <= 1e-12 else spec.p[t] for t in range(len(spec.p)))
    eta2, _ = fluid_process(ProcessSpec(spec.dist, spec.sigma, p2))
    return bool(np.all(np.abs(eta2 - eta) <= tol))
