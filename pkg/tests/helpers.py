"""Independent oracles used to verify the library: quadrature gain values,
brute-force region/subset checks, and an exhaustive grid allocation search.

Everything here is computed by a different route than the implementation
under test (closed forms, quadrature, or exhaustive enumeration).
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate, special


def gain_quadrature(k: int) -> float:
    """E[ln(1 + max of k Exp(1))] / E[ln(1 + Exp(1))] by adaptive quadrature."""
    c1 = math.e * special.exp1(1.0)
    if k == 1:
        return 1.0
    val, _ = integrate.quad(
        lambda x: math.log1p(x) * k * math.exp(-x) * (1.0 - math.exp(-x)) ** (k - 1),
        0.0,
        np.inf,
        limit=200,
    )
    return val / c1


def spectral_efficiency_closed(mean_sinr: float) -> float:
    """Closed form e^(1/s) * E1(1/s) / ln 2 for exponential SINR of mean s."""
    inv = 1.0 / mean_sinr
    return math.exp(inv) * special.exp1(inv) / math.log(2.0)


def quadrature_gain_profile(k_max: int):
    """Quadrature-derived gain tuple g_0..g_K (strict concavity holds exactly)."""
    return (0.0, 1.0, *(gain_quadrature(k) for k in range(2, k_max + 1)))


def brute_force_in_region(gains: tuple[float, ...], rates, atol: float = 1e-12) -> bool:
    """Membership by checking every one of the 2^k subset constraints."""
    rates = list(rates)
    if any(r < 0.0 or r > 1.0 + atol for r in rates):
        return False
    idx = range(len(rates))
    for size in range(1, len(rates) + 1):
        for subset in itertools.combinations(idx, size):
            if sum(rates[i] for i in subset) > gains[size] + atol:
                return False
    return True


def subset_capacity_independent(arrivals, deadline: float, gains) -> float:
    """Deliverable data for a user set: integral of g over #arrived members."""
    times = sorted(arrivals)
    total = 0.0
    for j in range(1, len(times)):
        total += gains[j] * (times[j] - times[j - 1])
    total += gains[len(times)] * (deadline - times[-1])
    return total


def subset_feasible(requests, gains: tuple[float, ...], slack: float = 0.0) -> bool:
    """Necessary condition checked exhaustively: every user subset's demand
    fits the capacity available between its first arrival and the deadline."""
    deadline = requests[0].deadline
    n = len(requests)
    for mask in range(1, 1 << n):
        subset = [requests[i] for i in range(n) if mask >> i & 1]
        demand = sum(r.initial_size for r in subset)
        cap = subset_capacity_independent(
            [r.arrival_time for r in subset], deadline, gains
        )
        if demand > cap + slack:
            return False
    return True


def _grid_vectors(n_users: int, gains: tuple[float, ...], q: int):
    """All region-feasible rate vectors with entries on the grid {0, 1/q, .., 1}."""
    values = [j / q for j in range(q + 1)]
    out = []
    for vec in itertools.product(values, repeat=n_users):
        if brute_force_in_region(gains, vec):
            out.append(vec)
    return out


def single_interval_completable(
    residuals, length: float, gains: tuple[float, ...], atol: float = 1e-9
) -> bool:
    """Exact test: constant rates residual/length must lie in the region."""
    active = sorted((r for r in residuals if r > atol), reverse=True)
    if not active:
        return True
    if len(active) > len(gains) - 1:
        return False
    prefix = 0.0
    for m, r in enumerate(active, start=1):
        if r > gains[1] * length + atol:
            return False
        prefix += r
        if prefix > gains[m] * length + atol:
            return False
    return True


def exhaustive_grid_feasible(requests, gains: tuple[float, ...], q: int = 16) -> bool:
    """Search piecewise-constant schedules on the epoch partition: rates on a
    1/q grid in every interval except the last, which is decided exactly by
    the single-interval drain test. Pareto-dominated residual states are
    pruned between intervals.

    A hit is a genuine schedule (soundness is unconditional); a miss only
    rules out grid schedules, so feasible-vs-grid comparisons must skip a
    margin band tied to the grid resolution.
    """
    reqs = sorted(requests, key=lambda r: r.user_id)
    deadline = reqs[0].deadline
    epochs = sorted({r.arrival_time for r in reqs} | {deadline})
    states = {tuple(r.initial_size for r in reqs)}
    for k in range(len(epochs) - 2):
        start, length = epochs[k], epochs[k + 1] - epochs[k]
        eligible = [i for i, r in enumerate(reqs) if r.arrival_time <= start]
        vectors = _grid_vectors(len(eligible), gains, q)
        nxt: set[tuple[float, ...]] = set()
        for state in states:
            for vec in vectors:
                new = list(state)
                for i, rate in zip(eligible, vec):
                    new[i] = max(0.0, round(new[i] - rate * length, 12))
                nxt.add(tuple(new))
        # Pareto prune: drop states componentwise >= another kept state
        ordered = sorted(nxt, key=sum)
        frontier: list[tuple[float, ...]] = []
        for cand in ordered:
            if not any(all(c >= f for c, f in zip(cand, keep)) for keep in frontier):
                frontier.append(cand)
        states = set(frontier)
    last_len = epochs[-1] - epochs[-2]
    return any(single_interval_completable(s, last_len, gains) for s in states)


def lognormal_untruncated_moments(log_mu: float, log_sigma: float) -> tuple[float, float]:
    """Closed-form (mean, std) of the untruncated lognormal."""
    mean = math.exp(log_mu + log_sigma**2 / 2.0)
    var = (math.exp(log_sigma**2) - 1.0) * math.exp(2.0 * log_mu + log_sigma**2)
    return mean, math.sqrt(var)


def lognormal_truncated_mean(log_mu: float, log_sigma: float, cap: float) -> float:
    """Closed-form E[X | X <= cap] for a lognormal."""
    from scipy.stats import norm

    s2 = log_sigma**2
    num = math.exp(log_mu + s2 / 2.0) * norm.cdf((math.log(cap) - log_mu - s2) / log_sigma)
    den = norm.cdf((math.log(cap) - log_mu) / log_sigma)
    return num / den
