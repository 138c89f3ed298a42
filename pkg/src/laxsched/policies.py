"""Scheduling decisions: the fluid less-laxity-higher-rate allocation, the
laxity-threshold heuristic framework with three urgency functions, and the
Max C/I, EDF, and LLF baselines.

Every tie anywhere is broken by the smallest user id. Rates passed in here
are already normalized (mean 1), so the default per-user weight kappa is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .capacity import GainProfile
from .core import FlowState, FlowStatus, common_deadline, expected_laxity

__all__ = [
    "MaxWeightUrgency",
    "ExpUrgency",
    "LogUrgency",
    "FrameworkParams",
    "urgency_maxweight",
    "urgency_exp",
    "urgency_log",
    "l2hpr_allocate",
    "framework_select",
    "baseline_max_ci",
    "baseline_edf",
    "baseline_llf",
    "FrameworkPolicy",
    "MaxCiPolicy",
    "EdfPolicy",
    "LlfPolicy",
    "make_policy",
    "POLICY_NAMES",
]


@dataclass(frozen=True)
class MaxWeightUrgency:
    """Polynomial urgency: clamped laxity to the power -alpha."""

    alpha: float = 1.0

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise ValueError("alpha must be > 0")


@dataclass(frozen=True)
class ExpUrgency:
    """Exponential urgency, self-normalized by the group-mean scaled laxity."""

    beta: float = 0.05
    zeta: float = 1.0
    eta: float = 0.5

    def __post_init__(self) -> None:
        if not (self.beta > 0.0 and self.zeta > 0.0):
            raise ValueError("beta and zeta must be > 0")


@dataclass(frozen=True)
class LogUrgency:
    """Logarithmic urgency: 1 / ln(zeta + beta * clamped laxity)."""

    beta: float = 10.0
    zeta: float = 10.0

    def __post_init__(self) -> None:
        if not (self.beta > 0.0 and self.zeta > 0.0):
            raise ValueError("beta and zeta must be > 0")


Urgency = MaxWeightUrgency | ExpUrgency | LogUrgency


@dataclass(frozen=True)
class FrameworkParams:
    """Threshold delta splitting the queue into likely-completable and
    likely-expired groups, the laxity clamp epsilon, the per-user weight
    kappa, and the urgency function."""

    urgency: Urgency
    delta: float = -2.0
    epsilon: float = 1e-3
    kappa: float = 1.0

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be > 0")
        if not self.kappa > 0.0:
            raise ValueError("kappa must be > 0")
        if isinstance(self.urgency, LogUrgency):
            if self.urgency.zeta + self.urgency.beta * self.epsilon <= 1.0:
                raise ValueError(
                    "log urgency needs zeta + beta*epsilon > 1 so the logarithm stays positive"
                )


def urgency_maxweight(laxity: float, alpha: float, epsilon: float) -> float:
    """max(L, eps)^(-alpha); strictly decreasing on [eps, inf)."""
    return max(laxity, epsilon) ** (-alpha)


def urgency_exp(
    laxity: float,
    beta: float,
    zeta: float,
    eta: float,
    group_mean_scaled_laxity: float,
    epsilon: float,
) -> float:
    """exp(-beta*max(L,eps) / (zeta + Lbar^eta)) where Lbar is the mean of
    beta*max(L,eps) over the likely-completable group. Value in (0, 1]."""
    return math.exp(
        -beta * max(laxity, epsilon) / (zeta + group_mean_scaled_laxity**eta)
    )


def urgency_log(laxity: float, beta: float, zeta: float, epsilon: float) -> float:
    """1 / ln(zeta + beta*max(L,eps)); requires zeta + beta*eps > 1.

    Natural log; the argmax is base-invariant so the base only rescales
    weights, but positivity must hold for every clamped laxity.
    """
    arg = zeta + beta * max(laxity, epsilon)
    if arg <= 1.0:
        raise ValueError("zeta + beta*clamped laxity must exceed 1")
    return 1.0 / math.log(arg)


def _active_sorted(flows: Sequence[FlowState]) -> list[FlowState]:
    out = [f for f in flows if f.status is FlowStatus.ACTIVE]
    out.sort(key=lambda f: f.user_id)
    return out


def l2hpr_allocate(
    flows: Sequence[FlowState],
    gains: GainProfile,
    slot_index: int,
    slot_length: float,
) -> dict[int, float]:
    """Fluid allocation: the user with the j-th smallest expected laxity gets
    the j-th marginal gain g_j - g_{j-1}. Total allocated rate is g_k.

    All flows must be active and share one deadline; an empty queue yields an
    empty vector.
    """
    for f in flows:
        if f.status is not FlowStatus.ACTIVE:
            raise ValueError("l2hpr_allocate expects only active flows")
    if not flows:
        return {}
    common_deadline(flows)
    g = gains.gains
    if len(flows) > len(g) - 1:
        raise ValueError(
            f"{len(flows)} active users exceed gain profile k_max={gains.k_max}"
        )
    g1 = g[1]
    elapsed = slot_index * slot_length
    ranked = sorted(
        (f.request.deadline - elapsed - f.residual_size / g1, f.user_id)
        for f in flows
    )
    return {uid: g[j] - g[j - 1] for j, (_, uid) in enumerate(ranked, start=1)}


def _select_framework(
    uids: Sequence[int],
    laxities: Sequence[float],
    rates: Sequence[float],
    params: FrameworkParams,
) -> int | None:
    """Core of the framework rule on parallel arrays sorted by user id."""
    if not uids:
        return None
    plus = [i for i in range(len(uids)) if laxities[i] >= params.delta]
    kappa = params.kappa
    best_uid = None
    best_w = -math.inf
    if plus:
        urg = params.urgency
        eps = params.epsilon
        if isinstance(urg, MaxWeightUrgency):
            for i in plus:
                w = kappa * rates[i] * urgency_maxweight(laxities[i], urg.alpha, eps)
                if w > best_w:
                    best_w, best_uid = w, uids[i]
        elif isinstance(urg, ExpUrgency):
            lbar = sum(urg.beta * max(laxities[i], eps) for i in plus) / len(plus)
            for i in plus:
                w = kappa * rates[i] * urgency_exp(
                    laxities[i], urg.beta, urg.zeta, urg.eta, lbar, eps
                )
                if w > best_w:
                    best_w, best_uid = w, uids[i]
        else:
            for i in plus:
                w = kappa * rates[i] * urgency_log(laxities[i], urg.beta, urg.zeta, eps)
                if w > best_w:
                    best_w, best_uid = w, uids[i]
        return best_uid
    for i in range(len(uids)):
        w = kappa * rates[i]
        if w > best_w:
            best_w, best_uid = w, uids[i]
    return best_uid


def _arrays_from_flows(
    flows: Sequence[FlowState],
    rates: Mapping[int, float] | None,
    slot_index: int,
    slot_length: float,
    g1: float,
):
    active = _active_sorted(flows)
    uids = [f.user_id for f in active]
    laxities = [expected_laxity(f, slot_index, slot_length, g1) for f in active]
    rate_list = [rates[u] for u in uids] if rates is not None else None
    deadlines = [f.request.deadline for f in active]
    return uids, laxities, rate_list, deadlines


def framework_select(
    flows: Sequence[FlowState],
    rates: Mapping[int, float],
    params: FrameworkParams,
    slot_index: int,
    slot_length: float,
    g1: float = 1.0,
) -> int | None:
    """One TDM slot decision: among users with laxity >= delta pick the
    largest kappa*R*U(L); if none remain, fall back to the highest rate."""
    uids, lax, rate_list, _ = _arrays_from_flows(flows, rates, slot_index, slot_length, g1)
    return _select_framework(uids, lax, rate_list, params)


def baseline_max_ci(
    flows: Sequence[FlowState], rates: Mapping[int, float]
) -> int | None:
    """Greedy: serve the user with the highest instantaneous rate."""
    best_uid, best_r = None, -math.inf
    for f in _active_sorted(flows):
        r = rates[f.user_id]
        if r > best_r:
            best_r, best_uid = r, f.user_id
    return best_uid


def baseline_edf(flows: Sequence[FlowState]) -> int | None:
    """Channel-oblivious: earliest deadline first."""
    best_uid, best_d = None, math.inf
    for f in _active_sorted(flows):
        d = f.request.deadline
        if d < best_d:
            best_d, best_uid = d, f.user_id
    return best_uid


def baseline_llf(
    flows: Sequence[FlowState],
    slot_index: int,
    slot_length: float,
    g1: float = 1.0,
) -> int | None:
    """Channel-oblivious: least expected laxity first."""
    best_uid, best_l = None, math.inf
    for f in _active_sorted(flows):
        lax = expected_laxity(f, slot_index, slot_length, g1)
        if lax < best_l:
            best_l, best_uid = lax, f.user_id
    return best_uid


class FrameworkPolicy:
    """TDM policy wrapping the framework rule with a fixed parameter set."""

    def __init__(self, params: FrameworkParams):
        self.params = params
        self.name = {
            MaxWeightUrgency: "l-maxweight",
            ExpUrgency: "l-exp",
            LogUrgency: "l-log",
        }[type(params.urgency)]

    def select_arrays(self, uids, laxities, rates, deadlines) -> int | None:
        return _select_framework(uids, laxities, rates, self.params)


class MaxCiPolicy:
    name = "max-ci"

    def select_arrays(self, uids, laxities, rates, deadlines) -> int | None:
        best_uid, best_r = None, -math.inf
        for u, r in zip(uids, rates):
            if r > best_r:
                best_r, best_uid = r, u
        return best_uid


class EdfPolicy:
    name = "edf"

    def select_arrays(self, uids, laxities, rates, deadlines) -> int | None:
        best_uid, best_d = None, math.inf
        for u, d in zip(uids, deadlines):
            if d < best_d:
                best_d, best_uid = d, u
        return best_uid


class LlfPolicy:
    name = "llf"

    def select_arrays(self, uids, laxities, rates, deadlines) -> int | None:
        best_uid, best_l = None, math.inf
        for u, lax in zip(uids, laxities):
            if lax < best_l:
                best_l, best_uid = lax, u
        return best_uid


POLICY_NAMES = ("l-maxweight", "l-exp", "l-log", "max-ci", "edf", "llf")


def make_policy(name: str, params: FrameworkParams | None = None):
    """Build a TDM policy by name; framework policies take their parameters
    (or the published defaults) from ``params``."""
    if name == "max-ci":
        return MaxCiPolicy()
    if name == "edf":
        return EdfPolicy()
    if name == "llf":
        return LlfPolicy()
    defaults = {
        "l-maxweight": MaxWeightUrgency(),
        "l-exp": ExpUrgency(),
        "l-log": LogUrgency(),
    }
    if name not in defaults:
        raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
    if params is None:
        params = FrameworkParams(urgency=defaults[name])
    elif not isinstance(params.urgency, type(defaults[name])):
        raise ValueError(f"params urgency {params.urgency!r} does not match policy {name!r}")
    return FrameworkPolicy(params)
