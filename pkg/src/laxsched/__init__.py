"""Deadline-aware flow-level wireless scheduling: simulators, policies,
capacity region, traffic models, and an offline schedulability oracle.

Subpackages/modules
-------------------
core      -- requests, flow state, laxity arithmetic
capacity  -- multi-user diversity gains and the polymatroid region
channel   -- Rayleigh/Shannon normalized rate sampling
traffic   -- request generators and the truncated-lognormal size law
policies  -- fluid laxity-ranked allocation, heuristic framework, baselines
engine    -- slotted fluid/TDM simulation loops, laxity-history tracking
oracle    -- LP schedulability decision with replayable witnesses
cli       -- config-driven experiment runner (``laxsched`` entry point)
"""

from .capacity import GainProfile, estimate_gains
from .channel import (
    ChannelModel,
    mean_spectral_efficiency,
    sample_normalized_rate,
    sample_normalized_rates,
)
from .core import (
    DownloadRequest,
    FlowState,
    FlowStatus,
    SimConfig,
    advance_flow,
    common_deadline,
    expected_laxity,
    virtual_expected_laxity,
)
from .engine import (
    SimReport,
    TraceRecord,
    UltTracker,
    UserOutcome,
    least_laxity_limit,
    least_laxity_set,
    laxity_order_check,
    least_laxity_floor,
    run_fluid,
    run_tdm,
    update_ult,
)
from .oracle import (
    FeasibilityProblem,
    FeasibilityResult,
    feasible,
    replay_witness,
    schedulability_frontier,
    subset_capacity,
    witness_text,
)
from .policies import (
    ExpUrgency,
    FrameworkParams,
    LogUrgency,
    MaxWeightUrgency,
    baseline_edf,
    baseline_llf,
    baseline_max_ci,
    framework_select,
    l2hpr_allocate,
    make_policy,
    urgency_exp,
    urgency_log,
    urgency_maxweight,
)
from .traffic import (
    FileSizeLaw,
    IdenticalDeadlineSpec,
    StationaryArrivalSpec,
    gen_identical_deadline,
    gen_stationary,
    read_requests,
    sample_file_size,
    sample_file_sizes,
    write_requests,
)

__version__ = "0.1.0"
