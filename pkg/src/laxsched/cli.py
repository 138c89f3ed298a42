"""Experiment runner: config-driven replication sweeps, gain-table
management, oracle checks, and the preset experiment families.

Config files are flat ``key = value`` text with dotted sections and ``#``
comments. Results are CSV with a mandatory header, '.' decimals, and '\\n'
line endings; identical (config, seed) pairs produce byte-identical output
regardless of --jobs.

Exit codes: 0 success, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .capacity import GainProfile, estimate_gains
from .channel import ChannelModel
from .engine import SimReport, run_fluid, run_tdm
from .oracle import FeasibilityProblem, feasible
from .policies import (
    ExpUrgency,
    FrameworkParams,
    LogUrgency,
    MaxWeightUrgency,
    POLICY_NAMES,
    make_policy,
)
from .seeding import child_generator, child_seed
from .traffic import (
    FileSizeLaw,
    IdenticalDeadlineSpec,
    StationaryArrivalSpec,
    gen_identical_deadline,
    gen_stationary,
)

__all__ = ["main", "ConfigError", "ExperimentConfig", "parse_config_text", "load_config"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

RUN_HEADER = (
    "sweep_value,replication,seed,policy,n_users,n_completed,n_expired,"
    "schedulable,violation_rate"
)
ORACLE_HEADER = "sweep_value,replication,feasible,borderline"
TRACE_HEADER = "slot,user_id,residual,virtual_laxity,in_LLS,decision"


class ConfigError(Exception):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment; later keys override."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str) -> dict[str, str]:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _get(kv: dict[str, str], key: str, cast, default=None):
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    try:
        return cast(kv[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {kv[key]!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep experiment: traffic family, policy list, sweep values."""

    mode: str  # fluid | tdm
    traffic_kind: str  # identical | stationary
    user_count: int | None
    arrival_spread: float
    rate: float | None
    horizon: float | None
    sweep_variable: str  # deadline | stretch
    sweep_values: tuple[float, ...]
    policies: tuple[str, ...]
    framework_overrides: dict[str, float]
    slot_length: float | None
    replications: int
    law: FileSizeLaw
    channel: ChannelModel
    gains_path: str | None
    gains_k_max: int
    gains_samples: int


def build_experiment_config(kv: dict[str, str]) -> ExperimentConfig:
    mode = _get(kv, "mode", str)
    if mode not in ("fluid", "tdm"):
        raise ConfigError(f"mode must be fluid or tdm, got {mode!r}")
    kind = _get(kv, "traffic.kind", str)
    if kind not in ("identical", "stationary"):
        raise ConfigError(f"traffic.kind must be identical or stationary, got {kind!r}")

    replications = _get(kv, "replications", int)
    if replications < 1:
        raise ConfigError("replications must be >= 1")

    sweep_variable = _get(kv, "sweep.variable", str)
    values_raw = _get(kv, "sweep.values", str)
    try:
        sweep_values = tuple(float(v) for v in values_raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad sweep.values {values_raw!r}") from exc
    if not sweep_values:
        raise ConfigError("sweep.values must be nonempty")
    if list(sweep_values) != sorted(sweep_values):
        raise ConfigError("sweep.values must be sorted ascending")

    policies = tuple(
        p.strip() for p in _get(kv, "policy.names", str).split(",") if p.strip()
    )
    if not policies:
        raise ConfigError("policy.names must list at least one policy")
    for p in policies:
        if p != "l2hpr" and p not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {p!r}")
    if mode == "fluid" and set(policies) != {"l2hpr"}:
        raise ConfigError("fluid mode runs exactly the l2hpr policy")
    if mode == "tdm" and "l2hpr" in policies:
        raise ConfigError("l2hpr is fluid-only; tdm mode takes the heuristic/baseline policies")

    if kind == "identical":
        if sweep_variable != "deadline":
            raise ConfigError("identical traffic sweeps the deadline")
        user_count = _get(kv, "traffic.user_count", int)
        spread = _get(kv, "traffic.arrival_spread", float, 0.0)
        rate = horizon = None
        IdenticalDeadlineSpec(user_count, sweep_values[0], spread)  # validate early
    else:
        if mode == "fluid":
            raise ConfigError("fluid mode needs identical-deadline traffic")
        if sweep_variable != "stretch":
            raise ConfigError("stationary traffic sweeps the stretch factor")
        if any(v <= 1.0 for v in sweep_values):
            raise ConfigError("stretch sweep values must be > 1")
        rate = _get(kv, "traffic.rate", float)
        horizon = _get(kv, "traffic.horizon", float)
        user_count = None
        spread = 0.0
        StationaryArrivalSpec(rate, sweep_values[0], horizon)

    channel = ChannelModel(
        bandwidth_hz=_get(kv, "channel.bandwidth_hz", float, 800e3),
        mean_sinr=_get(kv, "channel.mean_sinr", float, 1.0),
    )
    law = FileSizeLaw(
        mean_mb=_get(kv, "size.mean_mb", float, 2.0),
        std_mb=_get(kv, "size.std_mb", float, 0.722),
        max_mb=_get(kv, "size.max_mb", float, 5.0),
        mean_rate_bps=channel.mean_rate_bps,
    )

    overrides = {}
    for key in (
        "policy.delta",
        "policy.epsilon",
        "policy.kappa",
        "policy.alpha",
        "policy.exp_beta",
        "policy.exp_zeta",
        "policy.exp_eta",
        "policy.log_beta",
        "policy.log_zeta",
    ):
        if key in kv:
            overrides[key.removeprefix("policy.")] = _get(kv, key, float)

    slot_length = _get(kv, "slot_length", float, 0.0)
    if slot_length < 0.0:
        raise ConfigError("slot_length must be > 0 (omit or set 0 for the default rule)")

    for name in policies:
        if name in ("l-maxweight", "l-exp", "l-log"):
            try:
                _framework_params(name, overrides)
            except ValueError as exc:
                raise ConfigError(f"invalid parameters for {name}: {exc}") from exc

    default_k_max = max(15, user_count or 0)
    return ExperimentConfig(
        mode=mode,
        traffic_kind=kind,
        user_count=user_count,
        arrival_spread=spread,
        rate=rate,
        horizon=horizon,
        sweep_variable=sweep_variable,
        sweep_values=sweep_values,
        policies=policies,
        framework_overrides=overrides,
        slot_length=slot_length or None,
        replications=replications,
        law=law,
        channel=channel,
        gains_path=kv.get("gains.path"),
        gains_k_max=_get(kv, "gains.k_max", int, default_k_max),
        gains_samples=_get(kv, "gains.samples", int, 200_000),
    )


def _framework_params(name: str, overrides: dict[str, float]) -> FrameworkParams:
    if name == "l-maxweight":
        urgency = MaxWeightUrgency(alpha=overrides.get("alpha", 1.0))
    elif name == "l-exp":
        urgency = ExpUrgency(
            beta=overrides.get("exp_beta", 0.05),
            zeta=overrides.get("exp_zeta", 1.0),
            eta=overrides.get("exp_eta", 0.5),
        )
    elif name == "l-log":
        urgency = LogUrgency(
            beta=overrides.get("log_beta", 10.0),
            zeta=overrides.get("log_zeta", 10.0),
        )
    else:
        raise ConfigError(f"{name!r} takes no framework parameters")
    return FrameworkParams(
        urgency=urgency,
        delta=overrides.get("delta", -2.0),
        epsilon=overrides.get("epsilon", 1e-3),
        kappa=overrides.get("kappa", 1.0),
    )


def _build_policy(name: str, overrides: dict[str, float]):
    if name in ("max-ci", "edf", "llf"):
        return make_policy(name)
    return make_policy(name, _framework_params(name, overrides))


def _resolve_gains(config: ExperimentConfig, base_seed: int) -> GainProfile | None:
    needs = config.mode == "fluid"
    if not needs:
        return None
    if config.gains_path:
        profile = GainProfile.load(config.gains_path)
    else:
        profile = estimate_gains(
            config.channel.mean_sinr,
            config.gains_k_max,
            config.gains_samples,
            child_seed(base_seed, 0xFADE),
        )
    if config.user_count and profile.k_max < config.user_count:
        raise ConfigError(
            f"gain profile k_max={profile.k_max} below user_count={config.user_count}"
        )
    return profile


def _make_requests(config: ExperimentConfig, sweep_value: float, rng):
    if config.traffic_kind == "identical":
        spec = IdenticalDeadlineSpec(
            config.user_count, sweep_value, config.arrival_spread
        )
        return gen_identical_deadline(spec, config.law, rng)
    spec = StationaryArrivalSpec(config.rate, sweep_value, config.horizon)
    return gen_stationary(spec, config.law, rng)


def _slot_length(config: ExperimentConfig, sweep_value: float) -> float:
    if config.slot_length:
        return config.slot_length
    if config.mode == "fluid":
        return 1e-3 * sweep_value  # deadline sweep
    # one slot is 1% of the mean flow service time
    return 0.01 * config.law.mean_mb * config.law.norm_factor


def _write_trace(path: str, report: SimReport) -> None:
    lines = [TRACE_HEADER]
    for rec in report.trace or []:
        if isinstance(rec.decision, dict):  # fluid: per-user allocated rate
            for uid in sorted(rec.decision):
                in_lls = int(rec.least_laxity_set is not None and uid in rec.least_laxity_set)
                lines.append(
                    f"{rec.slot_index},{uid},{rec.residuals[uid]:.12g},"
                    f"{rec.virtual_laxities[uid]:.12g},{in_lls},{rec.decision[uid]:.12g}"
                )
        else:  # tdm: chosen-user flag
            for uid in sorted(rec.residuals):
                lines.append(
                    f"{rec.slot_index},{uid},{rec.residuals[uid]:.12g},"
                    f"{rec.virtual_laxities[uid]:.12g},0,{int(rec.decision == uid)}"
                )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _run_cell(payload) -> list[tuple]:
    """One (sweep value, replication) cell; returns per-policy result tuples."""
    config, gains, base_seed, si, sweep_value, rep, trace_dir = payload
    rng = child_generator(base_seed, si, rep, 0)
    requests = _make_requests(config, sweep_value, rng)
    seed_label = child_seed(base_seed, si, rep)
    dt = _slot_length(config, sweep_value)
    results = []
    for name in config.policies:
        if name == "l2hpr":
            report = run_fluid(requests, gains, dt, record_trace=bool(trace_dir))
        else:
            policy = _build_policy(name, config.framework_overrides)
            report = run_tdm(
                requests,
                config.channel,
                policy,
                dt,
                seed=child_seed(base_seed, si, rep, 1),
                record_trace=bool(trace_dir),
            )
        if trace_dir:
            _write_trace(
                os.path.join(trace_dir, f"{sweep_value:g}_rep{rep}_{name}.csv"), report
            )
        results.append(
            (
                sweep_value,
                rep,
                seed_label,
                name,
                report.n_users,
                report.n_completed,
                report.n_expired,
                report.schedulable,
            )
        )
    return results


def _run_cells(config: ExperimentConfig, gains, base_seed: int, jobs: int, trace_dir):
    payloads = [
        (config, gains, base_seed, si, sweep_value, rep, trace_dir)
        for si, sweep_value in enumerate(config.sweep_values)
        for rep in range(config.replications)
    ]
    if jobs <= 1:
        return [_run_cell(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, payloads, chunksize=8))


def cmd_run(config: ExperimentConfig, out_path: str, base_seed: int, jobs: int, trace: bool) -> None:
    gains = _resolve_gains(config, base_seed)
    trace_dir = None
    if trace:
        trace_dir = f"{out_path}.traces"
        os.makedirs(trace_dir, exist_ok=True)
    lines = [RUN_HEADER]
    for cell in _run_cells(config, gains, base_seed, jobs, trace_dir):
        for sweep_value, rep, seed, name, n, done, expired, sched in cell:
            viol = expired / n if n else 0.0
            lines.append(
                f"{sweep_value:.12g},{rep},{seed},{name},{n},{done},{expired},"
                f"{int(sched)},{viol:.12g}"
            )
    with open(out_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_oracle_check(config: ExperimentConfig, out_path: str, base_seed: int, jobs: int) -> None:
    if config.traffic_kind != "identical":
        raise ConfigError("oracle-check needs identical-deadline traffic")
    if config.gains_path:
        gains = GainProfile.load(config.gains_path)
    else:
        gains = estimate_gains(
            config.channel.mean_sinr,
            max(config.gains_k_max, config.user_count),
            config.gains_samples,
            child_seed(base_seed, 0xFADE),
        )
    lines = [ORACLE_HEADER]
    for si, sweep_value in enumerate(config.sweep_values):
        for rep in range(config.replications):
            rng = child_generator(base_seed, si, rep, 0)
            requests = _make_requests(config, sweep_value, rng)
            verdict = feasible(FeasibilityProblem.from_requests(requests, gains))
            lines.append(
                f"{sweep_value:.12g},{rep},{int(verdict.feasible)},{int(verdict.borderline)}"
            )
    with open(out_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_gains(kv: dict[str, str], out_path: str, seed: int) -> None:
    k_max = _get(kv, "gains.k_max", int, 15)
    samples = _get(kv, "gains.samples", int, 200_000)
    mean_sinr = _get(kv, "channel.mean_sinr", float, 1.0)
    profile = estimate_gains(mean_sinr, k_max, samples, seed)
    profile.save(out_path)


_FIG_SWEEP_D = (60.0, 100.0, 140.0, 180.0, 220.0, 260.0, 300.0)
_FIG_SWEEP_XI = (1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
_FIG_TDM_IDENTICAL = ("l-maxweight", "l-exp", "l-log", "max-ci", "llf")
_FIG_TDM_STATIONARY = ("l-maxweight", "l-exp", "l-log", "max-ci", "edf", "llf")

FIGURE_IDS = ("fig2a", "fig2b", "fig3a", "fig3b")


def _preset_configs(figure_id: str, replications: int) -> list[ExperimentConfig]:
    """The preset experiment families: M=15, a=0.5 batches swept over the
    deadline, and lambda=0.05 stationary streams swept over the stretch."""
    if figure_id in ("fig2a", "fig3a"):
        base = {
            "traffic.kind": "identical",
            "traffic.user_count": "15",
            "traffic.arrival_spread": "0.5",
            "sweep.variable": "deadline",
            "sweep.values": ",".join(f"{v:g}" for v in _FIG_SWEEP_D),
            "replications": str(replications),
        }
        fluid = dict(base, mode="fluid", **{"policy.names": "l2hpr"})
        tdm = dict(base, mode="tdm", **{"policy.names": ",".join(_FIG_TDM_IDENTICAL)})
        return [build_experiment_config(fluid), build_experiment_config(tdm)]
    base = {
        "traffic.kind": "stationary",
        "traffic.rate": "0.05",
        "traffic.horizon": "2000",
        "sweep.variable": "stretch",
        "sweep.values": ",".join(f"{v:g}" for v in _FIG_SWEEP_XI),
        "replications": str(replications),
        "mode": "tdm",
        "policy.names": ",".join(_FIG_TDM_STATIONARY),
    }
    return [build_experiment_config(base)]


def cmd_reproduce(
    figure_id: str, out_path: str, base_seed: int, jobs: int, replications: int
) -> None:
    if figure_id not in FIGURE_IDS:
        raise ConfigError(f"unknown figure id {figure_id!r}; expected one of {FIGURE_IDS}")
    configs = _preset_configs(figure_id, replications)
    # aggregate per (sweep value, policy), preserving config/policy order
    totals: dict[tuple[float, str], list[int]] = {}
    first_seen: dict[tuple[float, str], int] = {}
    for config in configs:
        gains = _resolve_gains(config, base_seed)
        for cell in _run_cells(config, gains, base_seed, jobs, None):
            for sweep_value, rep, seed, name, n, done, expired, sched in cell:
                key = (sweep_value, name)
                if key not in totals:
                    totals[key] = [0, 0, 0, 0]
                    first_seen[key] = len(first_seen)
                agg = totals[key]
                agg[0] += 1
                agg[1] += int(sched)
                agg[2] += n
                agg[3] += expired
    order = sorted(totals, key=lambda key: (key[0], first_seen[key]))
    if figure_id.startswith("fig2"):
        lines = ["sweep_value,policy,replications,schedulable_count"]
        for sweep_value, name in order:
            reps, sched, _, _ = totals[(sweep_value, name)]
            lines.append(f"{sweep_value:.12g},{name},{reps},{sched}")
    else:
        lines = ["sweep_value,policy,replications,total_users,total_expired,violation_probability"]
        for sweep_value, name in order:
            reps, _, users, expired = totals[(sweep_value, name)]
            viol = expired / users if users else 0.0
            lines.append(f"{sweep_value:.12g},{name},{reps},{users},{expired},{viol:.12g}")
    with open(out_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laxsched",
        description="Deadline-aware flow-level wireless scheduling experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", required=True, help="output path")
        p.add_argument("--seed", type=int, default=0, help="base seed (u64)")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--trace", action="store_true", help="write per-slot traces")

    p_gains = sub.add_parser("gains", help="estimate and save a gain table")
    common(p_gains)

    p_run = sub.add_parser("run", help="run a sweep experiment to CSV")
    common(p_run)

    p_oracle = sub.add_parser("oracle-check", help="per-instance schedulability CSV")
    common(p_oracle)

    p_rep = sub.add_parser("reproduce", help="run a preset experiment family")
    p_rep.add_argument("figure_id", choices=FIGURE_IDS)
    common(p_rep)
    p_rep.add_argument(
        "--replications",
        type=int,
        default=1000,
        help="replications per sweep point (default 1000)",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("--seed must fit in 64 unsigned bits")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        kv = load_config(args.config) if args.config else {}
        if args.command == "gains":
            cmd_gains(kv, args.out, args.seed)
        elif args.command == "run":
            if not args.config:
                raise ConfigError("run needs --config")
            cmd_run(build_experiment_config(kv), args.out, args.seed, args.jobs, args.trace)
        elif args.command == "oracle-check":
            if not args.config:
                raise ConfigError("oracle-check needs --config")
            cmd_oracle_check(build_experiment_config(kv), args.out, args.seed, args.jobs)
        elif args.command == "reproduce":
            if args.replications < 1:
                raise ConfigError("--replications must be >= 1")
            cmd_reproduce(args.figure_id, args.out, args.seed, args.jobs, args.replications)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
