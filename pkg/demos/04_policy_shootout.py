"""Compare slot-by-slot schedulers on a stationary download stream.

Poisson arrivals at 0.05/s with deadlines set by a stretch factor on the
ideal service time. Channel-aware laxity policies keep nearly everyone
inside their deadline; the greedy rate-only policy loses the urgent users,
and the channel-oblivious baselines fall apart because they forgo the
multi-user diversity the load level requires.
"""

import time

from laxsched import ChannelModel, FileSizeLaw, StationaryArrivalSpec, gen_stationary, run_tdm
from laxsched.policies import make_policy
from laxsched.seeding import child_seed, generator_from

law = FileSizeLaw()
channel = ChannelModel()
slot = 0.01 * law.mean_mb * law.norm_factor  # 1% of the mean service time

spec = StationaryArrivalSpec(rate=0.05, stretch=4.0, horizon=100_000.0)
requests = gen_stationary(spec, law, generator_from(2024))
print(f"{len(requests)} arrivals over {spec.horizon:,.0f} s "
      f"(stretch {spec.stretch}, slot {slot:.3f} s)\n")

print("policy        violations   probability   runtime")
for name in ("l-log", "l-exp", "l-maxweight", "max-ci", "edf", "llf"):
    t0 = time.perf_counter()
    report = run_tdm(
        requests, channel, make_policy(name), slot, seed=child_seed(2024, 1)
    )
    elapsed = time.perf_counter() - t0
    print(
        f"{name:12s}  {report.n_expired:10d}   {report.n_expired / report.n_users:11.5f}"
        f"   {elapsed:6.1f}s"
    )
