"""
Finding the friction threshold
==============================

In the erosion scenario boundaries are off and AI nodes start slow.  Whether
control transfers within 100 steps depends on how quickly deployment
friction falls.  A coarse sweep shows the shape; bisection pins the point
where half the runs transfer.
"""
from sovsim.model import parse_config
from sovsim.scenarios import scenario_text
from sovsim.sweeps import SweepSpec, bisect_threshold, grid_sweep

doc = parse_config(scenario_text("erosion"))

spec = SweepSpec("economy.friction_decay", lo=0.0, hi=0.15, count=7, runs_per_point=10, horizon=100)
for row in grid_sweep(spec, doc):
    print(f"friction_decay {row.param_value:.3f}  transfer rate {row.transfer_rate:.1f}  "
          f"mean first step {row.mean_first_transfer_step:.1f}")

result = bisect_threshold("economy.friction_decay", 0.0, 0.15, doc, runs_per_point=20, tol=0.005)
print(f"critical friction_decay ~ {result.critical_value:.4f}, bracket {result.bracket}, "
      f"{result.iterations} bisection steps")
