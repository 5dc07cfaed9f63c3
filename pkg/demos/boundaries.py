"""
Boundaries and sovereignty transfer
===================================

Start from the shipped baseline: two human institutions, two AI subsystems,
all three boundaries active.  Friction falls every step, so the AI nodes
speed up, but the boundaries keep their irreversible and critical-resource
authority at zero.  Halfway through we switch the boundaries off and let
review-cost pressure erode authority.
"""
import numpy as np

from sovsim import load_config
from sovsim.scenarios import scenario_text
from sovsim.sweeps import BoundaryEvent, run_trajectory

state = load_config(scenario_text("baseline"), seed=7)
drop = BoundaryEvent(100, {"b1_active": False, "b2_active": False, "b3_active": False})
frames = run_trajectory(state, 300, [drop])

# The AI's restricted control mass is exactly zero while boundaries hold.
ai_mass = np.array([f.e_c_top_ai_restricted for f in frames])
human_mass = np.array([f.e_c_top_human for f in frames])
print("max AI restricted mass, steps 0..100:", ai_mass[:101].max())

# After the drop, authority creeps until an AI node takes the sovereign slot.
first = next((f.step for f in frames if f.sovereign_is_ai), None)
print("first AI sovereign step:", first)

for k in (0, 100, 150, 200, 300):
    f = frames[k]
    print(f"step {k:3d}  AI mass {ai_mass[k]:8.3f}  human mass {human_mass[k]:8.3f}  "
          f"review {f.review_level:.3f}  sovereign {f.sovereign_id} (AI: {f.sovereign_is_ai})")
