"""
Recovery around the clock
=========================

Applies the same impulse magnitude from twelve compass directions and
runs the full closed loop for each.  Forward and oblique pushes resolve
in a single step; pushes straight along the stance line need a chained
second step because a sideways landing can only go so far before the
legs would cross.  The swing side always mirrors the push: the wearer
steps with the leg the fall is unloading.
"""

import math

from exorecover import PushEvent, ScenarioConfig, run_scenario, summarize

mass = 70.0
omega = math.sqrt(9.81 / 0.88)
excursion = 0.12  # metres of DCM displacement, well outside the ellipse

print("push dir    swing   steps  captured  recovery time")
for deg in range(0, 360, 30):
    angle = math.radians(deg)
    impulse = [excursion * mass * omega * math.cos(angle),
               excursion * mass * omega * math.sin(angle)]
    config = ScenarioConfig(pushes=(PushEvent(0.5, impulse),), duration=4.0)
    summary = summarize(run_scenario(config))
    recovery = summary.capture_time - 0.5 if summary.captured else float("nan")
    print(f"  {deg:3d} deg   {summary.swing_side:<6s} {summary.num_steps:4d}"
          f"     {str(summary.captured):<5s}   {recovery:8.3f} s")

print("\n0 deg is straight ahead, 90 deg is the wearer's left.")
print("Left pushes load the left leg, so the right leg swings, and the")
print("mirror holds on the other side.  Two-step rows are the pure")
print("lateral pushes, where the first landing still leaves the DCM")
print("outside what the new foot can hold.")
