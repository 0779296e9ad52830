"""
A single forward push, from shove to capture
============================================

Runs the closed-loop simulation through one canonical episode: a forward
impulse at t = 0.5 s large enough to drive the divergent component of
motion (DCM) 0.12 m outside the sway ellipse, forcing one recovery step.
Prints the event timeline, the phase occupancy and the step summary.
"""

import math

import numpy as np

from exorecover import PushEvent, ScenarioConfig, run_scenario, summarize

# An impulse J shifts the DCM by J / (m * omega).  Size it for a 0.12 m
# excursion of the default 70 kg wearer.
mass = 70.0
omega = math.sqrt(9.81 / 0.88)
excursion = 0.12
push = PushEvent(time=0.5, impulse=[excursion * mass * omega, 0.0])

config = ScenarioConfig(pushes=(push,))
trace = run_scenario(config)

# ---------------------------------------------------------------------------
# Event timeline.  Every state-machine transition lands here with a payload.

print("event timeline")
for event in trace.events:
    if event.kind == "Replanned":
        continue
    extra = ""
    if event.kind == "PlanIssued":
        extra = (f"  swing={event.payload['swing']}"
                 f"  target=({event.payload['cop_T'][0]:+.3f}, {event.payload['cop_T'][1]:+.3f})"
                 f"  T={event.payload['duration']:.3f}s")
    elif event.kind == "TouchDown":
        landed = event.payload["landed"]
        extra = f"  landed=({landed[0]:+.3f}, {landed[1]:+.3f})"
    elif event.kind == "Captured":
        extra = f"  offset={event.payload['offset']:.4f} m"
    print(f"  {event.time:6.3f}s  {event.kind:<12s}{extra}")

replans = sum(1 for e in trace.events if e.kind == "Replanned")
print(f"  ({replans} per-cycle replans suppressed above)")

# ---------------------------------------------------------------------------
# Phase occupancy: how long the wearer spent in each recovery phase.

print("\nphase occupancy")
phases = np.asarray(trace.phase)
for name in ("Standing", "SteppingPlanned", "Swing", "Landed", "Captured"):
    ms = int(np.count_nonzero(phases == name))
    print(f"  {name:<16s} {ms * config.dt:6.3f} s")

# ---------------------------------------------------------------------------
# The one-step summary the CLI also writes to summary.txt.

summary = summarize(trace)
print("\nsummary")
print(f"  swing side          {summary.swing_side}")
print(f"  trigger at          {summary.trigger_time:.3f} s")
print(f"  touchdown at        {summary.touchdown_time:.3f} s "
      f"(step duration {summary.step_duration:.3f} s)")
print(f"  captured at         {summary.capture_time:.3f} s")
print(f"  planned vs landed   {summary.planned_vs_landed_angle_deg:+.2f} deg")
print(f"  final DCM offset    {summary.final_dcm_offset:.2e} m")
print(f"  replans during step {summary.num_replans}")
