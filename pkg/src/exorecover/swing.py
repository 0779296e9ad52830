"""Quintic swing-foot trajectories with mid-flight retargeting.

The vertical profile is two quintic pieces meeting at the apex: the foot
climbs to ``peak_height`` at ``peak_fraction`` of the step duration and
returns to the ground at touchdown, with zero velocity and acceleration
at lift-off, apex and touchdown.  Both pieces are scaled smoothsteps, so
the climb and descent are monotone.  Horizontal coordinates are single
quintics from rest to rest.

``retarget`` splices a new trajectory onto the old one mid-flight: the
sampled position, velocity and acceleration at the splice time become
the new initial conditions, which keeps the composite path twice
continuously differentiable.  Past the apex the vertical profile
collapses to a single quintic straight to touchdown.

All coordinates live in one fixed horizontal frame shared by the start
point and the plan's landing CoP (the simulator uses the world frame and
converts to leg coordinates only when solving IK).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .planner import StepPlan

__all__ = [
    "QuinticSegment",
    "SwingTrajectory",
    "SwingSample",
    "quintic_from_boundary",
    "build_swing",
    "sample",
    "retarget",
]

DEFAULT_PEAK_HEIGHT = 0.07  # m
DEFAULT_PEAK_FRACTION = 0.4  # of the step duration


@dataclass(frozen=True)
class QuinticSegment:
    """Degree-5 polynomial on [t_start, t_end] in the local variable t - t_start."""

    coefficients: np.ndarray  # (6,), ascending powers
    t_start: float
    t_end: float

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if c.shape != (6,):
            raise ValueError(f"need 6 coefficients, got shape {c.shape}")
        if not (self.t_end > self.t_start):
            raise ValueError(f"need t_end > t_start, got [{self.t_start}, {self.t_end}]")
        object.__setattr__(self, "coefficients", c)

    def evaluate(self, t: float) -> tuple[float, float, float]:
        """(position, velocity, acceleration) at absolute time ``t``."""
        s = t - self.t_start
        c = self.coefficients
        pos = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))))
        vel = c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])))
        acc = 2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5]))
        return pos, vel, acc


def quintic_from_boundary(
    t0: float,
    t1: float,
    start: tuple[float, float, float],
    end: tuple[float, float, float],
) -> QuinticSegment:
    """Unique quintic matching (pos, vel, acc) at both ends."""
    tau = t1 - t0
    if not (tau > 0.0) or not math.isfinite(tau):
        raise ValueError(f"segment duration must be positive, got {tau}")
    powers = np.array([tau**k for k in range(6)])
    A = np.zeros((6, 6))
    A[0, 0] = 1.0
    A[1, 1] = 1.0
    A[2, 2] = 2.0
    A[3] = powers
    A[4] = [0.0, 1.0, 2.0 * tau, 3.0 * tau**2, 4.0 * tau**3, 5.0 * tau**4]
    A[5] = [0.0, 0.0, 2.0, 6.0 * tau, 12.0 * tau**2, 20.0 * tau**3]
    b = np.array([start[0], start[1], start[2], end[0], end[1], end[2]])
    coeffs = np.linalg.solve(A, b)
    return QuinticSegment(coeffs, t0, t1)


@dataclass(frozen=True)
class SwingTrajectory:
    """Per-axis profiles over the local time window [0, duration]."""

    x_profile: QuinticSegment
    y_profile: QuinticSegment
    z_profile: tuple[QuinticSegment, ...]  # two pieces, or one after a late retarget
    duration: float  # s
    target: np.ndarray  # (3,) landing point, z = 0
    peak_height: float
    peak_fraction: float

    @property
    def apex_time(self) -> float | None:
        """Junction time of the two vertical pieces; None once collapsed."""
        if len(self.z_profile) == 2:
            return self.z_profile[0].t_end
        return None


@dataclass(frozen=True)
class SwingSample:
    position: np.ndarray  # (3,)
    velocity: np.ndarray  # (3,)
    acceleration: np.ndarray  # (3,)
    clamped: bool  # True when the query time was outside [0, duration]


def _check_plan(plan: StepPlan) -> None:
    if not np.all(np.isfinite(plan.cop_T)):
        raise ValueError(f"plan landing point must be finite, got {plan.cop_T}")
    if not (plan.duration > 0.0) or not math.isfinite(plan.duration):
        raise ValueError(f"plan duration must be positive, got {plan.duration}")


def build_swing(
    start,
    plan: StepPlan,
    peak_height: float = DEFAULT_PEAK_HEIGHT,
    peak_fraction: float = DEFAULT_PEAK_FRACTION,
) -> SwingTrajectory:
    """Trajectory from a resting foot at ``start`` to the plan's landing CoP."""
    _check_plan(plan)
    if not (peak_height > 0.0):
        raise ValueError(f"peak_height must be positive, got {peak_height}")
    if not (0.0 < peak_fraction < 1.0):
        raise ValueError(f"peak_fraction must be in (0, 1), got {peak_fraction}")
    start = np.asarray(start, dtype=float).reshape(-1)
    if start.shape != (3,) or not np.all(np.isfinite(start)):
        raise ValueError(f"start must be a finite 3-vector, got {start}")

    T = plan.duration
    t_apex = peak_fraction * T
    rest = lambda v: (float(v), 0.0, 0.0)
    return SwingTrajectory(
        x_profile=quintic_from_boundary(0.0, T, rest(start[0]), rest(plan.cop_T[0])),
        y_profile=quintic_from_boundary(0.0, T, rest(start[1]), rest(plan.cop_T[1])),
        z_profile=(
            quintic_from_boundary(0.0, t_apex, rest(start[2]), rest(peak_height)),
            quintic_from_boundary(t_apex, T, rest(peak_height), rest(0.0)),
        ),
        duration=T,
        target=np.array([plan.cop_T[0], plan.cop_T[1], 0.0]),
        peak_height=float(peak_height),
        peak_fraction=float(peak_fraction),
    )


def _z_piece(traj: SwingTrajectory, t: float) -> QuinticSegment:
    pieces = traj.z_profile
    if len(pieces) == 2 and t < pieces[0].t_end:
        return pieces[0]
    return pieces[-1]


def sample(traj: SwingTrajectory, t: float) -> SwingSample:
    """Evaluate at local time ``t``, clamped to [0, duration]."""
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    clamped = t < 0.0 or t > traj.duration
    t_eval = min(max(t, 0.0), traj.duration)
    px, vx, ax = traj.x_profile.evaluate(t_eval)
    py, vy, ay = traj.y_profile.evaluate(t_eval)
    pz, vz, az = _z_piece(traj, t_eval).evaluate(t_eval)
    return SwingSample(
        position=np.array([px, py, pz]),
        velocity=np.array([vx, vy, vz]),
        acceleration=np.array([ax, ay, az]),
        clamped=clamped,
    )


def retarget(traj: SwingTrajectory, t_now: float, new_plan: StepPlan) -> SwingTrajectory:
    """Splice a new trajectory at local time ``t_now``.

    The new trajectory starts its own clock at zero and lasts
    ``new_plan.duration`` (the remaining swing time).  Boundary state at
    the splice is taken from the old trajectory, so position, velocity
    and acceleration are continuous across the splice.
    """
    _check_plan(new_plan)
    if not (0.0 <= t_now < traj.duration):
        raise ValueError(f"t_now must be in [0, {traj.duration}), got {t_now}")
    here = sample(traj, t_now)
    T = new_plan.duration
    state = lambda i: (float(here.position[i]), float(here.velocity[i]), float(here.acceleration[i]))
    rest = lambda v: (float(v), 0.0, 0.0)

    # The apex keeps its original instant: under once-per-cycle
    # retargeting this reproduces the old vertical pieces exactly (the
    # re-solved quintic matches the restriction of the old one by
    # uniqueness), instead of letting the apex recede with each splice.
    apex = traj.apex_time
    to_apex = None if apex is None else apex - t_now
    if to_apex is None or to_apex < 1e-6 or to_apex >= T - 1e-6:
        z_pieces = (quintic_from_boundary(0.0, T, state(2), rest(0.0)),)
    else:
        z_pieces = (
            quintic_from_boundary(0.0, to_apex, state(2), rest(traj.peak_height)),
            quintic_from_boundary(to_apex, T, rest(traj.peak_height), rest(0.0)),
        )
    return SwingTrajectory(
        x_profile=quintic_from_boundary(0.0, T, state(0), rest(new_plan.cop_T[0])),
        y_profile=quintic_from_boundary(0.0, T, state(1), rest(new_plan.cop_T[1])),
        z_profile=z_pieces,
        duration=T,
        target=np.array([new_plan.cop_T[0], new_plan.cop_T[1], 0.0]),
        peak_height=traj.peak_height,
        peak_fraction=traj.peak_fraction,
    )
