"""Closed-loop push-recovery simulation at a fixed control rate.

One scenario runs a planar pendulum model of the wearer, a balance
detector, the step-adaptation planner, a swing-foot trajectory tracked
through per-joint impedance control, and torque-driven joint plants,
all on a common fixed-step clock (1 kHz by default).

World frame: x forward, y left, origin at the standing centre of
pressure.  The hip joints sit on the CoM plane, laterally offset by
``l0`` from the trunk centre, so a world foot point converts to the leg
frame by subtracting the hip position.

Measurement model: the controller never reads the CoM directly.  Trunk
attitude is synthesised from the true CoM as ``pitch =
asin((com_x - ref_x) / L)`` (same for roll with y), optionally
corrupted with white noise, and the estimator inverts it with
``L * sin``.  Velocity is taken from the state.  The anchor ``ref`` is
the stance reference and moves only at touchdown.

Per cycle: scheduled pushes are applied, the DCM is estimated, the
phase machine advances (trigger, replan, touchdown, capture, chain),
desired torques are computed, one row is logged, and the pendulum and
the joint plants integrate to the next tick.  While a step is in
flight the planner re-solves every cycle over the shrunk duration
window; when the plan moves materially the swing trajectory is
respliced in place.  After touchdown the stance CoP is the measured DCM
clamped into the new foot's support rectangle, which pins the DCM and
leads to capture.  While standing the same clamp runs over the current
support polygon (both feet before a step, the landed foot after), so
small sensor noise or a residual post-capture offset is held by the
ankle strategy instead of drifting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .detector import BalanceDetector, RecoveryPhase, SwayEllipse
from .errors import ConfigurationError, PlannerInfeasibleError, WorkspaceError, JointLimitError
from .impedance import (
    ControlMode,
    ImpedanceGains,
    JointState,
    PlantParams,
    command_torques,
    impedance_torque,
    joint_plant_step,
)
from .kinematics import (
    FootTarget,
    JointAngles,
    JointLimits,
    LegGeometry,
    Side,
    forward_kinematics,
    inverse_kinematics,
)
from .lipm import CentroidalState, LipmParams, apply_impulse, as_vec2, dcm_of, step_lipm
from .planner import (
    ActiveSetQp,
    NominalGait,
    PlannerInput,
    StepBounds,
    StepPlan,
    mirror_bounds,
    mirror_gait,
    plan_step,
    replan,
)
from .swing import SwingTrajectory, build_swing, retarget, sample

__all__ = [
    "PushEvent",
    "HumanPulse",
    "TrunkAttitude",
    "ScenarioConfig",
    "Event",
    "SimTrace",
    "StepSummary",
    "estimate_com",
    "ankle_clamp",
    "run_scenario",
    "summarize",
]

_DEG = math.pi / 180.0

#: Plans moving less than this (in landing point or landing time) do not
#: resplice the swing trajectory or emit a Replanned event.
MATERIAL_CHANGE = 1e-9


@dataclass(frozen=True)
class PushEvent:
    """Impulsive disturbance applied to the CoM at a fixed time."""

    time: float  # s
    impulse: np.ndarray  # (2,) N*s

    def __post_init__(self):
        object.__setattr__(self, "impulse", as_vec2(self.impulse, "impulse"))
        if not (self.time >= 0.0) or not math.isfinite(self.time):
            raise ValueError(f"push time must be >= 0, got {self.time}")


@dataclass(frozen=True)
class HumanPulse:
    """Constant wearer torque on one swing-leg joint over a time window."""

    joint: int  # 0 = hip ab/adduction, 1 = hip flexion, 2 = knee
    start: float  # s
    end: float  # s
    torque: float  # N*m

    def __post_init__(self):
        if self.joint not in (0, 1, 2):
            raise ValueError(f"joint must be 0, 1 or 2, got {self.joint}")
        if not (0.0 <= self.start < self.end):
            raise ValueError(f"need 0 <= start < end, got [{self.start}, {self.end}]")
        if not math.isfinite(self.torque):
            raise ValueError("torque must be finite")


@dataclass(frozen=True)
class TrunkAttitude:
    """Small-angle trunk orientation; both angles must stay below 90 deg."""

    roll: float  # rad, positive = lean left
    pitch: float  # rad, positive = lean forward

    def __post_init__(self):
        for name in ("roll", "pitch"):
            v = getattr(self, name)
            if not math.isfinite(v) or abs(v) >= 0.5 * math.pi:
                raise ValueError(f"{name} must satisfy |angle| < pi/2, got {v}")


def estimate_com(attitude: TrunkAttitude, pendulum_length: float) -> np.ndarray:
    """Horizontal CoM offset from the stance reference, ``L * sin(angle)``."""
    if not (pendulum_length > 0.0) or not math.isfinite(pendulum_length):
        raise ValueError(f"pendulum_length must be positive, got {pendulum_length}")
    return np.array(
        [pendulum_length * math.sin(attitude.pitch), pendulum_length * math.sin(attitude.roll)]
    )


def ankle_clamp(xi, foot_center, half_extents) -> np.ndarray:
    """Componentwise clamp of the DCM into the foot support rectangle.

    As the half extents shrink to zero this degenerates to the
    point-foot CoP at ``foot_center``.
    """
    xi = as_vec2(xi, "xi")
    center = as_vec2(foot_center, "foot_center")
    half = as_vec2(half_extents, "half_extents")
    if np.any(half < 0.0):
        raise ValueError(f"half_extents must be >= 0, got {half}")
    return np.clip(xi, center - half, center + half)


@dataclass
class ScenarioConfig:
    """Every knob of one simulation run; defaults give a standing human.

    Planner geometry convention: ``cop_nom``, ``cop_min`` and ``cop_max``
    are displacements from the stance-foot ankle, written for a
    right-leg swing; a left-leg swing mirrors the lateral axis.
    """

    # pendulum
    gravity: float = 9.81  # m/s^2
    com_height: float = 0.88  # m
    mass: float = 70.0  # kg
    com0: tuple[float, float] = (0.0, 0.0)  # m
    vel0: tuple[float, float] = (0.0, 0.0)  # m/s
    # leg geometry (m) and joint limits (deg)
    l0: float = 0.06
    l1: float = 0.04
    l2: float = 0.45
    l3: float = 0.45
    hip_ab_limits_deg: tuple[float, float] = (-20.0, 20.0)
    hip_flex_limits_deg: tuple[float, float] = (-20.0, 100.0)
    knee_limits_deg: tuple[float, float] = (0.0, 120.0)
    stance_width: float | None = None  # m, default 2*(l0+l1)
    # detector
    ellipse_a: float = 0.05  # m, forward semi-axis
    ellipse_b: float = 0.05  # m, lateral semi-axis
    debounce_cycles: int = 2
    capture_tolerance: float = 0.02  # m
    capture_hold: float = 0.2  # s
    chain_offset: float = 0.04  # m, post-landing offset that chains a new step
    # planner (right-swing convention, stance-foot-relative CoP numbers)
    t_nom: float = 0.5  # s
    t_min: float = 0.25  # s
    t_max: float = 1.2  # s
    # alpha3 multiplies squared deviations of sigma = exp(omega*T), which
    # is an order of magnitude larger than the metre-scale terms, so its
    # default is correspondingly small.
    weights: tuple[float, float, float] = (1.0, 5.0, 0.02)
    cop_nom: tuple[float, float] = (0.0, -0.2)  # m
    gamma_nom: tuple[float, float] = (0.0, 0.0)  # m
    cop_min: tuple[float, float] = (-0.15, -0.30)  # m
    cop_max: tuple[float, float] = (0.30, -0.04)  # m
    # swing profile
    peak_height: float = 0.07  # m
    peak_fraction: float = 0.4
    # control
    stiffness_deg: tuple[float, float, float] = (1.5, 0.4, 0.4)  # N*m/deg
    damping: tuple[float, float, float] = (0.0, 0.0, 0.0)  # N*m*s/rad
    torque_kp: float = 1.0
    mode: str = "assist"  # or "zero_torque"
    # joint plant
    inertia: float = 0.05  # kg*m^2
    viscous_damping: float = 0.5  # N*m*s/rad
    # foot geometry
    foot_half_x: float = 0.10  # m
    foot_half_y: float = 0.06  # m
    # run control
    dt: float = 0.001  # s
    duration: float = 3.0  # s
    seed: int = 0
    attitude_noise_deg: float = 0.0
    pushes: tuple[PushEvent, ...] = ()
    human_pulses: tuple[HumanPulse, ...] = ()

    # -- helpers -----------------------------------------------------------

    def lipm_params(self) -> LipmParams:
        return LipmParams(self.gravity, self.com_height, self.mass)

    def joint_limits(self) -> JointLimits:
        to_rad = lambda pair: (pair[0] * _DEG, pair[1] * _DEG)
        return JointLimits(
            hip_ab=to_rad(self.hip_ab_limits_deg),
            hip_flex=to_rad(self.hip_flex_limits_deg),
            knee=to_rad(self.knee_limits_deg),
        )

    def leg_geometry(self, side: Side) -> LegGeometry:
        return LegGeometry(self.l0, self.l1, self.l2, self.l3, side)

    def resolved_stance_width(self) -> float:
        if self.stance_width is not None:
            return float(self.stance_width)
        return 2.0 * (self.l0 + self.l1)

    def nominal_gait(self) -> NominalGait:
        return NominalGait(
            cop_T_nom=np.asarray(self.cop_nom, dtype=float),
            gamma_nom=np.asarray(self.gamma_nom, dtype=float),
            T_nom=self.t_nom,
            weights=self.weights,
        )

    def step_bounds(self) -> StepBounds:
        return StepBounds(
            cop_min=np.asarray(self.cop_min, dtype=float),
            cop_max=np.asarray(self.cop_max, dtype=float),
            T_min=self.t_min,
            T_max=self.t_max,
        )

    def validate(self) -> None:
        """Raise ConfigurationError listing every invalid field."""
        bad: list[str] = []

        def check(cond: bool, msg: str) -> None:
            if not cond:
                bad.append(msg)

        check(self.gravity > 0.0, f"gravity must be positive, got {self.gravity}")
        check(self.com_height > 0.0, f"com_height must be positive, got {self.com_height}")
        check(self.mass > 0.0, f"mass must be positive, got {self.mass}")
        for name in ("l0", "l1", "l2", "l3"):
            check(getattr(self, name) > 0.0, f"{name} must be positive")
        for name in ("hip_ab_limits_deg", "hip_flex_limits_deg", "knee_limits_deg"):
            lo, hi = getattr(self, name)
            check(lo < hi, f"{name} must satisfy min < max, got ({lo}, {hi})")
        if self.stance_width is not None:
            check(self.stance_width > 0.0, "stance_width must be positive")
        check(self.ellipse_a > 0.0, "ellipse_a must be positive")
        check(self.ellipse_b > 0.0, "ellipse_b must be positive")
        check(self.debounce_cycles >= 1, "debounce_cycles must be >= 1")
        check(self.capture_tolerance > 0.0, "capture_tolerance must be positive")
        check(self.capture_hold >= 0.0, "capture_hold must be >= 0")
        check(self.chain_offset > 0.0, "chain_offset must be positive")
        check(0.0 < self.t_min <= self.t_max, f"need 0 < t_min <= t_max, got [{self.t_min}, {self.t_max}]")
        check(self.t_nom > 0.0, "t_nom must be positive")
        check(all(w > 0.0 for w in self.weights), f"weights must be positive, got {self.weights}")
        check(
            all(lo <= hi for lo, hi in zip(self.cop_min, self.cop_max)),
            f"cop_min {self.cop_min} must not exceed cop_max {self.cop_max}",
        )
        check(self.peak_height > 0.0, "peak_height must be positive")
        check(0.0 < self.peak_fraction < 1.0, "peak_fraction must be in (0, 1)")
        check(all(s >= 0.0 for s in self.stiffness_deg), "stiffness_deg must be >= 0")
        check(all(d >= 0.0 for d in self.damping), "damping must be >= 0")
        check(self.torque_kp >= 0.0, "torque_kp must be >= 0")
        check(self.mode in ("assist", "zero_torque"), f"mode must be assist or zero_torque, got {self.mode!r}")
        check(self.inertia > 0.0, "inertia must be positive")
        check(self.viscous_damping >= 0.0, "viscous_damping must be >= 0")
        check(self.foot_half_x > 0.0, "foot_half_x must be positive")
        check(self.foot_half_y > 0.0, "foot_half_y must be positive")
        check(0.0 < self.dt <= 0.01, f"dt must be in (0, 0.01], got {self.dt}")
        check(self.duration > 0.0, "duration must be positive")
        check(self.attitude_noise_deg >= 0.0, "attitude_noise_deg must be >= 0")
        for i, p in enumerate(self.pushes):
            check(p.time <= self.duration, f"push {i} at t={p.time} is past the run duration")
        if bad:
            raise ConfigurationError("invalid scenario: " + "; ".join(bad))


@dataclass(frozen=True)
class Event:
    """Timestamped discrete occurrence; payload values are plain floats/lists."""

    time: float
    kind: str
    payload: dict


@dataclass
class SimTrace:
    """Dense per-cycle log plus the event stream and the resolved config."""

    t: np.ndarray
    com: np.ndarray  # (N, 2)
    com_vel: np.ndarray  # (N, 2)
    xi: np.ndarray  # (N, 2), true DCM
    cop: np.ndarray  # (N, 2)
    phase: list[str]
    foot: np.ndarray  # (N, 3), commanded swing-foot point (world)
    joint_desired: np.ndarray  # (N, 3) rad
    joint_measured: np.ndarray  # (N, 3) rad
    torque: np.ndarray  # (N, 3) N*m, applied actuator torques
    events: list[Event]
    config: ScenarioConfig


@dataclass(frozen=True)
class StepSummary:
    step_taken: bool
    captured: bool
    aborted: bool
    num_steps: int
    num_replans: int
    final_dcm_offset: float
    swing_side: str | None = None
    trigger_time: float | None = None
    touchdown_time: float | None = None
    step_duration: float | None = None
    capture_time: float | None = None
    swing_start: tuple[float, float] | None = None
    planned_landing: tuple[float, float] | None = None
    landed_position: tuple[float, float] | None = None
    planned_vs_landed_angle_deg: float | None = None


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v).reshape(-1)]


class _Episode:
    """Mutable bookkeeping for one recovery step."""

    def __init__(self, trigger_time: float, swing: Side, stance_xy: np.ndarray):
        self.trigger_time = trigger_time
        self.swing = swing
        self.stance_xy = stance_xy
        self.plan: StepPlan | None = None
        self.initial_plan: StepPlan | None = None
        self.traj: SwingTrajectory | None = None
        self.traj_t0 = trigger_time
        self.swing_start: np.ndarray | None = None
        self.nominal: NominalGait | None = None
        self.bounds: StepBounds | None = None
        self.frozen = False  # True once the terminal window is reached


def run_scenario(config: ScenarioConfig) -> SimTrace:
    """Run one scenario to completion and return the dense trace."""
    config.validate()
    params = config.lipm_params()
    limits = config.joint_limits()
    gains = ImpedanceGains.from_deg(
        np.asarray(config.stiffness_deg, dtype=float), np.asarray(config.damping, dtype=float)
    )
    plant = PlantParams(config.inertia, config.viscous_damping)
    mode = ControlMode(config.mode)
    foot_half = np.array([config.foot_half_x, config.foot_half_y])
    solver = ActiveSetQp()

    width = config.resolved_stance_width()
    feet: dict[Side, np.ndarray] = {
        Side.LEFT: np.array([0.0, 0.5 * width]),
        Side.RIGHT: np.array([0.0, -0.5 * width]),
    }
    cop = np.zeros(2)
    support_center = np.zeros(2)  # clamp centre; the planted foot after a step
    # Clamp half-widths: the double-support hull initially, one foot after
    # touchdown.
    support_half = np.array([foot_half[0], 0.5 * width + foot_half[1]])
    attitude_ref = np.zeros(2)
    state = CentroidalState(np.asarray(config.com0, float), np.asarray(config.vel0, float), 0.0)

    detector = BalanceDetector(
        SwayEllipse(np.zeros(2), config.ellipse_a, config.ellipse_b),
        debounce_cycles=config.debounce_cycles,
        capture_tolerance=config.capture_tolerance,
        capture_hold=config.capture_hold,
    )
    rng = np.random.default_rng(config.seed)
    noise_std = config.attitude_noise_deg * _DEG
    L = config.com_height

    def hip_xy(side: Side, com: np.ndarray) -> np.ndarray:
        lateral = config.l0 if side is Side.LEFT else -config.l0
        return np.array([com[0], com[1] + lateral])

    def leg_target(side: Side, world_point: np.ndarray, com: np.ndarray) -> FootTarget:
        hip = hip_xy(side, com)
        return FootTarget(
            np.array(
                [world_point[0] - hip[0], world_point[1] - hip[1], world_point[2] - L]
            )
        )

    def measure(st: CentroidalState) -> tuple[np.ndarray, np.ndarray]:
        """(com_estimate, dcm_estimate) through the attitude pathway."""
        offset = st.com - attitude_ref
        scaled = np.clip(offset / L, -1.0 + 1e-12, 1.0 - 1e-12)
        pitch = math.asin(scaled[0])
        roll = math.asin(scaled[1])
        if noise_std > 0.0:
            # The inclinometer saturates at the edge of its range.
            lim = 0.5 * math.pi - 1e-9
            pitch = min(max(pitch + rng.normal(0.0, noise_std), -lim), lim)
            roll = min(max(roll + rng.normal(0.0, noise_std), -lim), lim)
        att = TrunkAttitude(roll=roll, pitch=pitch)
        com_est = attitude_ref + estimate_com(att, L)
        return com_est, com_est + st.com_vel / params.omega

    # Tracked leg state; before any step this mirrors the planted right foot.
    tracked_side = Side.RIGHT
    geom = config.leg_geometry(tracked_side)
    planted = np.array([feet[tracked_side][0], feet[tracked_side][1], 0.0])
    q_hold = inverse_kinematics(
        leg_target(tracked_side, planted, state.com), geom, limits
    ).as_array()
    plants = [JointState(angle=float(a), velocity=0.0) for a in q_hold]
    q_des = q_hold.copy()
    foot_point = planted.copy()
    tau_applied = np.zeros(3)

    episode: _Episode | None = None
    episodes_done = 0
    aborted = False
    events: list[Event] = []
    pushes = sorted(config.pushes, key=lambda p: (p.time, p.impulse[0], p.impulse[1]))
    push_idx = 0

    n_rows = int(round(config.duration / config.dt))
    if n_rows < 1:
        raise ConfigurationError("duration shorter than one control cycle")
    log_t = np.empty(n_rows)
    log_com = np.empty((n_rows, 2))
    log_vel = np.empty((n_rows, 2))
    log_xi = np.empty((n_rows, 2))
    log_cop = np.empty((n_rows, 2))
    log_phase: list[str] = []
    log_foot = np.empty((n_rows, 3))
    log_qd = np.empty((n_rows, 3))
    log_qm = np.empty((n_rows, 3))
    log_tau = np.empty((n_rows, 3))

    def abort(t: float, reason: str) -> None:
        nonlocal aborted, episode
        aborted = True
        episode = None
        events.append(Event(t, "StepAborted", {"reason": reason}))

    def begin_episode(
        t: float,
        xi_hat: np.ndarray,
        com_hat: np.ndarray,
        forced_swing: Side | None = None,
    ) -> None:
        nonlocal episode, cop, tracked_side, geom, plants, q_des, foot_point
        if forced_swing is not None:
            # A chained step stands on the foot that just landed; only the
            # trailing foot is free.
            swing = forced_swing
        else:
            # Falling sideways loads that side's leg, so the opposite leg
            # is free to swing.  Judge the side from the support centre,
            # not the regulated CoP, which tracks the DCM while standing.
            lateral = xi_hat[1] - support_center[1]
            swing = Side.LEFT if lateral < -1e-12 else Side.RIGHT
        stance = Side.RIGHT if swing is Side.LEFT else Side.LEFT
        ep = _Episode(t, swing, feet[stance].copy())

        nominal = config.nominal_gait()
        bounds = config.step_bounds()
        if swing is Side.LEFT:
            nominal = mirror_gait(nominal)
            bounds = mirror_bounds(bounds)
        ep.nominal = replace(nominal, cop_T_nom=nominal.cop_T_nom + ep.stance_xy)
        ep.bounds = bounds.shift(ep.stance_xy)

        # Weight shifts onto the stance leg: the CoP the pendulum sees
        # during the swing is the stance ankle point.
        cop = ep.stance_xy.copy()
        try:
            plan = plan_step(
                PlannerInput(xi0=xi_hat, cop0=cop, omega=params.omega,
                             nominal=ep.nominal, bounds=ep.bounds),
                solver,
            )
        except PlannerInfeasibleError as err:
            abort(t, f"plan_step infeasible: {', '.join(err.violated) or err}")
            return
        ep.plan = plan
        ep.initial_plan = plan
        ep.swing_start = np.array([feet[swing][0], feet[swing][1], 0.0])
        ep.traj = build_swing(ep.swing_start, plan, config.peak_height, config.peak_fraction)
        ep.traj_t0 = t

        tracked_side = swing
        geom = config.leg_geometry(swing)
        try:
            q0 = inverse_kinematics(leg_target(swing, ep.swing_start, com_hat), geom, limits)
        except (WorkspaceError, JointLimitError) as err:
            abort(t, f"swing start pose unreachable: {err}")
            return
        plants = [JointState(angle=float(a), velocity=0.0, time=t) for a in q0.as_array()]
        q_des = q0.as_array().copy()
        foot_point = ep.swing_start.copy()

        events.append(Event(t, "PlanIssued", {
            "swing": swing.value,
            "cop_T": _vec(plan.cop_T),
            "gamma_T": _vec(plan.gamma_T),
            "duration": plan.duration,
            "sigma": plan.sigma,
            "objective": plan.objective,
            "swing_start": _vec(ep.swing_start[:2]),
        }))
        episode = ep

    for k in range(n_rows):
        t = k * config.dt

        # Scheduled pushes due at this tick.
        while push_idx < len(pushes) and pushes[push_idx].time <= t + 1e-12:
            push = pushes[push_idx]
            state = apply_impulse(state, push.impulse, params)
            events.append(Event(t, "PushApplied", {"impulse": _vec(push.impulse)}))
            push_idx += 1

        com_hat, xi_hat = measure(state)
        phase = detector.phase

        if phase is RecoveryPhase.STANDING:
            # Ankle strategy between episodes: hold the DCM with the CoP
            # wherever the support polygon allows.
            cop = ankle_clamp(xi_hat, support_center, support_half)
            trig = detector.update(xi_hat, t)
            if trig is not None:
                events.append(Event(t, "BalanceLost", {
                    "xi": _vec(trig.xi), "excursion": trig.excursion,
                }))
                begin_episode(t, xi_hat, com_hat)

        elif phase is RecoveryPhase.STEPPING_PLANNED:
            if episode is None:
                # A previous abort left the machine here; nothing to do.
                pass
            else:
                detector.start_swing(t)

        elif phase is RecoveryPhase.SWING and episode is not None:
            ep = episode
            elapsed = t - ep.trigger_time
            if not ep.frozen:
                try:
                    new_plan = replan(
                        ep.plan,
                        PlannerInput(xi0=xi_hat, cop0=cop, omega=params.omega,
                                     nominal=ep.nominal, bounds=ep.bounds),
                        elapsed,
                        solver,
                    )
                except PlannerInfeasibleError as err:
                    abort(t, f"replan infeasible: {', '.join(err.violated) or err}")
                    new_plan = None
                if new_plan is not None:
                    if new_plan.status == "terminal":
                        ep.frozen = True
                        ep.plan = new_plan
                    else:
                        moved = float(np.abs(new_plan.cop_T - ep.plan.cop_T).max())
                        shifted = abs(
                            (ep.trigger_time + new_plan.landing_time)
                            - (ep.trigger_time + ep.plan.landing_time)
                        )
                        if moved > MATERIAL_CHANGE or shifted > MATERIAL_CHANGE:
                            ep.traj = retarget(ep.traj, t - ep.traj_t0, new_plan)
                            ep.traj_t0 = t
                            events.append(Event(t, "Replanned", {
                                "cop_T": _vec(new_plan.cop_T),
                                "remaining": new_plan.duration,
                                "landing_time": ep.trigger_time + new_plan.landing_time,
                                "sigma": new_plan.sigma,
                            }))
                        ep.plan = new_plan

            if episode is not None and t - ep.traj_t0 >= ep.traj.duration - 1e-9:
                # Touchdown: the achieved foot point becomes the stance.
                q_meas = np.array([p.angle for p in plants])
                achieved = forward_kinematics(
                    JointAngles(*q_meas), geom
                ).position
                hip = hip_xy(ep.swing, state.com)
                landed = np.array([hip[0] + achieved[0], hip[1] + achieved[1]])
                feet[ep.swing] = landed
                cop = landed.copy()
                support_center = landed.copy()
                support_half = foot_half.copy()
                attitude_ref = landed.copy()
                foot_point = np.array([landed[0], landed[1], 0.0])
                detector.touchdown(t)
                events.append(Event(t, "TouchDown", {
                    "planned": _vec(ep.plan.cop_T),
                    "initial_planned": _vec(ep.initial_plan.cop_T),
                    "landed": _vec(landed),
                    "swing_start": _vec(ep.swing_start[:2]),
                    "trigger_time": ep.trigger_time,
                }))

        elif phase is RecoveryPhase.LANDED and episode is not None:
            cop = ankle_clamp(xi_hat, support_center, support_half)
            offset = float(np.linalg.norm(xi_hat - cop))
            if detector.update_landing(xi_hat, cop, t):
                events.append(Event(t, "Captured", {
                    "xi": _vec(xi_hat), "cop": _vec(cop), "offset": offset,
                }))
                episodes_done += 1
                episode = None
            elif offset > config.chain_offset:
                # The new foot cannot hold the DCM: chain another step
                # with the trailing foot.
                trailing = Side.RIGHT if episode.swing is Side.LEFT else Side.LEFT
                detector.restart_step(t)
                begin_episode(t, xi_hat, com_hat, forced_swing=trailing)

        elif phase is RecoveryPhase.CAPTURED:
            cop = ankle_clamp(xi_hat, support_center, support_half)
            # Re-arm around the new stance point so a later push can
            # trigger a fresh episode.
            detector.ellipse = SwayEllipse(cop.copy(), config.ellipse_a, config.ellipse_b)
            detector.stand(t)

        # Desired joint state and torques for the tracked leg.
        in_flight = episode is not None and detector.phase in (
            RecoveryPhase.STEPPING_PLANNED,
            RecoveryPhase.SWING,
        )
        if in_flight:
            ep = episode
            s = sample(ep.traj, t - ep.traj_t0)
            foot_point = s.position
            try:
                q_des = inverse_kinematics(
                    leg_target(ep.swing, s.position, com_hat), geom, limits
                ).as_array()
            except (WorkspaceError, JointLimitError) as err:
                abort(t, f"swing target unreachable: {err}")
                in_flight = False
        if in_flight:
            q_meas = np.array([p.angle for p in plants])
            v_meas = np.array([p.velocity for p in plants])
            tau_meas = np.array([p.measured_torque for p in plants])
            tau_des = impedance_torque(q_des, q_meas, v_meas, gains, mode)
            tau_applied = command_torques(tau_des, tau_meas, config.torque_kp)
        else:
            tau_applied = np.zeros(3)

        log_t[k] = t
        log_com[k] = state.com
        log_vel[k] = state.com_vel
        log_xi[k] = dcm_of(state, params)
        log_cop[k] = cop
        log_phase.append(detector.phase.value)
        log_foot[k] = foot_point
        log_qd[k] = q_des
        log_qm[k] = [p.angle for p in plants]
        log_tau[k] = tau_applied

        # Integrate pendulum and joint plants to the next tick.
        state = step_lipm(state, cop, params, config.dt)
        human = np.zeros(3)
        for pulse in config.human_pulses:
            if pulse.start <= t < pulse.end:
                human[pulse.joint] += pulse.torque
        plants = [
            joint_plant_step(p, float(tau_applied[i]), float(human[i]), plant, config.dt)
            for i, p in enumerate(plants)
        ]

    return SimTrace(
        t=log_t,
        com=log_com,
        com_vel=log_vel,
        xi=log_xi,
        cop=log_cop,
        phase=log_phase,
        foot=log_foot,
        joint_desired=log_qd,
        joint_measured=log_qm,
        torque=log_tau,
        events=events,
        config=config,
    )


def summarize(trace: SimTrace) -> StepSummary:
    """Condense a trace into the episode-level facts."""
    by_kind: dict[str, list[Event]] = {}
    for ev in trace.events:
        by_kind.setdefault(ev.kind, []).append(ev)

    plans = by_kind.get("PlanIssued", [])
    touchdowns = by_kind.get("TouchDown", [])
    captures = by_kind.get("Captured", [])
    replans = by_kind.get("Replanned", [])
    aborted = "StepAborted" in by_kind
    final_offset = float(np.linalg.norm(trace.xi[-1] - trace.cop[-1]))

    if not touchdowns:
        return StepSummary(
            step_taken=False,
            captured=bool(captures),
            aborted=aborted,
            num_steps=0,
            num_replans=len(replans),
            final_dcm_offset=final_offset,
        )

    td = touchdowns[0]
    plan0 = plans[0]
    start = np.asarray(td.payload["swing_start"])
    planned = np.asarray(td.payload["initial_planned"])
    landed = np.asarray(td.payload["landed"])
    v_plan = planned - start
    v_land = landed - start
    angle = math.degrees(
        math.atan2(
            v_plan[0] * v_land[1] - v_plan[1] * v_land[0], float(v_plan @ v_land)
        )
    )
    return StepSummary(
        step_taken=True,
        captured=bool(captures),
        aborted=aborted,
        num_steps=len(touchdowns),
        num_replans=len(replans),
        final_dcm_offset=final_offset,
        swing_side=plan0.payload["swing"],
        trigger_time=float(td.payload["trigger_time"]),
        touchdown_time=float(td.time),
        step_duration=float(td.time) - float(td.payload["trigger_time"]),
        capture_time=float(captures[0].time) if captures else None,
        swing_start=(float(start[0]), float(start[1])),
        planned_landing=(float(planned[0]), float(planned[1])),
        landed_position=(float(landed[0]), float(landed[1])),
        planned_vs_landed_angle_deg=angle,
    )
