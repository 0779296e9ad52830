"""Omnidirectional push-recovery step planning and simulation.

The package models a wearer of a lower-limb exoskeleton as a planar
linear inverted pendulum, watches the divergent component of motion
(DCM) for balance loss, adapts a recovery step (landing point and step
duration) with a small quadratic program, swings the foot along quintic
profiles tracked by per-joint impedance control, and closes the loop in
a fixed-rate simulation with an ankle CoP strategy after touchdown.
"""

from .detector import BalanceDetector, BalanceLost, RecoveryPhase, SwayEllipse, ellipse_excursion
from .errors import (
    ConfigurationError,
    JointLimitError,
    PhaseTransitionError,
    PlannerInfeasibleError,
    ScenarioParseError,
    WorkspaceError,
)
from .impedance import (
    ControlMode,
    ImpedanceGains,
    JointState,
    PlantParams,
    command_torques,
    impedance_torque,
    joint_plant_step,
    p_torque_loop,
)
from .kinematics import (
    FootTarget,
    JointAngles,
    JointLimits,
    LegGeometry,
    Side,
    forward_kinematics,
    inverse_kinematics,
    reachable,
    workspace_step_bounds,
)
from .lipm import (
    CentroidalState,
    LipmParams,
    apply_impulse,
    com_closed_form,
    com_flow,
    dcm_closed_form,
    dcm_flow,
    dcm_of,
    natural_frequency,
    step_lipm,
)
from .planner import (
    NominalGait,
    PlannerInput,
    StepBounds,
    StepPlan,
    assemble_qp,
    constraint_names,
    mirror_bounds,
    mirror_gait,
    nominal_consistent_dcm,
    plan_step,
    planning_cost,
    replan,
)
from .qp import ActiveSetQp, KktResidual, QpProblem, QpSolution, kkt_residual, solve_qp
from .simulation import (
    Event,
    HumanPulse,
    PushEvent,
    ScenarioConfig,
    SimTrace,
    StepSummary,
    TrunkAttitude,
    ankle_clamp,
    estimate_com,
    run_scenario,
    summarize,
)
from .swing import SwingSample, SwingTrajectory, build_swing, quintic_from_boundary, retarget, sample

__version__ = "0.1.0"
