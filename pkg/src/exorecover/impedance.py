"""Joint-space impedance control and a torque-driven joint plant.

The assist law per joint is a spring-damper on the tracking error,

    tau = stiffness * (angle_des - angle_meas) - damping * vel_meas,

with gains stored in N*m/rad.  The stock gain set is specified per
degree of error; ``ImpedanceGains.from_deg`` stores
``k_deg / (pi/180)``, a conversion whose round trip back to per-degree
torque is exact in IEEE arithmetic, so a one-degree error commands
exactly the per-degree constants.  Zero-torque mode bypasses the law
entirely and commands zero on every joint.

Commanded torques pass through a proportional inner loop on measured
torque, ``command = tau_d + kp * (tau_d - tau_m)``, except at the hip
ab/adduction joint which has no torque sensing and is driven open loop.

The plant is a single rigid joint, ``inertia * acc = tau_applied +
tau_human - viscous * vel``, integrated with fixed-step RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "ImpedanceGains",
    "ControlMode",
    "JointState",
    "PlantParams",
    "impedance_torque",
    "p_torque_loop",
    "command_torques",
    "joint_plant_step",
    "RAD_PER_DEG",
]

RAD_PER_DEG = math.pi / 180.0
MAX_STEP = 0.01  # s

#: Index of the hip ab/adduction joint in every 3-vector of this module.
HIP_AB = 0


def _as_vec3(value, name: str) -> np.ndarray:
    out = np.asarray(value, dtype=float).reshape(-1)
    if out.shape == (1,):
        out = np.repeat(out, 3)
    if out.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {np.shape(value)}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite, got {out}")
    return out


@dataclass(frozen=True)
class ImpedanceGains:
    """Per-joint spring and damper gains, radian-based."""

    stiffness: np.ndarray  # (3,) N*m/rad
    damping: np.ndarray  # (3,) N*m*s/rad

    def __post_init__(self):
        stiff = _as_vec3(self.stiffness, "stiffness")
        damp = _as_vec3(self.damping, "damping")
        if np.any(stiff < 0.0) or np.any(damp < 0.0):
            raise ValueError("gains must be nonnegative")
        object.__setattr__(self, "stiffness", stiff)
        object.__setattr__(self, "damping", damp)

    @classmethod
    def from_deg(cls, stiffness_deg, damping=0.0) -> "ImpedanceGains":
        """Build from per-degree stiffness (the native tuning unit)."""
        stiff = _as_vec3(stiffness_deg, "stiffness_deg") / RAD_PER_DEG
        return cls(stiffness=stiff, damping=_as_vec3(damping, "damping"))


#: Stock gain set: hip ab/adduction, hip flexion, knee, in N*m per degree.
DEFAULT_STIFFNESS_DEG = (1.5, 0.4, 0.4)


class ControlMode(Enum):
    ZERO_TORQUE = "zero_torque"
    ASSIST = "assist"


@dataclass(frozen=True)
class JointState:
    """One joint of the plant."""

    angle: float  # rad
    velocity: float  # rad/s
    measured_torque: float = 0.0  # N*m, last applied actuator torque
    time: float = 0.0  # s

    def __post_init__(self):
        for name in ("angle", "velocity", "measured_torque", "time"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class PlantParams:
    inertia: float = 0.05  # kg*m^2
    viscous_damping: float = 0.5  # N*m*s/rad

    def __post_init__(self):
        if not (self.inertia > 0.0) or not math.isfinite(self.inertia):
            raise ConfigurationError(f"inertia must be positive, got {self.inertia}")
        if not (self.viscous_damping >= 0.0) or not math.isfinite(self.viscous_damping):
            raise ConfigurationError(
                f"viscous_damping must be >= 0, got {self.viscous_damping}"
            )


def impedance_torque(
    desired_angles,
    measured_angles,
    measured_velocities,
    gains: ImpedanceGains,
    mode: ControlMode,
) -> np.ndarray:
    """Desired actuator torques for all three joints."""
    if mode is ControlMode.ZERO_TORQUE:
        return np.zeros(3)
    if hasattr(desired_angles, "as_array"):
        desired_angles = desired_angles.as_array()
    desired = _as_vec3(desired_angles, "desired_angles")
    measured = _as_vec3(measured_angles, "measured_angles")
    velocity = _as_vec3(measured_velocities, "measured_velocities")
    return gains.stiffness * (desired - measured) - gains.damping * velocity


def p_torque_loop(tau_desired, tau_measured, kp: float):
    """Proportional torque tracking: ``tau_d + kp * (tau_d - tau_m)``."""
    if not (kp >= 0.0) or not math.isfinite(kp):
        raise ValueError(f"kp must be >= 0, got {kp}")
    return tau_desired + kp * (tau_desired - tau_measured)


def command_torques(tau_desired, tau_measured, kp: float) -> np.ndarray:
    """Actuator commands: inner torque loop everywhere except hip ab/adduction.

    That joint has no torque sensor, so its desired torque is commanded
    directly.
    """
    tau_d = _as_vec3(tau_desired, "tau_desired")
    tau_m = _as_vec3(tau_measured, "tau_measured")
    out = p_torque_loop(tau_d, tau_m, kp)
    out[HIP_AB] = tau_d[HIP_AB]
    return out


def joint_plant_step(
    state: JointState,
    applied_torque: float,
    human_torque: float,
    plant: PlantParams,
    dt: float,
) -> JointState:
    """One RK4 step of ``inertia * acc = tau_a + tau_h - viscous * vel``."""
    if not (0.0 < dt <= MAX_STEP):
        raise ConfigurationError(f"dt must be in (0, {MAX_STEP}], got {dt}")
    for name, v in (("applied_torque", applied_torque), ("human_torque", human_torque)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v}")
    tau = applied_torque + human_torque
    inv_i = 1.0 / plant.inertia
    b = plant.viscous_damping

    def acc(vel: float) -> float:
        return (tau - b * vel) * inv_i

    q, v = state.angle, state.velocity
    a1 = acc(v)
    v2 = v + 0.5 * dt * a1
    a2 = acc(v2)
    v3 = v + 0.5 * dt * a2
    a3 = acc(v3)
    v4 = v + dt * a3
    a4 = acc(v4)
    sixth = dt / 6.0
    return JointState(
        angle=q + sixth * (v + 2.0 * (v2 + v3) + v4),
        velocity=v + sixth * (a1 + 2.0 * (a2 + a3) + a4),
        measured_torque=float(applied_torque),
        time=state.time + dt,
    )
