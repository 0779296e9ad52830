"""Planar linear-inverted-pendulum dynamics and the divergent component.

The horizontal centre of mass obeys ``com_acc = omega**2 * (com - cop)``
with ``omega = sqrt(gravity / com_height)``.  Splitting the state into a
convergent part and the divergent component ``xi = com + com_vel / omega``
decouples the dynamics: ``xi`` diverges away from the centre of pressure,
``com`` converges towards ``xi``.  Both sub-systems have closed forms for
a constant CoP, which this module exposes next to a fixed-step RK4
integrator of the raw second-order equation.

Two-dimensional points (CoM, DCM, CoP) are plain ``(2,)`` float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "LipmParams",
    "CentroidalState",
    "natural_frequency",
    "dcm_of",
    "dcm_flow",
    "com_flow",
    "dcm_closed_form",
    "com_closed_form",
    "step_lipm",
    "apply_impulse",
]

#: Largest integration step accepted by :func:`step_lipm`, in seconds.
MAX_STEP = 0.01


def as_vec2(value, name: str = "value") -> np.ndarray:
    """Return ``value`` as a finite ``(2,)`` float array or raise ValueError."""
    if type(value) is np.ndarray and value.shape == (2,) and value.dtype == np.float64:
        # Hot path for the 1 kHz loop: already the right container.
        if math.isfinite(value[0]) and math.isfinite(value[1]):
            return value
        raise ValueError(f"{name} must be finite, got {value}")
    out = np.asarray(value, dtype=float).reshape(-1)
    if out.shape != (2,):
        raise ValueError(f"{name} must have exactly 2 components, got shape {np.shape(value)}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite, got {out}")
    return out


def natural_frequency(gravity: float, com_height: float) -> float:
    """Pendulum constant ``sqrt(gravity / com_height)`` in 1/s."""
    if not (gravity > 0.0) or not math.isfinite(gravity):
        raise ValueError(f"gravity must be positive, got {gravity}")
    if not (com_height > 0.0) or not math.isfinite(com_height):
        raise ValueError(f"com_height must be positive, got {com_height}")
    return math.sqrt(gravity / com_height)


@dataclass(frozen=True)
class LipmParams:
    """Pendulum parameters.

    The natural frequency is derived in ``__post_init__`` and therefore
    always consistent with ``gravity`` and ``com_height``; being frozen,
    any change goes through ``dataclasses.replace`` and recomputes it.
    """

    gravity: float = 9.81  # m/s^2
    com_height: float = 0.88  # m, constant-height plane of the CoM
    mass: float = 70.0  # kg, only used to convert impulses
    omega: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.mass > 0.0) or not math.isfinite(self.mass):
            raise ValueError(f"mass must be positive, got {self.mass}")
        object.__setattr__(
            self, "omega", natural_frequency(self.gravity, self.com_height)
        )


@dataclass(frozen=True)
class CentroidalState:
    """Horizontal CoM position/velocity at a given time."""

    com: np.ndarray  # (2,) m
    com_vel: np.ndarray  # (2,) m/s
    time: float = 0.0  # s

    def __post_init__(self):
        object.__setattr__(self, "com", as_vec2(self.com, "com"))
        object.__setattr__(self, "com_vel", as_vec2(self.com_vel, "com_vel"))
        if not math.isfinite(self.time):
            raise ValueError(f"time must be finite, got {self.time}")


def dcm_of(state: CentroidalState, params: LipmParams) -> np.ndarray:
    """Divergent component ``com + com_vel / omega``."""
    return state.com + state.com_vel / params.omega


def dcm_flow(xi, cop, params: LipmParams) -> np.ndarray:
    """Time derivative of the divergent component, ``omega * (xi - cop)``."""
    return params.omega * (as_vec2(xi, "xi") - as_vec2(cop, "cop"))


def com_flow(state: CentroidalState, xi, params: LipmParams) -> np.ndarray:
    """CoM velocity written against the DCM, ``omega * (xi - com)``."""
    return params.omega * (as_vec2(xi, "xi") - state.com)


def _check_horizon(t: float) -> float:
    if not (t >= 0.0) or not math.isfinite(t):
        raise ValueError(f"horizon t must be >= 0, got {t}")
    return float(t)


def dcm_closed_form(xi0, cop0, params: LipmParams, t: float) -> np.ndarray:
    """DCM after time ``t`` under a CoP held constant at ``cop0``.

    ``(xi0 - cop0) * exp(omega * t) + cop0``
    """
    t = _check_horizon(t)
    xi0 = as_vec2(xi0, "xi0")
    cop0 = as_vec2(cop0, "cop0")
    return (xi0 - cop0) * math.exp(params.omega * t) + cop0


def com_closed_form(com0, xi0, params: LipmParams, t: float) -> np.ndarray:
    """CoM after time ``t`` while the DCM is frozen at ``xi0``.

    ``(com0 - xi0) * exp(-omega * t) + xi0``; valid when the CoP tracks
    the DCM so that ``xi`` does not move (the post-capture regime).
    """
    t = _check_horizon(t)
    com0 = as_vec2(com0, "com0")
    xi0 = as_vec2(xi0, "xi0")
    return (com0 - xi0) * math.exp(-params.omega * t) + xi0


def step_lipm(state: CentroidalState, cop, params: LipmParams, dt: float) -> CentroidalState:
    """Advance the pendulum by one RK4 step with the CoP held constant.

    ``dt`` must lie in ``(0, 0.01]`` seconds; larger steps degrade the
    classical fourth-order accuracy this integrator is relied on for.
    """
    if not (0.0 < dt <= MAX_STEP):
        raise ConfigurationError(f"dt must be in (0, {MAX_STEP}], got {dt}")
    cop = as_vec2(cop, "cop")
    w2 = params.omega * params.omega
    half = 0.5 * dt
    sixth = dt / 6.0

    # Scalar per-axis arithmetic, in the same order an elementwise array
    # version would use, so results are bit-identical but the 1 kHz loop
    # avoids small-array overhead.
    out_com = np.empty(2)
    out_vel = np.empty(2)
    for i in range(2):
        x = float(state.com[i])
        v = float(state.com_vel[i])
        p = float(cop[i])
        a1 = w2 * (x - p)
        x2 = x + half * v
        v2 = v + half * a1
        a2 = w2 * (x2 - p)
        x3 = x + half * v2
        v3 = v + half * a2
        a3 = w2 * (x3 - p)
        x4 = x + dt * v3
        v4 = v + dt * a3
        a4 = w2 * (x4 - p)
        out_com[i] = x + sixth * (v + 2.0 * (v2 + v3) + v4)
        out_vel[i] = v + sixth * (a1 + 2.0 * (a2 + a3) + a4)

    return CentroidalState(com=out_com, com_vel=out_vel, time=state.time + dt)


def apply_impulse(state: CentroidalState, impulse, params: LipmParams) -> CentroidalState:
    """Instantaneous push: velocity jumps by ``impulse / mass``.

    Position and time are untouched; the DCM therefore jumps by
    ``impulse / (mass * omega)``.
    """
    impulse = as_vec2(impulse, "impulse")
    return CentroidalState(
        com=state.com,
        com_vel=state.com_vel + impulse / params.mass,
        time=state.time,
    )
