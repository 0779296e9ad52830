"""Exception types shared across the package.

Domain errors on numeric preconditions (negative time, non-positive
height, bad shapes) raise plain ValueError; the classes below cover the
cases where callers are expected to branch on the failure kind.
"""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A parameter set is structurally invalid (bad dt, empty box, ...)."""


class ScenarioParseError(ConfigurationError):
    """A scenario or grid file could not be parsed.

    The message always names the offending file, line and key so the
    failure can be fixed without reading source code.
    """


class WorkspaceError(ValueError):
    """An inverse-kinematics target lies outside the reachable set."""

    def __init__(self, message: str, *, diagnostic: str):
        super().__init__(message)
        self.diagnostic = diagnostic


class JointLimitError(ValueError):
    """An inverse-kinematics solution violates joint limits.

    ``joints`` lists the names of the offending joints.
    """

    def __init__(self, message: str, *, joints: tuple[str, ...]):
        super().__init__(message)
        self.joints = joints


class PlannerInfeasibleError(RuntimeError):
    """The step-adaptation program has no feasible point.

    ``violated`` names the constraints that could not be satisfied.
    """

    def __init__(self, message: str, *, violated: tuple[str, ...] = ()):
        super().__init__(message)
        self.violated = violated


class PhaseTransitionError(RuntimeError):
    """An illegal transition was requested on the recovery phase machine."""
