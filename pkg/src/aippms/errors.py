"""Exception types shared across the package."""


class AippmsError(Exception):
    """Base class for all package-specific errors."""


class GraphError(AippmsError):
    """Invalid graph structure (disconnected, bad edge, unknown node)."""


class InvalidActionError(AippmsError):
    """Action is structurally invalid or infeasible in the given state."""


class InconsistentObservationError(AippmsError):
    """An observation has zero likelihood under the current belief."""


class GenerationError(AippmsError):
    """Problem generation failed (connectivity or placement)."""


class InfeasibleInstanceError(AippmsError):
    """A problem instance admits no feasible episode from its start state."""


class TerminalStateError(AippmsError):
    """A planner was asked to act in a state with no feasible actions."""
