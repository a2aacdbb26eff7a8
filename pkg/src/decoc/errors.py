"""Exception types raised by the planner."""


class DecocError(Exception):
    """Base class for all planner errors."""


class NonPositiveDuration(DecocError, ValueError):
    pass


class NegativeTerminalSpeed(DecocError, ValueError):
    pass


class MismatchedSampling(DecocError, ValueError):
    """Two trajectories do not share the same time grid."""


class OffRoad(DecocError, ValueError):
    """A lateral position lies outside the road."""


# state_reward raises this name; same condition as OffRoad
OffRoadState = OffRoad


class UnvisitedAction(DecocError, ValueError):
    """UCT was evaluated on an action with zero visits."""


class UnknownAction(DecocError, KeyError):
    pass


class ParseError(DecocError, ValueError):
    """A scenario file could not be parsed."""


class ScenarioValidationError(DecocError, ValueError):
    """A parsed scenario violates an invariant."""
