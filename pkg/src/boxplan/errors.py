"""Exception types raised across the package."""


class BoxPlanError(Exception):
    """Base class for package errors."""


class ConfigInvalid(BoxPlanError):
    """An environment configuration violates its invariants."""


class MalformedAction(BoxPlanError):
    """An action string does not match the movement grammar."""


class GoldenPlanUnavailable(BoxPlanError):
    """No golden plan length could be obtained for an environment."""


class EmptyGroup(BoxPlanError):
    """Group-relative advantages requested for an empty reward list."""


class GenerationExhausted(BoxPlanError):
    """A dataset config could not produce a solvable sample in budget."""


class EmptyDataset(BoxPlanError):
    """A summary was requested over zero records."""


class MissingEnv(BoxPlanError):
    """An attempt references an environment absent from the dataset."""


class TrialCountMismatch(BoxPlanError):
    """Environments carry unequal trial counts in an evaluation run."""
