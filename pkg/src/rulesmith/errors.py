"""Exception types shared across the package."""


class RulesmithError(Exception):
    """Base class for all domain errors (CLI maps these to exit code 1)."""


class MalformedFrameError(RulesmithError):
    """A frame violates a structural invariant (duplicate ids, out of bounds...)."""


class InsufficientDataError(RulesmithError):
    """An operation needs more frames than it was given."""


class RuleNotFoundError(RulesmithError):
    """A rule id does not exist in the engine."""


class SchemaError(RulesmithError):
    """A document failed to parse or validate against its schema."""


class VersionError(SchemaError):
    """A document declares a schema version this build does not understand."""


class InvalidKError(RulesmithError):
    """A mixture size k is out of range for the data."""
