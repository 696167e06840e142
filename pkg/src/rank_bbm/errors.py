"""Exception types shared across the package.

Everything raised on purpose derives from RankBbmError so callers can
catch one base class at the CLI boundary.  Validation problems (bad
input, bad config) are kept distinct from runtime failures (numerical
blow-up, caps) because they map to different process exit codes.
"""


class RankBbmError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RankBbmError):
    """Invalid configuration or input data, detected before any work runs."""


class ParseError(ValidationError):
    """Malformed config file: syntax, unknown keys, wrong types."""


class InvalidSelection(ValidationError):
    """Selection density fails positivity, normalization or tiling checks."""


class InvalidReaction(ValidationError):
    """Reaction term is not realizable by any valid selection density."""


class UnknownPreset(ValidationError):
    """Preset name not in the registry."""


class RankOutOfRange(ValidationError):
    """Requested order statistic outside 1..n."""


class AssumptionViolation(ValidationError):
    """A structural hypothesis required by the requested run is not met."""


class RuntimeFailure(RankBbmError):
    """Base for failures that occur while a computation is running."""


class StabilityViolation(RuntimeFailure):
    """Time step violates an explicit stability or monotonicity bound."""


class BlowUp(RuntimeFailure):
    """Solution left the physically meaningful range."""


class BoundaryContamination(RuntimeFailure):
    """A front moved too close to the truncated domain boundary."""


class PopulationCap(RuntimeFailure):
    """Branching population exceeded the configured hard cap."""


class LevelNotAttained(RuntimeFailure):
    """A requested level set is empty at the requested time."""


class NoConnection(RuntimeFailure):
    """Shooting trajectory does not connect the requested equilibria."""


class NoGapFound(RuntimeFailure):
    """Cloud-splitting classifier found no gap above its threshold."""
