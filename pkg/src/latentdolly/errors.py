"""Exception hierarchy shared by every module.

Each exception carries a machine-readable ``category`` string so callers
(and the CLI / foreign bindings) can branch on failure kind without
parsing messages.
"""


class LatentDollyError(Exception):
    category = "error"


class DimensionError(LatentDollyError):
    """Shape/size of an input is invalid or inconsistent."""

    category = "dimension"


class ParameterError(LatentDollyError):
    """A scalar parameter is outside its documented domain."""

    category = "parameter"


class DegenerateInputError(LatentDollyError):
    """Input is formally valid but numerically degenerate (zero norm, zero std)."""

    category = "degenerate-input"


class DegenerateScheduleError(LatentDollyError):
    """A noise schedule cannot be rescaled (e.g. flat alpha_bar sequence)."""

    category = "degenerate-schedule"


class TimestepIndexError(LatentDollyError):
    """Timestep index outside [1, T]."""

    category = "index"


class CollapseError(LatentDollyError):
    """A trajectory touched alpha_bar = 0, where the forward map loses x0."""

    category = "collapse"


class NoVisibleSourceError(LatentDollyError):
    """Occluded targets exist but the sampling source pool is empty."""

    category = "no-visible-source"


class EmptyCloudError(LatentDollyError):
    """Unprojection produced no valid 3D points."""

    category = "empty-cloud"


class FormatError(LatentDollyError):
    """A binary file failed header validation."""

    category = "format"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TruncationError(LatentDollyError):
    """Payload shorter than the header promised."""

    category = "truncation"


class UnsupportedFormatError(LatentDollyError):
    """Recognized but unsupported file variant (e.g. ASCII PPM)."""

    category = "unsupported-format"


class ConfigError(LatentDollyError):
    """Bad or unknown key in a JSON config."""

    category = "config"
