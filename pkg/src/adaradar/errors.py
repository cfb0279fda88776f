"""Exception types shared across the package."""


class AdaRadarError(Exception):
    """Base class for all errors raised by adaradar."""


class ShapeError(AdaRadarError, ValueError):
    """Tensor dimensions are inconsistent with the requested operation."""


class FormatError(AdaRadarError, ValueError):
    """A container or bitstream does not follow its on-disk format."""


class TruncatedPayloadError(FormatError):
    """The payload ended before all advertised data was read."""


class CorruptPayloadError(FormatError):
    """The payload is complete but holds values the format forbids."""
