"""Exception types shared across the attack pipeline."""


class HandkeyError(Exception):
    """Base class for all package errors."""


class ConfigError(HandkeyError):
    """Invalid or incomplete configuration."""


class WrongSpace(HandkeyError):
    """Session is in the wrong coordinate space for this operation."""


class NotFingertip(HandkeyError):
    """Joint id does not designate a fingertip."""


class TooFewFrames(HandkeyError):
    """Session has too few frames for this operation."""


class NonUniform(HandkeyError):
    """Series is not uniformly sampled; resample first."""


class TooFewSamples(HandkeyError):
    """Not enough samples to fit the model."""


class TooFewEvents(HandkeyError):
    """Not enough keystroke events for the requested cluster count."""


class EmptySession(HandkeyError):
    """Session contains no frames."""


class UnmappedKey(HandkeyError):
    """A character in the text has no assigned finger."""


class Unreachable(HandkeyError):
    """Calibration target cannot be met within parameter bounds."""


class JointBehindCamera(HandkeyError):
    """A joint projects to non-positive camera depth."""


class MissingDepth(HandkeyError):
    """Camera depth is absent; cannot invert the projection."""


class DegenerateBaseline(HandkeyError):
    """Stereo camera pair is too close in angle to triangulate."""


class TimestampMismatch(HandkeyError):
    """Stereo sessions disagree in frame count or timing."""


class EmptyCorpus(HandkeyError):
    """Corpus contains no usable text."""


class UnknownCluster(HandkeyError):
    """Observation sequence references a cluster id outside the model."""


class SingleClass(HandkeyError):
    """Refiner training set contains fewer than two distinct labels."""


class UpsampleRequested(HandkeyError):
    """Downsampling target exceeds the session's nominal rate."""


class EmptyReference(HandkeyError):
    """Reference string for an error-rate metric is empty."""
