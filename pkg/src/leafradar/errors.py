"""Exception types shared across the package.

Every error raised on a documented failure path derives from LeafRadarError
so callers (and the CLI) can catch one base class and still report the
specific condition by class name.
"""


class LeafRadarError(Exception):
    """Base class for all package-specific errors."""


class TotalInternalReflection(LeafRadarError):
    """Refraction impossible: n_i * sin(theta_i) / n_t exceeds 1."""


class OutOfRange(LeafRadarError):
    """Input outside the validity range of a model (e.g. Debye frequency band)."""


class ConfigMismatch(LeafRadarError):
    """Scene or frame geometry inconsistent with the chirp configuration."""


class ConfigError(LeafRadarError):
    """Invalid configuration value."""


class EdgeBin(LeafRadarError):
    """Leaf zone center landed on the first or last range bin."""


class SingularCovariance(LeafRadarError):
    """Covariance matrix not invertible even after diagonal loading."""


class InsufficientSnapshots(LeafRadarError):
    """Fewer snapshots than array elements; covariance would be rank deficient."""


class MissingAngle(LeafRadarError):
    """A capture for one of the configured steering angles is absent."""


class InvalidWeight(LeafRadarError):
    """Fresh/turgid weight pair outside the physical domain."""


class TooFewSamples(LeafRadarError):
    """Dataset too small (or k out of range) for the requested split."""


class ShapeMismatch(LeafRadarError):
    """Tensor shape incompatible with the model dimensions."""


class Diverged(LeafRadarError):
    """Training loss became non-finite."""


class EmptyInput(LeafRadarError):
    """Metric requested over an empty collection."""


class BadMagic(LeafRadarError):
    """File does not start with the expected format magic."""


class ConfigDigestMismatch(LeafRadarError):
    """Capture file was recorded under a different chirp configuration."""


class TruncatedFrame(LeafRadarError):
    """Capture or dataset file ends mid-record.

    Attributes:
        frame_index: index of the record that could not be read completely.
    """

    def __init__(self, frame_index, message=None):
        self.frame_index = frame_index
        super().__init__(message or f"truncated at frame {frame_index}")


class IoError(LeafRadarError):
    """Filesystem-level failure while reading or writing an artifact."""
