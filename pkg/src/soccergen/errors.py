"""Exception types shared across the package."""


class SoccerGenError(Exception):
    """Base class for all package errors."""


class DegenerateRotation(SoccerGenError):
    """6D rotation input cannot be orthogonalized (zero or parallel columns)."""


class NotARotation(SoccerGenError):
    """Matrix fails the orthonormality / determinant check."""


class BallUntracked(SoccerGenError):
    """Ball control weight too small to invert the relative encoding."""


class ShapeMismatch(SoccerGenError):
    """Array arguments have inconsistent shapes."""


class TooFewFrames(SoccerGenError):
    """Operation needs more frames than provided."""


class InvalidStepCount(SoccerGenError):
    """Diffusion step count must be >= 1."""


class NonFiniteLoss(SoccerGenError):
    """A training loss evaluated to NaN/Inf; the step is aborted."""


class NonFiniteSample(SoccerGenError):
    """Sampling produced non-finite values."""


class CorruptCheckpoint(SoccerGenError):
    """Checkpoint file failed magic/version/hash/shape validation."""


class CorruptClip(SoccerGenError):
    """Clip file failed magic/version/hash validation."""


class DurationTooShort(SoccerGenError):
    """Requested clip duration is below the minimum window length."""


class WindowUnderflow(SoccerGenError):
    """More frames consumed from a window than it holds."""


class MalformedPayload(SoccerGenError):
    """Wire payload failed validation."""


class SingularCovariance(SoccerGenError):
    """Covariance not invertible even after regularization."""


class UntrainedClassifier(SoccerGenError):
    """Skill classifier used before training."""


class BindFailure(SoccerGenError):
    """Server could not bind its listening sockets."""
