"""Exception types shared across the package."""


class FormatError(Exception):
    """A file failed magic/version/size validation."""


class DegenerateTargetError(ValueError):
    """A relevance-target vector is all zero and cannot be normalized."""


class TrainingDivergedError(RuntimeError):
    """A non-finite loss or gradient appeared during training."""
