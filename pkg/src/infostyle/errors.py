"""Exception types raised across the package."""


class InfostyleError(Exception):
    """Base class for all package errors."""


class DecodeError(InfostyleError):
    """Image bytes could not be decoded."""


class InvalidParam(InfostyleError):
    """A parameter is outside its allowed range."""


class DimensionMismatch(InfostyleError):
    """Vector or matrix shapes do not line up."""


class NonFiniteInput(InfostyleError):
    """An input contains NaN or infinity."""


class InsufficientData(InfostyleError):
    """Not enough samples for the requested operation."""


class EmptyData(InfostyleError):
    """An operation requiring data received none."""


# Some call sites name this condition after their input rather than a dataset.
EmptyInput = EmptyData


class MissingFeature(InfostyleError):
    """A required feature vector is absent for an image."""

    def __init__(self, feature_name, image_id=None):
        msg = f"missing feature {feature_name!r}"
        if image_id is not None:
            msg += f" for image {image_id!r}"
        super().__init__(msg)
        self.image_id = image_id
        self.feature_name = feature_name


class MissingPca(InfostyleError):
    """A config marks a feature as reduced but no PCA params were given."""


class FingerprintMismatch(InfostyleError):
    """A search index was built against a different model."""


class ParseError(InfostyleError):
    """A data file failed to parse.  Carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonConvergenceWarning(UserWarning):
    """The optimizer stopped before reaching its tolerance."""
