"""Exception and warning types shared across qmlab."""


class QMLabError(Exception):
    """Base class for all qmlab errors."""


class ZeroNorm(QMLabError):
    pass


class GridMismatch(QMLabError):
    pass


class BoundaryLeak(QMLabError):
    """A localized state has pushed probability into the box edge region."""


class TruncationTooSmall(QMLabError):
    pass


class ShapeMismatch(QMLabError):
    pass


class InsufficientSnapshots(QMLabError):
    pass


class ConfigInvalid(QMLabError):
    pass


class PhaseUnwrapAmbiguity(QMLabError):
    pass


class NonpositiveMass(QMLabError):
    pass


class SchemaMismatch(QMLabError):
    pass


class UnsupportedPotential(QMLabError):
    pass


class IoFailure(QMLabError):
    pass


class SpectralAliasing(UserWarning):
    """Too much norm near the Nyquist edge for spectral identities to be exact."""
