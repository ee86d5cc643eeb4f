"""Exception types shared across the package."""


class BtemError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(BtemError):
    """Operands have incompatible shapes or an entry count that does not factor."""


class ParameterError(BtemError):
    """A scalar parameter is outside its legal range."""


class InsufficientInput(BtemError):
    """An operation needs more vectors than were supplied."""


class InsufficientData(BtemError):
    """A dataset is too small for the requested fit."""


class SeparationUnachievable(BtemError):
    """Random template search could not reach the requested separation."""


class AllClustersStarved(BtemError):
    """Every round-1 cluster fell below the weight threshold."""


class TooFewClusters(BtemError):
    """Fewer clusters survived pruning than the mixture requires."""


class NonpositiveB(BtemError):
    """The separation rate constant is not positive; the noise level is too high."""


class ConfigError(BtemError):
    """An experiment configuration file is malformed."""
