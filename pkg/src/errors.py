"""Exceptions raised by the MCM library."""


class MCMError(Exception):
    """Base class for every library failure."""


class DegreeOutOfRangeError(MCMError, ValueError):
    """Field degree outside the supported range."""


class DimensionMismatchError(MCMError, ValueError):
    """Matrix, vector or qubit sizes disagree."""


class NotHankelError(MCMError, ValueError):
    """A matrix expected to be constant along anti-diagonals is not."""


class IdentityPauliError(MCMError, ValueError):
    """The identity has no ensemble element."""


class UnsupportedGateError(MCMError, ValueError):
    """Gate kind missing from a rule table."""


class QubitCapError(MCMError, ValueError):
    """Requested qubit count is above a simulation cap."""


class NonHermitianError(MCMError, ValueError):
    """Observable failed the Hermiticity check."""


class ZeroProbabilityError(MCMError, ValueError):
    """A biased estimator met an element sampled with probability zero."""


class ProfileMismatchError(MCMError, AssertionError):
    """Overlap profile of a stabilizer observable broke its rank structure."""


class ConfigError(MCMError, ValueError):
    """Experiment configuration rejected."""
