"""Exception hierarchy shared by all modules."""


class JCHError(Exception):
    """Base class for package errors."""


class ConfigError(JCHError):
    """Malformed or inconsistent input parameters."""


class DimensionError(JCHError):
    """Hilbert space too large or operands living on different spaces."""


class HermiticityError(JCHError):
    """An operator expected to be Hermitian is not."""


class ValidityError(JCHError):
    """A perturbative or truncation validity condition is violated."""


class SingularEliminationError(ValidityError):
    """A detuning used as an elimination denominator vanishes."""


class ResonanceError(ValidityError):
    """Frequency-matching or near-resonance condition fails."""


class NormDriftError(JCHError):
    """State norm drifted beyond tolerance during time evolution."""


class BranchAmbiguityError(JCHError):
    """Floquet eigenphases too close to the branch cut."""


class FitError(JCHError):
    """An oscillation fit did not meet its quality gate."""
