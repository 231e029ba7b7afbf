"""Exception hierarchy shared by all modules."""


class GLRMFError(Exception):
    """Base class for every error raised by the package."""


class SpecError(GLRMFError, ValueError):
    """A network specification is malformed."""


class NonFeedforward(SpecError):
    """An edge violates the (possibly relaxed) feedforward structure."""


class HypothesisMismatch(SpecError):
    """Neuron parameters are inconsistent with the declared hypothesis."""


class NegativeParameter(SpecError):
    """A parameter that must be nonnegative (or positive) is not."""


class DomainError(GLRMFError, ValueError):
    """Argument outside the domain of a function."""


class DomainZero(DomainError):
    """Ei evaluated at its logarithmic singularity x = 0."""


class DomainNonPositive(DomainError):
    """E1 evaluated at x <= 0."""


class Overflow(DomainError):
    """Argument large enough that the result overflows double precision."""


class ZeroWeight(DomainError):
    """A zero synaptic weight reached a function defined only for w != 0."""


class MissingPrefix(GLRMFError, ValueError):
    """Rates of presynaptic neurons are needed but were not supplied."""


class QuadratureFailure(GLRMFError, RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget above tolerance."""


class SolverDivergence(GLRMFError, RuntimeError):
    """The rate condition fails, so the fixed-point integral diverges."""


class InvalidTargets(GLRMFError, ValueError):
    """Target rates are not positive and decreasing."""


class ConfigError(GLRMFError, ValueError):
    """Simulation or run configuration is invalid."""


class ParseError(ConfigError):
    """A configuration document could not be parsed (unknown key, bad type)."""


class ValidationError(ConfigError):
    """A configuration document parsed but violates a constraint."""


class NoDriftFound(GLRMFError, RuntimeError):
    """No Foster-Lyapunov drift inequality holds on the sampled grid."""


class InsufficientData(GLRMFError, ValueError):
    """Not enough post-burn-in data to form the requested estimate."""


class SpecMismatch(GLRMFError, ValueError):
    """Analytic and simulated results refer to different networks."""
