"""Exception types raised by the simulator."""


class FibergateError(Exception):
    """Base class for all simulator errors."""


class NonPositiveRate(FibergateError, ValueError):
    """A rate that must be strictly positive (or non-negative) is not."""


class InconsistentGeometry(FibergateError, ValueError):
    """Fiber length and free spectral range were both given but disagree."""


class ConfigError(FibergateError, ValueError):
    """Malformed config file or unknown key."""


class BasisMismatch(FibergateError, ValueError):
    """Two state vectors do not share a basis."""


class UnphysicalMixing(FibergateError, ValueError):
    """A sech mixing profile would need sin(theta) > 1 inside its support."""


class ZeroAmplitude(FibergateError, ValueError):
    """Field or mixing amplitude too small for a matching-condition evaluation."""


class DetuningTooSmall(FibergateError, ValueError):
    """Raman detuning below the adiabatic-passage safety margin."""


class StepUnderflow(FibergateError, RuntimeError):
    """Adaptive integrator step size collapsed below the resolvable floor."""


class NonFiniteAmplitude(FibergateError, RuntimeError):
    """State amplitudes became NaN or infinite during propagation."""


class TrackingLost(FibergateError, RuntimeError):
    """Eigenbranch continuity broke down (e.g. at an avoided crossing)."""


class BufferOverrun(FibergateError, ValueError):
    """Envelope does not fit inside the delay-line time window."""


class ProbabilityOutOfRange(FibergateError, ValueError):
    """A probability argument lies outside [0, 1]."""


class InvalidState(FibergateError, ValueError):
    """Density matrix is not Hermitian / unit-trace / positive semidefinite."""


class UnnormalizedInput(FibergateError, ValueError):
    """Input amplitudes are not normalized."""


class AdiabaticityBreakdown(FibergateError, RuntimeError):
    """Leakage after the drive pulse exceeds the adiabatic-following bound."""


class NoBracket(FibergateError, RuntimeError):
    """Calibration scan did not bracket the target phase."""
