# Exceptions to be used throughout the vlsnull package

class VLSNullException(Exception):
    """Base exception class for the whole module."""
    pass

################################################################################
#                              Atomic Exceptions                               #
################################################################################

class AtomPropsException(VLSNullException):
    """Base atomic property exception class."""
    pass

class QuantumNumberError(AtomPropsException):
    """Quantum numbers that are not half-integers or violate coupling rules."""
    pass

class NearResonanceError(AtomPropsException):
    """Optical frequency too close to a line for the far-detuned sums."""
    pass

################################################################################
#                           Polarization Exceptions                            #
################################################################################

class PolarizationException(VLSNullException):
    """Base polarization optics exception class."""
    pass

class NoRootError(PolarizationException):
    """Circularity has no sign change inside the search bracket."""
    pass

################################################################################
#                               Trap Exceptions                                #
################################################################################

class TrapException(VLSNullException):
    """Base trap geometry exception class."""
    pass

class TrapUnboundError(TrapException):
    """Beams are too weak to hold the atoms against gravity."""
    pass

################################################################################
#                              Ramsey Exceptions                               #
################################################################################

class RamseyException(VLSNullException):
    """Base Ramsey interferometry exception class."""
    pass

class RamseyConfigError(RamseyException):
    """Invalid interferometer settings."""
    pass

class DegenerateFitError(RamseyException):
    """
    Ellipse reduction failed because the points do not define an ellipse.
    This is the signature of a differential phase close to 0 or pi.
    """
    pass

################################################################################
#                             Protocol Exceptions                              #
################################################################################

class ProtocolException(VLSNullException):
    """Base measurement protocol exception class."""
    pass

class ScheduleError(ProtocolException):
    """Scan schedule does not support the requested analysis."""
    pass

class RankDeficientError(ProtocolException):
    """Bias field set does not span three dimensions."""
    pass

class FilterCountError(ProtocolException):
    """Exception to be raised when too many events are filtered."""
    pass

################################################################################
#                            Spin Mixing Exceptions                            #
################################################################################

class SpinMixException(VLSNullException):
    """Base spin mixing exception class."""
    pass

class StepSizeError(SpinMixException):
    """Requested sampling step does not resolve the dynamics."""
    pass

class IntegrationError(SpinMixException):
    """ODE integrator reported a failure."""
    pass

################################################################################
#                           Configuration Exceptions                           #
################################################################################

class ConfigError(VLSNullException):
    """
    Invalid run configuration

    Parameters
    ----------
    key : str
        Dotted path of the offending key

    expected : str, optional
        Description of the expected type or value
    """
    def __init__(self, key, expected=None, msg=None):
        self.key = key
        self.expected = expected
        if msg is None:
            if expected:
                msg = "Invalid configuration key {!r}, expected {}".format(
                                                                key, expected)
            else:
                msg = "Unknown configuration key {!r}".format(key)
        super().__init__(msg)
