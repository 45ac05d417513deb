"""Exception hierarchy shared by all modules."""


class OdcmError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameterError(OdcmError, ValueError):
    pass


class InvalidInputError(OdcmError, ValueError):
    pass


class TruncationError(OdcmError):
    """A correlation envelope has not decayed inside the integration window."""


class InconsistentInputError(OdcmError):
    pass


class CoverageError(OdcmError):
    """A frequency grid does not cover the support of a spectrum."""


class InfeasibleParametersError(OdcmError, ValueError):
    pass


class EnergyTooSmallError(InfeasibleParametersError):
    pass


class DegenerateNormalizationError(OdcmError):
    pass


class DegenerateStationaryPointError(OdcmError):
    """The EL denominator vanished: the current phase is a trivial critical point."""


class IllPosedError(OdcmError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class BracketFailureError(OdcmError):
    """No sign change of the energy mismatch was found over the multiplier scan.

    ``table`` holds the scanned ``(lambda, energy, max_nu)`` rows.
    """

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table if table is not None else []


class DegenerateFieldError(OdcmError):
    pass


class InvalidCovarianceError(OdcmError):
    pass


class ConfigError(OdcmError, ValueError):
    pass
